"""Compare Bethe-ansatz levels with exact diagonalization, one momentum sector at a time."""

from collections import Counter

import numpy as np

from coupled_bh import ModelParams
from coupled_bh.bethe import analytic_sector
from coupled_bh.ed import sector_energies

params = ModelParams(n=6, j1=1.0, j2=0.7, u1=-2.0, u2=4.0, u3=0.5, omega=1.3, delta=-0.3)

for r in range(params.n):
    sol = analytic_sector(params, r)
    bethe = np.sort([s.energy for s in sol.states])
    exact = np.sort(sector_energies(params, r))
    kinds = dict(Counter(s.kind for s in sol.states))
    print(f"P index {r}: route {sol.route:9s} {len(bethe):3d} levels, "
          f"max |dE| = {np.abs(bethe - exact).max():.1e}, {kinds}")
