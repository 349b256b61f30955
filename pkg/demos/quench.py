"""Quench from an on-site ab pair: pair survival in the two coupling regimes."""

import numpy as np

from coupled_bh import ModelParams
from coupled_bh.dynamics import dominant_frequency, evolve, initial_state, late_time_stats

times = np.arange(0.0, 40.0 + 1e-9, 0.05)
psi0 = initial_state("ab00", 10)
for omega in (5.0, 1.0):
    traj = evolve(psi0, ModelParams(n=10, u1=100.0, u2=100.0, omega=omega), times, store_states=False)
    mean, std = late_time_stats(traj, "n_db_sum", (30.0, 40.0))
    print(f"Omega = {omega:g}: late sum |B_ii|^2 = {mean:.3f} +- {std:.3f}, "
          f"entropy frequency {dominant_frequency(traj):.2f} / J")
