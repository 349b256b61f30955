"""Bound-pair branches and their localization for hard-core bosons at strong coupling."""

import math

import numpy as np

from coupled_bh import ModelParams
from coupled_bh.bethe import doublon_branches, region_enumerate_infU
from coupled_bh.observables import entanglement_entropy, ipr

params = ModelParams(n=10, omega=10.0, u1_infinite=True, u2_infinite=True)

print("doublon branches (infinite chain)")
for b in doublon_branches(params, np.linspace(-math.pi, math.pi, 9)[:-1]):
    levels = ", ".join(f"{P:+.2f}: {e:+.3f}" for P, e in b.samples)
    print(f"  {b.branch_id} ({b.kind})  {levels}")

print("finite chain, region III states")
for r in range(params.n):
    for s in region_enumerate_infU(params, r):
        if s.region == "III":
            st = s.eigenstate.state
            print(f"  r = {r}  E = {s.eigenstate.energy:+.4f}  IPR = {ipr(st):.4f}  "
                  f"S/ln N = {entanglement_entropy(st).S_total / math.log(params.n):.3f}")
