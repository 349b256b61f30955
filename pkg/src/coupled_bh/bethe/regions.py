"""Hard-core spectrum split into five energy regions.

For ``J1 = J2`` with both species hard-core, an ``A = C`` (type-2) state
is a pair of Choy-Haldane components at energies ``eps - 2 Omega`` and
``eps + 2 Omega``.  Each of these lies below, inside or above the
single-species band ``|e| <= 4 J |cos(P/2)|``; the combination fixes the
region:

======  ===============  ===============
region  eps - 2 Omega    eps + 2 Omega
======  ===============  ===============
I       below            below
II      below            inside
III     below            above (or both inside)
IV      inside           above
V       above            above
======  ===============  ===============
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from ..model import ModelParams
from .components import ConvergenceFailure, bethe_u_tilde
from .finite import AnalyticEigenstate, analytic_sector, route_for, sector_dimension

REGIONS = ("I", "II", "III", "IV", "V")


@dataclass
class RegionState:
    region: str
    energy: float
    p_index: int
    k: tuple[complex, complex]  # quasi-momenta of the two components
    u_tilde: tuple[complex, complex]  # fictitious interactions over J
    eigenstate: AnalyticEigenstate
    residual: float


def _side(e: float, c: float, tol: float = 1e-9) -> str:
    if e < -c - tol:
        return "below"
    if e > c + tol:
        return "above"
    return "inside"


_TABLE = {
    ("below", "below"): "I",
    ("below", "inside"): "II",
    ("below", "above"): "III",
    ("inside", "inside"): "III",
    ("inside", "above"): "IV",
    ("above", "above"): "V",
}


def classify_region(params: ModelParams, P: float, eps: float) -> str:
    c = abs(4.0 * params.j1 * math.cos(P / 2))
    om = abs(params.omega)
    return _TABLE[(_side(eps - 2 * om, c), _side(eps + 2 * om, c))]


def _u_tilde(params, comp) -> complex:
    n, j = params.n, params.j1
    try:
        return complex(bethe_u_tilde(comp.k, comp.q, n, j)) / j
    except (ZeroDivisionError, OverflowError, ValueError):
        return complex(math.inf)


def region_enumerate_infU(params: ModelParams, p_index: int) -> list[RegionState]:
    """Type-2 eigenstates of one momentum sector, labelled by region.

    Requires ``J1 = J2``, ``Delta = 0`` and both species hard-core.  Raises
    ``ConvergenceFailure`` when fewer type-2 states are found than the
    sector holds.
    """
    if not (params.u1_infinite and params.u2_infinite):
        raise ValueError("region enumeration needs both species hard-core")
    if params.j1 != params.j2 or params.delta != 0.0:
        raise ValueError("region enumeration needs J1 = J2 and Delta = 0")
    P = params.momentum(p_index)
    sol = analytic_sector(params, p_index)
    type2 = [s for s in sol.states if s.kind == "type2"]
    dims = sector_dimension(params, p_index)
    want = dims["aa"] + dims["ab_sym"] if route_for(params, p_index) == "symmetric" else None
    if want is not None and len(type2) != want:
        raise ConvergenceFailure(f"found {len(type2)} of {want} type-2 states at P={P}")
    out = []
    for st in sorted(type2, key=lambda s: s.energy):
        region = classify_region(params, P, st.energy)
        if len(st.components) == 2:
            ks = (st.components[0].k, st.components[1].k)
            ut = (_u_tilde(params, st.components[0]), _u_tilde(params, st.components[1]))
        else:
            ks = (complex(math.nan), complex(math.nan))
            ut = (complex(math.nan), complex(math.nan))
        st.region = region
        out.append(RegionState(region, st.energy, p_index, ks, ut, st, st.residual))
    return out


def region_counts(params: ModelParams) -> dict[str, list[int]]:
    """Per-sector counts ``{region: [count at r = 0 .. N-1]}``."""
    counts = {reg: [0] * params.n for reg in REGIONS}
    for r in range(params.n):
        for s in region_enumerate_infU(params, r):
            counts[s.region][r] += 1
    return counts


def write_regions_csv(path, params: ModelParams, states: list[RegionState]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["P [rad]", "energy [J]", "K", "region", "residual"])
        for s in states:
            K = max(abs(k.imag) for k in s.k) if all(math.isfinite(abs(k)) for k in s.k) else math.nan
            w.writerow(
                [f"{params.momentum(s.p_index):.12g}", f"{s.energy:.12g}", f"{K:.12g}", s.region, f"{s.residual:.3e}"]
            )
