"""Bound pairs (doublons) in the thermodynamic limit.

Energies are labelled by where they sit relative to the outer two-particle
continua: ``below`` the lowest, ``above`` the highest, or in the ``middle``
gap between them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..model import ModelParams
from .kernel import PoleEncountered, continua, gaps, kernel_determinant
from .roots import NoRoots, energy_roots


class BranchNotFound(LookupError):
    pass


@dataclass
class DoublonLevel:
    energy: float
    branch_id: str
    kind: str  # "type1", "type2" or "generic"
    decay: tuple[float, ...]


@dataclass
class DoublonBranch:
    branch_id: str
    kind: str
    order: int = 0
    samples: list[tuple[float, float]] = field(default_factory=list)
    decay_constants: list[tuple[float, ...]] = field(default_factory=list)
    group_velocity: list[float] = field(default_factory=list)
    missing: list[float] = field(default_factory=list)

    @property
    def momenta(self) -> np.ndarray:
        return np.array([p for p, _ in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for _, e in self.samples])


def is_symmetric(params: ModelParams) -> bool:
    same_u = (params.u1_infinite and params.u2_infinite) or (
        not params.u1_infinite and not params.u2_infinite and params.u1 == params.u2
    )
    return params.j1 == params.j2 and params.delta == 0.0 and params.u3 == 0.0 and same_u


# --------------------------------------------------------------------------
# symmetric closed forms


def _roots_pm(eps, omega, c):
    sp = math.sqrt(max((eps + 2 * omega) ** 2 - c * c, 0.0))
    sm = math.sqrt(max((eps - 2 * omega) ** 2 - c * c, 0.0))
    return sp, sm


def u_of_eps(eps: float, params: ModelParams, P: float, region: str) -> float:
    """Interaction that binds an ``A = C`` pair at ``eps``, from the closed forms.

    With ``s+- = sqrt((eps +- 2 Omega)^2 - 16 J^2 cos^2(P/2))``:
    below ``U = -2 s+ s-/(s+ + s-)``, middle ``U = 2 s+ s-/(s- - s+)``,
    above ``U = 2 s+ s-/(s+ + s-)``.
    """
    c = 4 * params.j1 * abs(math.cos(P / 2))
    sp, sm = _roots_pm(eps, params.omega, c)
    if region == "below":
        return -2 * sp * sm / (sp + sm)
    if region == "above":
        return 2 * sp * sm / (sp + sm)
    if region == "middle":
        if sm == sp:
            return math.inf
        return 2 * sp * sm / (sm - sp)
    raise ValueError(region)


def _symmetric_levels(params: ModelParams, P: float) -> list[DoublonLevel]:
    j, om = params.j1, abs(params.omega)
    c = 4 * j * abs(math.cos(P / 2))
    hard = params.u1_infinite
    u = params.u1
    out = []
    tiny = 1e-13 * max(1.0, c + 2 * om)

    def decay(eps):
        ks = []
        for e in (eps - 2 * om, eps + 2 * om):
            x = abs(e) / c if c > 0 else math.inf
            ks.append(math.acosh(x) if x > 1 else 0.0)
        return tuple(ks)

    # A = C pairs
    if 2 * om > c:
        lo, hi = -(2 * om - c), 2 * om - c
        if hard:
            out.append(DoublonLevel(0.0, "middle", "type2", decay(0.0)))
        elif u > 0:
            f = lambda e: u_of_eps(e, params, P, "middle") - u  # noqa: E731
            out.append(DoublonLevel(brentq(f, lo + tiny, -tiny, xtol=1e-15), "middle", "type2", ()))
        elif u < 0:
            f = lambda e: u_of_eps(e, params, P, "middle") - u  # noqa: E731
            out.append(DoublonLevel(brentq(f, tiny, hi - tiny, xtol=1e-15), "middle", "type2", ()))
    if not hard and u > 0:
        edge = 2 * om + c
        f = lambda e: u_of_eps(e, params, P, "above") - u  # noqa: E731
        out.append(DoublonLevel(brentq(f, edge + tiny, edge + 2 * u + 10, xtol=1e-15), "above", "type2", ()))
    if not hard and u < 0:
        edge = -2 * om - c
        f = lambda e: u_of_eps(e, params, P, "below") - u  # noqa: E731
        out.append(DoublonLevel(brentq(f, edge + 2 * u - 10, edge - tiny, xtol=1e-15), "below", "type2", ()))
    # A = -C pairs see a single species
    if not hard and u != 0:
        eps = math.copysign(math.sqrt(u * u + c * c), u)
        kd = math.asinh(abs(u) / c) if c > 0 else math.inf
        out.append(DoublonLevel(eps, classify(params, P, eps), "type1", (kd,)))
    return [
        DoublonLevel(lv.energy, classify(params, P, lv.energy), lv.kind, lv.decay or decay(lv.energy)) for lv in out
    ]


# --------------------------------------------------------------------------
# determinant route


def classify(params: ModelParams, P: float, eps: float) -> str:
    bands = continua(params, P)
    low = min(b[0] for b in bands)
    high = max(b[1] for b in bands)
    if eps < low:
        return "below"
    if eps > high:
        return "above"
    return "middle"


def _decay_from_roots(params, P, eps):
    try:
        sets = energy_roots(params, P, eps)
    except NoRoots:
        return ()
    return tuple(sorted(abs(s.k.imag) for s in sets))


def _search_range(params: ModelParams) -> float:
    u = [abs(params.u3)]
    for hard, val in ((params.u1_infinite, params.u1), (params.u2_infinite, params.u2)):
        if not hard:
            u.append(abs(val))
    return 2 * (abs(params.j1) + abs(params.j2)) * 2 + 2 * abs(params.delta) + 2 * abs(params.omega) + 2 * max(u) + 10


def determinant_levels(params: ModelParams, P: float, npts: int = 80, channel: str | None = None) -> list[DoublonLevel]:
    """Roots of ``det(W S(eps) - V)`` with ``S`` the integral of the kernel, in every gap.

    With ``channel`` set to ``"sym"`` or ``"anti"`` only the ``A = C`` or
    ``A = -C`` pairs are sought, which also finds levels embedded in a
    continuum of the other channel.
    """
    if params.u3 != 0.0:
        raise ValueError("the momentum kernel closes only for U3 = 0")
    R = _search_range(params)
    out = []
    kind = {"sym": "type2", "anti": "type1"}.get(channel, "generic")
    for lo, hi in gaps(params, P, -R, R, channel):
        w = hi - lo
        # cluster points near the band edges where the determinant varies fastest
        t = np.linspace(0, 1, npts)
        grid = lo + w * (0.5 - 0.5 * np.cos(np.pi * t))
        grid = grid[1:-1]

        def f(e):
            try:
                return kernel_determinant(params, P, e, None, channel)
            except PoleEncountered:
                return math.nan

        vals = np.array([f(e) for e in grid])
        for i in range(len(grid) - 1):
            if not (np.isfinite(vals[i]) and np.isfinite(vals[i + 1])):
                continue
            if vals[i] == 0 or vals[i] * vals[i + 1] < 0:
                root = grid[i] if vals[i] == 0 else brentq(f, grid[i], grid[i + 1], xtol=1e-13)
                out.append(DoublonLevel(float(root), classify(params, P, root), kind,
                                        _decay_from_roots(params, P, root)))
    return out


def doublon_levels(params: ModelParams, P: float, route: str = "auto") -> list[DoublonLevel]:
    """Bound-pair energies at total momentum ``P`` (any real value)."""
    if route == "auto":
        route = "closed" if is_symmetric(params) else "determinant"
    if route == "closed":
        levels = _symmetric_levels(params, P)
    elif route == "determinant":
        if is_symmetric(params):
            levels = determinant_levels(params, P, channel="sym") + determinant_levels(params, P, channel="anti")
        else:
            levels = determinant_levels(params, P)
    else:
        raise ValueError("route must be auto, closed or determinant")
    return sorted(levels, key=lambda lv: lv.energy)


def large_u_levels(params: ModelParams) -> np.ndarray:
    """On-site levels ``(aa, ab, bb)`` that doublons approach when hopping is negligible."""
    m = np.array(
        [
            [params.u1 + 2 * params.delta, params.omega, 0.0],
            [2 * params.omega, params.delta + params.u3, 2 * params.omega],
            [0.0, params.omega, params.u2],
        ]
    )
    return np.sort(np.linalg.eigvals(m).real)


def _labelled(levels):
    """``{(branch_id, kind, order): level}`` with ``order`` counted from the bottom of each gap."""
    out = {}
    counts: dict = {}
    for lv in sorted(levels, key=lambda x: x.energy):
        key = (lv.branch_id, lv.kind)
        order = counts.get(key, 0)
        counts[key] = order + 1
        out[(lv.branch_id, lv.kind, order)] = lv
    return out


def doublon_energy(params: ModelParams, P: float, branch_id: str, kind: str | None = None, order: int = 0) -> float:
    for (b, k, o), lv in _labelled(doublon_levels(params, P)).items():
        if b == branch_id and o == order and (kind is None or k == kind):
            return lv.energy
    raise BranchNotFound(f"no {branch_id} branch (order {order}) at P={P}")


def doublon_branches(params: ModelParams, P_grid, h: float = 1e-5, route: str = "auto") -> list[DoublonBranch]:
    """Doublon branches sampled on ``P_grid`` with central-difference group velocities.

    A branch missing at some ``P`` (merged into a continuum) is listed in its
    ``missing`` field instead of raising.
    """
    per_p = [(float(P), _labelled(doublon_levels(params, P, route))) for P in P_grid]
    keys = sorted({key for _, lab in per_p for key in lab})
    out = []
    for key in keys:
        br = DoublonBranch(branch_id=key[0], kind=key[1], order=key[2])
        for P, lab in per_p:
            lv = lab.get(key)
            if lv is None:
                br.missing.append(P)
                continue
            br.samples.append((P, lv.energy))
            br.decay_constants.append(lv.decay)
            plus = _labelled(doublon_levels(params, P + h, route)).get(key)
            minus = _labelled(doublon_levels(params, P - h, route)).get(key)
            if plus is None or minus is None:
                br.group_velocity.append(math.nan)
            else:
                br.group_velocity.append((plus.energy - minus.energy) / (2 * h))
        out.append(br)
    return out


def write_branches_csv(path, branches: list[DoublonBranch]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["P [rad]", "energy [J]", "K", "branch", "kind", "order", "group_velocity [J]"])
        for br in branches:
            for (P, e), k, v in zip(br.samples, br.decay_constants, br.group_velocity):
                kmin = min(k) if k else math.nan
                w.writerow([f"{P:.12g}", f"{e:.12g}", f"{kmin:.12g}", br.branch_id, br.kind, br.order, f"{v:.12g}"])
