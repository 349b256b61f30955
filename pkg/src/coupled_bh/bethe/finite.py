"""Finite-N analytic spectra: every eigenstate of a momentum sector from Choy-Haldane components.

Three routes share one verification step (Hamiltonian residual plus a rank
check inside clusters of equal energy):

* ``symmetric``: ``J1 = J2``, ``Delta = 0`` and ``U1 = U2`` (or both hard-core).
  States split into type 1 (``A = -C``, ``B = 0``), type 2 (``A = C``, ``B``
  symmetric) and type 3 (``B`` antisymmetric).  Type-2 energies are roots of a
  real 2x2 determinant, found by sign changes and brentq.
* ``generic``: any couplings.  Quasi-momenta follow from :func:`energy_roots`;
  the energy is quantised where ``H - eps`` becomes singular on the span of the
  components, located by minimising the smallest singular value and polished
  by Rayleigh-quotient steps.
* ``localized``: ``J1 = J2`` at ``P = pi``.  Relative hopping cancels, every
  state lives at one fixed separation and the sector splits into blocks of at
  most four amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..model import (
    ModelParams,
    TwoExcitationState,
    apply_hamiltonian,
    normalize_state,
    residual,
    residual_vector,
)
from .components import ChoyHaldaneComponent, RootCountMismatch, choy_haldane_matrix, theta_from_x
from .roots import (
    NoRoots,
    energy_roots,
    pair_orbit_count,
    physical_pairs,
    real_reduced,
    single_species_states,
)
from .weights import WeightSolution, _flat, _solution_from, antisymmetric_plane_wave, combine, reduced_problem

RESIDUAL_TOL = 1e-8
ESCAPED_DECAY = 60.0


@dataclass
class AnalyticEigenstate:
    energy: float
    p_index: int
    kind: str
    state: TwoExcitationState
    components: list[ChoyHaldaneComponent] = field(default_factory=list)
    weights: WeightSolution | None = None
    residual: float = 0.0
    region: str = ""


@dataclass
class SectorSolution:
    p_index: int
    route: str
    states: list[AnalyticEigenstate]
    expected: int

    @property
    def complete(self) -> bool:
        return len(self.states) == self.expected

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])


def sector_dimension(params: ModelParams, r: int) -> dict[str, int]:
    """Sizes of the symmetry blocks of sector ``r`` from orbit counting alone."""
    n = params.n
    aa = pair_orbit_count(n, r, diagonal=not params.u1_infinite)
    bb = pair_orbit_count(n, r, diagonal=not params.u2_infinite)
    bs = pair_orbit_count(n, r, diagonal=True)
    ba = pair_orbit_count(n, r, diagonal=False, antisymmetric=True)
    return {"aa": aa, "bb": bb, "ab_sym": bs, "ab_anti": ba, "total": aa + bb + bs + ba}


def route_for(params: ModelParams, r: int) -> str:
    P = params.momentum(r)
    if params.j1 == params.j2 and abs(math.cos(P / 2)) < 1e-12:
        return "localized"
    same_u = (params.u1_infinite and params.u2_infinite) or (
        not params.u1_infinite and not params.u2_infinite and params.u1 == params.u2
    )
    if params.j1 == params.j2 and params.delta == 0.0 and same_u:
        return "symmetric"
    return "generic"


# --------------------------------------------------------------------------
# shared helpers


def _finish(params, st: TwoExcitationState, eps: float):
    """Normalize and verify; ``None`` when the candidate is spurious."""
    if st.norm_squared() < 1e-20:
        return None
    st = normalize_state(st)
    res = residual(params, st, eps)
    if res > RESIDUAL_TOL * max(1.0, abs(eps)):
        return None
    st.energy = float(eps)
    return st, res


def _dedupe(states: list[AnalyticEigenstate], etol: float = 1e-7) -> list[AnalyticEigenstate]:
    """Keep a linearly independent subset inside each cluster of equal energy."""
    states = sorted(states, key=lambda s: s.energy)
    out: list[AnalyticEigenstate] = []
    cluster: list[np.ndarray] = []
    last = None
    for s in states:
        if last is None or s.energy - last > etol:
            cluster = []
        last = s.energy
        v = _flat(s.state)
        v = v / np.linalg.norm(v)
        w = v.copy()
        for b in cluster:
            w -= np.vdot(b, w) * b
        if np.linalg.norm(w) > 1e-6:
            cluster.append(w / np.linalg.norm(w))
            out.append(s)
    return out


def _range(params: ModelParams) -> float:
    u = [abs(params.u3)]
    if not params.u1_infinite:
        u.append(abs(params.u1))
    if not params.u2_infinite:
        u.append(abs(params.u2))
    return 4 * abs(params.j1) + 4 * abs(params.j2) + 2 * abs(params.delta) + 4 * abs(params.omega) + max(u) + 2.0


# --------------------------------------------------------------------------
# symmetric route


def _type1(params: ModelParams, r: int) -> list[AnalyticEigenstate]:
    n = params.n
    P = params.momentum(r)
    out = []
    for root, A in single_species_states(params, r):
        z = np.zeros((n, n), dtype=complex)
        got = _finish(params, TwoExcitationState(A, z, -A), root.energy)
        if got is None:
            continue
        comps = []
        if math.isfinite(root.k.imag):
            comps = [ChoyHaldaneComponent.from_k(root.k, P, n, params.j1)]
        w = WeightSolution(np.ones(1), -np.ones(1), np.zeros(1), np.zeros(1), root.energy)
        out.append(AnalyticEigenstate(root.energy, r, "type1", got[0], comps, w, got[1]))
    return out


def _type3(params: ModelParams, r: int) -> list[AnalyticEigenstate]:
    n = params.n
    out = []
    z = np.zeros((n, n), dtype=complex)
    for k, q in physical_pairs(n, r, allow_equal=False):
        eps = params.delta - 2 * params.j1 * (math.cos(k) + math.cos(q))
        got = _finish(params, TwoExcitationState(z, antisymmetric_plane_wave(n, k, q), z), eps)
        if got is None:
            continue
        comp = ChoyHaldaneComponent(complex(k), complex(q), 1 + 0j, 0j, symmetric=False, bethe=True)
        w = WeightSolution(np.zeros(1), np.zeros(1), np.zeros(1), np.array([np.inf]), eps, np.ones(1))
        out.append(AnalyticEigenstate(eps, r, "type3", got[0], [comp], w, got[1]))
    return out


def _type2_columns(n, comps):
    z = [choy_haldane_matrix(n, c) for c in comps]
    return [TwoExcitationState(z[0], 2 * z[0], z[0]), TwoExcitationState(z[1], -2 * z[1], z[1])]


def _type2_state(params, r, eps, theta1, theta2):
    """Type-2 candidate at ``eps``; component 1 carries ``eps - 2 Omega``."""
    n = params.n
    P = params.momentum(r)
    comps = [
        ChoyHaldaneComponent.from_k(P / 2 + theta1, P, n, params.j1),
        ChoyHaldaneComponent.from_k(P / 2 + theta2, P, n, params.j1),
    ]
    cols = _type2_columns(n, comps)
    R = np.array([residual_vector(params, c, eps) for c in cols]).T
    X = np.array([_flat(c) for c in cols]).T
    norms = np.linalg.norm(X, axis=0)
    if norms.max() < 1e-10:
        return None
    safe = np.where(norms > 1e-10 * norms.max(), norms, np.inf)
    _, sig, vh = np.linalg.svd(R / safe, full_matrices=False)
    lam = vh[-1].conj() / safe
    st = TwoExcitationState(
        lam[0] * cols[0].A + lam[1] * cols[1].A,
        lam[0] * cols[0].B + lam[1] * cols[1].B,
        lam[0] * cols[0].C + lam[1] * cols[1].C,
    )
    raw_norm = math.sqrt(st.norm_squared())
    got = _finish(params, st, eps)
    if got is None:
        return None
    lam = lam / raw_norm
    w = WeightSolution(lam.copy(), lam.copy(), 2 * lam * np.array([1, -1]), np.zeros(2), float(eps))
    return AnalyticEigenstate(float(eps), r, "type2", got[0], comps, w, got[1])


def _theta_of(e: float, c0: float) -> complex:
    return theta_from_x(-e / c0)


def _det_type2(params, P, eps):
    n = params.n
    c0 = 4.0 * params.j1 * math.cos(P / 2)
    om = params.omega
    c1, t1 = real_reduced(_theta_of(eps - 2 * om, c0), P, n, c0)
    c2, t2 = real_reduced(_theta_of(eps + 2 * om, c0), P, n, c0)
    u3 = params.u3
    if params.u1_infinite:
        return c1 * (t2 - u3 * c2) + c2 * (t1 - u3 * c1)
    u = params.u1
    return -(t1 - u * c1) * (t2 - u3 * c2) - (t2 - u * c2) * (t1 - u3 * c1)


def _type2_grid(params, P, lo, hi, npts):
    c0 = abs(4.0 * params.j1 * math.cos(P / 2))
    om = params.omega
    pts = [np.linspace(lo, hi, npts)]
    th = np.linspace(0.0, math.pi, npts)
    ks = np.concatenate([np.geomspace(1e-7, 1e-2, 48), np.linspace(1e-2, 6.0, npts)])
    for shift in (2 * om, -2 * om):
        pts.append(shift - c0 * np.cos(th))
        pts.append(shift - c0 * np.cosh(ks))
        pts.append(shift + c0 * np.cosh(ks))
    g = np.concatenate(pts)
    width = hi - lo
    g = g[(g > lo + 1e-12 * width) & (g < hi - 1e-12 * width)]
    return np.unique(np.concatenate([[lo + 1e-13 * max(1, width), hi - 1e-13 * max(1, width)], g]))


def _type2_candidates(params, r, npts):
    P = params.momentum(r)
    c0 = 4.0 * params.j1 * math.cos(P / 2)
    om = params.omega
    R = _range(params)
    edges = sorted({-R, R, *(s + e for s in (2 * om, -2 * om) for e in (abs(c0), -abs(c0)))})
    edges = [e for e in edges if -R <= e <= R]
    f = lambda e: _det_type2(params, P, e)  # noqa: E731
    cands = list(edges)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-12:
            continue
        grid = _type2_grid(params, P, lo, hi, npts)
        vals = np.array([f(e) for e in grid])
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                cands.append(grid[i])
            elif vals[i] * vals[i + 1] < 0:
                cands.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    return cands


def _type2(params: ModelParams, r: int, npts: int) -> list[AnalyticEigenstate]:
    n = params.n
    P = params.momentum(r)
    c0 = 4.0 * params.j1 * math.cos(P / 2)
    om = params.omega
    out = []
    if not params.u1_infinite and params.u1 == params.u3:
        # the determinant factorizes: each component alone is a solution
        for sign in (1, -1):
            for root, A in single_species_states(params.with_(delta=0.0), r):
                eps = root.energy + 2 * sign * om
                st = TwoExcitationState(A, 2 * sign * A, A)
                got = _finish(params, st, eps)
                if got is None:
                    continue
                comps = []
                if math.isfinite(root.k.imag):
                    comps = [ChoyHaldaneComponent.from_k(root.k, P, n, params.j1)]
                lam = np.array([1.0, 0.0]) if sign == 1 else np.array([0.0, 1.0])
                w = WeightSolution(lam, lam, 2 * lam * np.array([1, -1]), np.zeros(2), float(eps))
                out.append(AnalyticEigenstate(float(eps), r, "type2", got[0], comps, w, got[1]))
        return out
    for eps in _type2_candidates(params, r, npts):
        th1 = _theta_of(eps - 2 * om, c0)
        th2 = _theta_of(eps + 2 * om, c0)
        cand = _type2_state(params, r, eps, th1, th2)
        if cand is not None:
            out.append(cand)
    return out


def symmetric_sector(params: ModelParams, r: int, npts: int | None = None) -> list[AnalyticEigenstate]:
    n = params.n
    dims = sector_dimension(params, r)
    npts = npts or 64 * n
    t1 = _type1(params, r)
    t3 = _type3(params, r)
    want2 = dims["aa"] + dims["ab_sym"]
    for attempt in range(3):
        t2 = _dedupe(_type2(params, r, npts * 4**attempt))
        if len(t2) >= want2:
            break
    return t1 + t2 + t3


# --------------------------------------------------------------------------
# localized route (J1 = J2, P = pi)


def _class_states(n: int, r: int, delta: int, hard_a: bool, hard_b: bool):
    P = 2 * np.pi * r / n
    idx = np.arange(n)
    ph = np.exp(1j * P * idx)

    def pattern(d, sym):
        m = np.zeros((n, n), dtype=complex)
        m[idx, (idx + d) % n] += ph
        if sym:
            m[(idx + d) % n, idx] += ph
        return m

    z = np.zeros((n, n), dtype=complex)
    cols = []
    if not (delta == 0 and hard_a):
        cols.append(TwoExcitationState(pattern(delta, True), z, z))
    if not (delta == 0 and hard_b):
        cols.append(TwoExcitationState(z, z, pattern(delta, True)))
    cols.append(TwoExcitationState(z, pattern(delta, False), z))
    if delta != 0 and 2 * delta != n:
        cols.append(TwoExcitationState(z, pattern(n - delta, False), z))
    return [c for c in cols if c.norm_squared() > 1e-12]


def _classify(st: TwoExcitationState, tol: float = 1e-9) -> str:
    a, b, c = st.A, st.B, st.C
    if np.abs(a).max() < tol and np.abs(c).max() < tol and np.abs(b + b.T).max() < tol:
        return "type3"
    if np.abs(b).max() < tol and np.abs(a + c).max() < tol:
        return "type1"
    if np.abs(a - c).max() < tol and np.abs(b - b.T).max() < tol:
        return "type2"
    return "generic"


def localized_sector(params: ModelParams, r: int) -> list[AnalyticEigenstate]:
    n = params.n
    out = []
    for delta in range(0, n // 2 + 1):
        cols = _class_states(n, r, delta, params.u1_infinite, params.u2_infinite)
        if not cols:
            continue
        X = np.array([_flat(c) for c in cols]).T
        X = X / np.linalg.norm(X, axis=0)
        HX = np.array([_flat(apply_hamiltonian(params, c)) for c in cols]).T / np.linalg.norm(
            np.array([_flat(c) for c in cols]).T, axis=0
        )
        h = X.conj().T @ HX
        h = 0.5 * (h + h.conj().T)
        vals, vecs = np.linalg.eigh(h)
        for e, v in zip(vals, vecs.T):
            flat = X @ v
            m = n * n
            r2 = math.sqrt(2.0)
            st = TwoExcitationState(
                flat[:m].reshape(n, n) / r2, flat[m:2 * m].reshape(n, n), flat[2 * m:].reshape(n, n) / r2
            )
            got = _finish(params, st, float(e))
            if got is None:
                continue
            out.append(AnalyticEigenstate(float(e), r, _classify(got[0]), got[0], [], None, got[1]))
    return _current_basis(params, out)


def _apply_current(params: ModelParams, st: TwoExcitationState) -> TwoExcitationState:
    """Total particle current ``i sum_n J (c+_{n+1} c_n - h.c.)``, the ``P``-derivative of ``H``."""
    n = st.n
    shift = np.roll(np.eye(n), 1, axis=0)
    k1 = 1j * params.j1 * (shift - shift.T)
    k2 = 1j * params.j2 * (shift - shift.T)
    A = k1 @ st.A + st.A @ k1.T
    B = k1 @ st.B + st.B @ k2.T
    C = k2 @ st.C + st.C @ k2.T
    idx = np.arange(n)
    if params.u1_infinite:
        A[idx, idx] = 0.0
    if params.u2_infinite:
        C[idx, idx] = 0.0
    return TwoExcitationState(A, B, C)


def _current_basis(params, states, etol=1e-9):
    """Rotate degenerate levels of equal type into eigenstates of the current.

    Inside a degenerate cluster any basis is valid; the current (the
    derivative of ``H`` with respect to ``P``) selects the one that connects
    continuously to neighbouring momenta, i.e. standing waves in the relative
    coordinate rather than states pinned to one separation.
    """
    out, rest = [], sorted(states, key=lambda s: (s.kind, s.energy))
    i = 0
    while i < len(rest):
        j = i + 1
        while j < len(rest) and rest[j].kind == rest[i].kind and abs(rest[j].energy - rest[i].energy) < etol * max(
            1.0, abs(rest[i].energy)
        ):
            j += 1
        group = rest[i:j]
        i = j
        if len(group) == 1:
            out += group
            continue
        V = np.array([_flat(s.state) for s in group]).T
        IV = np.array([_flat(_apply_current(params, s.state)) for s in group]).T
        m = V.conj().T @ IV
        _, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
        n = params.n
        r2 = math.sqrt(2.0)
        for v in vecs.T:
            flat = V @ v
            nn = n * n
            st = TwoExcitationState(
                flat[:nn].reshape(n, n) / r2, flat[nn:2 * nn].reshape(n, n), flat[2 * nn:].reshape(n, n) / r2
            )
            e = group[0].energy
            got = _finish(params, st, e)
            if got is None:
                continue
            out.append(AnalyticEigenstate(e, group[0].p_index, group[0].kind, got[0], [], None, got[1]))
    return sorted(out, key=lambda s: s.energy)


# --------------------------------------------------------------------------
# generic route


def _components_at(params: ModelParams, P: float, eps: float) -> list[ChoyHaldaneComponent]:
    roots = energy_roots(params, P, eps)
    comps = [ChoyHaldaneComponent.from_k(s.k, P, params.n, params.j1) for s in roots]
    if roots.escaped:
        # a root sent to infinity leaves a component pinned to the diagonal
        comps.append(ChoyHaldaneComponent.from_k(complex(P / 2, -ESCAPED_DECAY), P, params.n, params.j1))
    return comps


def _sigma(params, P, eps):
    try:
        comps = _components_at(params, P, eps)
    except NoRoots:
        return math.inf, None, None
    red = reduced_problem(params, comps, eps)
    return red.sigma_min, comps, red


def _rayleigh(params, P, eps, steps=12):
    """Rayleigh-quotient iteration inside the span of the components at ``eps``."""
    n = params.n
    for _ in range(steps):
        sig, comps, red = _sigma(params, P, eps)
        if comps is None:
            return None
        c = red.null_coefficients(math.inf)[0]
        st = combine(n, comps, _solution_from(params, comps, c, eps, sig, 1))
        if st.norm_squared() < 1e-20:
            return None
        st = normalize_state(st)
        new = float(np.real(np.vdot(_flat(st), _flat(apply_hamiltonian(params, st)))))
        if abs(new - eps) < 1e-13 * max(1.0, abs(eps)):
            return new
        eps = new
    return eps


def _generic_states(params, r, eps):
    """All independent eigenstates found in the component span at ``eps``."""
    n = params.n
    P = params.momentum(r)
    sig, comps, red = _sigma(params, P, eps)
    if comps is None:
        return []
    scale = max(1.0, abs(eps))
    found = []
    for c in red.null_coefficients(max(10 * sig, 1e-10 * scale)):
        w = _solution_from(params, comps, c, eps, sig, 1)
        st = combine(n, comps, w)
        got = _finish(params, st, eps)
        if got is None:
            continue
        w.energy = float(eps)
        found.append(AnalyticEigenstate(float(eps), r, _classify(got[0]), got[0], comps, w, got[1]))
    return found


def _ritz(params, P, eps):
    try:
        comps = _components_at(params, P, eps)
    except NoRoots:
        return None
    return reduced_problem(params, comps, eps).ritz


def _touching_seeds(params, P, grid, ritz):
    """Levels whose fixed-point crossing pairs up with a nearby spurious one.

    Two crossings inside one grid cell leave no sign change; they show up as a
    near-zero local minimum of ``|rho_j - eps|`` instead, where the smallest
    singular value is minimized directly.
    """
    h = grid[1] - grid[0]
    out = []
    for i in range(1, len(grid) - 1):
        rs = ritz[i - 1 : i + 2]
        if any(r is None for r in rs) or len({len(r) for r in rs}) != 1:
            continue
        for j in range(len(rs[0])):
            g = [r[j] - e for r, e in zip(rs, grid[i - 1 : i + 2])]
            if g[0] * g[1] <= 0 or g[1] * g[2] <= 0:
                continue
            if abs(g[1]) < 2 * h and abs(g[1]) <= min(abs(g[0]), abs(g[2])):
                res = minimize_scalar(
                    lambda e: _sigma(params, P, e)[0], bounds=(grid[i - 1], grid[i + 1]),
                    method="bounded", options={"xatol": 1e-14},
                )
                if res.fun < 1e-6 * max(1.0, abs(res.x)):
                    out.append(float(res.x))
    return out


def generic_sector(params: ModelParams, r: int, npts: int | None = None) -> list[AnalyticEigenstate]:
    """Levels where ``H - eps`` is singular on the span of the components.

    The span moves with ``eps``; a level is a fixed point ``rho_j(eps) = eps``
    of the sorted Ritz values of ``H`` on the span.  Sign changes of
    ``rho_j - eps`` between grid energies are refined with brentq and then by
    Rayleigh-quotient iteration.
    """
    P = params.momentum(r)
    R = _range(params)
    npts = npts or 64 * params.n
    # dense where the continua sit, sparse across the bound-state tails
    rb = min(R, 4 * abs(params.j1) + 4 * abs(params.j2) + 2 * abs(params.delta) + 4 * abs(params.omega) + 2.0)
    grid = np.linspace(-rb, rb, npts)
    h = grid[1] - grid[0]
    if R > rb:
        tail = np.arange(rb + h, R + h, max(h, (R - rb) / npts))
        grid = np.concatenate([-tail[::-1], grid, tail])
    ritz = [_ritz(params, P, e) for e in grid]
    seeds = []
    for i in range(len(grid) - 1):
        r0, r1 = ritz[i], ritz[i + 1]
        if r0 is None or r1 is None or len(r0) != len(r1):
            continue
        e0, e1 = grid[i], grid[i + 1]
        for j in range(len(r0)):
            g0, g1 = r0[j] - e0, r1[j] - e1
            if g0 == 0.0:
                seeds.append(e0)
            elif g0 * g1 < 0:

                def g(e, j=j, size=len(r0)):
                    rz = _ritz(params, P, e)
                    if rz is None or len(rz) != size:
                        raise ValueError
                    return rz[j] - e

                try:
                    seeds.append(brentq(g, e0, e1, xtol=1e-14, rtol=1e-15))
                except ValueError:
                    seeds.append(0.5 * (e0 + e1))
    seeds += _touching_seeds(params, P, grid, ritz)
    out = []
    levels: list[float] = []
    for sd in sorted(seeds):
        eps = _rayleigh(params, P, float(sd), steps=4)
        if eps is None or any(abs(eps - lv) < 1e-9 for lv in levels):
            continue
        states = _generic_states(params, r, eps)
        if states:
            levels.append(eps)
            out.extend(states)
    return out


# --------------------------------------------------------------------------


def analytic_sector(params: ModelParams, p_index: int, strict: bool = False) -> SectorSolution:
    """All eigenstates of one momentum sector, each verified against ``H``."""
    n = params.n
    r = p_index % n
    route = route_for(params, r)
    if route == "localized":
        states = localized_sector(params, r)
    elif route == "symmetric":
        states = symmetric_sector(params, r)
    else:
        want = sector_dimension(params, r)["total"]
        states = []
        for npts in (64 * n, 256 * n, 1024 * n):
            states = _dedupe(states + generic_sector(params, r, npts=npts))
            if len(states) >= want:
                break
    states = _dedupe(states)
    sol = SectorSolution(r, route, states, sector_dimension(params, r)["total"])
    if strict and not sol.complete:
        raise RootCountMismatch(f"P index {r}: {len(states)} of {sol.expected} states ({route} route)")
    return sol


def analytic_spectrum(params: ModelParams, strict: bool = False) -> list[SectorSolution]:
    return [analytic_sector(params, r, strict) for r in range(params.n)]
