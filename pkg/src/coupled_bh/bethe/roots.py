"""Quasi-momentum roots: single-species Bethe roots and the coupled energy equation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..model import ModelParams, TwoExcitationState, residual, single_excitation_energies
from .components import ChoyHaldaneComponent, RootCountMismatch, choy_haldane_matrix


class NoRoots(ValueError):
    pass


# --------------------------------------------------------------------------
# lattice bookkeeping


def pair_orbit_count(n: int, r: int, *, diagonal: bool, antisymmetric: bool = False) -> int:
    """Dimension of ``N x N`` matrices ``X`` with ``X_{n+1,m+1} = e^{iP} X_{n,m}``.

    Counts symmetric matrices (with or without diagonal) or antisymmetric ones.
    """
    phase = np.exp(2j * np.pi * r / n)
    seen = set()
    count = 0
    for i in range(n):
        for j in range(i, n):
            if (i, j) in seen or (i == j and (antisymmetric or not diagonal)):
                continue
            # walk the orbit back to its start, tracking the sign of i <-> j swaps
            a, b, sign, length = i, j, 1.0, 0
            while True:
                seen.add((a, b))
                a, b = (a + 1) % n, (b + 1) % n
                length += 1
                if a > b:
                    a, b = b, a
                    if antisymmetric:
                        sign = -sign
                if (a, b) == (i, j):
                    break
            # the orbit state survives iff the phase closes after one loop
            if abs(phase**length * sign - 1.0) < 1e-9:
                count += 1
    return count


def physical_pairs(n: int, r: int, *, allow_equal: bool) -> list[tuple[float, float]]:
    """Unordered lattice-momentum pairs ``{k, q}`` with ``k + q = 2 pi r / N``."""
    out = []
    for a in range(n):
        b = (r - a) % n
        if a > b or (a == b and not allow_equal):
            continue
        out.append((2 * np.pi * a / n, 2 * np.pi * b / n))
    return out


def half_integer_pairs(n: int, r: int) -> list[tuple[float, float]]:
    """Unordered pairs with ``e^{-ikN} = -1`` and ``k != q``."""
    P = 2 * np.pi * r / n
    out = []
    for a in range(n):
        k = np.pi * (2 * a + 1) / n
        b = ((r * 2 - (2 * a + 1)) % (2 * n) - 1) // 2
        if (2 * b + 1) <= (2 * a + 1):
            continue
        q = P - k
        out.append((k, q))
    return out


# --------------------------------------------------------------------------
# single species


def real_reduced(theta: complex, P: float, n: int, c0: float) -> tuple[float, float]:
    """``(c, t)`` proportional to ``(cos(kN/2), d sin(kN/2))`` and real.

    ``k = P/2 + theta`` and ``d = 2J(sin k - sin q) = c0 sin(theta)``.  For
    complex ``theta`` both are divided by ``cosh(Im(k) N/2)`` and rotated by a
    common phase, which leaves the ratio ``d tan(kN/2)`` untouched.
    """
    theta = complex(theta)
    if theta.imag == 0.0:
        k = P / 2 + theta.real
        return math.cos(k * n / 2), c0 * math.sin(theta.real) * math.sin(k * n / 2)
    a = (P / 2 + theta.real) * n / 2
    b = -theta.imag * n / 2
    tb = math.tanh(b)
    c = complex(math.cos(a), math.sin(a) * tb)
    sn = complex(math.sin(a), -math.cos(a) * tb)
    t = c0 * np.sin(theta) * sn
    if round(2 * a / math.pi) % 2:
        c, t = -1j * c, -1j * t
    return float(c.real), float(t.real)


@dataclass
class SingleSpeciesRoot:
    energy: float
    k: complex
    s: complex
    q: complex = field(default=0j)

    def __iter__(self):
        return iter((self.energy, self.k, self.s))


def _theta_branches(c0: float, kmax: float, npts: int):
    """Three parameter ranges: bound states on either side and the continuum."""
    ks = np.concatenate([np.geomspace(1e-7, 1e-2, 32), np.linspace(1e-2, kmax, npts)])
    return [
        ("low", [complex(0.0, -K) for K in ks]),
        ("band", list(np.linspace(0.0, math.pi, npts))),
        ("high", [complex(math.pi, -K) for K in ks]),
    ]


def _scan_roots(func, grid) -> list:
    """Sign changes of a real function along a 1-d parametrised path, refined by brentq."""
    vals = np.array([func(g) for g in grid])
    roots = []
    for i in range(len(grid) - 1):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0:
            roots.append(grid[i])
        elif f0 * f1 < 0:
            g0, g1 = grid[i], grid[i + 1]
            # linear interpolation of the path parameter
            lam = brentq(lambda x: func(g0 + x * (g1 - g0)), 0.0, 1.0, xtol=1e-15, rtol=1e-15)
            roots.append(g0 + lam * (g1 - g0))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return roots


def bethe_thetas(P: float, n: int, j: float, u: float | None, npts: int | None = None) -> list[complex]:
    """Relative quasi-momenta ``theta`` solving ``d tan(kN/2) = U``.

    ``u=None`` selects the hard-core condition ``cos(kN/2) = 0``.
    """
    c0 = 4.0 * j * math.cos(P / 2)
    npts = npts or 64 * n
    if u is None:
        f = lambda th: real_reduced(th, P, n, c0)[0]  # noqa: E731
    else:
        f = lambda th: (lambda ct: ct[1] - u * ct[0])(real_reduced(th, P, n, c0))  # noqa: E731
    scale = abs(u) if u else 0.0
    kmax = math.acosh((scale + 10.0) / max(abs(c0), 1e-12) + 1.0) + 1.0
    out = []
    for _, grid in _theta_branches(c0, kmax, npts):
        out.extend(complex(x) for x in _scan_roots(f, grid))
    return out


def _species_params(params: ModelParams) -> ModelParams:
    return params.with_(omega=0.0, j2=params.j1, u2=params.u1, u2_infinite=params.u1_infinite)


def _single_state(n: int, comp: ChoyHaldaneComponent) -> TwoExcitationState:
    z = np.zeros((n, n), dtype=complex)
    return TwoExcitationState(choy_haldane_matrix(n, comp), z, z.copy())


def single_species_states(params: ModelParams, p_index: int) -> list[tuple[SingleSpeciesRoot, np.ndarray]]:
    """Bethe roots of one species with the matching ``A`` matrices (unnormalised)."""
    n = params.n
    r = p_index % n
    P = params.momentum(r)
    j, delta = params.j1, params.delta
    hard = params.u1_infinite
    u = None if hard else params.u1
    expected = pair_orbit_count(n, r, diagonal=not hard)
    sp = _species_params(params)
    c0 = 4.0 * j * math.cos(P / 2)
    found: list[tuple[SingleSpeciesRoot, np.ndarray]] = []

    def add(k, energy):
        comp = ChoyHaldaneComponent.from_k(k, P, n, j)
        st = _single_state(n, comp)
        nrm = math.sqrt(st.norm_squared())
        if nrm < 1e-8:
            return
        st = st.scaled(1.0 / nrm)
        if residual(sp, st, energy) > 1e-8 * max(1.0, abs(energy)):
            return
        found.append((SingleSpeciesRoot(float(energy), comp.k, comp.s, comp.q), st.A))

    if not hard and u == 0.0:
        for k, q in physical_pairs(n, r, allow_equal=True):
            add(k, 2 * delta - 2 * j * (math.cos(k) + math.cos(q)))
    elif hard:
        for k, q in half_integer_pairs(n, r):
            add(k, 2 * delta - 2 * j * (math.cos(k) + math.cos(q)))
    elif abs(c0) < 1e-12:
        for k, q in half_integer_pairs(n, r):
            add(k, 2 * delta)
        # state pinned to the diagonal: K -> infinity
        A = np.diag(np.exp(1j * P * np.arange(n))) / math.sqrt(2.0 * n)
        found.append((SingleSpeciesRoot(2 * delta + u, complex(P / 2, -math.inf), -1 + 0j, complex(P / 2, math.inf)), A))
    else:
        for th in bethe_thetas(P, n, j, u):
            add(P / 2 + th, 2 * delta - c0 * np.cos(th).real)
    found = _dedupe_single(found)
    if len(found) < expected:
        raise RootCountMismatch(f"P index {r}: isolated {len(found)} of {expected} roots")
    found.sort(key=lambda x: x[0].energy)
    return found


def _dedupe_single(found):
    out = []
    for item in found:
        dup = False
        for other in out:
            if abs(item[0].energy - other[0].energy) < 1e-7:
                ov = abs(np.vdot(item[1], other[1])) * 2.0
                if ov > 1 - 1e-6:
                    dup = True
                    break
        if not dup:
            out.append(item)
    return out


def solve_single_species(params: ModelParams, p_index: int) -> list[SingleSpeciesRoot]:
    """Finite-N Bethe roots ``(energy, k, s)`` of one species in momentum sector ``p_index``.

    Uses ``j1``, ``u1`` (or hard-core mode) and ``delta``; ``omega`` is ignored.
    One root is returned per eigenstate of the symmetric sector.
    """
    return [root for root, _ in single_species_states(params, p_index)]


# --------------------------------------------------------------------------
# coupled energy equation


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for pa, ca in a.items():
        for pb, cb in b.items():
            out[pa + pb] = out.get(pa + pb, 0) + ca * cb
    return out


def _laurent_add(*terms) -> dict:
    out: dict = {}
    for t in terms:
        for p, c in t.items():
            out[p] = out.get(p, 0) + c
    return out


def _laurent_scale(a: dict, f) -> dict:
    return {p: c * f for p, c in a.items()}


@dataclass
class QuasiMomentumSet:
    """One solution ``(k, q = P - k)`` of ``eps = eps_k^s1 + eps_q^s2``."""

    k: complex
    q: complex
    branches: tuple[str, str]
    error: float


@dataclass
class EnergyRoots:
    sets: list[QuasiMomentumSet]
    escaped: bool = False

    def __iter__(self):
        return iter(self.sets)

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, i):
        return self.sets[i]


def _branch_error(params, k, P, eps):
    em_k, ep_k = single_excitation_energies(params, k)
    em_q, ep_q = single_excitation_energies(params, P - k)
    best = None
    for lab, ek in (("-", em_k), ("+", ep_k)):
        for lab2, eq in (("-", em_q), ("+", ep_q)):
            err = abs(eps - ek - eq)
            if best is None or err < best[0]:
                best = (err, (lab, lab2))
    return best


def _polish(params, k, P, eps, branches, steps=30):
    sig = {"-": 0, "+": 1}

    def g(x):
        a = single_excitation_energies(params, x)[sig[branches[0]]]
        b = single_excitation_energies(params, P - x)[sig[branches[1]]]
        return eps - a - b

    h = 1e-7
    for _ in range(steps):
        val = g(k)
        if abs(val) < 1e-14:
            break
        der = (g(k + h) - g(k - h)) / (2 * h)
        if der == 0:
            break
        step = val / der
        k = k - step
        if abs(step) < 1e-15:
            break
    return complex(k)


def _canonical_k(k: complex, P: float) -> complex:
    """Pick the member of ``{k, P-k}`` with ``Im k <= 0`` and fold ``Re k`` into ``[0, 2 pi)``."""
    q = P - k
    if q.imag < k.imag - 1e-12:
        k = q
    elif abs(q.imag - k.imag) <= 1e-12 and (q.real % (2 * np.pi)) < (k.real % (2 * np.pi)):
        k = q
    im = 0.0 if abs(k.imag) < 1e-12 else k.imag
    return complex(k.real % (2 * np.pi), im)


def energy_roots(params: ModelParams, P: float, eps: float, tol: float = 1e-9) -> EnergyRoots:
    """All quasi-momentum pairs with ``eps = eps_k^(+-) + eps_{P-k}^(+-)``.

    The four branch combinations are folded into one polynomial of degree 8 in
    ``z = e^{ik}``; its roots are polished and back-substituted.  Pairs
    ``(k, P-k)`` are reported once.  ``escaped`` flags a dropped leading
    coefficient (a root sent to infinity, as for ``J1 = 0``).
    """
    j1, j2, d, om = params.j1, params.j2, params.delta, params.omega
    e_ip = np.exp(1j * P)
    # cos k = (z + 1/z)/2, cos q = (e^{iP}/z + e^{-iP} z)/2
    cos_k = {1: 0.5, -1: 0.5}
    cos_q = {-1: 0.5 * e_ip, 1: 0.5 / e_ip}
    cs = _laurent_add(cos_k, cos_q)
    w_sum = _laurent_add({0: 2 * d}, _laurent_scale(cs, -2 * j1))
    wp_sum = _laurent_scale(cs, -2 * j2)
    e_a = _laurent_add({0: eps}, _laurent_scale(w_sum, -1))
    e_c = _laurent_add({0: eps}, _laurent_scale(wp_sum, -1))
    sigma = _laurent_add(w_sum, wp_sum)
    two_eps_sigma = _laurent_add({0: 2 * eps}, _laurent_scale(sigma, -1))
    # D = (omega_k - omega'_k) - (omega_q - omega'_q)
    dk = _laurent_scale(cos_k, -2 * (j1 - j2))
    dq = _laurent_scale(cos_q, -2 * (j1 - j2))
    dd = _laurent_add(dk, _laurent_scale(dq, -1))
    sq = _laurent_mul(two_eps_sigma, two_eps_sigma)
    poly = _laurent_add(
        _laurent_mul(_laurent_mul(_laurent_add(sq, _laurent_scale(_laurent_mul(dd, dd), -1)), e_a), e_c),
        _laurent_scale(sq, -4 * om**2),
    )
    coeffs = np.array([poly.get(p, 0) for p in range(4, -5, -1)], dtype=complex)
    scale = np.abs(coeffs).max()
    if scale == 0:
        raise NoRoots("energy equation degenerates (holds for every k)")
    lead = np.nonzero(np.abs(coeffs) > 1e-13 * scale)[0]
    escaped = lead[0] > 0 or lead[-1] < len(coeffs) - 1
    zs = np.roots(coeffs[lead[0]:lead[-1] + 1])
    zs = zs[np.abs(zs) > 1e-300]
    sets: list[QuasiMomentumSet] = []
    for z in zs:
        k = -1j * np.log(z)
        err, br = _branch_error(params, k, P, eps)
        if err > 1e-13 * max(1.0, abs(eps)):
            k = _polish(params, k, P, eps, br)
            err, br = _branch_error(params, k, P, eps)
        if err > tol * max(1.0, abs(eps)):
            continue
        kc = _canonical_k(k, P)
        dup = False
        for s in sets:
            dk_ = (kc - s.k)
            if abs(complex((dk_.real + np.pi) % (2 * np.pi) - np.pi, dk_.imag)) < 1e-7:
                dup = True
                break
        if not dup:
            sets.append(QuasiMomentumSet(kc, P - kc, br, float(err)))
    if not sets:
        raise NoRoots(f"no quasi-momentum closes eps={eps} at P={P}")
    return EnergyRoots(sets, bool(escaped))
