"""Momentum-space kernel of the two-excitation problem with on-site interactions.

Writing the eigenstate in momentum space, every pair amplitude is slaved to
the on-site amplitudes ``A_nn = a e^{iPn}`` and ``C_nn = c e^{iPn}``.  Per
relative momentum ``p`` (with ``q = P - p``) the kernel ``m(p)`` maps the
interaction sources ``(U1 a, U2 c)`` to ``(A_p, C_p)``.  The energy is quantised where
``det(diag(U) S - 1) = 0`` with ``S = (1/N) sum_p m(p)``; in the thermodynamic
limit ``S`` becomes the integral over ``p``.

The inter-species ``U3`` is not part of this closure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ModelParams, dispersion_pair, single_excitation_energies


class PoleEncountered(ZeroDivisionError):
    pass


@dataclass
class MomentumKernel:
    p: float
    eta: complex
    m: np.ndarray  # without interaction factors
    M: np.ndarray  # m with columns multiplied by (U1, U2)


def _kernel_parts(params: ModelParams, P, eps, p):
    w_p, wp_p = dispersion_pair(params, p)
    w_q, wp_q = dispersion_pair(params, P - p)
    e_a = eps - w_p - w_q
    e_c = eps - wp_p - wp_q
    b1 = eps - w_p - wp_q
    b2 = eps - w_q - wp_p
    return e_a, e_c, b1, b2


def _m_stable(params, P, eps, p):
    """Vectorised ``m(p)`` without the ``1/b`` factors; returns (m11, m12, m22, den)."""
    e_a, e_c, b1, b2 = _kernel_parts(params, P, eps, p)
    om2 = params.omega**2
    bb = b1 * b2
    bs = b1 + b2
    den = e_a * e_c * bb - om2 * bs * (e_a + e_c)
    return e_c * bb - om2 * bs, om2 * bs, e_a * bb - om2 * bs, den


def momentum_kernel(params: ModelParams, P: float, eps: float, p: float) -> MomentumKernel:
    """``eta_pq`` and ``M(p)`` at one relative momentum.

    ``eta_pq = Omega^2 (1/(eps - w_p - w'_q) + 1/(eps - w_q - w'_p))``.
    """
    e_a, e_c, b1, b2 = _kernel_parts(params, P, eps, p)
    for name, val in (("eps-w_p-w_q", e_a), ("eps-w'_p-w'_q", e_c), ("eps-w_p-w'_q", b1), ("eps-w_q-w'_p", b2)):
        if abs(val) < 1e-12:
            raise PoleEncountered(f"{name} vanishes at p={p}")
    eta = params.omega**2 * (1.0 / b1 + 1.0 / b2)
    det = e_a * e_c - eta * (e_a + e_c)
    if abs(det) < 1e-12:
        raise PoleEncountered(f"kernel determinant vanishes at p={p}")
    m = np.array([[e_c - eta, eta], [eta, e_a - eta]]) / det
    u1 = 0.0 if params.u1_infinite else params.u1
    u2 = 0.0 if params.u2_infinite else params.u2
    return MomentumKernel(float(p), complex(eta), m, m * np.array([u1, u2]))


def _periodic_mean(func, n: int | None, tol: float) -> np.ndarray:
    """Mean of ``func(p)`` over lattice momenta, or over the circle when ``n`` is None.

    The circle average uses the periodic trapezoid rule, doubling the point
    count until successive estimates agree to ``tol``.
    """
    if n is not None:
        return np.mean(func(2 * np.pi * np.arange(n) / n), axis=-1)
    pts = 64
    prev = np.mean(func(2 * np.pi * (np.arange(pts) + 0.5) / pts), axis=-1)
    while pts < 2**20:
        pts *= 2
        cur = np.mean(func(2 * np.pi * (np.arange(pts) + 0.5) / pts), axis=-1)
        if np.abs(cur - prev).max() < tol * max(1.0, np.abs(cur).max()):
            return cur
        prev = cur
    return cur


def kernel_sum(params: ModelParams, P: float, eps: float, n: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """``S = (1/N) sum_p m(p)`` over lattice momenta, or the integral over ``p`` when ``n`` is None."""

    def integrand(ps):
        m11, m12, m22, den = _m_stable(params, P, eps, ps)
        if np.any(np.abs(den) < 1e-12 * max(1.0, abs(eps)) ** 4):
            raise PoleEncountered(f"eps={eps} lies on a two-particle continuum")
        return np.array([[m11 / den, m12 / den], [m12 / den, m22 / den]])

    return _periodic_mean(integrand, n, tol)


def _channel_sum(params: ModelParams, P: float, eps: float, channel: str, n, tol) -> float:
    """``S00 + S01`` (``sym``) or ``S00 - S01`` (``anti``) for equal species.

    With ``J1 = J2`` and ``Delta = 0`` all four pair denominators coincide,
    ``e = eps - w_p - w_q``, and the channel kernels reduce to
    ``e/(e^2 - 4 Omega^2)`` and ``1/e``.  The reduced forms stay finite where
    the full kernel has a removable ``0/0`` from the other channel.
    """
    om2 = params.omega**2

    def integrand(ps):
        w_p, _ = dispersion_pair(params, ps)
        w_q, _ = dispersion_pair(params, P - ps)
        e = np.real(eps - w_p - w_q)
        den = e * e - 4 * om2 if channel == "sym" else e
        if np.any(np.abs(den) < 1e-12 * max(1.0, abs(eps)) ** 2):
            raise PoleEncountered(f"eps={eps} lies on a continuum of the {channel} channel")
        return e / den if channel == "sym" else 1.0 / den

    return float(_periodic_mean(integrand, n, tol))


def _equal_species(params: ModelParams) -> bool:
    same_u = (params.u1_infinite and params.u2_infinite) or (
        not params.u1_infinite and not params.u2_infinite and params.u1 == params.u2
    )
    return params.j1 == params.j2 and params.delta == 0.0 and same_u


def kernel_determinant(
    params: ModelParams, P: float, eps: float, n: int | None = None, channel: str | None = None
) -> float:
    """Quantisation function ``det(W S - V)``; zero at a two-excitation level.

    Finite ``U_i`` gives the row ``U_i S[i] - e_i``; a hard-core species gives
    ``S[i]`` (the source stays finite while the on-site amplitude vanishes).
    ``channel="sym"`` restricts to ``a = c`` and ``channel="anti"`` to
    ``a = -c``; both need ``J1 = J2``, ``U1 = U2`` and ``Delta = 0``.
    """
    if channel is not None:
        if channel not in ("sym", "anti"):
            raise ValueError("channel must be None, 'sym' or 'anti'")
        if not _equal_species(params):
            raise ValueError("channels need J1 = J2, U1 = U2 and Delta = 0")
        s = _channel_sum(params, P, eps, channel, n, 1e-12)
        return s if params.u1_infinite else params.u1 * s - 1.0
    S = np.real(kernel_sum(params, P, eps, n))
    rows = []
    for i, (hard, u) in enumerate(((params.u1_infinite, params.u1), (params.u2_infinite, params.u2))):
        e = np.zeros(2)
        e[i] = 1.0
        rows.append(S[i] if hard else u * S[i] - e)
    return float(np.linalg.det(np.array(rows)))


def continua(params: ModelParams, P: float, pts: int = 4096) -> list[tuple[float, float]]:
    """Ranges of ``eps_p^(s) + eps_(P-p)^(s')`` for the four branch pairs."""
    ps = 2 * np.pi * np.arange(pts) / pts
    em_p, ep_p = (np.real(x) for x in single_excitation_energies(params, ps))
    em_q, ep_q = (np.real(x) for x in single_excitation_energies(params, P - ps))
    out = []
    for a in (em_p, ep_p):
        for b in (em_q, ep_q):
            s = a + b
            out.append((float(s.min()), float(s.max())))
    return out


def gaps(params: ModelParams, P: float, lo: float, hi: float, channel: str | None = None) -> list[tuple[float, float]]:
    """Energy intervals inside ``[lo, hi]`` free of the continua a channel couples to.

    ``a = c`` pairs see only the equal-branch continua, ``a = -c`` pairs only
    the mixed ones; by default every continuum is excluded.
    """
    bands = continua(params, P)
    if channel == "sym":
        bands = [bands[0], bands[3]]
    elif channel == "anti":
        bands = [bands[1], bands[2]]
    bands = sorted(bands)
    merged: list[list[float]] = []
    for a, b in bands:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    out = []
    cur = lo
    for a, b in merged:
        if a > cur:
            out.append((cur, min(a, hi)))
        cur = max(cur, b)
    if cur < hi:
        out.append((cur, hi))
    return [(a, b) for a, b in out if b - a > 1e-12]


__all__ = [
    "MomentumKernel",
    "PoleEncountered",
    "continua",
    "gaps",
    "kernel_determinant",
    "kernel_sum",
    "momentum_kernel",
]
