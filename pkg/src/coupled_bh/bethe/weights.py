"""Weights of Choy-Haldane components and assembly of eigenstates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import ModelParams, TwoExcitationState, dispersion_pair, normalize_state, residual_vector
from .components import (
    ChoyHaldaneComponent,
    InconsistentWeights,
    NoNontrivialSolution,
    antisymmetric_plane_wave,
    choy_haldane_matrix,
)

KINDS = ("type1", "type2", "type3", "generic")


def kappa(params: ModelParams, k, q, eps: float, offset: float = 1e-9) -> tuple[complex, bool]:
    """Antisymmetric mixing ``kappa`` of a component; the flag marks a shifted denominator."""
    w_k, wp_k = dispersion_pair(params, k)
    w_q, wp_q = dispersion_pair(params, q)
    den = 2 * eps - w_k - wp_k - w_q - wp_q
    shifted = abs(den) < 1e-12
    if shifted:
        den = den + 2 * offset
    return complex((w_k - wp_k - w_q + wp_q) / den), shifted


@dataclass
class WeightSolution:
    """Weights of ``A = sum lambda HC``, ``C = sum lambda' HC``, ``B = sum lambda'' (HC + kappa HC')``.

    ``antisym`` holds the raw coefficient of ``HC'`` in ``B`` (``lambda'' kappa``),
    which stays meaningful when ``lambda''`` vanishes.
    """

    lambdas: np.ndarray
    lambdas_prime: np.ndarray
    lambdas_dprime: np.ndarray
    kappas: np.ndarray
    energy: float
    antisym: np.ndarray = field(default=None, repr=False)
    determinant: float = 0.0
    nullity: int = 1


def _component_columns(n: int, comps: list[ChoyHaldaneComponent]) -> list[TwoExcitationState]:
    z = np.zeros((n, n), dtype=complex)
    cols = []
    for comp in comps:
        sym = choy_haldane_matrix(n, comp)
        anti = choy_haldane_matrix(n, ChoyHaldaneComponent(comp.k, comp.q, comp.s, comp.u_tilde, False, comp.bethe))
        cols += [
            TwoExcitationState(sym, z, z),
            TwoExcitationState(z, z, sym),
            TwoExcitationState(z, sym, z),
            TwoExcitationState(z, anti, z),
        ]
    return cols


def _flat(state: TwoExcitationState) -> np.ndarray:
    r2 = math.sqrt(2.0)
    return np.concatenate([(r2 * state.A).ravel(), state.B.ravel(), (r2 * state.C).ravel()])


@dataclass
class ReducedProblem:
    """``(H - eps)`` restricted to the span of the component columns."""

    basis_map: np.ndarray  # coefficient vectors of an orthonormal basis of the span
    sigma: np.ndarray  # singular values, ascending
    right: np.ndarray  # right singular vectors (columns), same order
    n_columns: int
    ritz: np.ndarray = field(default=None, repr=False)

    @property
    def sigma_min(self) -> float:
        return float(self.sigma[0]) if len(self.sigma) else math.inf

    def null_coefficients(self, tol: float) -> list[np.ndarray]:
        return [self.basis_map @ self.right[:, i] for i in range(len(self.sigma)) if self.sigma[i] < tol]


def reduced_problem(params: ModelParams, comps: list[ChoyHaldaneComponent], eps: float) -> ReducedProblem:
    cols = _component_columns(params.n, comps)
    X = np.array([_flat(c) for c in cols]).T
    R = np.array([residual_vector(params, c, eps) for c in cols]).T
    # orthonormal basis of the span; drops vanishing or repeated columns
    _, S, Vh = np.linalg.svd(X, full_matrices=False)
    keep = S > 1e-9 * max(S[0], 1e-300)
    basis_map = Vh[keep].conj().T / S[keep]
    Rq = R @ basis_map
    _, sig, Wh = np.linalg.svd(Rq, full_matrices=False)
    order = np.argsort(sig)
    # Ritz values of H on the span estimate the nearby levels
    Q = X @ basis_map
    hq = Q.conj().T @ (Rq + eps * Q)
    ritz = np.linalg.eigvalsh(0.5 * (hq + hq.conj().T))
    return ReducedProblem(basis_map, sig[order], Wh[order].conj().T, len(cols), ritz)


def _structured(params, comps, eps, target, tol=1e-9):
    """Refit ``target`` with one weight per component tied by the plane-wave relations.

    Returns ``None`` when a relation is singular (``Omega = 0`` or a vanishing
    denominator) or the tied form does not reproduce ``target``.
    """
    if params.omega == 0.0:
        return None
    n = params.n
    cols, rel = [], []
    for comp in comps:
        w_k, wp_k = dispersion_pair(params, comp.k)
        w_q, wp_q = dispersion_pair(params, comp.q)
        e, ep = eps - w_k - w_q, eps - wp_k - wp_q
        if abs(ep) < 1e-10:
            return None
        kap, shifted = kappa(params, comp.k, comp.q, eps)
        if shifted:
            return None
        hc = choy_haldane_matrix(n, comp)
        hc_a = choy_haldane_matrix(n, ChoyHaldaneComponent(comp.k, comp.q, comp.s, comp.u_tilde, False, comp.bethe))
        b = e / params.omega
        cols.append(_flat(TwoExcitationState(hc, b * (hc + kap * hc_a), (e / ep) * hc)))
        rel.append((e / ep, b, kap))
    X = np.array(cols).T
    y = _flat(target)
    lam, *_ = np.linalg.lstsq(X, y, rcond=None)
    if np.linalg.norm(X @ lam - y) > tol * max(np.linalg.norm(y), 1e-300):
        return None
    r, b, kap = (np.array(v, dtype=complex) for v in zip(*rel))
    return lam, lam * r, lam * b, kap


def _solution_from(params, comps, coeffs, eps, det, nullity) -> WeightSolution:
    coeffs = np.asarray(coeffs).reshape(len(comps), 4)
    lam, lam_c, lam_b, anti = coeffs.T
    kap = np.array([b_a / b if abs(b) > 1e-12 else np.nan for b, b_a in zip(lam_b, anti)], dtype=complex)
    raw = WeightSolution(lam, lam_c, lam_b, kap, float(eps), anti, float(det), nullity)
    # the span is redundant; prefer the representative obeying the weight relations
    tied = _structured(params, comps, eps, combine(params.n, comps, raw))
    if tied is None:
        return raw
    lam, lam_c, lam_b, kap = tied
    return WeightSolution(lam, lam_c, lam_b, kap, float(eps), lam_b * kap, float(det), nullity)


def weight_system(
    params: ModelParams, components: list[ChoyHaldaneComponent], eps: float, tol: float = 1e-8
) -> WeightSolution | list[WeightSolution]:
    """Weights making ``sum_i`` of the components an eigenstate at energy ``eps``.

    The homogeneous system is ``(H - eps)`` acting on the span of the
    component matrices; off the diagonal it is satisfied identically when the
    quasi-momenta solve the energy equation, so only the near-diagonal rows
    carry information.  The smallest singular value plays the role of the
    determinant.  When several independent solutions exist a list is returned.
    """
    red = reduced_problem(params, components, eps)
    scale = max(1.0, abs(eps))
    det = red.sigma_min
    if det > tol * scale:
        raise NoNontrivialSolution(f"smallest singular value {det:.3e} at eps={eps}")
    sols = []
    for c in red.null_coefficients(tol * scale):
        st = combine(params.n, components, _solution_from(params, components, c, eps, det, 1))
        nrm = math.sqrt(st.norm_squared())
        sols.append(_solution_from(params, components, c / nrm, eps, det, 1))
    for s in sols:
        s.nullity = len(sols)
    return sols[0] if len(sols) == 1 else sols


def combine(n: int, comps: list[ChoyHaldaneComponent], w: WeightSolution) -> TwoExcitationState:
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    C = np.zeros((n, n), dtype=complex)
    anti = w.antisym if w.antisym is not None else w.lambdas_dprime * np.nan_to_num(w.kappas)
    for i, comp in enumerate(comps):
        hc = choy_haldane_matrix(n, comp)
        hc_a = choy_haldane_matrix(n, ChoyHaldaneComponent(comp.k, comp.q, comp.s, comp.u_tilde, False, comp.bethe))
        A += w.lambdas[i] * hc
        C += w.lambdas_prime[i] * hc
        B += w.lambdas_dprime[i] * hc + anti[i] * hc_a
    return TwoExcitationState(A, B, C, energy=w.energy)


def assemble_eigenstate(
    components: list[ChoyHaldaneComponent], weights: WeightSolution, kind: str = "generic", n: int | None = None
) -> TwoExcitationState:
    """Normalized state built from components and weights.

    ``type1`` forces ``C = -A`` and ``B = 0``; ``type3`` builds the
    antisymmetric ``B`` of real plane waves with ``A = C = 0``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if not components:
        raise InconsistentWeights("no components")
    m = len(components)
    for arr in (weights.lambdas, weights.lambdas_prime, weights.lambdas_dprime):
        if len(arr) != m:
            raise InconsistentWeights(f"{len(arr)} weights for {m} components")
    if n is None:
        raise ValueError("lattice size n is required")
    if kind == "type1":
        if np.abs(weights.lambdas + weights.lambdas_prime).max() > 1e-8 * max(1.0, np.abs(weights.lambdas).max()):
            raise InconsistentWeights("type-1 states need lambda' = -lambda")
        if np.abs(weights.lambdas_dprime).max() > 1e-12:
            raise InconsistentWeights("type-1 states carry no ab weight")
    if kind == "type3":
        B = np.zeros((n, n), dtype=complex)
        anti = weights.antisym if weights.antisym is not None else weights.lambdas_dprime
        for c, comp in zip(anti, components):
            B += c * antisymmetric_plane_wave(n, comp.k.real, comp.q.real)
        z = np.zeros((n, n), dtype=complex)
        st = TwoExcitationState(z, B, z.copy(), energy=weights.energy)
    else:
        st = combine(n, components, weights)
    try:
        out = normalize_state(st)
    except ValueError as exc:
        raise InconsistentWeights(str(exc)) from exc
    out.energy = weights.energy
    out.label = kind
    return out
