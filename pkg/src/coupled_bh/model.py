"""Parameters, dispersions, single-excitation solutions and two-excitation states.

Conventions used throughout the package:

* sites are labelled ``0 .. N-1`` with periodic boundaries;
* lattice momenta are integer indices ``r`` with ``k = 2*pi*r/N``;
* a two-excitation state is stored as three ``N x N`` coefficient matrices
  ``A`` (aa), ``B`` (ab) and ``C`` (bb) of
  ``sum_nm (A_nm a+_n a+_m + B_nm a+_n b+_m + C_nm b+_n b+_m)|0>``.
  ``A`` and ``C`` are symmetric; the state norm is
  ``sum 2|A|^2 + |B|^2 + 2|C|^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


class ZeroState(ValueError):
    """Raised when a state has no weight to normalize."""


class BadParameters(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the coupled Bose-Hubbard chain.

    ``u1_infinite`` / ``u2_infinite`` switch the corresponding species to
    hard-core bosons; the finite ``u1`` / ``u2`` values are then ignored.
    """

    j1: float = 1.0
    j2: float = 1.0
    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0
    omega: float = 0.0
    delta: float = 0.0
    n: int = 10
    u1_infinite: bool = False
    u2_infinite: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise BadParameters(f"site count n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("j1", "j2", "u1", "u2", "u3", "omega", "delta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise BadParameters(
                    f"{name} must be finite; use u1_infinite/u2_infinite for hard-core bosons"
                )
            object.__setattr__(self, name, float(value))

    @property
    def hardcore(self) -> bool:
        return self.u1_infinite and self.u2_infinite

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def momentum(self, r: int) -> float:
        return 2.0 * np.pi * (r % self.n) / self.n

    def to_dict(self) -> dict[str, Any]:
        return {
            "j1": self.j1,
            "j2": self.j2,
            "u1": self.u1,
            "u2": self.u2,
            "u3": self.u3,
            "omega": self.omega,
            "delta": self.delta,
            "n": self.n,
            "u1_infinite": self.u1_infinite,
            "u2_infinite": self.u2_infinite,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadParameters(f"unknown parameter key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def dispersion_pair(params: ModelParams, k):
    """Bare tight-binding energies ``(omega_k, omega'_k)`` of the a and b species."""
    c = np.cos(k)
    return params.delta - 2.0 * params.j1 * c, -2.0 * params.j2 * c


@dataclass
class SingleExcitationPair:
    k: float
    omega: float
    omega_prime: float
    eps_minus: float
    eps_plus: float
    # columns: (A_k, B_k) for the minus and plus branch
    mixing: np.ndarray = field(repr=False)


def single_excitation_solve(params: ModelParams, k: float) -> SingleExcitationPair:
    w, wp = dispersion_pair(params, k)
    root = math.sqrt((w - wp) ** 2 + 4.0 * params.omega**2)
    eps_minus = 0.5 * (w + wp - root)
    eps_plus = 0.5 * (w + wp + root)
    _, vecs = np.linalg.eigh(np.array([[w, params.omega], [params.omega, wp]]))
    return SingleExcitationPair(float(k), float(w), float(wp), eps_minus, eps_plus, vecs)


def single_excitation_energies(params: ModelParams, k):
    """Vectorised ``(eps_minus, eps_plus)``; accepts complex ``k``."""
    w, wp = dispersion_pair(params, k)
    root = np.sqrt((w - wp) ** 2 + 4.0 * params.omega**2 + 0j)
    return 0.5 * (w + wp - root), 0.5 * (w + wp + root)


@dataclass
class TwoExcitationState:
    """Coefficient matrices of a two-excitation state.

    ``A`` and ``C`` are symmetrized on construction.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    energy: float | None = None
    total_momentum_index: int | None = None
    normalized: bool = False
    label: str = ""

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)
        self.B = np.asarray(self.B, dtype=complex)
        self.C = np.asarray(self.C, dtype=complex)
        n = self.A.shape[0]
        for m in (self.A, self.B, self.C):
            if m.shape != (n, n):
                raise ValueError("A, B, C must all be square with the same size")
        self.A = 0.5 * (self.A + self.A.T)
        self.C = 0.5 * (self.C + self.C.T)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def B_s(self) -> np.ndarray:
        return 0.5 * (self.B + self.B.T)

    @property
    def B_a(self) -> np.ndarray:
        return 0.5 * (self.B - self.B.T)

    def norm_squared(self) -> float:
        return float(
            2.0 * np.sum(np.abs(self.A) ** 2)
            + np.sum(np.abs(self.B) ** 2)
            + 2.0 * np.sum(np.abs(self.C) ** 2)
        )

    def scaled(self, factor: complex) -> "TwoExcitationState":
        return replace(self, A=self.A * factor, B=self.B * factor, C=self.C * factor)

    def translated(self, shift: int = 1) -> "TwoExcitationState":
        """Amplitudes ``X'_{n,m} = X_{n+shift, m+shift}``."""
        roll = lambda m: np.roll(np.roll(m, -shift, axis=0), -shift, axis=1)  # noqa: E731
        return replace(self, A=roll(self.A), B=roll(self.B), C=roll(self.C))

    @classmethod
    def zeros(cls, n: int) -> "TwoExcitationState":
        z = np.zeros((n, n), dtype=complex)
        return cls(z, z.copy(), z.copy())


def normalize_state(state: TwoExcitationState) -> TwoExcitationState:
    """Return a copy with ``sum 2|A|^2 + |B|^2 + 2|C|^2 = 1``."""
    norm2 = state.norm_squared()
    peak = max(np.abs(state.A).max(), np.abs(state.B).max(), np.abs(state.C).max())
    if not norm2 > 0.0 or peak < 1e-300:
        raise ZeroState("cannot normalize a state with vanishing amplitudes")
    out = state.scaled(1.0 / math.sqrt(norm2))
    out.normalized = True
    return out


def ab_pair(n: int, site: int = 0) -> TwoExcitationState:
    """``a+_site b+_site |0>``."""
    s = TwoExcitationState.zeros(n)
    s.B[site, site] = 1.0
    s.normalized = True
    s.label = "ab00"
    return s


def aa_pair(n: int, site: int = 0) -> TwoExcitationState:
    """``(1/sqrt 2) a+_site a+_site |0>``."""
    s = TwoExcitationState.zeros(n)
    s.A[site, site] = 1.0 / math.sqrt(2.0)
    s.normalized = True
    s.label = "aa00"
    return s


def hopping_matrix(n: int, j: float) -> np.ndarray:
    """``T_nm = J (delta_{n,m-1} + delta_{n,m+1})`` with periodic wrap."""
    t = np.zeros((n, n))
    idx = np.arange(n)
    t[idx, (idx + 1) % n] += j
    t[idx, (idx - 1) % n] += j
    return t


def apply_hamiltonian(params: ModelParams, state: TwoExcitationState) -> TwoExcitationState:
    """Action of ``H`` written as matrix equations on ``(A, B, C)``.

    In hard-core mode the doubly occupied same-species diagonal is projected
    out of the result.
    """
    n = state.n
    if n != params.n:
        raise ValueError(f"state has {n} sites but params.n = {params.n}")
    t1 = hopping_matrix(n, params.j1)
    t2 = hopping_matrix(n, params.j2)
    A, B, C = state.A, state.B, state.C
    bs = 0.5 * (B + B.T)
    new_a = -(t1 @ A + A @ t1) + 2.0 * params.delta * A + params.omega * bs
    new_b = -(t1 @ B + B @ t2) + params.delta * B + 2.0 * params.omega * (A + C)
    new_c = -(t2 @ C + C @ t2) + params.omega * bs
    idx = np.arange(n)
    new_b[idx, idx] += params.u3 * np.diag(B)
    if params.u1_infinite:
        new_a[idx, idx] = 0.0
    else:
        new_a[idx, idx] += params.u1 * np.diag(A)
    if params.u2_infinite:
        new_c[idx, idx] = 0.0
    else:
        new_c[idx, idx] += params.u2 * np.diag(C)
    return TwoExcitationState(new_a, new_b, new_c)


def residual_vector(params: ModelParams, state: TwoExcitationState, energy: float) -> np.ndarray:
    """``(H - E) psi`` as one flat vector in the orthonormal Fock metric.

    Entries are weighted so that the Euclidean norm equals the Fock norm.  In
    hard-core mode the deleted diagonal carries the state's own amplitude, so
    a vanishing residual also certifies the hard-core constraint.
    """
    h = apply_hamiltonian(params, state)
    ra = h.A - energy * state.A
    rb = h.B - energy * state.B
    rc = h.C - energy * state.C
    idx = np.arange(state.n)
    if params.u1_infinite:
        ra[idx, idx] = state.A[idx, idx]
    if params.u2_infinite:
        rc[idx, idx] = state.C[idx, idx]
    r2 = math.sqrt(2.0)
    return np.concatenate([(r2 * ra).ravel(), rb.ravel(), (r2 * rc).ravel()])


def residual(params: ModelParams, state: TwoExcitationState, energy: float) -> float:
    """Max-abs of ``(H - E) psi`` over the orthonormal Fock amplitudes."""
    h = apply_hamiltonian(params, state)
    ra = h.A - energy * state.A
    rb = h.B - energy * state.B
    rc = h.C - energy * state.C
    n = state.n
    idx = np.arange(n)
    # Fock amplitudes: 2 A_nm off-diagonal, sqrt(2) A_nn on the diagonal
    fa = 2.0 * ra
    fc = 2.0 * rc
    fa[idx, idx] = math.sqrt(2.0) * ra[idx, idx]
    fc[idx, idx] = math.sqrt(2.0) * rc[idx, idx]
    # hard-core: the state itself must not occupy the deleted diagonal
    if params.u1_infinite:
        fa[idx, idx] = math.sqrt(2.0) * state.A[idx, idx]
    if params.u2_infinite:
        fc[idx, idx] = math.sqrt(2.0) * state.C[idx, idx]
    return float(max(np.abs(fa).max(), np.abs(rb).max(), np.abs(fc).max()))
