"""Brute-force exact diagonalization of the two-excitation sector.

The Hamiltonian is assembled from the single-particle hopping matrix on the
``2N`` modes (a-sites then b-sites) and the on-site interactions, directly in
the orthonormal two-boson Fock basis.  Nothing here reuses the matrix
equations of :mod:`coupled_bh.model`, so it can serve as an oracle for them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelParams, TwoExcitationState


class BadSize(ValueError):
    pass


class NonHermitian(ValueError):
    pass


@dataclass(frozen=True)
class TwoExcitationBasis:
    """Canonical basis: aa pairs (n <= m), then ab pairs (all n, m), then bb pairs."""

    n_sites: int
    entries: tuple[tuple[str, int, int], ...]
    hardcore_a: bool = False
    hardcore_b: bool = False
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {e: i for i, e in enumerate(self.entries)})

    @property
    def dimension(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def build_basis(n: int, hardcore_a: bool = False, hardcore_b: bool = False) -> TwoExcitationBasis:
    if int(n) != n or n < 2:
        raise BadSize(f"need at least 2 sites, got {n!r}")
    n = int(n)
    entries = []
    for tag, hc in (("aa", hardcore_a), ("ab", None), ("bb", hardcore_b)):
        for i in range(n):
            for j in range(n):
                if tag != "ab" and (j < i or (hc and i == j)):
                    continue
                entries.append((tag, i, j))
    return TwoExcitationBasis(n, tuple(entries), hardcore_a, hardcore_b)


def _mode_pair(tag: str, i: int, j: int, n: int) -> tuple[int, int]:
    off = {"aa": (0, 0), "ab": (0, n), "bb": (n, n)}[tag]
    return i + off[0], j + off[1]


def _label(p: int, q: int, n: int) -> tuple[str, int, int]:
    p, q = min(p, q), max(p, q)
    if q < n:
        return ("aa", p, q)
    if p >= n:
        return ("bb", p - n, q - n)
    return ("ab", p, q - n)


def single_particle_matrix(params: ModelParams) -> np.ndarray:
    n = params.n
    h = np.zeros((2 * n, 2 * n))
    for s in range(n):
        for nb in ((s + 1) % n, (s - 1) % n):
            h[s, nb] -= params.j1
            h[n + s, n + nb] -= params.j2
        h[s, s] += params.delta
        h[s, n + s] += params.omega
        h[n + s, s] += params.omega
    return h


@dataclass
class HamiltonianMatrix:
    entries: np.ndarray
    params: ModelParams
    basis: TwoExcitationBasis

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def build_hamiltonian(params: ModelParams) -> HamiltonianMatrix:
    """Dense two-excitation Hamiltonian over :func:`build_basis`.

    Hard-core species drop their doubly occupied states from the basis.
    """
    n = params.n
    basis = build_basis(n, params.u1_infinite, params.u2_infinite)
    h1 = single_particle_matrix(params)
    dim = basis.dimension
    H = np.zeros((dim, dim), dtype=complex)
    index = basis.index
    for col, (tag, i, j) in enumerate(basis.entries):
        p, q = _mode_pair(tag, i, j, n)
        # |p q> normalised: (c+_p c+_q)/sqrt(1 + delta_pq) |0>
        norm_in = math.sqrt(2.0) if p == q else 1.0
        # c+_t c_m |p q>: both particles hop; for p == q the two terms coincide
        for moved, spectator in ((p, q), (q, p)):
            for target in np.nonzero(h1[:, moved])[0]:
                row = index.get(_label(int(target), spectator, n))
                if row is None:
                    continue
                norm_out = math.sqrt(2.0) if target == spectator else 1.0
                H[row, col] += h1[target, moved] * norm_out / norm_in
        if tag == "aa" and i == j:
            H[col, col] += params.u1
        elif tag == "bb" and i == j:
            H[col, col] += params.u2
        elif tag == "ab" and i == j:
            H[col, col] += params.u3
    return HamiltonianMatrix(H, params, basis)


def translation_permutation(basis: TwoExcitationBasis) -> np.ndarray:
    """``perm[i]`` is the index of basis state ``i`` with every particle moved one site right."""
    n = basis.n_sites
    perm = np.empty(basis.dimension, dtype=int)
    for idx, (tag, i, j) in enumerate(basis.entries):
        a, b = (i + 1) % n, (j + 1) % n
        if tag != "ab" and a > b:
            a, b = b, a
        perm[idx] = basis.index[(tag, a, b)]
    return perm


def translation_matrix(basis: TwoExcitationBasis) -> np.ndarray:
    """Operator ``T`` with ``(T v)[i] = v[perm[i]]``; plane waves ``e^{iP(n+m)/2}`` have eigenvalue ``e^{iP}``."""
    perm = translation_permutation(basis)
    t = np.zeros((basis.dimension, basis.dimension))
    t[np.arange(basis.dimension), perm] = 1.0
    return t


def check_hermitian(H: HamiltonianMatrix, tol: float = 1e-12) -> float:
    dev = float(np.abs(H.entries - H.entries.conj().T).max())
    if dev >= tol:
        raise NonHermitian(f"|H - H^dagger|_max = {dev:.3e}")
    return dev


def momentum_basis(basis: TwoExcitationBasis, r: int) -> np.ndarray:
    """Orthonormal columns spanning the ``T = e^{2 pi i r/N}`` eigenspace (orbit states)."""
    n = basis.n_sites
    perm = translation_permutation(basis)
    seen = np.zeros(basis.dimension, dtype=bool)
    cols = []
    phase = np.exp(2j * np.pi * r / n)
    for start in range(basis.dimension):
        if seen[start]:
            continue
        v = np.zeros(basis.dimension, dtype=complex)
        cur = start
        for step in range(n):
            seen[cur] = True
            v[cur] += phase**step
            cur = perm[cur]
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            cols.append(v / nrm)
    if not cols:
        return np.zeros((basis.dimension, 0), dtype=complex)
    return np.array(cols).T


def vector_to_state(vec: np.ndarray, basis: TwoExcitationBasis) -> TwoExcitationState:
    n = basis.n_sites
    st = TwoExcitationState.zeros(n)
    A, B, C = st.A, st.B, st.C
    for amp, (tag, i, j) in zip(vec, basis.entries):
        if tag == "ab":
            B[i, j] = amp
            continue
        m = A if tag == "aa" else C
        if i == j:
            m[i, i] = amp / math.sqrt(2.0)
        else:
            m[i, j] = m[j, i] = amp / 2.0
    return st


def state_to_vector(state: TwoExcitationState, basis: TwoExcitationBasis) -> np.ndarray:
    vec = np.empty(basis.dimension, dtype=complex)
    for k, (tag, i, j) in enumerate(basis.entries):
        if tag == "ab":
            vec[k] = state.B[i, j]
            continue
        m = state.A if tag == "aa" else state.C
        vec[k] = m[i, i] * math.sqrt(2.0) if i == j else 2.0 * m[i, j]
    return vec


@dataclass
class Eigenpair:
    energy: float
    vector: np.ndarray
    momentum_index: int | None

    def state(self, basis: TwoExcitationBasis) -> TwoExcitationState:
        st = vector_to_state(self.vector, basis)
        st.energy = self.energy
        st.total_momentum_index = self.momentum_index
        st.normalized = True
        return st


def diagonalize_sector(H: HamiltonianMatrix, p_index: int | str | None = "all") -> list[Eigenpair]:
    """Eigenpairs sorted by energy, in one momentum sector or in all of them.

    ``p_index="all"`` (or ``None``) returns every eigenpair labelled with its
    momentum index.
    """
    check_hermitian(H)
    n = H.basis.n_sites
    if p_index is None or p_index == "all":
        sectors = range(n)
    else:
        sectors = [int(p_index) % n]
    out = []
    for r in sectors:
        V = momentum_basis(H.basis, r)
        if V.shape[1] == 0:
            continue
        hp = V.conj().T @ H.entries @ V
        hp = 0.5 * (hp + hp.conj().T)
        vals, vecs = np.linalg.eigh(hp)
        full = V @ vecs
        out.extend(Eigenpair(float(e), full[:, i], r) for i, e in enumerate(vals))
    out.sort(key=lambda e: e.energy)
    return out


def sector_energies(params: ModelParams, p_index: int) -> np.ndarray:
    H = build_hamiltonian(params)
    return np.array([e.energy for e in diagonalize_sector(H, p_index)])


@dataclass
class Spectrum:
    """Full eigendecomposition, the input of spectral time evolution."""

    params: ModelParams
    basis: TwoExcitationBasis
    energies: np.ndarray
    vectors: np.ndarray  # columns
    hamiltonian: np.ndarray


def full_spectrum(params: ModelParams) -> Spectrum:
    H = build_hamiltonian(params)
    check_hermitian(H)
    vals, vecs = np.linalg.eigh(H.entries)
    return Spectrum(params, H.basis, vals, vecs, H.entries)


def write_eigen_csv(path, pairs: list[Eigenpair]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p_index", "energy [J]"])
        for e in pairs:
            w.writerow([e.momentum_index, f"{e.energy:.12g}"])


def write_state_json(path, state: TwoExcitationState) -> None:
    def mat(m):
        return {"re": np.round(m.real, 15).tolist(), "im": np.round(m.imag, 15).tolist()}

    payload = {
        "energy": state.energy,
        "p_index": state.total_momentum_index,
        "A": mat(state.A),
        "B": mat(state.B),
        "C": mat(state.C),
    }
    Path(path).write_text(json.dumps(payload, indent=1))
