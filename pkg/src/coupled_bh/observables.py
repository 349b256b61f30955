"""Localization and inter-species entanglement of two-excitation states."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .model import TwoExcitationState

NORM_TOL = 1e-8
EIG_FLOOR = 1e-14


class NotNormalized(ValueError):
    pass


class WrongMode(ValueError):
    pass


def _check(state: TwoExcitationState, tol: float = NORM_TOL) -> None:
    nrm = state.norm_squared()
    if abs(nrm - 1.0) > tol:
        raise NotNormalized(f"norm squared is {nrm:.12g}, expected 1")


def ipr(state: TwoExcitationState) -> float:
    """Inverse participation ratio ``sum 4|A|^4 + |B|^4 + 4|C|^4``.

    Summed over all ordered index pairs of the coefficient matrices.
    """
    _check(state)
    return float(4 * np.sum(np.abs(state.A) ** 4) + np.sum(np.abs(state.B) ** 4) + 4 * np.sum(np.abs(state.C) ** 4))


def ipr_configuration(state: TwoExcitationState) -> float:
    """IPR over occupation configurations, ``sum_c p_c^2``.

    Each unordered same-species pair ``n < m`` has probability ``4|A_nm|^2``
    and each double occupation ``2|A_nn|^2``.  Bounded below by
    ``1/(2N^2 + N)``, the inverse dimension of the two-excitation space.
    """
    _check(state)
    off = ~np.eye(state.n, dtype=bool)

    def same(m):
        return 8 * np.sum(np.abs(m[off]) ** 4) + 4 * np.sum(np.abs(np.diag(m)) ** 4)

    return float(same(state.A) + np.sum(np.abs(state.B) ** 4) + same(state.C))


@dataclass
class EntanglementReport:
    lambda_a: float
    lambda_c: float
    S0: float
    S1: float
    S2: float

    @property
    def S_total(self) -> float:
        return self.S0 + self.S1 + self.S2


def _xlogx(p: float) -> float:
    return -p * math.log(p) if p > EIG_FLOOR else 0.0


def _gram_entropy(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(m @ m.conj().T)
    return float(sum(_xlogx(x) for x in w))


def entanglement_entropy(state: TwoExcitationState, mode: str = "coupled") -> EntanglementReport:
    """Entropy of the reduced state of species ``a`` (nats).

    ``coupled``: the reduced state splits into blocks with two, one and no
    ``a`` particles, giving ``S0 = -lambda_a ln lambda_a``,
    ``S1 = -Tr(B B+ ln B B+)`` and ``S2 = -lambda_c ln lambda_c``.

    ``single_species``: a state with only ``A`` is split into its two
    particles, ``S = -Tr(rho ln rho)`` with ``rho = 2 A A+`` (unit trace).
    The value is returned in ``S1`` with the other blocks zero.
    """
    _check(state)
    if mode == "coupled":
        la = float(2 * np.sum(np.abs(state.A) ** 2))
        lc = float(2 * np.sum(np.abs(state.C) ** 2))
        return EntanglementReport(la, lc, _xlogx(la), _gram_entropy(state.B), _xlogx(lc))
    if mode == "single_species":
        if np.abs(state.B).max() > 1e-12 or np.abs(state.C).max() > 1e-12:
            raise WrongMode("single_species mode needs B = C = 0")
        return EntanglementReport(1.0, 0.0, 0.0, _gram_entropy(math.sqrt(2.0) * state.A), 0.0)
    raise WrongMode(f"unknown mode {mode!r}")


def n_db(state: TwoExcitationState) -> float:
    """Double occupancy ``sum_i <a+_i b+_i a_i b_i>^2 = sum_i |B_ii|^4``."""
    _check(state)
    return float(np.sum(np.abs(np.diag(state.B)) ** 4))


def n_db_sum(state: TwoExcitationState) -> float:
    """Plain double occupancy ``sum_i <a+_i b+_i a_i b_i> = sum_i |B_ii|^2``."""
    _check(state)
    return float(np.sum(np.abs(np.diag(state.B)) ** 2))


SERIES_COLUMNS = ("t", "ipr", "S0", "S1", "S2", "S", "n_db")


def observable_row(t: float, state: TwoExcitationState) -> dict[str, float]:
    rep = entanglement_entropy(state)
    return {
        "t": t,
        "ipr": ipr(state),
        "S0": rep.S0,
        "S1": rep.S1,
        "S2": rep.S2,
        "S": rep.S_total,
        "n_db": n_db(state),
    }


def write_series_csv(path, rows: list[dict[str, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t [1/J]", "ipr", "S0 [nat]", "S1 [nat]", "S2 [nat]", "S [nat]", "n_db"])
        for row in rows:
            w.writerow([f"{row[c]:.12g}" for c in SERIES_COLUMNS])
