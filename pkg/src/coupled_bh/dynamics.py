"""Time evolution of two-excitation states.

Two independent routes: spectral expansion in the exact eigenbasis, and a
classic fourth-order Runge-Kutta integration of the Schroedinger equation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ed import Spectrum, build_hamiltonian, full_spectrum, state_to_vector, write_state_json
from .model import ModelParams, TwoExcitationState, aa_pair, ab_pair
from .observables import NotNormalized, entanglement_entropy, ipr, n_db, n_db_sum

DT_FACTOR = 0.01


class StepTooLarge(ValueError):
    pass


class DiagonalizationMissing(RuntimeError):
    pass


class EmptyWindow(ValueError):
    pass


INITIAL_STATES = {"ab00": ab_pair, "aa00": aa_pair}


def initial_state(name: str, n: int) -> TwoExcitationState:
    """Named quench state: ``ab00`` is a+_0 b+_0|0>, ``aa00`` is a+_0 a+_0|0>/sqrt 2."""
    try:
        return INITIAL_STATES[name](n, 0)
    except KeyError:
        raise ValueError(f"unknown initial state {name!r}; choose from {sorted(INITIAL_STATES)}") from None


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[TwoExcitationState] | None = None
    series: dict[str, np.ndarray] = field(default_factory=dict)
    method: str = "spectral"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


class _Converter:
    """Vectorised map from ED basis vectors to coefficient matrices."""

    def __init__(self, basis):
        self.n = basis.n_sites
        ent = basis.entries
        self.tag = np.array([t for t, _, _ in ent])
        self.i = np.array([i for _, i, _ in ent])
        self.j = np.array([j for _, _, j in ent])
        diag = self.i == self.j
        # basis amplitude -> matrix entry scale
        self.scale = np.where(self.tag == "ab", 1.0, np.where(diag, 1 / math.sqrt(2.0), 0.5))

    def state(self, vec: np.ndarray) -> TwoExcitationState:
        n = self.n
        mats = {t: np.zeros((n, n), dtype=complex) for t in ("aa", "ab", "bb")}
        amp = vec * self.scale
        for t, m in mats.items():
            sel = self.tag == t
            m[self.i[sel], self.j[sel]] = amp[sel]
            if t != "ab":
                m[self.j[sel], self.i[sel]] = amp[sel]
        return TwoExcitationState(mats["aa"], mats["ab"], mats["bb"])


def _spectral_vectors(spec: Spectrum, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    coeff = spec.vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, spec.energies))
    return (phases * coeff) @ spec.vectors.T


def _rk4_vectors(H: np.ndarray, psi0: np.ndarray, times: np.ndarray, dt: float | None) -> tuple[np.ndarray, float]:
    # Gershgorin bound, an upper bound on max |E| that needs no diagonalization
    emax = float(np.max(np.sum(np.abs(H), axis=1)))
    dt_max = DT_FACTOR / max(emax, 1e-300)
    if dt is None:
        dt = dt_max
    elif dt > dt_max * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:.3g} exceeds {dt_max:.3g} = {DT_FACTOR}/max|E|")
    # one classic RK4 step of a linear system is the fourth-order Taylor polynomial
    L = -1j * dt * H
    step = np.eye(len(H), dtype=complex)
    term = np.eye(len(H), dtype=complex)
    for k in range(1, 5):
        term = term @ L / k
        step = step + term
    out = np.empty((len(times), len(psi0)), dtype=complex)
    psi = psi0.astype(complex)
    t = 0.0
    for idx, target in enumerate(times):
        if target < t - 1e-12:
            raise ValueError("times must be non-negative and increasing")
        nsteps = int(math.floor((target - t) / dt + 1e-9))
        if nsteps:
            psi = np.linalg.matrix_power(step, nsteps) @ psi
            t += nsteps * dt
        rem = target - t
        if rem > 1e-14:
            # shorter final step lands exactly on the output time
            Lr = -1j * rem * H
            k1 = Lr @ psi
            k2 = Lr @ (psi + 0.5 * k1)
            k3 = Lr @ (psi + 0.5 * k2)
            k4 = Lr @ (psi + k3)
            psi = psi + (k1 + 2 * k2 + 2 * k3 + k4) / 6
            t = target
        out[idx] = psi
    return out, dt


def evolve(
    initial: TwoExcitationState,
    params: ModelParams,
    times,
    method: str = "spectral",
    *,
    spectrum: Spectrum | None = None,
    auto_diagonalize: bool = True,
    dt: float | None = None,
    store_states: bool = True,
    observables: bool = True,
) -> Trajectory:
    """Evolve ``initial`` under ``H(params)`` and sample at ``times`` (units 1/J).

    ``spectral`` expands in the exact eigenbasis,
    ``|psi(t)> = sum_i c_i exp(-i E_i t)|E_i>``; pass a precomputed
    ``spectrum`` to reuse it across runs.  ``integrator`` uses fixed RK4 steps
    with ``dt <= 0.01/max|E|``.

    The returned series hold ``ipr``, ``S0``, ``S1``, ``S2``, ``S``, ``n_db``,
    ``n_db_sum``, ``norm`` and ``energy`` (``<H>``).
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    if abs(initial.norm_squared() - 1.0) > 1e-10:
        raise NotNormalized("initial state must be normalized")
    if method == "spectral":
        if spectrum is None:
            if not auto_diagonalize:
                raise DiagonalizationMissing("spectral evolution needs a full diagonalization")
            spectrum = full_spectrum(params)
        elif spectrum.params != params:
            raise DiagonalizationMissing("spectrum was computed for different parameters")
        basis, Hm = spectrum.basis, spectrum.hamiltonian
        psi0 = state_to_vector(initial, basis)
        vecs = _spectral_vectors(spectrum, psi0, times)
    elif method == "integrator":
        Hobj = build_hamiltonian(params)
        basis, Hm = Hobj.basis, Hobj.entries
        psi0 = state_to_vector(initial, basis)
        vecs, dt = _rk4_vectors(Hm, psi0, times, dt)
    else:
        raise ValueError("method must be 'spectral' or 'integrator'")

    conv = _Converter(basis)
    norms = np.einsum("ti,ti->t", vecs.conj(), vecs).real
    energy = np.einsum("ti,ij,tj->t", vecs.conj(), Hm, vecs).real / norms
    series = {"norm": norms, "energy": energy}
    states = [conv.state(v) for v in vecs] if (store_states or observables) else None
    if observables:
        names = ("ipr", "S0", "S1", "S2", "S", "n_db", "n_db_sum")
        cols = {k: np.empty(len(times)) for k in names}
        for idx, st in enumerate(states):
            # observables are defined on the unit-norm state
            st = st.scaled(1.0 / math.sqrt(norms[idx]))
            rep = entanglement_entropy(st)
            cols["ipr"][idx] = ipr(st)
            cols["S0"][idx], cols["S1"][idx], cols["S2"][idx] = rep.S0, rep.S1, rep.S2
            cols["S"][idx] = rep.S_total
            cols["n_db"][idx] = n_db(st)
            cols["n_db_sum"][idx] = n_db_sum(st)
        series.update(cols)
    for st, t in zip(states or [], times):
        st.energy = None
        st.label = f"t={t:.12g}"
    return Trajectory(times, states if store_states else None, series, method)


def late_time_stats(traj: Trajectory, series_name: str, window: tuple[float, float]) -> tuple[float, float]:
    """Mean and population standard deviation of a series inside ``window``."""
    t0, t1 = window
    if t0 < traj.times[0] - 1e-12 or t1 > traj.times[-1] + 1e-12:
        raise EmptyWindow(f"window {window} outside the sampled times")
    sel = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    if sel.sum() < 10:
        raise EmptyWindow(f"only {int(sel.sum())} samples in window {window}")
    x = np.asarray(traj.series[series_name])[sel]
    return float(np.mean(x)), float(np.std(x))


def dominant_frequency(traj: Trajectory, series_name: str = "S", window: tuple[float, float] = (0.0, 2.0),
                       pad: int = 64) -> float:
    """Angular frequency of the strongest Fourier component of a series inside ``window``.

    Requires uniform sampling; the mean is removed and the series zero-padded
    ``pad``-fold to refine the peak.
    """
    sel = (traj.times >= window[0] - 1e-12) & (traj.times <= window[1] + 1e-12)
    t = traj.times[sel]
    if len(t) < 4:
        raise EmptyWindow(f"only {len(t)} samples in window {window}")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * dt.mean():
        raise ValueError("dominant_frequency needs uniformly spaced times")
    x = np.asarray(traj.series[series_name])[sel]
    x = x - x.mean()
    m = pad * len(x)
    spec = np.abs(np.fft.rfft(x, m))
    freqs = np.fft.rfftfreq(m, d=dt.mean())
    k = int(np.argmax(spec[1:]) + 1)
    return float(2 * np.pi * freqs[k])


SERIES_ORDER = ("ipr", "S0", "S1", "S2", "S", "n_db", "n_db_sum", "norm", "energy")
UNITS = {"S0": " [nat]", "S1": " [nat]", "S2": " [nat]", "S": " [nat]", "energy": " [J]"}


def write_trajectory_csv(path, traj: Trajectory) -> None:
    names = [k for k in SERIES_ORDER if k in traj.series]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t [1/J]"] + [k + UNITS.get(k, "") for k in names])
        for i, t in enumerate(traj.times):
            w.writerow([f"{t:.12g}"] + [f"{traj.series[k][i]:.12g}" for k in names])


def write_trajectory_json(path, traj: Trajectory) -> None:
    payload = {"method": traj.method, "t": [float(f"{t:.12g}") for t in traj.times]}
    for k in SERIES_ORDER:
        if k in traj.series:
            payload[k] = [float(f"{v:.12g}") for v in traj.series[k]]
    Path(path).write_text(json.dumps(payload, indent=1))


def write_snapshots(directory, traj: Trajectory, at) -> list[Path]:
    """One JSON file per requested time (nearest sample)."""
    if traj.states is None:
        raise ValueError("trajectory holds no states")
    out = []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for t in at:
        i = int(np.argmin(np.abs(traj.times - t)))
        p = d / f"snapshot_t{traj.times[i]:.6g}.json"
        write_state_json(p, traj.states[i])
        out.append(p)
    return out


__all__ = [
    "DiagonalizationMissing",
    "EmptyWindow",
    "StepTooLarge",
    "Trajectory",
    "dominant_frequency",
    "evolve",
    "initial_state",
    "late_time_stats",
    "write_snapshots",
    "write_trajectory_csv",
    "write_trajectory_json",
]
