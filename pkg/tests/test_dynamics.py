import json
import math

import numpy as np
import pytest
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from coupled_bh.dynamics import (
    DiagonalizationMissing,
    EmptyWindow,
    StepTooLarge,
    Trajectory,
    dominant_frequency,
    evolve,
    initial_state,
    late_time_stats,
    write_snapshots,
    write_trajectory_csv,
    write_trajectory_json,
)
from coupled_bh.ed import full_spectrum
from coupled_bh.model import ModelParams
from coupled_bh.observables import entanglement_entropy

P6 = ModelParams(n=6, j1=1.0, j2=0.8, u1=4.0, u2=2.0, u3=1.0, omega=1.5, delta=0.2)


def test_initial_states():
    ab = initial_state("ab00", 5)
    aa = initial_state("aa00", 5)
    assert ab.B[0, 0] == 1.0 and ab.norm_squared() == pytest.approx(1.0)
    assert aa.A[0, 0] == pytest.approx(1 / math.sqrt(2)) and aa.norm_squared() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        initial_state("xx", 5)


@pytest.mark.parametrize("method", ["spectral", "integrator"])
def test_time_zero_is_identity(method):
    psi = initial_state("ab00", 6)
    traj = evolve(psi, P6, [0.0, 0.1], method)
    s0 = traj.states[0]
    for a, b in ((s0.A, psi.A), (s0.B, psi.B), (s0.C, psi.C)):
        assert np.abs(a - b).max() < 1e-14


def test_spectral_matches_integrator():
    rng = np.random.default_rng(11)
    psi = initial_state("aa00", 6)
    p = ModelParams(n=6, j1=1.0, j2=rng.uniform(0.5, 1.5), u1=rng.uniform(-5, 5), u2=rng.uniform(-5, 5),
                    u3=rng.uniform(-2, 2), omega=rng.uniform(0.2, 3), delta=rng.uniform(-1, 1))
    a = evolve(psi, p, [0.0, 10.0], "spectral").states[-1]
    b = evolve(psi, p, [0.0, 10.0], "integrator").states[-1]
    diff = max(np.abs(x - y).max() for x, y in ((a.A, b.A), (a.B, b.B), (a.C, b.C)))
    assert diff < 1e-6


def test_conservation_spectral():
    traj = evolve(initial_state("ab00", 6), P6, np.linspace(0, 50, 101), store_states=False)
    assert np.abs(traj.series["norm"] - 1).max() < 1e-8
    assert np.ptp(traj.series["energy"]) < 1e-8


def test_errors():
    psi = initial_state("ab00", 6)
    with pytest.raises(StepTooLarge):
        evolve(psi, P6, [0.0, 1.0], "integrator", dt=0.5)
    with pytest.raises(DiagonalizationMissing):
        evolve(psi, P6, [0.0, 1.0], auto_diagonalize=False)
    with pytest.raises(DiagonalizationMissing):
        evolve(psi, P6, [0.0, 1.0], spectrum=full_spectrum(P6.with_(omega=0.3)))
    with pytest.raises(ValueError):
        evolve(psi, P6, [0.0, 1.0], "euler")
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]))


def test_precomputed_spectrum_reused():
    spec = full_spectrum(P6)
    psi = initial_state("ab00", 6)
    a = evolve(psi, P6, [0.0, 3.0], spectrum=spec)
    b = evolve(psi, P6, [0.0, 3.0])
    assert np.allclose(a.states[-1].B, b.states[-1].B, atol=1e-13)


def test_late_time_stats():
    t = np.linspace(0, 10, 101)
    traj = Trajectory(t, None, {"x": np.full(101, 0.7)})
    assert late_time_stats(traj, "x", (2, 8)) == pytest.approx((0.7, 0.0))
    traj = Trajectory(t, None, {"x": np.where(np.arange(101) % 2, 1.0, 0.0)})
    mean, std = late_time_stats(traj, "x", (0, 10))
    assert mean == pytest.approx(50 / 101) and std == pytest.approx(np.std(traj.series["x"]))
    with pytest.raises(EmptyWindow):
        late_time_stats(traj, "x", (2.0, 2.5))
    with pytest.raises(EmptyWindow):
        late_time_stats(traj, "x", (5.0, 20.0))


def test_dominant_frequency():
    t = np.linspace(0, 2, 401)
    traj = Trajectory(t, None, {"S": 0.3 + 0.1 * np.sin(31.0 * t)})
    assert dominant_frequency(traj) == pytest.approx(31.0, rel=0.01)


def test_large_omega_doublon_is_stable():
    # a flat doublon band: the on-site ab pair barely moves
    p = ModelParams(n=8, omega=50.0, u1_infinite=True, u2_infinite=True)
    traj = evolve(initial_state("ab00", 8), p, np.linspace(0, 5, 51), store_states=False)
    assert traj.series["n_db_sum"].min() > 0.95


def test_exports(tmp_path):
    traj = evolve(initial_state("ab00", 4), ModelParams(n=4, omega=1.0), np.linspace(0, 1, 5))
    write_trajectory_csv(tmp_path / "t.csv", traj)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("t [1/J],ipr") and len(lines) == 6
    write_trajectory_json(tmp_path / "t.json", traj)
    data = json.loads((tmp_path / "t.json").read_text())
    assert len(data["t"]) == 5 and len(data["n_db"]) == 5
    paths = write_snapshots(tmp_path, traj, [0.5])
    assert len(paths) == 1 and json.loads(paths[0].read_text())["B"]


@pytest.fixture(scope="module")
def long_run():
    times = np.arange(0.0, 400.0 + 1e-9, 0.02)
    p = ModelParams(n=10, u1=500.0, u2=500.0, omega=10.0)
    return evolve(initial_state("ab00", 10), p, times, store_states=False)


def test_ipr_entropy_anticorrelated(long_run):
    sel = long_run.times >= 50
    r = np.corrcoef(long_run.series["ipr"][sel], long_run.series["S"][sel])[0, 1]
    assert r < 0


def test_single_species_correspondence(long_run):
    times = long_run.times
    single = evolve(initial_state("aa00", 10), ModelParams(n=10, u1=-500 / 3), times, observables=False)
    s_single = np.array([entanglement_entropy(s, "single_species").S1 for s in single.states])
    s_coupled = long_run.series["S"]
    sel = times >= 2
    window = int(round(1.0 / (times[1] - times[0])))
    ptp = maximum_filter1d(s_coupled, window) - minimum_filter1d(s_coupled, window)
    amplitude = 0.5 * ptp[sel].max()
    assert np.abs(s_coupled - s_single)[sel].max() < amplitude
