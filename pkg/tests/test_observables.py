import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupled_bh.bethe import analytic_sector
from coupled_bh.model import ModelParams, TwoExcitationState, ab_pair, normalize_state
from coupled_bh.observables import (
    NotNormalized,
    WrongMode,
    entanglement_entropy,
    ipr,
    ipr_configuration,
    n_db,
    n_db_sum,
    observable_row,
    write_series_csv,
)


def _random_state(seed, n=5):
    rng = np.random.default_rng(seed)
    mats = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3)]
    return normalize_state(TwoExcitationState(*mats))


def test_ipr_examples():
    n = 6
    s = TwoExcitationState.zeros(n)
    s.B[0, 0] = 1.0
    assert ipr(s) == 1.0
    s = TwoExcitationState.zeros(n)
    s.B[:] = 1 / n
    assert ipr(s) == pytest.approx(1 / n**2)


@given(seed=st.integers(0, 10_000), shift=st.integers(1, 4))
def test_ipr_translation_invariant(seed, shift):
    s = _random_state(seed)
    assert ipr(s.translated(shift)) == pytest.approx(ipr(s), rel=1e-12)


@settings(max_examples=200)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6))
def test_configuration_ipr_bounds(seed, n):
    s = _random_state(seed, n)
    v = ipr_configuration(s)
    assert 1 / (2 * n * n + n) - 1e-12 <= v <= 1 + 1e-12


def test_configuration_ipr_uniform_attains_bound():
    n = 5
    A = np.full((n, n), 1.0)
    np.fill_diagonal(A, math.sqrt(2))
    # equal probabilities: 4|A_nm|^2 = 2|A_nn|^2 = |B_nm|^2
    s = normalize_state(TwoExcitationState(A, 2 * np.ones((n, n)), A.copy()))
    assert ipr_configuration(s) == pytest.approx(1 / (2 * n * n + n))


def test_relative_peaked_state_ipr():
    # translation-invariant pair at fixed separation: IPR <= 1/N
    n = 10
    B = np.zeros((n, n), complex)
    for i in range(n):
        B[i, (i + 1) % n] = 1.0
    s = normalize_state(TwoExcitationState(np.zeros((n, n)), B, np.zeros((n, n))))
    assert ipr(s) <= 1 / n + 1e-9


def test_not_normalized():
    s = TwoExcitationState.zeros(4)
    s.B[0, 0] = 2.0
    for f in (ipr, ipr_configuration, n_db, n_db_sum, entanglement_entropy):
        with pytest.raises(NotNormalized):
            f(s)


def test_product_state_entropy():
    rep = entanglement_entropy(ab_pair(5))
    assert rep.S_total == 0.0 and rep.lambda_a == 0.0


@given(seed=st.integers(0, 10_000))
def test_entropy_weights_and_bounds(seed):
    s = _random_state(seed)
    rep = entanglement_entropy(s)
    assert rep.lambda_a + rep.lambda_c + np.sum(np.abs(s.B) ** 2) == pytest.approx(1.0, abs=1e-10)
    # the a-species factor holds 1 + N + N(N+1)/2 states
    assert 0 <= rep.S_total <= math.log(1 + 5 + 15) + 1e-12


def test_type1_entropy_is_ln2():
    p = ModelParams(n=6, u1=3.0, u2=3.0, omega=1.0)
    found = 0
    for s in analytic_sector(p, 2).states:
        if s.kind == "type1":
            assert entanglement_entropy(s.state).S_total == pytest.approx(math.log(2), abs=1e-10)
            found += 1
    assert found


def test_single_species_mode():
    n = 6
    v = np.exp(1j * np.arange(n)) / math.sqrt(n)
    s = normalize_state(TwoExcitationState(np.outer(v, v), np.zeros((n, n)), np.zeros((n, n))))
    assert entanglement_entropy(s, "single_species").S1 == pytest.approx(0.0, abs=1e-12)
    # two orthogonal modes, symmetrized: two equal Schmidt weights
    w = np.roll(v, 1) * np.exp(0.3j)
    w = w - np.vdot(v, w) * v
    w /= np.linalg.norm(w)
    s = normalize_state(TwoExcitationState(np.outer(v, w) + np.outer(w, v), np.zeros((n, n)), np.zeros((n, n))))
    assert entanglement_entropy(s, "single_species").S1 == pytest.approx(math.log(2), abs=1e-12)
    with pytest.raises(WrongMode):
        entanglement_entropy(ab_pair(n), "single_species")
    with pytest.raises(WrongMode):
        entanglement_entropy(ab_pair(n), "bogus")


def test_double_occupancy():
    assert n_db(ab_pair(7)) == 1.0
    assert n_db_sum(ab_pair(7)) == 1.0
    s = TwoExcitationState.zeros(4)
    s.A[0, 1] = s.A[1, 0] = 0.5
    s = normalize_state(s)
    assert n_db(s) == 0.0
    s = TwoExcitationState.zeros(4)
    s.B[0, 0] = s.B[1, 1] = 1 / math.sqrt(2)
    assert n_db(s) == pytest.approx(0.5) and n_db_sum(s) == pytest.approx(1.0)


def test_series_csv(tmp_path):
    rows = [observable_row(t, _random_state(i)) for i, t in enumerate((0.0, 0.5))]
    write_series_csv(tmp_path / "s.csv", rows)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t [1/J],ipr,S0 [nat],S1 [nat],S2 [nat],S [nat],n_db" and len(lines) == 3
