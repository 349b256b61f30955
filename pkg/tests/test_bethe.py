import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupled_bh.bethe import (
    BranchNotFound,
    ChoyHaldaneComponent,
    NoNontrivialSolution,
    SingularDenominator,
    analytic_sector,
    assemble_eigenstate,
    choy_haldane_matrix,
    classify_region,
    doublon_branches,
    doublon_energy,
    doublon_levels,
    energy_roots,
    kernel_determinant,
    large_u_levels,
    momentum_kernel,
    region_enumerate_infU,
    scattering_factor,
    solve_single_species,
    weight_system,
    write_branches_csv,
    write_regions_csv,
)
from coupled_bh.bethe.finite import _components_at
from coupled_bh.bethe.roots import pair_orbit_count
from coupled_bh.bethe.weights import WeightSolution
from coupled_bh.ed import build_hamiltonian, diagonalize_sector
from coupled_bh.model import ModelParams, dispersion_pair, residual

# --------------------------------------------------------------------------
# scattering factor and Choy-Haldane matrices


def test_scattering_factor_examples():
    assert scattering_factor(0.3, 1.1, 0.0) == pytest.approx(1.0)
    assert scattering_factor(0.3, 1.1, math.inf) == -1.0
    assert scattering_factor(0.4, math.pi - 0.4, 3.0) == pytest.approx(-1.0)
    with pytest.raises(SingularDenominator):
        scattering_factor(0.7, 0.7, 0.0)


@given(k=st.floats(-4, 4), q=st.floats(-4, 4), u=st.floats(-50, 50))
def test_scattering_factor_unimodular(k, q, u):
    d = 2 * (math.sin(k) - math.sin(q))
    if abs(complex(d, u)) < 1e-6:
        return
    assert abs(scattering_factor(k, q, u)) == pytest.approx(1.0, abs=1e-10)


def test_free_choy_haldane_matrix():
    n, k, q = 6, 2 * math.pi / 6, 4 * math.pi / 6
    comp = ChoyHaldaneComponent(k, q, 1.0, 0.0, True, False)
    x = np.arange(n)
    expect = np.exp(1j * (k * x[:, None] + q * x[None, :])) + np.exp(1j * (q * x[:, None] + k * x[None, :]))
    got = choy_haldane_matrix(n, comp)
    iu = np.triu_indices(n)
    assert np.allclose(got[iu], expect[iu]) and np.allclose(got, got.T)


def test_doublon_component_decays():
    n, P, K = 60, 0.6, 0.8
    k = P / 2 + math.pi - 1j * K
    comp = ChoyHaldaneComponent.from_k(k, P, n)
    m = np.abs(choy_haldane_matrix(n, comp))
    # away from the wrap-around the profile is e^{-K|n-m|}
    row = m[5, 5:15] / m[5, 5]
    assert np.allclose(row, np.exp(-K * np.arange(10)), rtol=1e-6)


def test_antisymmetric_form_has_zero_diagonal():
    comp = ChoyHaldaneComponent(0.5, 1.3, np.exp(0.4j), 1.0, False, False)
    m = choy_haldane_matrix(7, comp)
    assert np.all(np.diag(m) == 0) and np.allclose(m, -m.T)


# --------------------------------------------------------------------------
# single-species Bethe roots


def _mod2pi(x):
    return np.mod(np.real(x), 2 * np.pi)


def test_free_roots_are_physical_momenta():
    n = 7
    p = ModelParams(n=n, u1=0.0)
    for r in range(n):
        for root in solve_single_species(p, r):
            m = _mod2pi(root.k) * n / (2 * np.pi)
            assert abs(m - round(m)) < 1e-8 and abs(root.k.imag) < 1e-12


def test_hardcore_roots_on_half_integer_grid():
    n = 8
    p = ModelParams(n=n, u1_infinite=True)
    for r in range(n):
        roots = solve_single_species(p, r)
        assert len(roots) == pair_orbit_count(n, r, diagonal=False)
        for root in roots:
            m = _mod2pi(root.k) * n / (2 * np.pi)
            assert abs(m - math.floor(m) - 0.5) < 1e-8


@pytest.mark.parametrize("u", [5.0, -3.0, 0.7])
def test_single_species_roots_match_ed(u):
    n = 8
    p = ModelParams(n=n, u1=u)
    # with Omega = 0 the aa block is a decoupled single-species problem
    H = build_hamiltonian(ModelParams(n=n, u1=u, u2=40.0, u3=20.0))
    for r in range(n):
        roots = solve_single_species(p, r)
        assert len(roots) == pair_orbit_count(n, r, diagonal=True)
        ed = np.array([e.energy for e in diagonalize_sector(H, r)])
        for root in roots:
            assert np.min(np.abs(ed - root.energy)) < 1e-8
            if not np.isfinite(root.k.imag):
                continue  # on-site pair at P = pi, K infinite
            s = scattering_factor(root.k, root.q, u)
            assert abs(np.exp(-1j * root.k * n) - s) < 1e-8 * max(1.0, abs(s))


def test_single_species_doublon_closed_form():
    u, n = 5.0, 40
    roots = solve_single_species(ModelParams(n=n, u1=u), 0)
    top = max(roots, key=lambda r: r.energy)
    assert top.energy == pytest.approx(math.sqrt(41), abs=1e-10)
    assert math.sinh(abs(top.k.imag)) == pytest.approx(u / 4, abs=1e-8)


# --------------------------------------------------------------------------
# energy equation


def test_energy_roots_example():
    p = ModelParams(omega=1.0)
    roots = energy_roots(p, 0.0, 0.0)

    def fold(k):
        k = abs(np.real(k)) % (2 * np.pi)
        return min(k, 2 * np.pi - k)

    same = sorted(fold(s.k) for s in roots if s.branches[0] == s.branches[1])
    assert same == pytest.approx([np.pi / 3, 2 * np.pi / 3], abs=1e-9)
    # the mixed branch closes where -4 cos k = 0
    assert [fold(s.k) for s in roots if s.branches[0] != s.branches[1]] == pytest.approx([np.pi / 2])


def test_energy_roots_back_substitute():
    p = ModelParams(j1=1.0, j2=0.6, omega=0.8, delta=0.3)
    for P, eps in ((0.0, -1.2), (0.9, 0.4), (2.5, 3.0)):
        roots = energy_roots(p, P, eps)
        assert 1 <= len(roots) <= 4
        if P == 0.0:
            assert len(roots) == 3
        for s in roots:
            assert s.error < 1e-9
            assert abs(s.k + s.q - P) < 1e-9


def test_energy_roots_escape_for_j1_zero():
    p = ModelParams(j1=0.0, j2=1.0, omega=1.0, delta=1.0)
    roots = energy_roots(p, 0.3, 0.7)
    assert roots.escaped and len(roots) == 3


# --------------------------------------------------------------------------
# weights and assembly

GENERIC = ModelParams(n=5, j1=1.0, j2=0.5, u1=3.0, u2=1.0, u3=0.7, omega=0.8, delta=0.4)


def test_weight_system_off_eigenvalue():
    comps = _components_at(GENERIC, GENERIC.momentum(1), 0.123)
    with pytest.raises(NoNontrivialSolution):
        weight_system(GENERIC, comps, 0.123)


def test_weight_relations_on_generic_states():
    sol = analytic_sector(GENERIC, 1)
    assert sol.complete
    checked = 0
    for s in sol.states:
        w = s.weights
        if s.kind != "generic":
            continue
        for i, c in enumerate(s.components):
            wk, wpk = dispersion_pair(GENERIC, c.k)
            wq, wpq = dispersion_pair(GENERIC, c.q)
            e = s.energy
            assert abs(w.lambdas_prime[i] * (e - wpk - wpq) - w.lambdas[i] * (e - wk - wq)) < 1e-10
            assert abs(w.lambdas_dprime[i] - w.lambdas[i] * (e - wk - wq) / GENERIC.omega) < 1e-10
            den = 2 * e - wk - wpk - wq - wpq
            if abs(den) > 1e-6:
                assert abs(w.kappas[i] - (wk - wpk - wq + wpq) / den) < 1e-10
            checked += 1
    assert checked > 0


def test_weight_system_solves_at_level():
    s = next(x for x in analytic_sector(GENERIC, 2).states if x.kind == "generic")
    w = weight_system(GENERIC, s.components, s.energy)
    w = w if isinstance(w, WeightSolution) else w[0]
    st_ = assemble_eigenstate(s.components, w, "generic", GENERIC.n)
    assert residual(GENERIC, st_, s.energy) < 1e-8


def test_hardcore_symmetric_weights():
    p = ModelParams(n=8, u1_infinite=True, u2_infinite=True, omega=3.0)
    for s in analytic_sector(p, 1).states:
        if s.kind != "type2" or len(s.components) != 2:
            continue
        c1, c2 = s.components
        lam = s.weights.lambdas[1] / s.weights.lambdas[0]
        assert abs(lam + (1 + c1.s) / (1 + c2.s)) < 1e-8
        assert abs(c1.u_tilde + c2.u_tilde) < 1e-8 * abs(c1.u_tilde)


def test_fictitious_interactions_recombine():
    p = ModelParams(n=8, u1=5.0, u2=5.0, omega=1.0)
    n = 0
    for r in (0, 1, 3):
        for s in analytic_sector(p, r).states:
            if s.kind == "type2" and len(s.components) == 2:
                u1, u2 = s.components[0].u_tilde, s.components[1].u_tilde
                if abs(u1 + u2) < 1e-6:
                    continue  # a free component, the identity is 0/0
                assert abs(2 * u1 * u2 / (u1 + u2) - 5.0) < 1e-8
                n += 1
    assert n > 10


def test_assemble_type1_and_type3():
    p = ModelParams(n=6, u1=4.0, u2=4.0, omega=1.0)
    sol = analytic_sector(p, 1)
    kinds = {s.kind for s in sol.states}
    assert {"type1", "type3"} <= kinds
    for s in sol.states:
        if s.kind == "type1":
            assert np.allclose(s.state.A, -s.state.C) and np.abs(s.state.B).max() < 1e-12
        if s.kind == "type3":
            assert np.abs(s.state.A).max() < 1e-12 and np.abs(s.state.C).max() < 1e-12
            assert np.allclose(s.state.B, -s.state.B.T)
        assert residual(p, s.state, s.energy) < 1e-8


def test_type3_is_sine_of_separation():
    n = 6
    k = 2 * np.pi / n
    comp = ChoyHaldaneComponent(k, -k, 1.0, 0.0, False, False)
    w = WeightSolution(np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1), 0.0)
    st_ = assemble_eigenstate([comp], w, "type3", n)
    x = np.arange(n)
    expect = np.sin((x[:, None] - x[None, :]) * k)
    mask = np.abs(expect) > 1e-9
    assert np.abs(st_.B[~mask]).max() < 1e-12
    ratio = st_.B[mask] / expect[mask]
    assert np.allclose(ratio, ratio[0])


# --------------------------------------------------------------------------
# analytic sectors against exact diagonalization


@pytest.mark.parametrize(
    "params",
    [
        ModelParams(n=4, j1=1.0, j2=0.6, u1=2.0, u2=-1.0, u3=0.5, omega=0.9, delta=0.3),
        ModelParams(n=6, u1=5.0, u2=5.0, omega=1.0),
        ModelParams(n=6, u1_infinite=True, u2_infinite=True, omega=2.0),
        ModelParams(n=5, u1=3.0, u2=3.0, u3=3.0, omega=0.7),
    ],
)
def test_analytic_matches_ed(params):
    H = build_hamiltonian(params)
    for r in range(params.n):
        sol = analytic_sector(params, r, strict=True)
        ed = np.sort([e.energy for e in diagonalize_sector(H, r)])
        assert np.allclose(np.sort(sol.energies), ed, atol=1e-8)
        for s in sol.states:
            assert s.residual < 1e-8
            for c in s.components:
                if np.isfinite(c.k).all() and abs(c.k.imag) < 30:
                    assert c.bethe_residual(params.n) < 1e-8


def test_paired_crossings_are_resolved():
    # two fixed-point crossings within one grid cell at P = pi
    p = ModelParams(n=6, j1=1.0, j2=0.7, u1=-2.0, u2=4.0, omega=1.3, delta=-0.3)
    sol = analytic_sector(p, 3)
    ed = np.sort([e.energy for e in diagonalize_sector(build_hamiltonian(p), 3)])
    assert sol.complete and np.allclose(np.sort(sol.energies), ed, atol=1e-8)


# --------------------------------------------------------------------------
# momentum kernel and doublons


def test_kernel_without_coupling():
    p = ModelParams(u1=2.0, u2=1.0, j2=0.5, omega=0.0)
    mk = momentum_kernel(p, 0.4, 7.0, 1.1)
    assert mk.eta == 0 and mk.m[0, 1] == 0 and mk.m[1, 0] == 0
    w, _ = dispersion_pair(p, 1.1)
    wq, _ = dispersion_pair(p, 0.4 - 1.1)
    assert mk.m[0, 0] == pytest.approx(1 / (7.0 - w - wq))


@given(p_=st.floats(-3, 3), P=st.floats(-3, 3))
def test_eta_symmetric(p_, P):
    p = ModelParams(j1=1.0, j2=0.4, omega=0.9, delta=0.2)
    a = momentum_kernel(p, P, 25.0, p_).eta
    b = momentum_kernel(p, P, 25.0, P - p_).eta
    assert a == pytest.approx(b, rel=1e-12)


def test_symmetric_scalar_condition():
    n, u, om, P, eps = 12, 4.0, 1.5, 2 * np.pi / 12, 11.0
    p = ModelParams(n=n, u1=u, u2=u, omega=om)
    ps = 2 * np.pi * np.arange(n) / n
    w = -2 * np.cos(ps) - 2 * np.cos(P - ps)
    scalar = u / n * np.sum(0.5 * (1 / (eps - w - 2 * om) + 1 / (eps - w + 2 * om))) - 1
    assert kernel_determinant(p, P, eps, n, "sym") == pytest.approx(scalar, abs=1e-12)


def test_middle_branch_zeroes_determinant():
    p = ModelParams(u1=10.0, u2=10.0, omega=5.0)
    for P in (0.0, 1.0, 2.5):
        e = doublon_energy(p, P, "middle", "type2")
        assert abs(kernel_determinant(p, P, e, None, "sym")) < 1e-8


def test_hardcore_middle_branch_at_zero():
    p = ModelParams(u1_infinite=True, u2_infinite=True, omega=5.0)
    for P in (0.0, 0.7, 2.0):
        assert doublon_energy(p, P, "middle", "type2") == 0.0
        e = determinant_middle = doublon_levels(p, P, "determinant")
        assert any(abs(lv.energy) < 1e-9 for lv in determinant_middle)
        assert e


def test_doublons_even_in_momentum():
    for p in (ModelParams(u1=6.0, u2=6.0, omega=2.0), ModelParams(j2=0.5, u1=6.0, u2=3.0, omega=1.0, delta=0.5)):
        for P in (0.4, 1.7, 2.9):
            a = [lv.energy for lv in doublon_levels(p, P)]
            b = [lv.energy for lv in doublon_levels(p, -P)]
            assert np.allclose(a, b, atol=1e-8)


def test_large_u_levels():
    p = ModelParams(u1=200.0, u2=300.0, omega=1.0, delta=0.5, j2=1.0)
    got = np.array([lv.energy for lv in doublon_levels(p, 1.0) if abs(lv.energy) > 20])
    ref = large_u_levels(p)
    ref = ref[np.abs(ref) > 20]
    assert np.allclose(np.sort(got), ref, atol=0.2)
    assert np.allclose(ref, [200 + 1.0, 300], atol=0.05)


def test_branches_and_csv(tmp_path):
    p = ModelParams(u1=8.0, u2=8.0, omega=1.0)
    br = doublon_branches(p, np.linspace(0, np.pi, 5))
    assert {b.branch_id for b in br} <= {"below", "middle", "above"}
    for b in br:
        for k in b.decay_constants:
            assert all(x > 0 for x in k)
    write_branches_csv(tmp_path / "b.csv", br)
    head = (tmp_path / "b.csv").read_text().splitlines()[0]
    assert head.startswith("P [rad],energy [J],K")
    with pytest.raises(BranchNotFound):
        doublon_energy(p, 0.3, "below")


def test_finite_size_convergence():
    p_inf = ModelParams(u1=5.0, u2=5.0, omega=1.0)
    e_inf = doublon_energy(p_inf, 0.0, "above", "type2")
    errs = []
    for n in (8, 12, 16, 20):
        sol = analytic_sector(ModelParams(n=n, u1=5.0, u2=5.0, omega=1.0), 0)
        errs.append(min(abs(s.energy - e_inf) for s in sol.states if s.kind == "type2"))
    assert all(a > b for a, b in zip(errs, errs[1:]))


# --------------------------------------------------------------------------
# hard-core regions


def test_region_example_counts(tmp_path):
    p = ModelParams(n=10, omega=10.0, u1_infinite=True, u2_infinite=True)
    r0 = region_enumerate_infU(p, 0)
    r1 = region_enumerate_infU(p, 1)
    assert sum(s.region == "II" for s in r0) == 5
    assert sum(s.region == "II" for s in r1) == 4
    assert not any(s.region in ("I", "V") for s in r0 + r1)
    for s in r0:
        assert s.residual < 1e-8
        if s.region == "II":
            assert abs(s.u_tilde[0] + s.u_tilde[1]) < 1e-6 * abs(s.u_tilde[0])
    write_regions_csv(tmp_path / "r.csv", p, r0)
    assert (tmp_path / "r.csv").read_text().startswith("P [rad],energy [J],K,region,residual")


def test_region_table():
    p = ModelParams(omega=10.0, u1_infinite=True, u2_infinite=True)
    assert classify_region(p, 0.0, 0.0) == "III"
    assert classify_region(p, 0.0, -20.0) == "II"
    assert classify_region(p, 0.0, 20.0) == "IV"
    assert classify_region(p, 0.0, -40.0) == "I"
    assert classify_region(p, 0.0, 40.0) == "V"


def test_region_requires_hardcore():
    with pytest.raises(ValueError):
        region_enumerate_infU(ModelParams(n=6, u1=3.0, u2=3.0), 0)
