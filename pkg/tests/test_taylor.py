import math

import numpy as np
import pytest

from holowidth.errors import PreconditionError
from holowidth.multiidx import IndexSet, MultiIndex, factorial_ratio, n_term_select, total_degree_set
from holowidth.pde import Grid, energy_norm, frechet_apply, solve_diffusion
from holowidth.problems import affine_problem, bumps_box, constant_box, decaying_box
from holowidth.taylor import (
    AffineProblem,
    bound_audit,
    bound_setup,
    cauchy_bound,
    compute_taylor,
    factorial_bound,
    rho_design,
    summability_check,
    tail_bound,
    taylor_evaluate,
)

E1, E2 = MultiIndex.unit(1), MultiIndex.unit(2)
ZERO = MultiIndex()


def geometric_problem(c=0.5, N=63):
    g = Grid(1, N)
    return affine_problem(constant_box(g, [c]), "const1", g)


def test_zero_directions():
    g = Grid(1, 31)
    prob = AffineProblem(g, 1.0, np.zeros((2, g.n_edges)), "const1")
    table = compute_taylor(prob, total_degree_set(2, 3))
    np.testing.assert_allclose(table.coefficients[ZERO], solve_diffusion(1.0, "const1", g).values, rtol=1e-14)
    for nu in table.index_set:
        if nu.degree:
            assert not np.any(table.coefficients[nu])


def test_geometric_single_parameter():
    prob = geometric_problem(0.3)
    table = compute_taylor(prob, total_degree_set(1, 10))
    v0 = table.norms[ZERO]
    for k in range(11):
        assert table.norms[MultiIndex({1: k})] == pytest.approx(0.3**k * v0, rel=1e-10)


def test_two_constant_parameters_multinomial():
    g = Grid(1, 31)
    c = np.array([0.3, 0.2])
    prob = affine_problem(constant_box(g, c), "const1", g)
    table = compute_taylor(prob, total_degree_set(2, 5))
    v0 = table.coefficients[ZERO]
    for nu in table.index_set:
        coef = (-1) ** nu.degree * factorial_ratio(nu) * np.prod([c[j - 1] ** v for j, v in nu.items])
        np.testing.assert_allclose(table.coefficients[nu], coef * v0, rtol=1e-10, atol=1e-15)


def test_stored_norms_match_fields():
    g = Grid(2, 11)
    prob = affine_problem(decaying_box(g, 3, 0.2, 2.0), "sinpi", g)
    table = compute_taylor(prob, total_degree_set(3, 3))
    for nu in table.index_set:
        assert table.norms[nu] == pytest.approx(energy_norm(table.coefficients[nu], g), rel=1e-12)


def test_missing_parent_is_named():
    prob = geometric_problem()
    with pytest.raises(PreconditionError, match="lacks parent"):
        compute_taylor(prob, IndexSet([ZERO, MultiIndex({1: 2})]))


def test_first_order_matches_frechet():
    g = Grid(1, 63)
    prob = affine_problem(bumps_box(g, 4, 2.0, 0.5), "const1", g)
    table = compute_taylor(prob, total_degree_set(4, 1))
    u0 = solve_diffusion(prob.abar, prob.f, g)
    for j in range(1, 5):
        d = frechet_apply(prob.abar, u0, prob.psi[j - 1]).values
        np.testing.assert_allclose(table.coefficients[MultiIndex.unit(j)], d, atol=1e-10)


def test_rho_design_examples():
    np.testing.assert_allclose(rho_design(E1, 1.0, [0.1, 0.3]), [7.0, 1.0])
    np.testing.assert_allclose(rho_design(MultiIndex({1: 1, 2: 1}), 1.0, [0.1, 0.2]), [4.0, 2.5])
    with pytest.raises(PreconditionError):
        rho_design(ZERO, 1.0, [0.1])


def test_rho_design_identity_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        J = int(rng.integers(1, 9))
        star = rng.uniform(0.01, 1.0, J)
        eps = rng.uniform(0.1, 3.0)
        nu = MultiIndex({j + 1: int(v) for j, v in enumerate(rng.integers(0, 4, J))} or {1: 1})
        if nu.degree == 0:
            nu = E1
        rho = rho_design(nu, eps, star)
        assert math.fsum((rho - 1) * star) == pytest.approx(0.6 * eps, abs=1e-12)


def test_cauchy_examples():
    assert cauchy_bound(ZERO, 3.0, [2.0]) == 3.0
    assert cauchy_bound(E1, 1.0, [7.0]) == pytest.approx(1 / 7)
    assert cauchy_bound(MultiIndex({1: 2, 2: 1}), 8.0, [2.0, 4.0]) == pytest.approx(0.5)


def test_factorial_examples():
    assert factorial_bound(ZERO, 2.0, [0.3]) == 2.0
    assert factorial_bound(E1, 1.0, [0.3]) == pytest.approx(0.3)
    assert factorial_bound(MultiIndex({1: 1, 2: 1}), 1.0, [0.3, 0.2]) == pytest.approx(0.12)


def test_summability_examples():
    out = summability_check([0.05, 0.1, 0.05], 1.0, 0.5)
    assert out["dbar_l1"] == pytest.approx(math.e / 3, abs=1e-12)
    assert out["condition_ok"] and out["lp_ok"]
    zero = summability_check([0.0, 0.0], 1.0, 0.5)
    assert zero["dbar_l1"] == 0 and zero["condition_ok"]
    full = summability_check([0.5, 0.5], 1.0, 0.5)
    assert full["dbar_l1"] == pytest.approx(10 * math.e / 6)
    assert not full["condition_ok"]


def test_summability_random_two_tenths():
    rng = np.random.default_rng(1)
    for _ in range(200):
        eps = rng.uniform(0.1, 5.0)
        w = rng.dirichlet(np.ones(int(rng.integers(1, 20))))
        assert summability_check(0.2 * eps * w, eps, 0.5)["dbar_l1"] == pytest.approx(math.e / 3, abs=1e-12)


def test_bound_chain_decaying_box():
    g = Grid(1, 63)
    prob = affine_problem(decaying_box(g, 8, 0.1, 2.0), "const1", g)
    setup = bound_setup(prob)
    table = compute_taylor(prob, total_degree_set(8, 4))
    rows = bound_audit(table, setup)
    assert len(rows) == math.comb(12, 4)
    assert not any(r.violation for r in rows)


def test_bound_chain_complex_offset():
    # the chain only needs Re(abar) to dominate, so a complex offset is admissible
    g = Grid(1, 31)
    box = bumps_box(g, 3, 1.0, 0.3)
    prob = AffineProblem(g, 1.0 + 0.4j, box.directions, "const1")
    setup = bound_setup(prob)
    rows = bound_audit(compute_taylor(prob, total_degree_set(3, 5)), setup)
    assert not any(r.violation for r in rows)


def test_evaluate_trivial_cases():
    prob = geometric_problem()
    table = compute_taylor(prob, total_degree_set(1, 4))
    v0 = table.coefficients[ZERO]
    np.testing.assert_array_equal(taylor_evaluate(table, IndexSet([ZERO]), [0.9]).values, v0)
    np.testing.assert_allclose(taylor_evaluate(table, table.index_set, [0.0]).values, v0, rtol=1e-15)
    with pytest.raises(PreconditionError):
        taylor_evaluate(table, total_degree_set(1, 5), [0.1])


@pytest.mark.parametrize("K", [2, 5, 9])
def test_evaluate_geometric_tail(K):
    prob = geometric_problem(0.5)
    table = compute_taylor(prob, total_degree_set(1, K))
    exact = prob.solve([0.5]).values
    err = energy_norm(taylor_evaluate(table, table.index_set, [0.5]).values - exact, prob.grid)
    v0 = table.norms[ZERO]
    # absolute tail, and the exact alternating remainder of 1 / (1 + 0.25)
    assert err <= v0 * 0.25 ** (K + 1) / (1 - 0.25)
    assert err == pytest.approx(v0 * 0.25 ** (K + 1) / 1.25, rel=1e-8)


def test_partial_sums_within_tail_bound():
    g = Grid(1, 63)
    prob = affine_problem(decaying_box(g, 8, 0.1, 2.0), "const1", g)
    setup = bound_setup(prob)
    table = compute_taylor(prob, total_degree_set(8, 4))
    subset = n_term_select(table.norms, 40)
    bound = tail_bound(table, subset, setup)
    rng = np.random.default_rng(2)
    for _ in range(10):
        y = rng.uniform(-1, 1, 8)
        err = energy_norm(taylor_evaluate(table, subset, y).values - prob.solve(y).values, g)
        assert err <= bound + 1e-8


def test_tail_bound_infinite_when_divergent():
    g = Grid(1, 31)
    prob = affine_problem(constant_box(g, [0.3, 0.3]), "const1", g)
    setup = bound_setup(prob)
    assert setup.dbar_l1 > 1
    table = compute_taylor(prob, total_degree_set(2, 2))
    assert tail_bound(table, IndexSet([ZERO]), setup) == math.inf
