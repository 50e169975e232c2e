import math

import numpy as np
import pytest

from holowidth.errors import PreconditionError, RateFitError
from holowidth.multiidx import n_term_select, total_degree_set
from holowidth.pde import Grid, energy_coordinates, solve_diffusion
from holowidth.problems import affine_problem, bumps_box, constant_box, decaying_box
from holowidth.taylor import bound_setup, compute_taylor, tail_bound
from holowidth.widths import (
    SemilinearProblem,
    SnapshotSet,
    default_window,
    fit_rate,
    greedy_widths,
    projection_errors,
    rate_transfer_verdict,
    sample_parameters,
    sample_snapshots,
    svd_widths,
    taylor_space_error,
    width_report,
)


def test_sampler_preconditions_and_grid():
    with pytest.raises(PreconditionError):
        sample_parameters("uniform", 1, 3, seed=0)
    np.testing.assert_array_equal(sample_parameters("grid", 5, 1)[:, 0], [-1, -0.5, 0, 0.5, 1])
    assert sample_parameters("grid", 9, 2).shape == (9, 2)
    with pytest.raises(PreconditionError):
        sample_parameters("grid", 10, 2)
    for sampler in ("uniform", "sobol"):
        p = sample_parameters(sampler, 64, 3, seed=7)
        assert np.all(np.abs(p) <= 1)
        np.testing.assert_array_equal(p, sample_parameters(sampler, 64, 3, seed=7))


def test_snapshots_deterministic_and_threaded():
    g = Grid(1, 63)
    prob = affine_problem(bumps_box(g, 4, 2.0, 0.5), "const1", g)
    a = sample_snapshots(prob, "uniform", 20, seed=3)
    b = sample_snapshots(prob, "uniform", 20, seed=3, threads=4)
    assert a.params.tobytes() == b.params.tobytes()
    assert a.fields.tobytes() == b.fields.tobytes()


def test_identical_snapshots():
    g = Grid(1, 31)
    u = solve_diffusion(1.0, "const1", g).values
    snap = SnapshotSet(np.zeros((4, 1)), np.tile(u, (4, 1)), g)
    svd = svd_widths(snap)
    assert np.all(svd[1:] <= 1e-12 * svd[0])
    greedy, order = greedy_widths(snap, 3)
    assert greedy[0] > 0 and np.all(greedy[1:] <= 1e-12 * greedy[0])
    assert order[0] == 0


def test_constant_direction_rank_one():
    g = Grid(1, 127)
    prob = affine_problem(constant_box(g, [0.5]), "const1", g)
    sigma_ratio = _sigma_ratio(sample_snapshots(prob, "uniform", 50, seed=1))
    assert sigma_ratio <= 1e-10


def _sigma_ratio(snap):
    s = np.linalg.svd(snap.energy_coords, compute_uv=False)
    return s[1] / s[0]


def test_affine_manifold_rank_two():
    g = Grid(1, 31)
    rng = np.random.default_rng(0)
    u0, u1 = rng.normal(size=(2, g.n_dofs))
    y = np.linspace(-1, 1, 7)
    snap = SnapshotSet(y[:, None], u0 + y[:, None] * u1, g)
    svd = svd_widths(snap)
    assert svd[1] > 1e-3 * svd[0] and np.all(svd[2:] <= 1e-12 * svd[0])


def _energy_orthonormal(g, m, seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(g.n_dofs, m))
    C = energy_coordinates(V, g)
    R = np.linalg.qr(C, mode="r")
    return np.linalg.solve(R.T, V.T)  # rows have orthonormal energy coordinates


@pytest.mark.parametrize("m", [2, 3, 5])
def test_orthonormal_family(m):
    g = Grid(2, 7)
    snap = SnapshotSet(np.zeros((m, 1)), _energy_orthonormal(g, m, m), g)
    np.testing.assert_allclose(snap.energy_coords.T @ snap.energy_coords, np.eye(m), atol=1e-12)
    greedy, order = greedy_widths(snap, m)
    np.testing.assert_allclose(greedy[:m], 1.0, rtol=1e-10)
    assert greedy[m] <= 1e-12
    # all residuals tie at every step, so selection follows the index order
    np.testing.assert_array_equal(order, np.arange(m))
    np.testing.assert_allclose(svd_widths(snap), np.sqrt((m - np.arange(m)) / m), rtol=1e-10)


def test_monotone_and_ordered():
    g = Grid(1, 63)
    prob = affine_problem(decaying_box(g, 6, 0.4, 2.0), "sinpi", g)
    snap = sample_snapshots(prob, "sobol", 64, seed=2)
    svd = svd_widths(snap)
    greedy, order = greedy_widths(snap, 30)
    assert np.all(np.diff(svd) <= 0)
    assert np.all(np.diff(greedy) <= 0)
    assert np.all(greedy >= svd[: greedy.size] * (1 - 1e-12))
    assert len(set(order.tolist())) == order.size
    again, order2 = greedy_widths(snap, 30)
    np.testing.assert_array_equal(order, order2)


def test_fit_rate_examples():
    n = np.arange(0, 101, dtype=float)
    d = np.r_[1.0, n[1:] ** -2.0]
    fit = fit_rate(d, (1, 100))
    assert fit.slope == pytest.approx(-2, abs=1e-12) and fit.r2 == pytest.approx(1, abs=1e-12)
    fit = fit_rate(3.5 * d, (1, 100))
    assert fit.slope == pytest.approx(-2, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.5), abs=1e-12)
    mixed = np.r_[1.0, n[1:] ** -2.0 + n[1:] ** -3.0]
    assert -2.1 <= fit_rate(mixed, (10, 100)).slope <= -1.95


def test_fit_rate_zero_reports_rank():
    d = [1.0, 0.5, 0.1, 0.0, 0.0]
    with pytest.raises(RateFitError) as err:
        fit_rate(d, (1, 4))
    assert err.value.first_zero == 3


def test_default_window():
    assert default_window(500) == (5, 40)
    assert default_window(100) == (5, 25)


def test_verdict_examples():
    assert rate_transfer_verdict(3, -3.0, 0.25)["pass"]
    out = rate_transfer_verdict(3, -0.5, 0.25)
    assert not out["pass"] and out["threshold_slope"] == pytest.approx(-1.75)


def test_width_report_bumps_passes():
    g = Grid(1, 99)
    prob = affine_problem(bumps_box(g, 8, 3.0, 0.5), "const1", g)
    snap = sample_snapshots(prob, "uniform", 120, seed=4)
    rep = width_report(snap, 25, (3, 15), s=3.0)
    assert rep.verdict["pass"]
    assert list(rep.rows())[0][0] == 0


def test_projection_errors_of_own_span():
    g = Grid(1, 31)
    rng = np.random.default_rng(5)
    fields = rng.normal(size=(4, g.n_dofs))
    snap = SnapshotSet(np.zeros((4, 1)), fields, g)
    assert projection_errors(fields[:2], snap)[:2].max() <= 1e-12
    np.testing.assert_allclose(projection_errors(np.zeros((0, g.n_dofs)), snap),
                               np.linalg.norm(snap.energy_coords, axis=0))


def test_taylor_space_within_tail():
    g = Grid(1, 63)
    prob = affine_problem(decaying_box(g, 6, 0.1, 2.0), "const1", g)
    setup = bound_setup(prob)
    table = compute_taylor(prob, total_degree_set(6, 4))
    snap = sample_snapshots(prob, "uniform", 40, seed=6)
    for n in (1, 5, 20):
        subset = n_term_select(table.norms, n)
        assert taylor_space_error(table, subset, snap) <= tail_bound(table, subset, setup)


def test_semilinear_snapshots():
    g = Grid(1, 31)
    box = bumps_box(g, 3, 2.0, 0.5, abar=0.0)
    prob = SemilinearProblem(g, box.offset, box.directions, 50 * g.load_values("sinpi"))
    snap = sample_snapshots(prob, "uniform", 10, seed=8)
    assert np.all(np.isfinite(snap.fields)) and np.all(snap.fields > 0)
