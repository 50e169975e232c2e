"""Empirical n-widths of sampled solution manifolds."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import kernels
from .errors import PreconditionError, RateFitError
from .pde import DiscreteField, Grid, energy_coordinates, solve_semilinear
from .taylor import AffineProblem, TaylorTable

SAMPLERS = ("uniform", "grid", "sobol")


@dataclass
class SemilinearProblem:
    """``u^3 - div(exp(a(y)) grad u) = f`` with ``a(y) = abar + sum_j y_j psi_j`` (real)."""

    grid: Grid
    abar: np.ndarray
    psi: np.ndarray
    f: np.ndarray
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        self.abar = np.real(self.grid.edge_values(self.abar))
        self.psi = np.atleast_2d(np.real(np.asarray(self.psi, dtype=float)))
        self.f = self.grid.load_values(self.f)

    @property
    def J_act(self) -> int:
        return self.psi.shape[0]

    def coefficient(self, y):
        return self.abar + np.asarray(y) @ self.psi

    def solve(self, y) -> DiscreteField:
        return solve_semilinear(self.coefficient(y), self.f, self.grid, tol=self.tol, max_iter=self.max_iter)


def sample_parameters(sampler: str, m: int, J: int, seed: int | None = None) -> np.ndarray:
    """``m`` points of the real cube ``[-1, 1]^J``, deterministic for a fixed seed."""
    if m < 2:
        raise PreconditionError(f"need at least 2 snapshots, got {m}")
    if sampler == "uniform":
        return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(m, J))
    if sampler == "grid":
        k = int(round(m ** (1.0 / J)))
        if k**J != m or k < 2:
            raise PreconditionError(f"tensor grid needs m = k^{J} with k >= 2, got m = {m}")
        axis = np.linspace(-1.0, 1.0, k)
        mesh = np.meshgrid(*([axis] * J), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)
    if sampler == "sobol":
        pts = qmc.Sobol(d=J, scramble=True, seed=seed).random(m)
        return 2.0 * pts - 1.0
    raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")


@dataclass
class SnapshotSet:
    params: np.ndarray  # (m, J)
    fields: np.ndarray  # (m, n_dofs)
    grid: Grid
    _coords: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.fields.shape[0] < 2:
            raise PreconditionError("a snapshot set needs at least 2 members")

    @property
    def m(self) -> int:
        return self.fields.shape[0]

    @property
    def energy_coords(self) -> np.ndarray:
        """Columns with Euclidean norm equal to the energy norm of each snapshot."""
        if self._coords is None:
            self._coords = energy_coordinates(self.fields.T, self.grid)
        return self._coords


def sample_snapshots(prob: AffineProblem | SemilinearProblem, sampler: str, m: int, seed: int | None = None,
                     threads: int = 1) -> SnapshotSet:
    params = sample_parameters(sampler, m, prob.J_act, seed)
    solve: Callable = prob.solve
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sols = list(pool.map(solve, params))
    else:
        sols = [solve(y) for y in params]
    return SnapshotSet(params, np.stack([np.real(s.values) for s in sols]), prob.grid)


def svd_widths(snap: SnapshotSet) -> np.ndarray:
    """``sqrt(sum_{k>n} sigma_k^2 / m)`` for n = 0 .. min(m, dim) - 1."""
    sigma = np.linalg.svd(snap.energy_coords, compute_uv=False)
    tails = np.cumsum((sigma**2)[::-1])[::-1]
    return np.sqrt(tails / snap.m)


def greedy_widths(snap: SnapshotSet, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Strong-greedy worst-case projection errors for n = 0 .. n_max, and the selection order."""
    if n_max > snap.m:
        raise PreconditionError(f"n_max = {n_max} exceeds the {snap.m} snapshots")
    order, errors = kernels.strong_greedy(snap.energy_coords, n_max)
    # a later error can exceed an earlier one only by roundoff once residuals hit zero
    return np.minimum.accumulate(errors), order


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    window: tuple[int, int]


def fit_rate(d_seq: Sequence[float], window: tuple[int, int]) -> RateFit:
    """Least-squares line through ``(log n, log d_n)`` for n in the inclusive window.

    ``d_seq[n]`` is the width at dimension n (index 0 is the zero space).
    """
    n_min, n_max = int(window[0]), int(window[1])
    if n_min < 1 or n_max <= n_min:
        raise ValueError(f"bad fit window {window}")
    d = np.asarray(d_seq, dtype=float)
    if n_max >= d.size:
        raise ValueError(f"fit window {window} exceeds the sequence length {d.size}")
    seg = d[n_min:n_max + 1]
    bad = np.flatnonzero(seg <= 0)
    if bad.size:
        first = n_min + int(bad[0])
        raise RateFitError(f"nonpositive width at n = {first}: exact finite rank", first_zero=first)
    x = np.log(np.arange(n_min, n_max + 1, dtype=float))
    y = np.log(seg)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, (n_min, n_max))


def default_window(m: int) -> tuple[int, int]:
    return 5, max(6, min(40, m // 4))


@dataclass
class WidthReport:
    svd_rms: np.ndarray
    greedy_max: np.ndarray
    greedy_order: np.ndarray
    svd_fit: RateFit | None = None
    greedy_fit: RateFit | None = None
    s_input: float | None = None
    delta: float | None = None
    verdict: dict | None = None

    def rows(self):
        n = max(len(self.svd_rms), len(self.greedy_max))
        for k in range(n):
            yield (k,
                   float(self.svd_rms[k]) if k < len(self.svd_rms) else math.nan,
                   float(self.greedy_max[k]) if k < len(self.greedy_max) else math.nan)


def rate_transfer_verdict(s: float, observed: WidthReport | float, delta: float = 0.25) -> dict:
    """Pass when the greedy decay slope is at most ``-(s - 1 - delta)``."""
    slope = observed if isinstance(observed, (int, float)) else observed.greedy_fit.slope
    threshold = -(s - 1.0 - delta)
    out = {
        "s_input": float(s),
        "delta": float(delta),
        "t_required": float(s - 1.0 - delta),
        "threshold_slope": threshold,
        "t_observed": -float(slope),
        "greedy_slope": float(slope),
        "pass": bool(slope <= threshold),
    }
    if isinstance(observed, WidthReport) and observed.svd_fit is not None:
        out["svd_slope"] = observed.svd_fit.slope
    return out


def width_report(snap: SnapshotSet, n_max: int, window: tuple[int, int] | None = None,
                 s: float | None = None, delta: float = 0.25) -> WidthReport:
    svd = svd_widths(snap)
    greedy, order = greedy_widths(snap, n_max)
    window = window or default_window(snap.m)
    rep = WidthReport(svd, greedy, order, s_input=s, delta=delta)
    rep.greedy_fit = fit_rate(greedy, window)
    try:
        rep.svd_fit = fit_rate(svd, window)
    except (RateFitError, ValueError):
        rep.svd_fit = None
    if s is not None:
        rep.verdict = rate_transfer_verdict(s, rep, delta)
    return rep


def projection_errors(basis_fields: np.ndarray, snap: SnapshotSet) -> np.ndarray:
    """Energy-norm distance of each snapshot to ``span(basis_fields)`` (rows are nodal fields)."""
    B = energy_coordinates(np.atleast_2d(basis_fields).T, snap.grid)
    W = snap.energy_coords
    if B.shape[1] == 0:
        return np.linalg.norm(W, axis=0)
    Q, R = np.linalg.qr(B)
    keep = np.abs(np.diag(R)) > 1e-14 * max(1.0, np.abs(R).max())
    Q = Q[:, keep]
    resid = W - Q @ (Q.T @ W)
    resid -= Q @ (Q.T @ resid)
    return np.linalg.norm(resid, axis=0)


def taylor_space_error(table: TaylorTable, subset, snap: SnapshotSet) -> float:
    """Worst snapshot distance to ``span{v_nu : nu in subset}``."""
    fields = np.array([np.real(table.coefficients[nu]) for nu in subset])
    return float(np.max(projection_errors(fields, snap)))
