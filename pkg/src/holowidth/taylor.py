"""Taylor coefficients of the affine parametric diffusion and their a-priori bounds.

For ``a(z) = abar + sum_j z_j psi_j`` the operator is affine in ``z``,
``A(z) = A_0 + sum_j z_j A_j``. Differentiating ``A(z) v(z) = f`` and
matching the coefficient of ``z^nu`` gives

    A_0 v_0 = f,    A_0 v_nu = - sum_{j : nu_j > 0} A_j v_{nu - e_j},

so every coefficient needs its parents and one solve with the fixed ``A_0``.
The first-order case is exactly the directional derivative of the solution
map at ``abar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, NotEllipticError, PreconditionError
from .multiidx import IndexSet, MultiIndex, factorial_ratio, lp_quasi_norm
from .pde import DiscreteField, DiscreteOperator, Grid, assemble, dual_norm, energy_norm, solve_diffusion

# share of eps consumed by the polydisc enlargement
RHO_BUDGET = 0.6


@dataclass
class AffineProblem:
    """Diffusion problem with coefficient ``abar + sum_j z_j psi_j`` on edge midpoints."""

    grid: Grid
    abar: np.ndarray
    psi: np.ndarray  # (J_act, n_edges)
    f: np.ndarray
    _ops: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.abar = self.grid.edge_values(self.abar)
        psi = np.asarray(self.psi)
        if psi.size == 0:
            psi = np.zeros((0, self.grid.n_edges))
        self.psi = np.atleast_2d(psi)
        if self.psi.shape[1] != self.grid.n_edges:
            raise ValueError(f"directions must have {self.grid.n_edges} edge values")
        self.f = self.grid.load_values(self.f)
        if self.r <= 0:
            raise NotEllipticError(self.r)

    @classmethod
    def from_box(cls, box, f, grid: Grid) -> AffineProblem:
        return cls(grid, box.offset, box.directions, f)

    @property
    def J_act(self) -> int:
        return self.psi.shape[0]

    @property
    def r(self) -> float:
        """Ellipticity floor ``min(Re abar - sum_j |psi_j|)`` over edges; valid on all of U."""
        return float(np.min(np.real(self.abar) - np.sum(np.abs(self.psi), axis=0)))

    @property
    def direction_norms(self) -> np.ndarray:
        return np.max(np.abs(self.psi), axis=1) if self.J_act else np.zeros(0)

    def coefficient(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z)
        if z.shape != (self.J_act,):
            raise ValueError(f"parameter must have length {self.J_act}")
        return self.abar + z @ self.psi

    def operator(self, j: int) -> DiscreteOperator:
        """``A_0`` for j = 0, else the assembly of ``psi_j`` (1-based)."""
        if j not in self._ops:
            coef = self.abar if j == 0 else self.psi[j - 1]
            self._ops[j] = assemble(coef, self.grid)
        return self._ops[j]

    def solve(self, z: Sequence[complex]) -> DiscreteField:
        return solve_diffusion(self.coefficient(z), self.f, self.grid)


@dataclass(frozen=True)
class BoundSetup:
    """Constants of the coefficient bounds: eps, the uniform bound B, and d, dbar."""

    eps: float
    B: float
    star_norms: np.ndarray
    d: np.ndarray
    dbar: np.ndarray

    @property
    def dbar_l1(self) -> float:
        return math.fsum(self.dbar)


def bound_setup(prob: AffineProblem, eps: float | None = None) -> BoundSetup:
    """Choose eps and B so the Cauchy estimate is rigorous.

    On the polydisc of any ``rho(nu)``, ``Re a >= r - 0.6 eps``. The default
    ``eps = r / 1.2`` keeps half the ellipticity floor, and ``B`` is the
    a-priori bound ``||f||_{Y'} / (r - 0.6 eps)``.
    """
    r = prob.r
    if eps is None:
        eps = r / (2 * RHO_BUDGET)
    floor = r - RHO_BUDGET * eps
    if eps <= 0 or floor <= 0:
        raise DomainError(f"eps = {eps:g} leaves no ellipticity margin (r = {r:g})")
    B = dual_norm(prob.f, prob.grid) / floor
    star = prob.direction_norms.copy()
    d = 10 * star / (6 * eps)
    return BoundSetup(float(eps), float(B), star, d, math.e * d)


@dataclass
class TaylorTable:
    index_set: IndexSet
    coefficients: dict
    norms: dict
    grid: Grid
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.index_set)

    def field(self, nu: MultiIndex) -> DiscreteField:
        return DiscreteField(self.coefficients[nu], self.grid)


def compute_taylor(prob: AffineProblem, index_set: IndexSet) -> TaylorTable:
    """All coefficients ``v_nu`` for ``nu`` in a downward-closed set, by total degree."""
    missing = index_set.missing_parent()
    if missing is not None:
        nu, mu = missing
        raise PreconditionError(f"index set is not downward closed: {nu} lacks parent {mu}")
    if index_set.dimension > prob.J_act:
        raise PreconditionError(f"index set uses coordinate {index_set.dimension} > J_act = {prob.J_act}")
    A0 = prob.operator(0)
    coeffs: dict[MultiIndex, np.ndarray] = {}
    norms: dict[MultiIndex, float] = {}
    for nu in sorted(index_set, key=MultiIndex.sort_key):
        if nu.degree == 0:
            v = A0.solve(prob.f)
        else:
            rhs = np.zeros(prob.grid.n_dofs, dtype=A0.matrix.dtype)
            for j in nu.support:
                rhs -= prob.operator(j) @ coeffs[nu.sub_unit(j)]
            v = A0.solve(rhs)
        coeffs[nu] = v
        norms[nu] = energy_norm(v, prob.grid)
    return TaylorTable(index_set, coeffs, norms, prob.grid)


def rho_design(nu: MultiIndex, eps: float, star_norms: Sequence[float]) -> np.ndarray:
    """Radii ``rho_j = 1 + 6 eps nu_j / (10 ||psi*_j|| |nu|)``, 1 off the support."""
    k = nu.degree
    if k == 0:
        raise PreconditionError("rho(nu) is undefined for nu = 0; use the plain bound B")
    star = np.asarray(star_norms, dtype=float)
    rho = np.ones(max(star.size, nu.max_coordinate))
    for j, v in nu.items:
        if j > star.size or star[j - 1] <= 0:
            raise PreconditionError(f"||psi*_{j}|| must be positive where nu_{j} > 0")
        rho[j - 1] = 1 + 6 * eps * v / (10 * star[j - 1] * k)
    return rho


def cauchy_bound(nu: MultiIndex, B: float, rho: Sequence[float]) -> float:
    rho = np.asarray(rho, dtype=float)
    out = B
    for j, v in nu.items:
        out *= rho[j - 1] ** (-v)
    return float(out)


def factorial_bound(nu: MultiIndex, B: float, dbar: Sequence[float]) -> float:
    dbar = np.asarray(dbar, dtype=float)
    out = B * factorial_ratio(nu)
    for j, v in nu.items:
        out *= dbar[j - 1] ** v
    return float(out)


def summability_check(star_norms: Sequence[float], eps: float, p: float) -> dict:
    """The l_p and l_1 criterion on ``dbar = e * 10 ||psi*|| / (6 eps)``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    dbar = math.e * 10 * np.asarray(star_norms, dtype=float) / (6 * eps)
    l1 = math.fsum(dbar)
    lp = lp_quasi_norm(dbar, p)
    return {"dbar_l1": l1, "condition_ok": l1 <= 1, "lp_ok": bool(np.isfinite(lp)), "dbar_lp": lp}


@dataclass(frozen=True)
class BoundRow:
    nu: MultiIndex
    norm: float
    cauchy: float
    factorial: float

    @property
    def violation(self) -> bool:
        return not (self.norm <= self.cauchy <= self.factorial * (1 + 1e-10))


def bound_audit(table: TaylorTable, setup: BoundSetup) -> list[BoundRow]:
    rows = []
    for nu in sorted(table.index_set, key=MultiIndex.sort_key):
        if nu.degree == 0:
            c = fb = setup.B
        else:
            c = cauchy_bound(nu, setup.B, rho_design(nu, setup.eps, setup.star_norms))
            fb = factorial_bound(nu, setup.B, setup.dbar)
        rows.append(BoundRow(nu, table.norms[nu], c, fb))
    return rows


def taylor_evaluate(table: TaylorTable, subset: IndexSet, y: Sequence[complex]) -> DiscreteField:
    """Partial sum ``sum_{nu in subset} v_nu y^nu``."""
    y = np.asarray(y)
    members = list(subset)
    for nu in members:
        if nu not in table.coefficients:
            raise PreconditionError(f"coefficient {nu} is not in the table")
    if not members:
        return DiscreteField(np.zeros(table.grid.n_dofs), table.grid)
    if np.any(np.abs(y) > 1 + 1e-12):
        raise PreconditionError("parameter must satisfy |y_j| <= 1")
    J = max(subset.dimension, y.size)
    yy = np.zeros(J, dtype=y.dtype if np.iscomplexobj(y) else float)
    yy[: y.size] = y
    weights = kernels.monomials(subset.dense(J), yy)
    V = np.stack([table.coefficients[nu] for nu in members], axis=1)
    return DiscreteField(V @ weights, table.grid)


def tail_bound(table: TaylorTable, subset: IndexSet, setup: BoundSetup) -> float:
    """Upper bound on ``sum_{nu not in subset} ||v_nu||``.

    Computed norms cover the table minus the subset. Indices outside the
    table use the factorial bound, whose total over all indices of degree k
    is ``B ||dbar||_1^k``; the remainder is that geometric total minus the
    bounds already spent inside the table.
    """
    inside = math.fsum(table.norms[nu] for nu in table.index_set if nu not in subset)
    S = setup.dbar_l1
    if S >= 1:
        return math.inf
    total = setup.B / (1 - S)
    spent = math.fsum(setup.B if nu.degree == 0 else factorial_bound(nu, setup.B, setup.dbar)
                      for nu in table.index_set)
    return inside + max(total - spent, 0.0)
