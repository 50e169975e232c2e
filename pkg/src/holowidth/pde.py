"""Finite-difference elliptic solves on the unit interval / square.

Coefficients live on edge midpoints, so ``-div(a grad u)`` assembles as
``G^T diag(a) G`` with ``G`` the discrete gradient (one row per edge). The
operator is linear in ``a``, which the Taylor recursion relies on, and
``sqrt(h^m) G`` is an exact factor of the energy Gram matrix.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import DivergenceError, DomainError, NotEllipticError, PreconditionError

Coefficient = Union[float, complex, np.ndarray, Callable]
Load = Union[float, str, np.ndarray, Callable]

LOAD_PRESETS = ("const1", "sinpi")


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``N`` interior nodes per axis, Dirichlet boundary."""

    m: int
    N: int

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.m}")
        if self.N < 2:
            raise ValueError(f"need N >= 2, got {self.N}")

    @property
    def h(self) -> float:
        return 1.0 / (self.N + 1)

    @property
    def cell_volume(self) -> float:
        return self.h**self.m

    @property
    def n_dofs(self) -> int:
        return self.N**self.m

    @property
    def n_edges(self) -> int:
        return self.N + 1 if self.m == 1 else 2 * self.N * (self.N + 1)

    def nodes(self) -> tuple[np.ndarray, ...]:
        """Interior node coordinates, flattened with x varying fastest."""
        x = self.h * np.arange(1, self.N + 1)
        if self.m == 1:
            return (x,)
        X, Y = np.meshgrid(x, x, indexing="xy")
        return X.ravel(), Y.ravel()

    def edge_points(self) -> tuple[np.ndarray, ...]:
        """Edge midpoints: x-edges (N+1, N) then y-edges (N, N+1), each C-raveled."""
        h, N = self.h, self.N
        if self.m == 1:
            return (h * (np.arange(N + 1) + 0.5),)
        i, j = np.meshgrid(np.arange(N + 1), np.arange(N), indexing="ij")
        xe = np.concatenate([h * (i + 0.5), h * (j.T + 1)], axis=None)
        ye = np.concatenate([h * (j + 1), h * (i.T + 0.5)], axis=None)
        return xe, ye

    def split_edges(self, edge_a: np.ndarray) -> tuple[np.ndarray, ...]:
        if self.m == 1:
            return (edge_a,)
        k = (self.N + 1) * self.N
        return edge_a[:k].reshape(self.N + 1, self.N), edge_a[k:].reshape(self.N, self.N + 1)

    def edge_values(self, a: Coefficient) -> np.ndarray:
        """Edge-midpoint samples of a coefficient.

        Accepts a scalar, a callable of the coordinates, an edge array, or a
        nodal array including boundary nodes (shape ``(N+2,)*m``), which is
        averaged arithmetically onto edges.
        """
        if callable(a):
            vals = np.asarray(a(*self.edge_points()))
            return np.broadcast_to(vals, (self.n_edges,)).copy()
        arr = np.asarray(a)
        if arr.ndim == 0:
            return np.full(self.n_edges, arr[()], dtype=arr.dtype if np.iscomplexobj(arr) else float)
        if arr.shape == (self.n_edges,):
            return arr.copy()
        full = (self.N + 2,) * self.m
        if arr.shape == full or (self.m == 2 and arr.shape == ((self.N + 2) ** 2,)):
            arr = arr.reshape(full)
            if self.m == 1:
                return 0.5 * (arr[:-1] + arr[1:])
            # arr indexed [iy, ix] like meshgrid "xy"
            ax = 0.5 * (arr[1:-1, :-1] + arr[1:-1, 1:]).T
            ay = 0.5 * (arr[:-1, 1:-1] + arr[1:, 1:-1]).T
            return np.concatenate([ax.ravel(), ay.ravel()])
        raise ValueError(f"cannot interpret coefficient of shape {arr.shape} on {self}")

    def load_values(self, f: Load) -> np.ndarray:
        if isinstance(f, str):
            if f == "const1":
                return np.ones(self.n_dofs)
            if f == "sinpi":
                return np.prod([np.sin(np.pi * c) for c in self.nodes()], axis=0)
            raise ValueError(f"unknown load preset {f!r}; expected one of {LOAD_PRESETS}")
        if callable(f):
            return np.broadcast_to(np.asarray(f(*self.nodes())), (self.n_dofs,)).copy()
        arr = np.asarray(f)
        if arr.ndim == 0:
            return np.full(self.n_dofs, arr[()])
        if arr.shape != (self.n_dofs,):
            raise ValueError(f"load has shape {arr.shape}, expected ({self.n_dofs},)")
        return arr.copy()

    def interpolate(self, fn: Callable) -> DiscreteField:
        return DiscreteField(np.asarray(fn(*self.nodes())), self)

    def gradient(self) -> sp.csr_matrix:
        return _gradient(self.m, self.N)

    def unit_operator(self) -> DiscreteOperator:
        return _unit_operator(self.m, self.N)


@functools.lru_cache(maxsize=32)
def _gradient(m: int, N: int) -> sp.csr_matrix:
    h = 1.0 / (N + 1)
    e = np.ones(N)
    d1 = sp.diags([e, -e], [0, -1], shape=(N + 1, N)) / h
    if m == 1:
        return d1.tocsr()
    eye = sp.identity(N)
    gx = sp.kron(eye, d1)  # x-edge (i, j) <- nodes (i-1, j), (i, j)
    gy = sp.kron(d1, eye)  # y-edge (i, j) <- nodes (i, j-1), (i, j)
    # reorder rows to match split_edges: ax is (N+1, N) with index i*N + j
    px = np.arange((N + 1) * N).reshape(N, N + 1).T.ravel()
    py = np.arange(N * (N + 1)).reshape(N + 1, N).T.ravel()
    return sp.vstack([gx.tocsr()[px], gy.tocsr()[py]]).tocsr()


@functools.lru_cache(maxsize=32)
def _unit_operator(m: int, N: int) -> DiscreteOperator:
    grid = Grid(m, N)
    return assemble(1.0, grid)


@dataclass
class DiscreteField:
    """Nodal values at interior nodes (boundary values are implicitly zero)."""

    values: np.ndarray
    grid: Grid
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n_dofs,):
            raise ValueError(f"field has shape {self.values.shape}, expected ({self.grid.n_dofs},)")

    def energy_norm(self) -> float:
        return energy_norm(self)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def _wrap(self, other):
        return other.values if isinstance(other, DiscreteField) else other

    def __add__(self, other):
        return DiscreteField(self.values + self._wrap(other), self.grid)

    def __sub__(self, other):
        return DiscreteField(self.values - self._wrap(other), self.grid)

    def __mul__(self, scalar):
        return DiscreteField(self.values * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return DiscreteField(-self.values, self.grid)


class DiscreteOperator:
    """Sparse matrix of ``v -> -div(a grad v)`` plus a lazily built LU factorization."""

    def __init__(self, matrix: sp.spmatrix, edge_coefficient: np.ndarray, grid: Grid):
        self.matrix = matrix.tocsc()
        self.edge_coefficient = edge_coefficient
        self.grid = grid
        self._lu = None

    @property
    def factorization(self):
        if self._lu is None:
            self._lu = spla.splu(self.matrix)
        return self._lu

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        lu = self.factorization
        complex_matrix = np.iscomplexobj(self.matrix.data)
        if np.iscomplexobj(rhs) and not complex_matrix:
            return lu.solve(np.ascontiguousarray(rhs.real)) + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
        if complex_matrix:
            rhs = rhs.astype(complex)
        return lu.solve(np.ascontiguousarray(rhs))

    def __matmul__(self, v):
        return self.matrix @ v

    def quadratic_form(self, v: np.ndarray) -> complex:
        return self.grid.cell_volume * np.vdot(v, self.matrix @ v)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble(a: Coefficient, grid: Grid) -> DiscreteOperator:
    """Three-point (1D) or five-point (2D) operator for the coefficient ``a``.

    With ``a`` identically 1 this is the usual ``(-1, 2, -1) / h^2`` stencil;
    the discrete form ``h^m v^T A u`` equals ``sum_e h^m a_e (Gu)_e (Gv)_e``.
    """
    edge_a = grid.edge_values(a)
    if grid.m == 1:
        rows, cols, vals = kernels.stencil_triplets_1d(edge_a, grid.N, grid.h)
    else:
        ax, ay = grid.split_edges(edge_a)
        rows, cols, vals = kernels.stencil_triplets_2d(ax, ay, grid.N, grid.h)
    n = grid.n_dofs
    mat = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    return DiscreteOperator(mat, edge_a, grid)


def _as_values(v, grid=None):
    if isinstance(v, DiscreteField):
        return v.values, v.grid
    if grid is None:
        raise ValueError("a grid is required for raw arrays")
    return np.asarray(v), grid


def ellipticity_floor(a: Coefficient, grid: Grid) -> float:
    return float(np.min(np.real(grid.edge_values(a))))


def _check_elliptic(edge_a: np.ndarray, r: float | None = None) -> None:
    lo = float(np.min(np.real(edge_a)))
    if lo <= 0 or (r is not None and lo < r):
        raise NotEllipticError(lo)


def solve_diffusion(a: Coefficient, f: Load, grid: Grid, r: float | None = None,
                    operator: DiscreteOperator | None = None) -> DiscreteField:
    """Discrete solution of ``-div(a grad u) = f`` with homogeneous Dirichlet data."""
    op = operator if operator is not None else assemble(a, grid)
    _check_elliptic(op.edge_coefficient, r)
    rhs = grid.load_values(f)
    u = op.solve(rhs)
    res = np.linalg.norm(op @ u - rhs)
    scale = np.linalg.norm(rhs)
    if scale > 0 and res > 1e-10 * scale:
        raise DomainError(f"linear solve residual {res / scale:.3g} too large")
    return DiscreteField(u, grid)


def energy_norm(v, grid: Grid | None = None) -> float:
    """``sqrt(h^m v^H A_1 v)``: the discrete H^1_0 seminorm."""
    vals, grid = _as_values(v, grid)
    g = grid.gradient() @ vals
    return float(math.sqrt(grid.cell_volume) * np.linalg.norm(g))


def energy_coordinates(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Map nodal columns to coordinates whose Euclidean norm is the energy norm."""
    return math.sqrt(grid.cell_volume) * (grid.gradient() @ values)


def dual_norm(f: Load, grid: Grid) -> float:
    """``||f||_{Y'}``, computed exactly as the energy norm of the unit-coefficient solve."""
    rhs = grid.load_values(f)
    if not np.any(rhs):
        return 0.0
    return energy_norm(grid.unit_operator().solve(rhs), grid)


def apriori_bound(f: Load, r: float, grid: Grid) -> float:
    if r <= 0:
        raise DomainError(f"ellipticity constant must be positive, got {r}")
    return dual_norm(f, grid) / r


def frechet_apply(a: Coefficient, u_a: DiscreteField, w: Coefficient,
                  operator: DiscreteOperator | None = None) -> DiscreteField:
    """Derivative of the solution map at ``a`` in direction ``w``.

    Solves ``A(a) d = -A(w) u_a``; ``A(w)`` is the same assembly applied to ``w``.
    """
    grid = u_a.grid
    op = operator if operator is not None else assemble(a, grid)
    _check_elliptic(op.edge_coefficient)
    rhs = -(assemble(w, grid) @ u_a.values)
    return DiscreteField(op.solve(rhs), grid)


def _residual_dual(r: np.ndarray, grid: Grid) -> float:
    return energy_norm(grid.unit_operator().solve(r), grid)


def solve_semilinear(a: Coefficient, f: Load, grid: Grid, tol: float = 1e-10, max_iter: int = 50,
                     u0: np.ndarray | None = None) -> DiscreteField:
    """Newton's method for ``u^3 - div(exp(a) grad u) = f``.

    The residual is measured in the discrete dual norm. The default start is
    the linear solve without the cubic term; a step is halved while it
    increases the residual. The returned field carries
    ``meta["residuals"]`` (one entry per iterate, the start included).
    """
    edge_a = grid.edge_values(a)
    if np.iscomplexobj(edge_a) and np.any(np.imag(edge_a) != 0):
        raise DomainError("the semilinear solver takes real coefficients only")
    edge_a = np.real(edge_a)
    A = assemble(np.exp(edge_a), grid)
    rhs = grid.load_values(f)
    u = A.solve(rhs) if u0 is None else np.array(u0, dtype=float)

    def residual(v):
        return v**3 + A @ v - rhs

    r = residual(u)
    history = [_residual_dual(r, grid)]
    for _ in range(max_iter):
        if history[-1] <= tol:
            break
        jac = (A.matrix + sp.diags(3.0 * u**2)).tocsc()
        step = spla.spsolve(jac, -r)
        lam = 1.0
        for _halving in range(30):
            trial = u + lam * step
            r_trial = residual(trial)
            nrm = _residual_dual(r_trial, grid)
            if nrm < history[-1] or lam < 1e-8:
                break
            lam *= 0.5
        u, r = trial, r_trial
        history.append(nrm)
    if history[-1] > tol:
        raise DivergenceError(
            f"Newton did not reach {tol:g} in {max_iter} iterations (last {history[-1]:.3g})", history
        )
    return DiscreteField(u, grid, meta={"residuals": tuple(history)})


def linearized_operator(a: Coefficient, u_a: DiscreteField) -> sp.csc_matrix:
    """Matrix of ``w -> 3 u^2 w - div(exp(a) grad w)`` in finite-difference scaling."""
    grid = u_a.grid
    edge_a = np.real(grid.edge_values(a))
    return (assemble(np.exp(edge_a), grid).matrix + sp.diags(3.0 * np.abs(u_a.values) ** 2)).tocsc()


def coercivity_check(a: Coefficient, u_a: DiscreteField, n_random: int = 50, n_inverse: int = 20,
                     seed: int = 0) -> tuple[float, bool]:
    """Estimate ``min_v sigma(v, v) / ||v||_Y^2`` for the linearized semilinear operator.

    Takes the smallest Rayleigh quotient over random directions and over an
    inverse-iteration sequence of the pencil ``(L, A_1)``. Passes when the
    estimate is at least ``exp(-||a||_inf) - 1e-8``.
    """
    grid = u_a.grid
    L = linearized_operator(a, u_a)
    A1 = grid.unit_operator().matrix
    sup_a = float(np.max(np.abs(grid.edge_values(a))))

    def rq(v):
        return float(np.real(np.vdot(v, L @ v)) / np.real(np.vdot(v, A1 @ v)))

    rng = np.random.default_rng(seed)
    best = min(rq(rng.standard_normal(grid.n_dofs)) for _ in range(n_random))
    lu = spla.splu(L)
    x = rng.standard_normal(grid.n_dofs)
    for _ in range(n_inverse):
        x = lu.solve(A1 @ x)
        x /= np.linalg.norm(x)
        best = min(best, rq(x))
    return best, bool(best >= math.exp(-sup_a) - 1e-8)


def max_principle_ok(u: DiscreteField, atol: float = 0.0) -> bool:
    return bool(np.all(np.real(u.values) >= -atol))


__all__ = [
    "Grid", "DiscreteField", "DiscreteOperator", "assemble", "solve_diffusion", "energy_norm",
    "energy_coordinates", "dual_norm", "apriori_bound", "frechet_apply", "solve_semilinear",
    "coercivity_check", "linearized_operator", "ellipticity_floor", "PreconditionError",
]
