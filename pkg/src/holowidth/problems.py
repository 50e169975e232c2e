"""Ready-made direction families and problems used by the experiments."""

from __future__ import annotations

import math

import numpy as np

from .boxparam import BoxParametrization
from .pde import Grid
from .taylor import AffineProblem


def _plateau(t: np.ndarray) -> np.ndarray:
    """Trapezoid on [0, 1]: ramps on the outer quarters, 1 in the middle half."""
    return np.clip(np.minimum(t, 1 - t) * 4, 0, 1) * ((t >= 0) & (t <= 1))


def bump_functions(grid: Grid, J: int) -> np.ndarray:
    """``J`` disjointly supported plateau bumps on edge midpoints, each with sup exactly 1."""
    pts = grid.edge_points()
    out = np.zeros((J, grid.n_edges))
    if grid.m == 1:
        (x,) = pts
        for j in range(J):
            out[j] = _plateau(x * J - j)
    else:
        q = int(math.ceil(math.sqrt(J)))
        x, y = pts
        for j in range(J):
            cx, cy = j % q, j // q
            out[j] = _plateau(x * q - cx) * _plateau(y * q - cy)
    peaks = out.max(axis=1)
    if np.any(peaks <= 0):
        raise ValueError(f"grid with N = {grid.N} is too coarse for {J} bumps")
    return out / peaks[:, None]


def bumps_box(grid: Grid, J: int, s: float, c: float, abar: float = 1.0) -> BoxParametrization:
    """Box with ``psi_j = c j^{-s} chi_j``, so ``||psi_j||_X = c j^{-s}``."""
    chi = bump_functions(grid, J)
    scale = c * np.arange(1, J + 1, dtype=float) ** (-s)
    return BoxParametrization(grid.edge_values(abar), chi * scale[:, None])


def constant_box(grid: Grid, values, abar: float = 1.0) -> BoxParametrization:
    """Spatially constant directions ``psi_j = values[j]``."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    return BoxParametrization(grid.edge_values(abar), np.outer(values, np.ones(grid.n_edges)))


def affine_problem(box: BoxParametrization, f, grid: Grid) -> AffineProblem:
    return AffineProblem.from_box(box, f, grid)


def decaying_box(grid: Grid, J: int, scale: float, s: float, abar: float = 1.0, seed: int = 0) -> BoxParametrization:
    """Smooth, overlapping directions ``scale * j^{-s} * sin(j pi x + phase_j)`` (sup = scale j^{-s}).

    Unlike bumps, these overlap, so couplings between parameters are present
    in every Taylor coefficient.
    """
    rng = np.random.default_rng(seed)
    pts = grid.edge_points()
    rows = []
    for j in range(1, J + 1):
        phase = rng.uniform(0, 2 * np.pi, size=grid.m)
        g = np.prod([np.sin(j * np.pi * p + ph) for p, ph in zip(pts, phase)], axis=0)
        rows.append(scale * j ** (-s) * g / np.max(np.abs(g)))
    return BoxParametrization(grid.edge_values(abar), np.array(rows))
