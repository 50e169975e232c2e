"""Box parametrizations ``Q = {b + sum_j z_j psi_j : |z_j| <= 1}`` and their localization.

The covering follows the tail-cut / net / rescale construction: cut the
direction sequence at ``J`` so the tail is below ``eps/10``, cover the head
polydisc ``U_J`` by an ``eta``-net in the max-modulus metric, keep the net
points that sit near the sampled set, and rescale the head directions by
``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import BasisError, CombinatorialBlowupError, DegenerateBoxError
from .multiidx import lp_quasi_norm

J_CAP = 6
MAX_CENTERS = 2_000_000


def sup_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


@dataclass(frozen=True)
class BoxParametrization:
    """Offset plus finitely many directions, with recorded sup-norms."""

    offset: np.ndarray
    directions: np.ndarray  # (J_act, dim)
    norms: np.ndarray = field(default=None)

    def __post_init__(self):
        offset = np.asarray(self.offset)
        dirs = np.asarray(self.directions)
        if dirs.ndim == 1:
            dirs = dirs.reshape(0, offset.size) if dirs.size == 0 else dirs[None, :]
        if dirs.shape[0] and dirs.shape[1] != offset.size:
            raise ValueError(f"directions have length {dirs.shape[1]}, offset has {offset.size}")
        computed = np.array([sup_norm(d) for d in dirs], dtype=float)
        if self.norms is not None and not np.allclose(self.norms, computed, rtol=0, atol=1e-12):
            raise ValueError("recorded norms disagree with the stored directions")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "norms", computed)

    @property
    def J_act(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.offset.size

    def point(self, z: Sequence[complex]) -> np.ndarray:
        z = np.asarray(z)
        if z.size < self.J_act:
            z = np.concatenate([z, np.zeros(self.J_act - z.size)])
        return self.offset + z[: self.J_act] @ self.directions

    def lp_norm(self, p: float) -> float:
        return lp_quasi_norm(self.norms, p)


def tail_sums(norms: Sequence[float]) -> np.ndarray:
    """``t[J] = sum_{j > J} norms_j`` for J = 0..len(norms), accumulated from the small end."""
    a = np.asarray(norms, dtype=float)
    t = np.zeros(a.size + 1)
    t[:-1] = np.cumsum(a[::-1])[::-1]
    return t


def tail_cut(norms: Sequence[float], epsilon: float) -> int:
    """Smallest J with ``sum_{j>J} ||psi_j|| < epsilon / 10``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    t = tail_sums(norms)
    return int(np.argmax(t < epsilon / 10))


def net_spacing(norms: Sequence[float], J: int, epsilon: float) -> float:
    if J < 1:
        raise ValueError("J must be >= 1")
    head = math.fsum(np.asarray(norms, dtype=float)[:J])
    if head <= 0:
        raise DegenerateBoxError("head directions have zero total norm")
    return epsilon / (10 * head)


def box_width_bound(norms: Sequence[float], n: int) -> float:
    """Upper bound ``sum_{j>n} ||psi_j||`` for the n-width of the box."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.fsum(np.asarray(norms, dtype=float)[n:])


def disc_net(eta: float) -> np.ndarray:
    """Complex points in the closed unit disc within modulus distance ``eta`` of every disc point.

    Square lattice of spacing ``eta * sqrt(2)`` (covering radius ``eta``),
    restricted to points within ``eta`` of the disc; those outside the disc are
    pulled radially onto the circle, which cannot increase distances to disc
    points.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    step = eta * math.sqrt(2.0)
    kmax = int(math.ceil((1 + eta) / step)) + 1
    k = np.arange(-kmax, kmax + 1)
    re, im = np.meshgrid(k * step, k * step, indexing="ij")
    pts = (re + 1j * im).ravel()
    mod = np.abs(pts)
    pts = pts[mod <= 1 + eta + 1e-12]
    mod = np.abs(pts)
    outside = mod > 1
    pts[outside] = pts[outside] / mod[outside]
    # lattice symmetry can project two points onto the same spot only when they coincide
    pts = np.unique(np.round(pts.real, 14) + 1j * np.round(pts.imag, 14))
    return pts


def disc_net_size(eta: float) -> int:
    """Point count of :func:`disc_net` without building it (row-by-row lattice count)."""
    step = eta * math.sqrt(2.0)
    R = 1 + eta + 1e-12
    kmax = int(math.ceil((1 + eta) / step)) + 1
    total = 0
    for k in range(-kmax, kmax + 1):
        rest = R * R - (k * step) ** 2
        if rest >= 0:
            total += 2 * int(math.floor(math.sqrt(rest) / step + 1e-9)) + 1
    return total


def predicted_net_size(J: int, eta: float) -> int:
    return disc_net_size(eta) ** J if J > 0 else 1


@dataclass(frozen=True)
class Covering:
    epsilon: float
    J: int
    eta: float
    box: BoxParametrization
    center_coords: np.ndarray  # (M, J) complex head coordinates z'
    star_norms: np.ndarray

    @property
    def M(self) -> int:
        return self.center_coords.shape[0]

    def centers(self) -> np.ndarray:
        """Offsets ``b_i = b + sum_{j<=J} z'_j psi_j`` as rows."""
        head = self.box.directions[: self.J]
        return self.box.offset[None, :] + self.center_coords @ head

    def locate(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """For parameter rows ``z``, the closest center in head coordinates and the sup distance."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))[:, : self.J]
        dist, arg = kernels.min_sup_distance(z, self.center_coords)
        return arg, dist

    def contains(self, z: np.ndarray) -> np.ndarray:
        """Whether ``x = sum z_j psi_j`` lies in some ``Q_i``: ``|z_j - z'_j| / eta <= 1`` for j <= J."""
        if self.J == 0:
            return np.ones(np.atleast_2d(z).shape[0], dtype=bool)
        _, dist = self.locate(z)
        return dist <= self.eta * (1 + 1e-12)


def build_covering(box: BoxParametrization, epsilon: float, sample_K: np.ndarray | None = None,
                   J_cap: int = J_CAP, eta: float | None = None, max_centers: int = MAX_CENTERS) -> Covering:
    """Localize the box into finitely many rescaled boxes.

    ``sample_K`` holds parameter rows ``z`` of sampled members of K (only the
    first J coordinates matter). Net points farther than ``eta`` from every
    sample are dropped; with ``sample_K=None`` all net points are kept, which
    is the case K = Q. ``eta`` may be overridden to engineer specific nets.
    """
    norms = box.norms
    J = tail_cut(norms, epsilon)
    if J == 0:
        return Covering(epsilon, 0, math.inf, box, np.zeros((1, 0), dtype=complex), norms.copy())
    if J > J_cap:
        size = predicted_net_size(J, net_spacing(norms, J, epsilon))
        raise CombinatorialBlowupError(f"J = {J} exceeds the cap {J_cap}; predicted net size {size}", size)
    if eta is None:
        eta = net_spacing(norms, J, epsilon)
    size = predicted_net_size(J, eta)
    if size > max_centers:
        raise CombinatorialBlowupError(f"predicted net size {size} exceeds {max_centers}", size)
    disc = disc_net(eta)
    grids = np.meshgrid(*([disc] * J), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    if sample_K is not None:
        samples = np.atleast_2d(np.asarray(sample_K, dtype=complex))[:, :J]
        dist, _ = kernels.min_sup_distance(coords, samples)
        coords = coords[dist <= eta * (1 + 1e-12)]
    star = norms.copy()
    star[:J] *= eta
    return Covering(float(epsilon), J, float(eta), box, coords, star)


def star_norm_check(cov: Covering) -> tuple[bool, float]:
    """Whether the rescaled norms sum to at most ``2 eps / 10``, and the slack."""
    margin = 0.2 * cov.epsilon - math.fsum(cov.star_norms)
    return margin >= 0, margin


def covering_invariants(cov: Covering) -> dict[str, bool]:
    t = tail_sums(cov.box.norms)
    out = {"tail": bool(t[cov.J] < cov.epsilon / 10)}
    if cov.J > 0:
        out["eta"] = math.isclose(cov.eta, net_spacing(cov.box.norms, cov.J, cov.epsilon), rel_tol=1e-14)
    out["star"] = star_norm_check(cov)[0]
    return out


def suggest_epsilon(samples: np.ndarray, r: float) -> float:
    """Half the sup-distance from sampled coefficients to the boundary of ``{Re(a) > r}``."""
    samples = np.atleast_2d(samples)
    gap = float(np.min(np.real(samples))) - r
    if gap <= 0:
        raise ValueError("sampled coefficients are not inside {Re(a) > r}")
    return gap / 2


def box_embedding(approx_errors: Sequence[float], bases: Sequence[np.ndarray]) -> BoxParametrization:
    """Directions ``psi_j = c_k phi_{k,l}`` with ``j = 2^k + l - 1``.

    ``approx_errors[k]`` is the level-k error ``C 2^{-sk}`` and ``bases[k]``
    holds ``2^k`` orthonormal rows spanning the level-k space.
    """
    if len(approx_errors) != len(bases):
        raise ValueError("need one error per level")
    rows = []
    dim = None
    for k, (c, phi) in enumerate(zip(approx_errors, bases)):
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        if phi.shape[0] != 2**k:
            raise BasisError(f"level {k} needs {2**k} basis vectors, got {phi.shape[0]}")
        dim = phi.shape[1] if dim is None else dim
        if phi.shape[1] != dim:
            raise BasisError("basis vectors have inconsistent lengths")
        dev = np.max(np.abs(phi @ phi.T - np.eye(phi.shape[0])))
        if dev > 1e-8:
            raise BasisError(f"level {k} basis is not orthonormal (Gram deviation {dev:.3g})")
        rows.extend(c * phi)
    return BoxParametrization(np.zeros(dim), np.array(rows))


def direction_index(k: int, l: int) -> int:
    """Position j of the l-th (1-based) basis vector of level k."""
    if not 1 <= l <= 2**k:
        raise ValueError(f"l must be in 1..{2**k}")
    return 2**k + l - 1


def decay_ratio(norms: Sequence[float], C: float, s: float) -> float:
    """``max_j j^s ||psi_j|| / (2^s C)``; at most 1 for a valid embedding."""
    a = np.asarray(norms, dtype=float)
    j = np.arange(1, a.size + 1, dtype=float)
    return float(np.max(j**s * a) / (2**s * C)) if a.size else 0.0


def haar_bases(levels: int, dim: int) -> list[np.ndarray]:
    """Nested orthonormal bases of piecewise-constant vectors on ``dim`` points.

    Level k consists of the indicator vectors of 2^k equal blocks, normalized;
    ``dim`` must be divisible by ``2^(levels-1)``.
    """
    out = []
    for k in range(levels):
        blocks = 2**k
        if dim % blocks:
            raise ValueError(f"dim {dim} not divisible by {blocks}")
        size = dim // blocks
        phi = np.zeros((blocks, dim))
        for l in range(blocks):
            phi[l, l * size:(l + 1) * size] = 1 / math.sqrt(size)
        out.append(phi)
    return out
