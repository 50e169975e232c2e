"""Multi-indices, index sets, n-term selection and Stechkin-type tail bounds."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DegreeLimitError, DomainError

DEGREE_CAP = 40
_INT_LIMIT = 2**63


class MultiIndex:
    """Finitely supported sequence of nonnegative integers, 1-based coordinates.

    Stored as a sorted tuple of ``(j, nu_j)`` pairs with ``nu_j >= 1``.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        if isinstance(entries, Mapping):
            entries = entries.items()
        items = []
        for j, v in entries:
            j, v = int(j), int(v)
            if j < 1:
                raise ValueError(f"coordinate must be >= 1, got {j}")
            if v < 0:
                raise ValueError(f"entry must be >= 0, got {v}")
            if v:
                items.append((j, v))
        items.sort()
        for a, b in zip(items, items[1:]):
            if a[0] == b[0]:
                raise ValueError(f"duplicate coordinate {a[0]}")
        self._items = tuple(items)
        self._hash = hash(self._items)

    @classmethod
    def from_dense(cls, seq: Sequence[int]) -> MultiIndex:
        return cls((j + 1, v) for j, v in enumerate(seq))

    @classmethod
    def unit(cls, j: int) -> MultiIndex:
        return cls({j: 1})

    @classmethod
    def parse(cls, text: str) -> MultiIndex:
        text = text.strip()
        if text == "0":
            return cls()
        pairs = []
        for part in text.split(","):
            j, v = part.split(":")
            pairs.append((int(j), int(v)))
        return cls(pairs)

    @property
    def items(self) -> tuple[tuple[int, int], ...]:
        return self._items

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self._items)

    @property
    def degree(self) -> int:
        return sum(v for _, v in self._items)

    @property
    def max_coordinate(self) -> int:
        return self._items[-1][0] if self._items else 0

    def __getitem__(self, j: int) -> int:
        for k, v in self._items:
            if k == j:
                return v
        return 0

    def dense(self, J: int) -> np.ndarray:
        out = np.zeros(J, dtype=np.int64)
        for j, v in self._items:
            if j > J:
                raise ValueError(f"index {self} not supported on 1..{J}")
            out[j - 1] = v
        return out

    def add_unit(self, j: int) -> MultiIndex:
        d = dict(self._items)
        d[j] = d.get(j, 0) + 1
        return MultiIndex(d)

    def sub_unit(self, j: int) -> MultiIndex:
        d = dict(self._items)
        if d.get(j, 0) < 1:
            raise ValueError(f"{self} has no entry at {j}")
        d[j] -= 1
        return MultiIndex(d)

    def parents(self) -> list[MultiIndex]:
        return [self.sub_unit(j) for j in self.support]

    def __le__(self, other: MultiIndex) -> bool:
        return all(v <= other[j] for j, v in self._items)

    def sort_key(self) -> tuple:
        """Deterministic order: total degree, then the sparse pair sequence."""
        return (self.degree, self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        if not self._items:
            return "0"
        return ",".join(f"{j}:{v}" for j, v in self._items)

    def __repr__(self) -> str:
        return f"MultiIndex({str(self)!r})"


def total_degree(nu: MultiIndex) -> int:
    return nu.degree


def factorial_ratio(nu: MultiIndex, cap: int = DEGREE_CAP) -> int | float:
    """Multinomial coefficient ``|nu|! / prod(nu_j!)``.

    Exact integer while it fits in 63 bits, float beyond that.
    """
    k = nu.degree
    if k > cap:
        raise DegreeLimitError(f"|nu| = {k} exceeds the degree cap {cap}")
    value = math.factorial(k)
    for _, v in nu.items:
        value //= math.factorial(v)
    return value if value < _INT_LIMIT else float(value)


class IndexSet:
    """Ordered, duplicate-free collection of multi-indices."""

    def __init__(self, members: Iterable[MultiIndex] = (), is_downward_closed: bool | None = None):
        self._members: list[MultiIndex] = []
        self._lookup: set[MultiIndex] = set()
        for nu in members:
            if nu in self._lookup:
                raise ValueError(f"duplicate index {nu}")
            self._members.append(nu)
            self._lookup.add(nu)
        if is_downward_closed is None:
            is_downward_closed = self.missing_parent() is None
        self.is_downward_closed = bool(is_downward_closed)

    @property
    def members(self) -> list[MultiIndex]:
        return list(self._members)

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._members)

    def __contains__(self, nu) -> bool:
        return nu in self._lookup

    def __eq__(self, other) -> bool:
        if isinstance(other, IndexSet):
            return self._lookup == other._lookup
        return NotImplemented

    def issubset(self, other: IndexSet) -> bool:
        return self._lookup <= other._lookup

    def missing_parent(self) -> tuple[MultiIndex, MultiIndex] | None:
        """First ``(member, parent)`` pair violating downward closure, else None.

        Checking immediate parents suffices: closure under ``nu -> nu - e_j``
        implies closure under the coordinatewise order.
        """
        for nu in self._members:
            for mu in nu.parents():
                if mu not in self._lookup:
                    return nu, mu
        return None

    @property
    def dimension(self) -> int:
        return max((nu.max_coordinate for nu in self._members), default=0)

    def dense(self, J: int | None = None) -> np.ndarray:
        J = self.dimension if J is None else J
        out = np.zeros((len(self._members), J), dtype=np.int64)
        for row, nu in enumerate(self._members):
            for j, v in nu.items:
                out[row, j - 1] = v
        return out

    def sorted(self) -> IndexSet:
        return IndexSet(sorted(self._members, key=MultiIndex.sort_key), self.is_downward_closed)

    def __repr__(self) -> str:
        return f"IndexSet({[str(nu) for nu in self._members]})"


def enumerate_indices(
    J: int,
    max_degree: int,
    weight_bound: Callable[[MultiIndex], float],
    threshold: float,
) -> IndexSet:
    """Downward-closed set of indices on ``1..J`` with ``|nu| <= max_degree``
    and ``weight_bound(nu) >= threshold``.

    Layers are grown by total degree. A candidate is only considered when all
    its parents survived, so pruned parents prune their children. Every
    admitted child is compared against its parents; an increase means the
    weight is not monotone and the enumeration would be biased.
    """
    if J < 1 or max_degree < 0 or threshold < 0:
        raise ValueError("need J >= 1, max_degree >= 0, threshold >= 0")
    zero = MultiIndex()
    w0 = float(weight_bound(zero))
    if w0 < threshold:
        return IndexSet([], True)
    weights = {zero: w0}
    members = [zero]
    layer = [zero]
    for _ in range(max_degree):
        candidates: dict[MultiIndex, None] = {}
        for nu in layer:
            for j in range(1, J + 1):
                candidates.setdefault(nu.add_unit(j))
        nxt = []
        for child in sorted(candidates, key=MultiIndex.sort_key):
            parents = child.parents()
            if not all(mu in weights for mu in parents):
                continue
            w = float(weight_bound(child))
            worst = min(weights[mu] for mu in parents)
            if w > worst * (1 + 1e-12) + 1e-300:
                raise ConfigurationError(
                    f"weight_bound is not monotone: w({child}) = {w:.6g} > {worst:.6g} at a parent"
                )
            if w >= threshold:
                weights[child] = w
                nxt.append(child)
        if not nxt:
            break
        members.extend(nxt)
        layer = nxt
    return IndexSet(members, True)


def total_degree_set(J: int, max_degree: int) -> IndexSet:
    return enumerate_indices(J, max_degree, lambda nu: 1.0, 0.0)


def n_term_select(norms: Mapping[MultiIndex, float], n: int) -> IndexSet:
    """The ``n`` indices of largest norm, ties broken by :meth:`MultiIndex.sort_key`."""
    if n < 0:
        raise ValueError("n must be >= 0")
    ranked = sorted(norms, key=lambda nu: (-float(norms[nu]), nu.sort_key()))
    return IndexSet(ranked[:n])


def lp_quasi_norm(values: Iterable[float], p: float) -> float:
    a = np.abs(np.fromiter(values, dtype=float))
    if a.size == 0:
        return 0.0
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((a / scale) ** p) ** (1.0 / p))


def stechkin_tail(norms: Mapping[MultiIndex, float] | Sequence[float], p: float, n: int) -> tuple[float, float]:
    """Tail left by the best n-term selection and the bound ``||a||_p n^{-(1/p - 1)}``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if n < 1:
        raise ValueError("n must be >= 1")
    values = norms.values() if isinstance(norms, Mapping) else norms
    a = np.sort(np.abs(np.asarray(list(values), dtype=float)))[::-1]
    tail = math.fsum(a[n:])
    bound = lp_quasi_norm(a, p) * n ** (-(1.0 / p - 1.0))
    return tail, bound


def lorentz_partial_sums(d_seq: Sequence[float], t: float, p: float) -> np.ndarray:
    """Cumulative sums of ``(n^t d_n)^p / n`` for n = 1, 2, ... (``d_seq[0]`` is d_1)."""
    if t < 0 or p <= 0:
        raise ValueError("need t >= 0 and p > 0")
    d = np.asarray(d_seq, dtype=float)
    n = np.arange(1, d.size + 1, dtype=float)
    return np.cumsum((n**t * d) ** p / n)
