"""Grouped vectors, problem instances and objective evaluation.

Groups are indexed from 0. A support is the sorted tuple of group indices
whose entries are not all (numerically) zero.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

ZERO_TOL = 1e-10


class _Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self):
        return "INF"

    __str__ = __repr__


INF = _Infinity.INF
"""Marker for the max-norm fidelity. Dispatch on ``r is INF`` only."""

Exponent = Union[float, _Infinity]


def parse_r(value) -> Exponent:
    """Accept ``"inf"``/``INF``/``math.inf`` for the max-norm, else a float >= 1."""
    if value is INF:
        return INF
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        value = float(value)
    value = float(value)
    if np.isinf(value):
        return INF
    if value < 1:
        raise ValueError(f"fidelity exponent r must be >= 1 or inf, got {value}")
    return value


def format_r(r: Exponent):
    return "inf" if r is INF else float(r)


@dataclass(frozen=True)
class GroupPartition:
    """Contiguous split of ``N`` coordinates into groups of the given sizes."""

    group_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.group_sizes)
        if not sizes:
            raise ValueError("a partition needs at least one group")
        if any(n < 1 for n in sizes):
            raise ValueError(f"group sizes must be positive, got {sizes}")
        object.__setattr__(self, "group_sizes", sizes)

    @classmethod
    def uniform(cls, N: int, n: int) -> "GroupPartition":
        if n < 1 or N % n:
            raise ValueError(f"group size {n} does not divide N={N}")
        return cls((n,) * (N // n))

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def size(self) -> int:
        return int(self.offsets[-1] + self.group_sizes[-1])

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.group_sizes)[:-1])).astype(np.intp)

    @cached_property
    def labels(self) -> np.ndarray:
        """Group index of every coordinate."""
        return np.repeat(np.arange(self.n_groups), self.group_sizes)

    @cached_property
    def is_uniform(self) -> bool:
        return len(set(self.group_sizes)) == 1

    def group_slice(self, i: int) -> slice:
        if not 0 <= i < self.n_groups:
            raise IndexError(f"group index {i} out of range [0, {self.n_groups})")
        start = int(self.offsets[i])
        return slice(start, start + self.group_sizes[i])

    def coordinates(self, support: Iterable[int]) -> np.ndarray:
        """Flat coordinate indices of the groups in ``support``, in group order."""
        support = np.asarray(list(support), dtype=np.intp)
        if support.size == 0:
            return np.zeros(0, dtype=np.intp)
        mask = np.zeros(self.n_groups, dtype=bool)
        mask[support] = True
        return np.flatnonzero(mask[self.labels])

    def restrict(self, support: Iterable[int]) -> "GroupPartition | None":
        sizes = tuple(self.group_sizes[i] for i in support)
        return GroupPartition(sizes) if sizes else None

    def norms(self, values: np.ndarray, p) -> np.ndarray:
        """Per-group ``p``-norms of a flat vector (``p`` may be ``np.inf``)."""
        a = np.abs(np.asarray(values, dtype=float))
        if a.shape != (self.size,):
            raise ValueError(f"expected a vector of length {self.size}, got {a.shape}")
        if p == np.inf or p is INF:
            return np.maximum.reduceat(a, self.offsets)
        if p == 1:
            return np.add.reduceat(a, self.offsets)
        if p == 2:
            return np.sqrt(np.add.reduceat(a * a, self.offsets))
        # scale by the group max to avoid under/overflow in a**p
        top = np.maximum.reduceat(a, self.offsets)
        safe = np.where(top > 0, top, 1.0)
        scaled = a / safe[self.labels]
        return top * np.add.reduceat(scaled**p, self.offsets) ** (1.0 / p)


@dataclass(frozen=True)
class SupportSet:
    """Sorted, duplicate-free group indices."""

    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(sorted({int(i) for i in self.indices}))
        if idx and idx[0] < 0:
            raise ValueError("group indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, n_groups: int) -> "SupportSet":
        return cls(tuple(range(n_groups)))

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in set(self.indices)

    def issubset(self, other: "SupportSet") -> bool:
        return set(self.indices) <= set(other.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


@dataclass
class GroupedVector:
    values: np.ndarray
    partition: GroupPartition

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.partition.size,):
            raise ValueError(
                f"vector length {self.values.shape} does not match partition size {self.partition.size}"
            )

    @classmethod
    def zeros(cls, partition: GroupPartition) -> "GroupedVector":
        return cls(np.zeros(partition.size), partition)

    def group(self, i: int) -> np.ndarray:
        return self.values[self.partition.group_slice(i)]

    def norms(self, p) -> np.ndarray:
        return self.partition.norms(self.values, p)

    def copy(self) -> "GroupedVector":
        return GroupedVector(self.values.copy(), self.partition)


@dataclass
class ProblemSpec:
    """Instance of  min sum_i ||x_i||_p^q + F_r(x)."""

    A: np.ndarray
    y: np.ndarray
    alpha: float
    p: float
    q: float
    r: Exponent
    partition: GroupPartition

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.r = parse_r(self.r)
        self.alpha = float(self.alpha)
        self.p = float(self.p)
        self.q = float(self.q)
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        M, N = self.A.shape
        if self.y.shape != (M,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({M},)")
        if self.partition.size != N:
            raise ValueError(f"partition covers {self.partition.size} coordinates, A has {N} columns")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (1 <= self.p < np.inf):
            raise ValueError("p must lie in [1, inf)")
        if not (0 < self.q < 1):
            raise ValueError("q must lie in (0, 1)")

    @property
    def shape(self):
        return self.A.shape


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, GroupedVector) else np.asarray(x, dtype=float)


def group_norm(x: GroupedVector, i: int, p) -> float:
    """``||x_i||_p`` of group ``i``; ``p`` may be ``np.inf``/``INF``."""
    g = np.abs(x.group(i))
    if g.size == 0 or not g.any():
        return 0.0
    if p is INF or p == np.inf:
        return float(g.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.linalg.norm(g, ord=p))


def group_support(x, zero_tol: float = ZERO_TOL, partition: GroupPartition | None = None) -> SupportSet:
    """Groups whose max-abs entry exceeds ``zero_tol``."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    part = x.partition if isinstance(x, GroupedVector) else partition
    top = part.norms(_values(x), np.inf)
    return SupportSet(tuple(np.flatnonzero(top > zero_tol)))


def residual(problem: ProblemSpec, x) -> np.ndarray:
    return problem.A @ _values(x) - problem.y


def fidelity_from_residual(res: np.ndarray, alpha: float, r: Exponent) -> float:
    if r is INF:
        return float(np.max(np.abs(res), initial=0.0)) / alpha
    if r == 2:
        return float(res @ res) / (2.0 * alpha)
    if r == 1:
        return float(np.sum(np.abs(res))) / alpha
    return float(np.sum(np.abs(res) ** r)) / (r * alpha)


def fidelity(problem: ProblemSpec, x) -> float:
    """``(1/(r alpha)) ||Ax - y||_r^r``, or ``(1/alpha) ||Ax - y||_inf``."""
    return fidelity_from_residual(residual(problem, x), problem.alpha, problem.r)


def regularizer(problem: ProblemSpec, x) -> float:
    norms = problem.partition.norms(_values(x), problem.p)
    return float(np.sum(norms[norms > 0] ** problem.q))


def objective(problem: ProblemSpec, x) -> float:
    return regularizer(problem, x) + fidelity(problem, x)


def restrict_columns(A: np.ndarray, partition: GroupPartition, S: Sequence[int] | SupportSet) -> np.ndarray:
    """Column blocks of ``A`` belonging to the groups in ``S``, group order kept."""
    return A[:, partition.coordinates(S)]


def embed(values_on_support: np.ndarray, partition: GroupPartition, S) -> GroupedVector:
    """Scatter a vector defined on the support back into R^N with zeros elsewhere."""
    out = np.zeros(partition.size)
    out[partition.coordinates(S)] = values_on_support
    return GroupedVector(out, partition)
