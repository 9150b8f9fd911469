"""Dense multi-dimensional cost tables: join, min-projection, slicing, dimension drop.

Every operation writes a fresh table and charges one logical operation per
written entry to an optional :class:`OpCounter`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Optional, Sequence, Tuple

import numpy as np

DimKey = Callable[[int], Hashable]


class TableError(ValueError):
    pass


class OpCounter:
    """Logical-operation tally for one agent."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        self.count = count

    def add(self, n: int) -> None:
        self.count += int(n)

    def __repr__(self):
        return f"OpCounter({self.count})"


def _charge(ops: Optional[OpCounter], n: int) -> None:
    if ops is not None:
        ops.add(n)


@dataclass(frozen=True, eq=False)
class UtilityTable:
    dims: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        values = np.asarray(self.values, dtype=np.float64)
        if len(set(dims)) != len(dims):
            raise TableError(f"repeated dimension in {dims}")
        if values.ndim != len(dims):
            raise TableError(f"{len(dims)} dims but array has {values.ndim} axes")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", values)

    @classmethod
    def scalar(cls, value: float) -> "UtilityTable":
        return cls((), np.array(float(value)))

    @classmethod
    def zeros(cls, dims: Sequence[int], card: Sequence[int]) -> "UtilityTable":
        return cls(tuple(dims), np.zeros(tuple(card)))

    @property
    def card(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    def cardinality(self, dim: int) -> int:
        return self.values.shape[self.dims.index(dim)]

    def entry(self, assignment: Mapping[int, int]) -> float:
        return float(self.values[tuple(assignment[d] for d in self.dims)])

    def aligned(self, dims: Sequence[int]) -> np.ndarray:
        """View of the values broadcastable over ``dims`` (a superset of ``self.dims``)."""
        missing = [d for d in self.dims if d not in dims]
        if missing:
            raise TableError(f"dims {missing} not in target {tuple(dims)}")
        perm = sorted(range(len(self.dims)), key=lambda a: dims.index(self.dims[a]))
        arr = np.transpose(self.values, perm)
        shape = [1] * len(dims)
        for axis in perm:
            shape[dims.index(self.dims[axis])] = self.values.shape[axis]
        return arr.reshape(shape)

    def reorder(self, key: DimKey) -> "UtilityTable":
        dims = tuple(sorted(self.dims, key=key))
        if dims == self.dims:
            return self
        perm = [self.dims.index(d) for d in dims]
        return UtilityTable(dims, np.transpose(self.values, perm))

    def equals(self, other: "UtilityTable") -> bool:
        if set(self.dims) != set(other.dims):
            return False
        return np.array_equal(self.values, other.aligned(self.dims).reshape(self.values.shape))

    def __repr__(self):
        return f"UtilityTable(dims={self.dims}, card={self.card})"


def join(
    a: UtilityTable,
    b: UtilityTable,
    key: Optional[DimKey] = None,
    ops: Optional[OpCounter] = None,
) -> UtilityTable:
    """Pointwise sum over the union of dimensions, sorted by ``key``."""
    for d in set(a.dims) & set(b.dims):
        if a.cardinality(d) != b.cardinality(d):
            raise TableError(f"dimension {d} has cardinality {a.cardinality(d)} vs {b.cardinality(d)}")
    dims = tuple(sorted(set(a.dims) | set(b.dims), key=key))
    values = a.aligned(dims) + b.aligned(dims)
    _charge(ops, values.size)
    return UtilityTable(dims, values)


def min_project(t: UtilityTable, out_dim: int, ops: Optional[OpCounter] = None) -> UtilityTable:
    """Eliminate ``out_dim`` by minimisation."""
    if out_dim not in t.dims:
        raise TableError(f"dimension {out_dim} not in {t.dims}")
    axis = t.dims.index(out_dim)
    values = t.values.min(axis=axis)
    _charge(ops, values.size)
    return UtilityTable(t.dims[:axis] + t.dims[axis + 1:], values)


def slice_table(
    t: UtilityTable,
    assignment: Mapping[int, int],
    ops: Optional[OpCounter] = None,
) -> UtilityTable:
    """Restrict ``t`` to the values ``assignment`` gives to any of its dims.

    Variables outside ``t.dims`` are ignored, so a full context can be passed.
    """
    index = []
    dims = []
    for d, size in zip(t.dims, t.values.shape):
        if d in assignment:
            v = assignment[d]
            if not 0 <= v < size:
                raise TableError(f"value {v} out of domain for dimension {d}")
            index.append(v)
        else:
            index.append(slice(None))
            dims.append(d)
    values = np.array(t.values[tuple(index)], dtype=np.float64)
    _charge(ops, values.size)
    return UtilityTable(tuple(dims), values)


def drop_to_limit(
    t: UtilityTable,
    k: Optional[int],
    key: Optional[DimKey] = None,
    ops: Optional[OpCounter] = None,
) -> UtilityTable:
    """Min-project out the highest (smallest ``key``) dims until at most ``k`` remain.

    ``k=None`` means no limit.
    """
    if k is None:
        return t
    if k < 1:
        raise TableError("dimension limit must be at least 1")
    key = key or (lambda d: d)
    while len(t.dims) > k:
        t = min_project(t, min(t.dims, key=key), ops)
    return t
