"""Height estimators for an internal vertex.

An estimator maps the cross-block of dissimilarities between the two child
clusters of a vertex (plus, for the depth-weighted kind, the shape of the
subtree) to a height. Every kind returns a value between the minimum and
the maximum of the block.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .core import DissimilarityMatrix, Hierarchy
from .errors import EmptyBlockError, MissingDepthError, UnknownKindError


class EstimatorKind(str, Enum):
    MEAN = "mean"
    MIN = "min"
    MAX = "max"
    MEDIAN = "median"
    DEPTH_WEIGHTED = "depth_weighted"


_ALIASES = {
    "mean": EstimatorKind.MEAN,
    "average": EstimatorKind.MEAN,
    "min": EstimatorKind.MIN,
    "max": EstimatorKind.MAX,
    "median": EstimatorKind.MEDIAN,
    "wpgma": EstimatorKind.DEPTH_WEIGHTED,
    "depth_weighted": EstimatorKind.DEPTH_WEIGHTED,
}

# names accepted on the command line
CLI_NAMES = ("mean", "min", "max", "median", "wpgma")


@dataclass(frozen=True)
class HeightEstimator:
    kind: EstimatorKind

    @classmethod
    def parse(cls, name: "str | EstimatorKind | HeightEstimator") -> "HeightEstimator":
        if isinstance(name, HeightEstimator):
            return name
        if isinstance(name, EstimatorKind):
            return cls(name)
        try:
            return cls(_ALIASES[str(name).strip().lower()])
        except KeyError:
            raise UnknownKindError(
                f"unknown estimator {name!r}; expected one of {', '.join(CLI_NAMES)}", name=str(name)
            ) from None

    @property
    def name(self) -> str:
        return "wpgma" if self.kind is EstimatorKind.DEPTH_WEIGHTED else self.kind.value

    @property
    def uses_shape(self) -> bool:
        return self.kind is EstimatorKind.DEPTH_WEIGHTED

    def __call__(self, ctx: "SubtreeContext | None", block: "CrossBlock") -> float:
        return estimate_height(self, ctx, block)

    def __str__(self) -> str:
        return self.name


ALL_ESTIMATORS = tuple(HeightEstimator(k) for k in EstimatorKind)


@dataclass(frozen=True)
class CrossBlock:
    """Dissimilarities between a left and a right cluster, ``values[i, j] = d(left[i], right[j])``."""

    left: tuple[str, ...]
    right: tuple[str, ...]
    values: np.ndarray

    @classmethod
    def from_dissimilarity(cls, D: DissimilarityMatrix, left, right) -> "CrossBlock":
        il = D.indices(left)
        ir = D.indices(right)
        return cls(
            tuple(D.labels[i] for i in il),
            tuple(D.labels[i] for i in ir),
            D.values[np.ix_(il, ir)],
        )

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "CrossBlock":
        """A 1 x k block with anonymous labels, for estimators that ignore shape."""
        vals = np.asarray(values, dtype=float).reshape(1, -1)
        return cls(("_",), tuple(f"_{j}" for j in range(vals.shape[1])), vals)


@dataclass(frozen=True)
class SubtreeContext:
    """Leaf depths below the two children of a vertex, measured from each child."""

    left_leaf_depths: Mapping[str, int]
    right_leaf_depths: Mapping[str, int]

    @classmethod
    def at(cls, T: Hierarchy, s: int) -> "SubtreeContext":
        a, b = T.kids(s)
        return cls(T.depths_below(a), T.depths_below(b))


def _evaluate(kind: EstimatorKind, values: np.ndarray, left_depths=None, right_depths=None) -> float:
    # hot path shared by cost evaluation and the greedy algorithms
    if kind is EstimatorKind.MEAN:
        return float(values.sum() / values.size)
    if kind is EstimatorKind.MIN:
        return float(values.min())
    if kind is EstimatorKind.MAX:
        return float(values.max())
    if kind is EstimatorKind.MEDIAN:
        return float(np.median(values))
    wl = np.exp2(-np.asarray(left_depths, dtype=float))
    wr = np.exp2(-np.asarray(right_depths, dtype=float))
    return float(wl @ values @ wr)


def estimate_height(e: HeightEstimator, ctx: SubtreeContext | None, block: CrossBlock) -> float:
    """Height of a vertex estimated from its cross-block.

    ``ctx`` is only consulted by the depth-weighted kind, where it must give
    a depth for every leaf of the block.
    """
    e = HeightEstimator.parse(e)
    values = np.asarray(block.values, dtype=float)
    if values.size == 0:
        raise EmptyBlockError("cross-block is empty")
    if not e.uses_shape:
        return _evaluate(e.kind, values)
    if ctx is None:
        raise MissingDepthError("the depth-weighted estimator needs a subtree context")
    try:
        ld = [ctx.left_leaf_depths[x] for x in block.left]
        rd = [ctx.right_leaf_depths[y] for y in block.right]
    except KeyError as exc:
        raise MissingDepthError(f"no depth recorded for leaf {exc.args[0]!r}", label=exc.args[0]) from None
    return _evaluate(e.kind, values, ld, rd)


@dataclass(frozen=True)
class BoundsWitness:
    ok: bool
    value: float
    lower: float
    upper: float

    def __bool__(self) -> bool:
        return self.ok


def check_estimator_bounds(e: HeightEstimator, ctx: SubtreeContext | None, block: CrossBlock, tol: float = 0.0) -> BoundsWitness:
    value = estimate_height(e, ctx, block)
    lo = float(np.min(block.values))
    hi = float(np.max(block.values))
    return BoundsWitness(lo - tol <= value <= hi + tol, value, lo, hi)


def weight_sum(ctx: SubtreeContext) -> float:
    """Total depth-weighted mass; 1 for any context taken from a binary tree."""
    wl = sum(2.0 ** -d for d in ctx.left_leaf_depths.values())
    wr = sum(2.0 ** -d for d in ctx.right_leaf_depths.values())
    return wl * wr
