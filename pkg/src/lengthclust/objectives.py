"""Cost functions over hierarchies.

``length_cost`` sums a height estimate over internal vertices; ``gamma_cost``
weights each vertex's cross-block total by a function of the two child
cluster sizes. Both are minimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .core import (
    DEFAULT_ENUM_CAP,
    DissimilarityMatrix,
    ExtendedHierarchy,
    Hierarchy,
    _check_cap,
    _shape_to_hierarchy,
    enumerate_shapes,
    restrict_dissimilarity,
)
from .errors import LeafMismatchError, MTooSmallError, UnknownKindError
from .estimators import HeightEstimator, _evaluate
from .ultrametric import HeightFunction

OPTIMALITY_TOL = 1e-9


class GammaKind(str, Enum):
    DASGUPTA = "dasgupta"
    INVERSE_PRODUCT = "inverse_product"


@dataclass(frozen=True)
class GammaWeight:
    kind: GammaKind

    @classmethod
    def parse(cls, name: "str | GammaKind | GammaWeight") -> "GammaWeight":
        if isinstance(name, GammaWeight):
            return name
        try:
            return cls(GammaKind(str(getattr(name, "value", name)).strip().lower()))
        except ValueError:
            raise UnknownKindError(
                f"unknown gamma weight {name!r}; expected dasgupta or inverse_product", name=str(name)
            ) from None

    def __call__(self, a: int, b: int) -> float:
        if self.kind is GammaKind.DASGUPTA:
            return float(-a - b)
        return 1.0 / (a * b)

    @property
    def name(self) -> str:
        return self.kind.value

    def __str__(self) -> str:
        return self.name


Objective = Union[HeightEstimator, GammaWeight]


@dataclass(frozen=True)
class VertexTerm:
    vertex: int
    left: tuple[str, ...]
    right: tuple[str, ...]
    value: float


@dataclass(frozen=True)
class CostReport:
    total: float
    terms: tuple[VertexTerm, ...]

    @property
    def per_vertex(self) -> dict[int, float]:
        return {t.vertex: t.value for t in self.terms}

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_vertex": [
                {"leaves_left": list(t.left), "leaves_right": list(t.right), "value": t.value}
                for t in self.terms
            ],
        }


def _require_same_leaves(T: Hierarchy, D: DissimilarityMatrix) -> None:
    if set(T.labels) != set(D.labels) or len(T.labels) != len(D.labels):
        raise LeafMismatchError(
            "hierarchy leaves differ from the dissimilarity labels",
            only_in_tree=sorted(set(T.labels) - set(D.labels)),
            only_in_matrix=sorted(set(D.labels) - set(T.labels)),
        )


def _vertex_blocks(T: Hierarchy, D: DissimilarityMatrix):
    """Yield (vertex, left idx, left depths, right idx, right depths) in postorder.

    Index arrays are sorted by matrix order and depths are measured from the
    corresponding child.
    """
    info: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for v in T.postorder:
        if T.is_leaf(v):
            info[v] = (np.array([D.index(T.labels[v])]), np.zeros(1, dtype=int))
            continue
        a, b = T.kids(v)
        ia, da = info.pop(a)
        ib, db = info.pop(b)
        yield v, ia, da, ib, db
        idx = np.concatenate([ia, ib])
        dep = np.concatenate([da, db]) + 1
        order = np.argsort(idx, kind="stable")
        info[v] = (idx[order], dep[order])


def _labels(D: DissimilarityMatrix, idx: np.ndarray) -> tuple[str, ...]:
    return tuple(D.labels[i] for i in idx)


def length_cost(T: Hierarchy, D: DissimilarityMatrix, e: "HeightEstimator | str") -> CostReport:
    """Sum over internal vertices of the estimated height of each vertex."""
    e = HeightEstimator.parse(e)
    _require_same_leaves(T, D)
    terms = []
    for v, ia, da, ib, db in _vertex_blocks(T, D):
        value = _evaluate(e.kind, D.values[np.ix_(ia, ib)], da, db)
        terms.append(VertexTerm(v, _labels(D, ia), _labels(D, ib), value))
    return CostReport(math.fsum(t.value for t in terms), tuple(terms))


def gamma_cost(T: Hierarchy, D: DissimilarityMatrix, g: "GammaWeight | str") -> CostReport:
    """Sum over internal vertices of gamma(|A|, |B|) * d(A, B)."""
    g = GammaWeight.parse(g)
    _require_same_leaves(T, D)
    terms = []
    for v, ia, _, ib, _ in _vertex_blocks(T, D):
        value = g(len(ia), len(ib)) * float(D.values[np.ix_(ia, ib)].sum())
        terms.append(VertexTerm(v, _labels(D, ia), _labels(D, ib), value))
    return CostReport(math.fsum(t.value for t in terms), tuple(terms))


def cost(T: Hierarchy, D: DissimilarityMatrix, objective: "Objective | str") -> CostReport:
    """Dispatch to :func:`length_cost` or :func:`gamma_cost`."""
    if isinstance(objective, GammaWeight):
        return gamma_cost(T, D, objective)
    if isinstance(objective, str) and objective in {k.value for k in GammaKind}:
        return gamma_cost(T, D, objective)
    return length_cost(T, D, objective)


def extended_length_cost(T: ExtendedHierarchy, D: DissimilarityMatrix, e: "HeightEstimator | str") -> CostReport:
    """Length cost of an extended hierarchy; muted vertices contribute nothing.

    Computed on the hierarchy obtained by contracting muted vertices, with
    vertex ids mapped back to ``T``.
    """
    e = HeightEstimator.parse(e)
    missing = T.labels - set(D.labels)
    if missing:
        raise LeafMismatchError("extended hierarchy has leaves outside the dissimilarity", only_in_tree=sorted(missing))
    if len(T.labels) < 2:
        return CostReport(0.0, ())
    H, origin = T.suppress_muted()
    report = length_cost(H, restrict_dissimilarity(D, H.labels), e)
    terms = tuple(VertexTerm(origin[t.vertex], t.left, t.right, t.value) for t in report.terms)
    return CostReport(report.total, terms)


def total_length(T: Hierarchy, h: HeightFunction, M: float) -> float:
    """Edge-length sum of ``T`` with an extra root edge up to height ``M``.

    Each edge gets length parent height minus child height, leaves sitting
    at height 0.
    """
    h.check(T)
    top = h[T.root] if T.n > 1 else 0.0
    if not M > top:
        raise MTooSmallError(f"M={M} must exceed the largest height {top}", M=M)
    lengths = [M - top]
    for v in T.internal_vertices:
        for c in T.kids(v):
            lengths.append(h[v] - (0.0 if T.is_leaf(c) else h[c]))
    return math.fsum(lengths)


# ---------------------------------------------------------------------------
# exhaustive optimum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    hierarchy: Hierarchy
    report: CostReport
    ties: int
    evaluated: int
    index: int  # enumeration position of the returned minimizer


class _ShapeCoster:
    """Memoized cost of nested-tuple shapes over leaf indices ``0..n-1``.

    A vertex term depends only on the subtree below it, so subtrees shared
    between enumerated trees are scored once. Shape-free objectives are
    further memoized on the (left, right) leaf split.
    """

    def __init__(self, D: DissimilarityMatrix, objective: Objective):
        self.values = D.values
        self.objective = objective
        self.by_split = not (isinstance(objective, HeightEstimator) and objective.uses_shape)
        self.sub: dict = {}
        self.split_terms: dict = {}
        for i in range(D.n):
            self.sub[i] = (np.array([i]), np.zeros(1, dtype=int), 1 << i, 0.0)

    def _term(self, ia, da, ma, ib, db, mb) -> float:
        if self.by_split:
            key = (ma, mb) if ma < mb else (mb, ma)
            cached = self.split_terms.get(key)
            if cached is not None:
                return cached
        block = self.values[np.ix_(ia, ib)]
        if isinstance(self.objective, GammaWeight):
            value = self.objective(len(ia), len(ib)) * float(block.sum())
        else:
            value = _evaluate(self.objective.kind, block, da, db)
        if self.by_split:
            self.split_terms[key] = value
        return value

    def __call__(self, shape) -> float:
        return self._info(shape)[3]

    def _info(self, shape):
        got = self.sub.get(shape)
        if got is not None:
            return got
        left, right = shape
        ia, da, ma, ca = self._info(left)
        ib, db, mb, cb = self._info(right)
        term = self._term(ia, da, ma, ib, db, mb)
        idx = np.concatenate([ia, ib])
        dep = np.concatenate([da, db]) + 1
        order = np.argsort(idx, kind="stable")
        got = (idx[order], dep[order], ma | mb, ca + cb + term)
        self.sub[shape] = got
        return got


def _parse_objective(objective) -> Objective:
    if isinstance(objective, (HeightEstimator, GammaWeight)):
        return objective
    if str(getattr(objective, "value", objective)) in {k.value for k in GammaKind}:
        return GammaWeight.parse(objective)
    return HeightEstimator.parse(objective)


def optimal_hierarchy_bruteforce(
    D: DissimilarityMatrix,
    objective: "Objective | str",
    cap: int = DEFAULT_ENUM_CAP,
    tol: float = OPTIMALITY_TOL,
) -> BruteForceResult:
    """Global minimizer by scoring all (2n-3)!! hierarchies.

    Ties within ``tol`` of the minimum are counted; the first minimizer in
    enumeration order is returned.
    """
    objective = _parse_objective(objective)
    n = D.n
    _check_cap(n, cap)
    if n < 2:
        T = Hierarchy(D.labels, [])
        return BruteForceResult(T, cost(T, D, objective), 1, 1, 0)
    coster = _ShapeCoster(D, objective)
    costs = []
    best_shape, best_value, best_index = None, math.inf, -1
    for k, shape in enumerate(enumerate_shapes(n)):
        value = coster(shape)
        costs.append(value)
        if value < best_value:
            best_shape, best_value, best_index = shape, value, k
    costs_arr = np.asarray(costs)
    # first shape within tol of the true minimum, in enumeration order
    first = int(np.flatnonzero(costs_arr <= costs_arr.min() + tol)[0])
    if first != best_index:
        best_index = first
        best_shape = next(s for k, s in enumerate(enumerate_shapes(n)) if k == first)
    ties = int(np.count_nonzero(costs_arr <= costs_arr.min() + tol))
    T = _shape_to_hierarchy(best_shape, D.labels)
    return BruteForceResult(T, cost(T, D, objective), ties, len(costs), best_index)
