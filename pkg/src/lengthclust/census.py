"""Restrictions of hierarchies and the vertex census of a leaf bipartition.

Given a hierarchy ``T`` and a bipartition ``(L_minus, L_plus)`` of its leaves,
every internal vertex of ``T`` falls in exactly one class according to how it
survives in the two restrictions ``T|L_minus`` and ``T|L_plus``:

* ``r1``     present in at most one restriction;
* ``r2_tm``  present in both, muted in both;
* ``r2_om``  present in both, muted in exactly one;
* ``r2_nm``  present in both, muted in neither.

When no internal vertex of ``T`` has leaf set exactly ``L_minus`` or
``L_plus`` the counts satisfy ``r2_tm == 1 + r2_nm``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .core import DissimilarityMatrix, ExtendedHierarchy, Hierarchy, restrict_dissimilarity
from .errors import EmptySubsetError, NotAPartitionError, UnknownLeafError
from .estimators import HeightEstimator
from .objectives import extended_length_cost, length_cost


def restrict_hierarchy(T: "Hierarchy | ExtendedHierarchy", subset: Iterable[str]) -> ExtendedHierarchy:
    """Keep the vertices and edges lying on a path between two leaves of ``subset``.

    Vertex ids are those of ``T``. The result is rooted at the most recent
    common ancestor of ``subset``; vertices left with one child are muted.
    """
    E = T.as_extended() if isinstance(T, Hierarchy) else T
    A = set(subset)
    if not A:
        raise EmptySubsetError("cannot restrict to an empty set of leaves")
    unknown = A - E.labels
    if unknown:
        raise UnknownLeafError(f"labels {sorted(unknown)} are not leaves of the hierarchy", labels=sorted(unknown))
    count = {v: len(E.leaves_below(v) & A) for v in E.postorder}
    if len(A) == 1:
        (leaf,) = [v for v, lab in E.leaf_labels.items() if lab in A]
        return ExtendedHierarchy(leaf, {}, {leaf: E.leaf_labels[leaf]})
    top = E.root
    while True:
        full = [c for c in E.children[top] if count[c] == len(A)]
        if not full:
            break
        top = full[0]
    children: dict[int, tuple[int, ...]] = {}
    leaves: dict[int, str] = {}
    stack = [top]
    while stack:
        v = stack.pop()
        if v in E.leaf_labels:
            leaves[v] = E.leaf_labels[v]
            continue
        kept = tuple(c for c in E.children[v] if count[c] > 0)
        children[v] = kept
        stack.extend(kept)
    return ExtendedHierarchy(top, children, leaves)


def _check_partition(T: Hierarchy, L_minus, L_plus) -> tuple[frozenset[str], frozenset[str]]:
    lm, lp = frozenset(L_minus), frozenset(L_plus)
    if not lm or not lp:
        raise NotAPartitionError("both sides of the split must be nonempty")
    if lm & lp:
        raise NotAPartitionError("the two sides overlap", labels=sorted(lm & lp))
    if lm | lp != set(T.labels):
        raise NotAPartitionError(
            "the two sides do not cover the leaves exactly",
            missing=sorted(set(T.labels) - (lm | lp)),
            extra=sorted((lm | lp) - set(T.labels)),
        )
    return lm, lp


def check_split_condition(T: Hierarchy, L_minus: Iterable[str], L_plus: Iterable[str]) -> bool:
    """True iff no vertex of ``T`` has leaf set exactly ``L_minus`` or ``L_plus``.

    Leaves count, so a one-leaf side always fails the condition; such a side
    behaves like a cluster of ``T`` in the decomposition.
    """
    lm, lp = _check_partition(T, L_minus, L_plus)
    if len(lm) == 1 or len(lp) == 1:
        return False
    return not any(T.leaves_below(s) in (lm, lp) for s in T.internal_vertices)


class VertexClass(str, Enum):
    R1 = "r1"
    R2_TM = "r2_tm"
    R2_OM = "r2_om"
    R2_NM = "r2_nm"


@dataclass(frozen=True)
class VertexCensus:
    membership: dict[int, VertexClass]
    # for neither-muted vertices: side ("minus"/"plus") whose internal pairs attain the block minimum
    nm_sides: dict[int, str] = field(default_factory=dict)

    def count(self, cls: VertexClass) -> int:
        return sum(1 for c in self.membership.values() if c is cls)

    @property
    def r1(self) -> int:
        return self.count(VertexClass.R1)

    @property
    def r2_tm(self) -> int:
        return self.count(VertexClass.R2_TM)

    @property
    def r2_om(self) -> int:
        return self.count(VertexClass.R2_OM)

    @property
    def r2_nm(self) -> int:
        return self.count(VertexClass.R2_NM)

    @property
    def total(self) -> int:
        return self.r1 + self.r2_tm + self.r2_om + self.r2_nm

    @property
    def multiplicity(self) -> int:
        """Non-muted appearances across both restrictions."""
        return self.r1 + self.r2_om + 2 * self.r2_nm

    def to_dict(self) -> dict:
        return {"r1": self.r1, "r2_tm": self.r2_tm, "r2_om": self.r2_om, "r2_nm": self.r2_nm}


def classify_vertices(
    T: Hierarchy,
    L_minus: Iterable[str],
    L_plus: Iterable[str],
    D: DissimilarityMatrix | None = None,
) -> VertexCensus:
    """Census of the internal vertices of ``T`` for the split ``(L_minus, L_plus)``.

    A vertex kept by both restrictions is classed by how many of them mute
    it; every other vertex is ``r1``. A vertex kept by neither only occurs
    when the split condition fails. With ``D`` supplied, neither-muted
    vertices are also tagged with the side whose within-side pairs attain
    the minimum of the cross-block.
    """
    lm, lp = _check_partition(T, L_minus, L_plus)
    rm = restrict_hierarchy(T, lm)
    rp = restrict_hierarchy(T, lp)
    membership: dict[int, VertexClass] = {}
    sides: dict[int, str] = {}
    for s in T.internal_vertices:
        if s in rm.children and s in rp.children:
            muted = rm.is_muted(s) + rp.is_muted(s)
            membership[s] = (VertexClass.R2_NM, VertexClass.R2_OM, VertexClass.R2_TM)[muted]
            if muted == 0 and D is not None:
                a, b = (T.leaves_below(c) for c in T.kids(s))
                sides[s] = _nm_side(D, a, b, lm, lp)
        else:
            membership[s] = VertexClass.R1
    return VertexCensus(membership, sides)


def _nm_side(D, a, b, lm, lp) -> str:
    def side_min(side):
        ia, ib = D.indices(a & side), D.indices(b & side)
        return float(D.values[np.ix_(ia, ib)].min())

    return "minus" if side_min(lm) <= side_min(lp) else "plus"


@dataclass(frozen=True)
class SplitDecomposition:
    """Both sides of the inequality comparing a hierarchy with its restrictions."""

    cost: float  # length cost of the hierarchy on the full dissimilarity
    delta: float  # largest dissimilarity
    minus: float  # extended cost of the restriction to L_minus
    plus: float

    @property
    def bound(self) -> float:
        return self.delta + self.minus + self.plus

    @property
    def slack(self) -> float:
        return self.cost - self.bound

    def to_dict(self) -> dict:
        return {
            "cost": self.cost,
            "delta": self.delta,
            "minus": self.minus,
            "plus": self.plus,
            "bound": self.bound,
            "slack": self.slack,
        }


def split_decomposition(
    T: Hierarchy,
    D: DissimilarityMatrix,
    L_minus: Iterable[str],
    L_plus: Iterable[str],
    e: "HeightEstimator | str" = "min",
) -> SplitDecomposition:
    lm, lp = _check_partition(T, L_minus, L_plus)
    return SplitDecomposition(
        cost=length_cost(T, D, e).total,
        delta=D.max(),
        minus=extended_length_cost(restrict_hierarchy(T, lm), restrict_dissimilarity(D, lm), e).total,
        plus=extended_length_cost(restrict_hierarchy(T, lp), restrict_dissimilarity(D, lp), e).total,
    )
