"""Dissimilarities, hierarchies and extended hierarchies.

Hierarchies use integer vertex ids. For a :class:`Hierarchy` on ``n`` labels,
vertices ``0..n-1`` are the leaves (leaf ``i`` carries ``labels[i]``) and
vertices ``n..2n-2`` are internal, listed in ``children`` by id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    AsymmetryError,
    DuplicateLabelError,
    EmptySubsetError,
    NegativeEntryError,
    NonFiniteEntryError,
    NonzeroDiagonalError,
    OverlapError,
    SameLeafError,
    ShapeError,
    TooManyLeavesError,
    TreeStructureError,
    UnknownLabelError,
    UnknownLeafError,
    ZeroOffDiagonalError,
)

DEFAULT_ENUM_CAP = 10


# ---------------------------------------------------------------------------
# dissimilarities
# ---------------------------------------------------------------------------


class DissimilarityMatrix:
    """Validated symmetric dissimilarity over labeled objects.

    Build instances with :func:`build_dissimilarity`; the constructor itself
    does not validate.
    """

    __slots__ = ("labels", "values", "_index")

    def __init__(self, labels: Sequence[str], values: np.ndarray):
        self.labels = tuple(labels)
        arr = np.array(values, dtype=float, copy=True)
        arr.setflags(write=False)
        self.values = arr
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabelError(f"unknown label {label!r}", label=label) from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        """Indices of ``labels`` sorted by matrix order."""
        return sorted(self.index(lab) for lab in labels)

    def __call__(self, x: str, y: str) -> float:
        return float(self.values[self.index(x), self.index(y)])

    def max(self) -> float:
        return float(self.values.max()) if self.n else 0.0

    def off_diagonal(self) -> np.ndarray:
        iu = np.triu_indices(self.n, k=1)
        return self.values[iu]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DissimilarityMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.labels, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"DissimilarityMatrix(labels={list(self.labels)!r}, values={self.values.tolist()!r})"


def build_dissimilarity(labels: Sequence[str], values, *, strict: bool = True) -> DissimilarityMatrix:
    """Validate ``values`` and wrap them as a :class:`DissimilarityMatrix`.

    With ``strict=False`` zero off-diagonal entries are accepted.
    """
    labels = [str(lab) for lab in labels]
    seen: set[str] = set()
    for lab in labels:
        if lab in seen:
            raise DuplicateLabelError(f"duplicate label {lab!r}", label=lab)
        seen.add(lab)
    n = len(labels)
    if n < 1:
        raise ShapeError("at least one label is required")
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeError(f"values are not a numeric grid: {exc}") from None
    if arr.shape != (n, n):
        raise ShapeError(f"expected a {n}x{n} grid, got shape {arr.shape}", shape=list(arr.shape))

    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        i, j = map(int, bad[0])
        raise NonFiniteEntryError(f"non-finite entry at ({i},{j})", i=i, j=j)
    bad = np.argwhere(arr < 0)
    if bad.size:
        i, j = map(int, bad[0])
        raise NegativeEntryError(f"negative entry {arr[i, j]} at ({i},{j})", i=i, j=j)
    diag = np.flatnonzero(np.diag(arr) != 0)
    if diag.size:
        i = int(diag[0])
        raise NonzeroDiagonalError(f"nonzero diagonal entry at ({i},{i})", i=i, j=i)
    bad = np.argwhere(arr != arr.T)
    if bad.size:
        i, j = sorted(map(int, bad[0]))
        raise AsymmetryError(
            f"d({i},{j})={arr[i, j]} differs from d({j},{i})={arr[j, i]}", i=i, j=j
        )
    if strict and n > 1:
        off = arr + np.eye(n)
        bad = np.argwhere(off == 0)
        if bad.size:
            i, j = sorted(map(int, bad[0]))
            raise ZeroOffDiagonalError(f"zero dissimilarity between distinct objects ({i},{j})", i=i, j=j)
    return DissimilarityMatrix(labels, arr)


def unit_dissimilarity(labels: Sequence[str] | int) -> DissimilarityMatrix:
    """All-ones dissimilarity; an integer ``n`` yields labels ``"1".."n"``."""
    if isinstance(labels, int):
        labels = [str(i + 1) for i in range(labels)]
    n = len(labels)
    return build_dissimilarity(labels, np.ones((n, n)) - np.eye(n))


def _check_subset(D: DissimilarityMatrix, subset: Iterable[str]) -> list[int]:
    subset = list(subset)
    if not subset:
        raise EmptySubsetError("label subset is empty")
    return sorted(set(D.index(lab) for lab in subset))


def restrict_dissimilarity(D: DissimilarityMatrix, subset: Iterable[str]) -> DissimilarityMatrix:
    """Principal submatrix on ``subset``, keeping the label order of ``D``."""
    idx = _check_subset(D, subset)
    return DissimilarityMatrix([D.labels[i] for i in idx], D.values[np.ix_(idx, idx)])


@dataclass(frozen=True)
class Aggregate:
    sum: float
    mean: float
    count: int


def aggregate(D: DissimilarityMatrix, A: Iterable[str], B: Iterable[str]) -> Aggregate:
    """Total and mean dissimilarity across two disjoint label sets."""
    ia = _check_subset(D, A)
    ib = _check_subset(D, B)
    common = set(ia) & set(ib)
    if common:
        raise OverlapError(
            "subsets overlap", labels=sorted(D.labels[i] for i in common)
        )
    block = D.values[np.ix_(ia, ib)]
    total = block.sum()
    return Aggregate(sum=float(total), mean=float(total / block.size), count=int(block.size))


# ---------------------------------------------------------------------------
# hierarchies
# ---------------------------------------------------------------------------


class Hierarchy:
    """Rooted binary tree whose leaves are labeled objects.

    Parameters
    ----------
    labels : sequence of str
        Leaf labels; leaf vertex ``i`` carries ``labels[i]``.
    children : sequence of (int, int)
        ``children[k]`` holds the two children of internal vertex ``n + k``,
        the first being the left child.
    """

    __slots__ = ("labels", "children", "__dict__")

    def __init__(self, labels: Sequence[str], children: Sequence[tuple[int, int]]):
        self.labels = tuple(str(lab) for lab in labels)
        self.children = tuple((int(a), int(b)) for a, b in children)
        self._validate()

    def _validate(self) -> None:
        n = len(self.labels)
        if n < 1:
            raise TreeStructureError("a hierarchy needs at least one leaf")
        if len(set(self.labels)) != n:
            raise TreeStructureError("duplicate leaf labels")
        if len(self.children) != n - 1:
            raise TreeStructureError(f"{n} leaves require {n - 1} internal vertices, got {len(self.children)}")
        parent = [-1] * (2 * n - 1)
        for k, pair in enumerate(self.children):
            v = n + k
            if pair[0] == pair[1]:
                raise TreeStructureError(f"vertex {v} lists the same child twice")
            for c in pair:
                if not 0 <= c < 2 * n - 1 or c == v:
                    raise TreeStructureError(f"vertex {v} has invalid child {c}")
                if parent[c] != -1:
                    raise TreeStructureError(f"vertex {c} has two parents")
                parent[c] = v
        roots = [v for v, p in enumerate(parent) if p == -1]
        if len(roots) != 1:
            raise TreeStructureError(f"expected one root, found {len(roots)}")
        self.__dict__["_parent"] = tuple(parent)
        self.__dict__["_root"] = roots[0]
        # reachability from the root rules out cycles
        if len(self.postorder) != 2 * n - 1:
            raise TreeStructureError("hierarchy contains a cycle")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def root(self) -> int:
        return self.__dict__["_root"]

    def parent(self, v: int) -> int | None:
        p = self.__dict__["_parent"][v]
        return None if p == -1 else p

    def is_leaf(self, v: int) -> bool:
        return v < self.n

    def kids(self, v: int) -> tuple[int, int]:
        """Left and right child of internal vertex ``v``."""
        return self.children[v - self.n]

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        order: list[int] = []
        stack = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done or v < self.n:
                order.append(v)
                continue
            stack.append((v, True))
            a, b = self.kids(v)
            stack.append((b, False))
            stack.append((a, False))
        return tuple(order)

    @property
    def internal_vertices(self) -> tuple[int, ...]:
        """Internal vertices, children before parents."""
        return tuple(v for v in self.postorder if v >= self.n)

    @cached_property
    def _leafsets(self) -> dict[int, frozenset[str]]:
        sets: dict[int, frozenset[str]] = {}
        for v in self.postorder:
            if v < self.n:
                sets[v] = frozenset((self.labels[v],))
            else:
                a, b = self.kids(v)
                sets[v] = sets[a] | sets[b]
        return sets

    def leaves_below(self, v: int) -> frozenset[str]:
        return self._leafsets[v]

    @cached_property
    def _leaf_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def leaf(self, label: str) -> int:
        try:
            return self._leaf_index[label]
        except KeyError:
            raise UnknownLeafError(f"{label!r} is not a leaf of this hierarchy", label=label) from None

    def clusters(self) -> frozenset[frozenset[str]]:
        """Leaf sets of all internal vertices; identifies the tree up to child order."""
        return frozenset(self._leafsets[v] for v in self.internal_vertices)

    def same_topology(self, other: "Hierarchy") -> bool:
        return set(self.labels) == set(other.labels) and self.clusters() == other.clusters()

    def depths_below(self, v: int) -> dict[str, int]:
        """Edge-count distance from ``v`` to each leaf below it."""
        out: dict[str, int] = {}
        stack = [(v, 0)]
        while stack:
            u, d = stack.pop()
            if u < self.n:
                out[self.labels[u]] = d
            else:
                a, b = self.kids(u)
                stack.append((b, d + 1))
                stack.append((a, d + 1))
        return out

    def to_nested(self, v: int | None = None):
        """Nested-tuple form, e.g. ``(("1", "2"), ("3", "4"))``."""
        v = self.root if v is None else v
        if v < self.n:
            return self.labels[v]
        a, b = self.kids(v)
        return (self.to_nested(a), self.to_nested(b))

    @classmethod
    def from_nested(cls, nested, labels: Sequence[str] | None = None) -> "Hierarchy":
        """Build from nested pairs of leaf labels.

        Leaf ids follow ``labels`` when given, otherwise left-to-right order.
        """
        found: list[str] = []

        def collect(t):
            if isinstance(t, tuple):
                if len(t) != 2:
                    raise TreeStructureError(f"internal vertex with {len(t)} children")
                collect(t[0])
                collect(t[1])
            else:
                found.append(str(t))

        collect(nested)
        if labels is None:
            labels = found
        labels = [str(lab) for lab in labels]
        if sorted(labels) != sorted(found):
            raise TreeStructureError("nested leaves do not match the supplied labels")
        index = {lab: i for i, lab in enumerate(labels)}
        children: list[tuple[int, int]] = []

        def build(t) -> int:
            if not isinstance(t, tuple):
                return index[str(t)]
            a = build(t[0])
            b = build(t[1])
            children.append((a, b))
            return len(labels) + len(children) - 1

        build(nested)
        return cls(labels, children)

    def as_extended(self) -> "ExtendedHierarchy":
        return ExtendedHierarchy(
            root=self.root,
            children={v: self.kids(v) for v in self.internal_vertices},
            leaf_labels={i: lab for i, lab in enumerate(self.labels)},
        )

    def __repr__(self) -> str:
        return f"Hierarchy({self.to_nested()!r})"


def mrca(T: Hierarchy, x: str, y: str) -> int:
    """Most recent common ancestor of two distinct leaves."""
    if x == y:
        raise SameLeafError(f"mrca needs two distinct leaves, got {x!r} twice", label=x)
    ancestors = set()
    v: int | None = T.leaf(x)
    while v is not None:
        ancestors.add(v)
        v = T.parent(v)
    v = T.leaf(y)
    while v not in ancestors:
        v = T.parent(v)
    return v


# ---------------------------------------------------------------------------
# extended hierarchies
# ---------------------------------------------------------------------------


class ExtendedHierarchy:
    """Rooted tree whose non-root internal vertices may have a single child.

    Vertex ids are arbitrary integers; restrictions keep the ids of the tree
    they came from. Single-child vertices are *muted*.
    """

    __slots__ = ("root", "children", "leaf_labels", "__dict__")

    def __init__(self, root: int, children: Mapping[int, Sequence[int]], leaf_labels: Mapping[int, str]):
        self.root = int(root)
        self.children = {int(v): tuple(int(c) for c in cs) for v, cs in children.items()}
        self.leaf_labels = {int(v): str(lab) for v, lab in leaf_labels.items()}
        self._validate()

    def _validate(self) -> None:
        overlap = set(self.children) & set(self.leaf_labels)
        if overlap:
            raise TreeStructureError(f"vertices {sorted(overlap)} are both leaf and internal")
        if len(set(self.leaf_labels.values())) != len(self.leaf_labels):
            raise TreeStructureError("duplicate leaf labels")
        if not self.children:
            if set(self.leaf_labels) != {self.root}:
                raise TreeStructureError("a tree without internal vertices must be a single leaf")
            return
        if len(self.children.get(self.root, ())) != 2:
            raise TreeStructureError("the root must have exactly two children")
        seen = {self.root}
        stack = [self.root]
        while stack:
            v = stack.pop()
            kids = self.children.get(v)
            if kids is None:
                if v not in self.leaf_labels:
                    raise TreeStructureError(f"vertex {v} is neither internal nor a leaf")
                continue
            if not 1 <= len(kids) <= 2:
                raise TreeStructureError(f"vertex {v} has {len(kids)} children")
            for c in kids:
                if c in seen:
                    raise TreeStructureError(f"vertex {c} is reached twice")
                seen.add(c)
                stack.append(c)
        if seen != set(self.children) | set(self.leaf_labels):
            raise TreeStructureError("some vertices are unreachable from the root")

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(self.leaf_labels.values())

    def is_muted(self, v: int) -> bool:
        return len(self.children[v]) == 1

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        order: list[int] = []

        def visit(v):
            for c in self.children.get(v, ()):
                visit(c)
            order.append(v)

        visit(self.root)
        return tuple(order)

    @property
    def internal_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.postorder if v in self.children)

    @property
    def muted_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.internal_vertices if self.is_muted(v))

    @property
    def branching_vertices(self) -> tuple[int, ...]:
        """Internal vertices with two children (the ones that carry cost)."""
        return tuple(v for v in self.internal_vertices if not self.is_muted(v))

    @cached_property
    def _leafsets(self) -> dict[int, frozenset[str]]:
        sets: dict[int, frozenset[str]] = {}
        for v in self.postorder:
            if v in self.leaf_labels:
                sets[v] = frozenset((self.leaf_labels[v],))
            else:
                sets[v] = frozenset().union(*(sets[c] for c in self.children[v]))
        return sets

    def leaves_below(self, v: int) -> frozenset[str]:
        return self._leafsets[v]

    def suppress_muted(self) -> tuple[Hierarchy, dict[int, int]]:
        """Contract muted vertices.

        Returns the resulting hierarchy and a map from its internal vertex ids
        to the ids of this tree.
        """
        labels = sorted(self.leaf_labels.values())
        index = {lab: i for i, lab in enumerate(labels)}
        children: list[tuple[int, int]] = []
        origin: dict[int, int] = {}

        def build(v: int) -> int:
            while v in self.children and len(self.children[v]) == 1:
                v = self.children[v][0]
            if v in self.leaf_labels:
                return index[self.leaf_labels[v]]
            a = build(self.children[v][0])
            b = build(self.children[v][1])
            children.append((a, b))
            new = len(labels) + len(children) - 1
            origin[new] = v
            return new

        build(self.root)
        return Hierarchy(labels, children), origin

    def __repr__(self) -> str:
        def show(v):
            if v in self.leaf_labels:
                return self.leaf_labels[v]
            inner = ",".join(show(c) for c in self.children[v])
            return f"({inner})" + ("*" if self.is_muted(v) else "")

        return f"ExtendedHierarchy({show(self.root)})"


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def double_factorial_count(n: int) -> int:
    """Number of rooted binary trees on ``n`` labeled leaves, (2n-3)!!."""
    if n < 2:
        return 1
    return math.prod(range(1, 2 * n - 2, 2))


def _insert_everywhere(tree, leaf):
    # edges in preorder: the edge above ``tree`` first, then the left subtree, then the right
    yield (tree, leaf)
    if isinstance(tree, tuple):
        left, right = tree
        for t in _insert_everywhere(left, leaf):
            yield (t, right)
        for t in _insert_everywhere(right, leaf):
            yield (left, t)


def enumerate_shapes(n: int) -> Iterator:
    """All rooted binary trees on leaves ``0..n-1`` as nested int tuples.

    Leaf ``k`` is attached to every edge (root edge included) of every tree on
    leaves ``0..k-1``, in that order.
    """
    if n < 1:
        return

    def grow(tree, k):
        if k == n:
            yield tree
            return
        for t in _insert_everywhere(tree, k):
            yield from grow(t, k + 1)

    yield from grow(0, 1)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise TooManyLeavesError(f"{n} leaves exceeds the enumeration cap of {cap}", n=n, cap=cap)


def _shape_to_hierarchy(shape, labels: tuple[str, ...]) -> Hierarchy:
    n = len(labels)
    children: list[tuple[int, int]] = []

    def build(t) -> int:
        if not isinstance(t, tuple):
            return t
        a = build(t[0])
        b = build(t[1])
        children.append((a, b))
        return n + len(children) - 1

    build(shape)
    return Hierarchy(labels, children)


def enumerate_hierarchies(labels: Sequence[str], cap: int = DEFAULT_ENUM_CAP) -> Iterator[Hierarchy]:
    """Yield every hierarchy on ``labels`` exactly once, (2n-3)!! in total."""
    labels = tuple(str(lab) for lab in labels)
    if len(labels) < 2:
        raise TreeStructureError("enumeration needs at least two labels")
    if len(set(labels)) != len(labels):
        raise DuplicateLabelError("duplicate labels")
    _check_cap(len(labels), cap)
    for shape in enumerate_shapes(len(labels)):
        yield _shape_to_hierarchy(shape, labels)
