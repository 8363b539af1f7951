"""Ultrametrics and height-labeled hierarchies.

Covers recognition (three-point condition), the correspondence between an
ultrametric and a hierarchy with heights, and random/noisy instance
generation for experiments.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .core import DissimilarityMatrix, Hierarchy, build_dissimilarity
from .errors import (
    BadRangeError,
    ClampError,
    HeightOrderError,
    HeightValueError,
    NotUltrametricError,
    UnknownKindError,
)


@dataclass(frozen=True)
class HeightFunction:
    """Heights of the internal vertices of a hierarchy, keyed by vertex id."""

    heights: Mapping[int, float]

    def __post_init__(self):
        for v, h in self.heights.items():
            if not np.isfinite(h) or h <= 0:
                raise HeightValueError(f"height of vertex {v} must be positive and finite, got {h}", vertex=v)

    def __getitem__(self, v: int) -> float:
        return self.heights[v]

    def max(self) -> float:
        return max(self.heights.values())

    def scaled(self, c: float) -> "HeightFunction":
        return HeightFunction({v: c * h for v, h in self.heights.items()})

    def check(self, T: Hierarchy, *, monotone: bool = True) -> None:
        """Raise unless ``self`` covers exactly the internal vertices of ``T``
        and (optionally) never increases from parent to child."""
        if set(self.heights) != set(T.internal_vertices):
            raise HeightValueError("heights must be given for exactly the internal vertices of the tree")
        if not monotone:
            return
        for v in T.internal_vertices:
            for c in T.kids(v):
                if not T.is_leaf(c) and self.heights[c] > self.heights[v]:
                    raise HeightOrderError(
                        f"child {c} (height {self.heights[c]}) sits above its parent {v} (height {self.heights[v]})",
                        parent=v,
                        child=c,
                    )


@dataclass(frozen=True)
class UltrametricCheck:
    ok: bool
    witness: tuple[str, str, str] | None = None
    values: tuple[float, float, float] | None = None  # d(x,y), d(x,z), d(y,z)

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        out: dict = {"ultrametric": self.ok}
        if self.witness is not None:
            x, y, z = self.witness
            dxy, dxz, dyz = self.values
            out["witness"] = {"x": x, "y": y, "z": z, "d_xy": dxy, "d_xz": dxz, "d_yz": dyz}
        return out


def is_ultrametric(D: DissimilarityMatrix, tol: float = 0.0) -> UltrametricCheck:
    """Check d(x,y) <= max(d(x,z), d(y,z)) + tol over all triples.

    On failure the lexicographically first violating triple (x < y by index)
    is returned.
    """
    d = D.values
    n = D.n
    for x in range(n):
        # viol[y, z] : d(x,y) > max(d(x,z), d(y,z)) + tol
        bound = np.maximum(d[x][None, :], d) + tol
        viol = d[x][:, None] > bound
        viol[: x + 1, :] = False
        hits = np.argwhere(viol)
        if hits.size:
            y, z = map(int, hits[0])
            return UltrametricCheck(
                False,
                (D.labels[x], D.labels[y], D.labels[z]),
                (float(d[x, y]), float(d[x, z]), float(d[y, z])),
            )
    return UltrametricCheck(True)


def hierarchy_from_ultrametric(D: DissimilarityMatrix, tol: float = 0.0) -> tuple[Hierarchy, HeightFunction]:
    """Associated hierarchy and heights of an ultrametric.

    Distinct values are processed in increasing order; clusters joined by a
    value are merged by union-find. A merge of more than two clusters at one
    height is resolved as a left comb ordered by each cluster's first label.
    """
    check = is_ultrametric(D, tol)
    if not check:
        raise NotUltrametricError("dissimilarity is not an ultrametric", **check.to_dict())
    n = D.n
    parent = list(range(n))
    vertex = list(range(n))  # tree vertex currently representing each root

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    children: list[tuple[int, int]] = []
    heights: dict[int, float] = {}
    iu, ju = np.triu_indices(n, k=1)
    vals = D.values[iu, ju]
    order = np.lexsort((ju, iu, vals))
    pos = 0
    while pos < len(order):
        value = vals[order[pos]]
        end = pos
        while end < len(order) and vals[order[end]] == value:
            end += 1
        # connected components among current clusters at this height
        comp: dict[int, int] = {}

        def cfind(r):
            comp.setdefault(r, r)
            while comp[r] != r:
                r = comp[r]
            return r

        for k in order[pos:end]:
            a, b = cfind(find(int(iu[k]))), cfind(find(int(ju[k])))
            if a != b:
                comp[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for r in list(comp):
            groups.setdefault(cfind(r), []).append(r)
        for members in groups.values():
            roots = sorted(members)  # union-find roots are each cluster's smallest index
            current = vertex[roots[0]]
            for r in roots[1:]:
                children.append((current, vertex[r]))
                current = n + len(children) - 1
                heights[current] = float(value)
            for r in roots[1:]:
                parent[r] = roots[0]
            vertex[roots[0]] = current
        pos = end
    T = Hierarchy(D.labels, children)
    return T, HeightFunction(heights)


def realize_dissimilarity(T: Hierarchy, h: HeightFunction) -> DissimilarityMatrix:
    """Ultrametric with d(x, y) equal to the height of the mrca of x and y."""
    h.check(T)
    n = T.n
    out = np.zeros((n, n))
    below: dict[int, list[int]] = {}
    for v in T.postorder:
        if T.is_leaf(v):
            below[v] = [v]
            continue
        a, b = T.kids(v)
        out[np.ix_(below[a], below[b])] = h[v]
        out[np.ix_(below[b], below[a])] = h[v]
        below[v] = below.pop(a) + below.pop(b)
    return build_dissimilarity(T.labels, out)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def default_labels(n: int) -> list[str]:
    return [str(i + 1) for i in range(n)]


def random_hierarchy(labels: Sequence[str], rng: np.random.Generator) -> Hierarchy:
    """Uniform random hierarchy by sequential attachment to a random edge."""
    labels = list(labels)
    n = len(labels)
    if n == 1:
        return Hierarchy(labels, [])
    # parent pointers over vertices; leaf k joins at a uniformly chosen edge
    par = {0: None}
    kids: dict[int, list[int]] = {}
    next_internal = n
    for k in range(1, n):
        edges = list(par)  # each vertex names the edge above it
        target = edges[rng.integers(len(edges))]
        new = next_internal
        next_internal += 1
        above = par[target]
        par[new] = above
        if above is not None:
            kids[above] = [new if c == target else c for c in kids[above]]
        par[target] = new
        par[k] = new
        kids[new] = [target, k]
    root = next(v for v, p in par.items() if p is None)
    children: list[tuple[int, int]] = []

    def build(v):
        if v < n:
            return v
        a, b = build(kids[v][0]), build(kids[v][1])
        children.append((a, b))
        return n + len(children) - 1

    build(root)
    return Hierarchy(labels, children)


def _check_range(lo: float, hi: float) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi) and 0 <= lo < hi):
        raise BadRangeError(f"height range must satisfy 0 <= lo < hi, got ({lo}, {hi})", lo=lo, hi=hi)


def random_heights(T: Hierarchy, rng: np.random.Generator, height_range: tuple[float, float] = (1.0, 10.0)) -> HeightFunction:
    """Heights drawn uniformly from the open range, decreasing from root to leaves."""
    lo, hi = height_range
    _check_range(lo, hi)
    m = T.n - 1
    draws = rng.uniform(lo, hi, size=m)
    while np.any(draws <= lo) or len(set(draws.tolist())) < m:
        draws = rng.uniform(lo, hi, size=m)
    draws = np.sort(draws)[::-1]
    # reverse postorder lists every parent before its children
    order = list(reversed(T.internal_vertices))
    return HeightFunction({v: float(x) for v, x in zip(order, draws)})


def random_ultrametric(
    n: int,
    seed: int,
    height_range: tuple[float, float] = (1.0, 10.0),
    labels: Sequence[str] | None = None,
) -> DissimilarityMatrix:
    """Random ultrametric on ``n`` objects from a uniform tree shape."""
    T, h = random_planted(n, seed, height_range, labels)
    return realize_dissimilarity(T, h)


def random_planted(
    n: int,
    seed: int,
    height_range: tuple[float, float] = (1.0, 10.0),
    labels: Sequence[str] | None = None,
) -> tuple[Hierarchy, HeightFunction]:
    if n < 2:
        raise BadRangeError(f"need at least two objects, got {n}", n=n)
    _check_range(*height_range)
    labels = default_labels(n) if labels is None else list(labels)
    rng = np.random.default_rng(seed)
    T = random_hierarchy(labels, rng)
    return T, random_heights(T, rng, height_range)


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    ONE_SIDED = "onesided"


@dataclass(frozen=True)
class NoiseModel:
    """Additive i.i.d. noise.

    ``scale`` is the standard deviation (gaussian), the Laplace scale ``b``,
    or the mean of the exponential distribution used for one-sided noise.
    """

    kind: NoiseKind
    scale: float
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise BadRangeError(f"noise scale must be nonnegative, got {self.scale}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseModel":
        try:
            name, param = text.split(":")
            kind = NoiseKind(name.strip().lower().replace("_", "").replace("-", ""))
            return cls(kind, float(param), seed)
        except (ValueError, KeyError):
            raise UnknownKindError(
                f"bad noise model {text!r}; expected gaussian:<s>, laplace:<b> or onesided:<mean>", model=text
            ) from None

    def draw(self, rng: np.random.Generator) -> float:
        if self.scale == 0:
            return 0.0
        if self.kind is NoiseKind.GAUSSIAN:
            return float(rng.normal(0.0, self.scale))
        if self.kind is NoiseKind.LAPLACE:
            return float(rng.laplace(0.0, self.scale))
        return float(rng.exponential(self.scale))

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.scale:g}"


MAX_RESAMPLES = 1000


def perturb(D: DissimilarityMatrix, model: NoiseModel) -> DissimilarityMatrix:
    """Add one noise draw per unordered pair, redrawing any draw that would
    make the entry nonpositive."""
    rng = np.random.default_rng(model.seed)
    n = D.n
    out = np.array(D.values, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            base = D.values[i, j]
            for _ in range(MAX_RESAMPLES):
                value = base + model.draw(rng)
                if value > 0:
                    break
            else:
                raise ClampError(
                    f"could not draw a positive value for pair ({D.labels[i]}, {D.labels[j]}) "
                    f"in {MAX_RESAMPLES} attempts",
                    i=i,
                    j=j,
                )
            out[i, j] = out[j, i] = value
    return build_dissimilarity(D.labels, out)
