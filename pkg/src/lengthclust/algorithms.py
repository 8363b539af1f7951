"""Greedy optimizers of the length objective.

``agglomerate`` merges, at every step, the two current trees whose joint
root would get the smallest estimated height. ``recursive_sparsest_cut``
splits top-down along the bipartition with the largest mean
cross-dissimilarity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import DissimilarityMatrix, Hierarchy, restrict_dissimilarity
from .errors import BadRangeError, TooManyLeavesError, UnknownKindError
from .estimators import HeightEstimator, _evaluate

DEFAULT_EXACT_CAP = 16
IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class MergeStep:
    left: tuple[str, ...]
    right: tuple[str, ...]
    value: float


@dataclass(frozen=True)
class MergeTrace:
    steps: tuple[MergeStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_list(self) -> list[dict]:
        return [{"left": list(s.left), "right": list(s.right), "value": s.value} for s in self.steps]


@dataclass(frozen=True)
class CutSolverPolicy:
    exact_cap: int = DEFAULT_EXACT_CAP
    restarts: int = 8
    seed: int = 0
    force_local: bool = False  # always use local search, even below exact_cap

    def __post_init__(self):
        if self.exact_cap < 2:
            raise BadRangeError("exact_cap must be at least 2")
        if self.restarts < 1:
            raise BadRangeError("restarts must be at least 1")


@dataclass(frozen=True)
class Bipartition:
    left: tuple[str, ...]  # always holds the first label in matrix order
    right: tuple[str, ...]
    value: float


# ---------------------------------------------------------------------------
# agglomerative
# ---------------------------------------------------------------------------


def agglomerate(D: DissimilarityMatrix, e: "HeightEstimator | str" = "mean") -> tuple[Hierarchy, MergeTrace]:
    """Bottom-up greedy clustering.

    Ties are broken by the lexicographically smallest (left, right) pair of
    leaf-index tuples; the cluster with the smaller tuple becomes the left
    child. With ``mean`` this is average linkage, ``min`` single linkage,
    ``max`` complete linkage, ``median`` median linkage and ``wpgma`` WPGMA.
    """
    e = HeightEstimator.parse(e)
    n = D.n
    values = D.values
    # cluster id -> (tree vertex, sorted leaf indices, depths from the cluster root)
    clusters: dict[int, tuple[int, np.ndarray, np.ndarray]] = {
        i: (i, np.array([i]), np.zeros(1, dtype=int)) for i in range(n)
    }
    keys: dict[int, tuple[int, ...]] = {i: (i,) for i in range(n)}

    def criterion(a: int, b: int) -> float:
        _, ia, da = clusters[a]
        _, ib, db = clusters[b]
        return _evaluate(e.kind, values[np.ix_(ia, ib)], da, db)

    pending: dict[tuple[int, int], float] = {}
    for a, b in itertools.combinations(range(n), 2):
        pending[(a, b)] = criterion(a, b)

    children: list[tuple[int, int]] = []
    steps: list[MergeStep] = []
    next_id = n
    while len(clusters) > 1:
        (a, b), value = min(pending.items(), key=lambda kv: (kv[1], keys[kv[0][0]], keys[kv[0][1]]))
        va, ia, da = clusters.pop(a)
        vb, ib, db = clusters.pop(b)
        children.append((va, vb))
        vertex = n + len(children) - 1
        steps.append(MergeStep(tuple(D.labels[i] for i in ia), tuple(D.labels[i] for i in ib), value))
        idx = np.concatenate([ia, ib])
        dep = np.concatenate([da, db]) + 1
        order = np.argsort(idx, kind="stable")
        new = next_id
        next_id += 1
        pending = {pair: v for pair, v in pending.items() if a not in pair and b not in pair}
        clusters[new] = (vertex, idx[order], dep[order])
        keys[new] = tuple(int(i) for i in idx[order])
        for c in clusters:
            if c == new:
                continue
            pair = (c, new) if keys[c] < keys[new] else (new, c)
            pending[pair] = criterion(*pair)
    return Hierarchy(D.labels, children), MergeTrace(tuple(steps))


# ---------------------------------------------------------------------------
# divisive
# ---------------------------------------------------------------------------


def _bipartition(D: DissimilarityMatrix, mask: np.ndarray, value: float) -> Bipartition:
    if not mask[0]:
        mask = ~mask
    left = tuple(D.labels[i] for i in np.flatnonzero(mask))
    right = tuple(D.labels[i] for i in np.flatnonzero(~mask))
    return Bipartition(left, right, float(value))


def _cut_mean(values: np.ndarray, mask: np.ndarray) -> float:
    block = values[np.ix_(mask, ~mask)]
    return float(block.sum() / block.size)


def sparsest_cut_exact(D: DissimilarityMatrix, cap: int = DEFAULT_EXACT_CAP) -> Bipartition:
    """Bipartition maximizing the mean cross-dissimilarity, by exhaustive scan.

    Among maximizers (within 1e-12) the one whose first side, which always
    contains the first label, is the smallest sorted index tuple wins.
    """
    n = D.n
    if n < 2:
        raise BadRangeError("a cut needs at least two objects")
    if n > cap:
        raise TooManyLeavesError(f"{n} objects exceeds the exact cut cap of {cap}", n=n, cap=cap)
    # row k encodes the membership of objects 1..n-1 in the first side
    codes = np.arange(2 ** (n - 1) - 1, dtype=np.int64)
    member = np.ones((codes.size, n), dtype=bool)
    for j in range(1, n):
        member[:, j] = (codes >> (j - 1)) & 1 == 1
    m = member.astype(float)
    cross = np.einsum("ki,ij,kj->k", m, D.values, 1.0 - m)
    size = member.sum(axis=1)
    means = cross / (size * (n - size))
    best = means.max()
    candidates = np.flatnonzero(means >= best - IMPROVEMENT_EPS)
    winner = min(candidates, key=lambda k: tuple(np.flatnonzero(member[k])))
    return _bipartition(D, member[winner], _cut_mean(D.values, member[winner]))


def _climb(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    n = len(mask)
    mask = mask.copy()
    for _ in range(10 * n * n + 100):
        m = mask.astype(float)
        row_a = values @ m
        row_b = values @ (1.0 - m)
        a = int(mask.sum())
        b = n - a
        cross = float(m @ row_b)
        current = cross / (a * b)
        # single moves: an element of A moves to B (or the reverse)
        gain = np.where(mask, cross - row_b + row_a, cross - row_a + row_b)
        na = np.where(mask, a - 1, a + 1)
        nb = n - na
        valid = (na > 0) & (nb > 0)
        moved = np.full(n, -np.inf)
        moved[valid] = gain[valid] / (na[valid] * nb[valid])
        i = int(np.argmax(moved))
        if moved[i] > current + IMPROVEMENT_EPS:
            mask[i] = not mask[i]
            continue
        # plateau: best swap of one element from each side
        ia = np.flatnonzero(mask)
        ib = np.flatnonzero(~mask)
        swap = (
            cross
            - row_b[ia][:, None]
            + row_a[ia][:, None]
            - row_a[ib][None, :]
            + row_b[ib][None, :]
            + 2.0 * values[np.ix_(ia, ib)]
        ) / (a * b)
        k = np.unravel_index(int(np.argmax(swap)), swap.shape)
        if swap[k] > current + IMPROVEMENT_EPS:
            mask[ia[k[0]]] = False
            mask[ib[k[1]]] = True
            continue
        break
    return mask


def sparsest_cut_local_search(D: DissimilarityMatrix, policy: CutSolverPolicy | None = None) -> Bipartition:
    """Hill-climbing search for the maximum mean-cross bipartition.

    Each restart begins from a random balanced split and applies the best
    improving single-element move, falling back to the best improving swap
    when no move helps. The best result over restarts is returned (earliest
    restart on ties).
    """
    policy = policy or CutSolverPolicy()
    n = D.n
    if n < 2:
        raise BadRangeError("a cut needs at least two objects")
    rng = np.random.default_rng(policy.seed)
    best_mask, best_value = None, -np.inf
    for _ in range(policy.restarts):
        perm = rng.permutation(n)
        mask = np.zeros(n, dtype=bool)
        mask[perm[: n // 2]] = True
        mask = _climb(D.values, mask)
        if not mask[0]:
            mask = ~mask
        value = _cut_mean(D.values, mask)
        if value > best_value:
            best_mask, best_value = mask, value
    return _bipartition(D, best_mask, best_value)


def recursive_sparsest_cut(D: DissimilarityMatrix, policy: CutSolverPolicy | None = None) -> tuple[Hierarchy, MergeTrace]:
    """Top-down greedy clustering by repeated sparsest cuts.

    The exact solver is used while a cluster has at most ``policy.exact_cap``
    objects, local search otherwise. The trace lists splits in preorder.
    """
    policy = policy or CutSolverPolicy()
    labels = D.labels
    index = {lab: i for i, lab in enumerate(labels)}
    n = D.n
    children: list[tuple[int, int]] = []
    steps: list[MergeStep] = []

    def split(sub: DissimilarityMatrix) -> int:
        if sub.n == 1:
            return index[sub.labels[0]]
        if sub.n <= policy.exact_cap and not policy.force_local:
            cut = sparsest_cut_exact(sub, policy.exact_cap)
        else:
            cut = sparsest_cut_local_search(sub, policy)
        steps.append(MergeStep(cut.left, cut.right, cut.value))
        a = split(restrict_dissimilarity(sub, cut.left))
        b = split(restrict_dissimilarity(sub, cut.right))
        children.append((a, b))
        return n + len(children) - 1

    split(D)
    return Hierarchy(labels, children), MergeTrace(tuple(steps))


ALGORITHMS = (
    "agglomerative:mean",
    "agglomerative:min",
    "agglomerative:max",
    "agglomerative:median",
    "agglomerative:wpgma",
    "divisive:exact",
    "divisive:local",
)


def run_algorithm(D: DissimilarityMatrix, name: str, policy: CutSolverPolicy | None = None) -> tuple[Hierarchy, MergeTrace]:
    """Run an algorithm selected by ``agglomerative:<estimator>``,
    ``divisive:exact`` or ``divisive:local``."""
    family, _, variant = name.partition(":")
    if family == "agglomerative":
        return agglomerate(D, variant or "mean")
    if family == "divisive":
        policy = policy or CutSolverPolicy()
        if variant in ("", "exact"):
            # exact everywhere the cap allows; larger clusters fall back to local search
            return recursive_sparsest_cut(D, policy)
        if variant == "local":
            return recursive_sparsest_cut(
                D, CutSolverPolicy(policy.exact_cap, policy.restarts, policy.seed, force_local=True)
            )
    raise UnknownKindError(
        f"unknown algorithm {name!r}; expected agglomerative:<estimator>, divisive:exact or divisive:local",
        name=name,
    )

