"""Correlation matrices, correlation-distance clustering and variable grouping.

Distances are 1 - |r|, so complete linkage guarantees that every pair inside
a cluster cut at height h satisfies |r| >= 1 - h. Node ids follow the usual
convention: leaves 0..p-1, the t-th merge creates node p+t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import AspectPartition, NumericTable
from .errors import AspectraError, ZeroVarianceColumn

VALID_LINKAGES = ("complete", "single", "average")


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    method: str  # "pearson" | "spearman"

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MergeRecord:
    left: int
    right: int
    height: float
    members: tuple  # sorted column indices of the merged cluster


@dataclass(frozen=True)
class MergeTree:
    """Agglomerative clustering result: p-1 merges in non-decreasing height order."""

    p: int
    merges: tuple  # tuple of MergeRecord

    def __post_init__(self):
        heights = [m.height for m in self.merges]
        if heights and heights[0] < 0.0:
            raise AspectraError(f"negative merge height: {heights[0]}")
        for a, b in zip(heights, heights[1:]):
            if b < a:
                raise AspectraError(f"merge heights decrease: {a} -> {b}")

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def leaf_order(self):
        """Left-to-right leaf ordering for dendrogram layout."""
        if not self.merges:
            return list(range(self.p))
        children = {self.p + t: (m.left, m.right) for t, m in enumerate(self.merges)}

        def walk(node):
            if node < self.p:
                return [node]
            left, right = children[node]
            return walk(left) + walk(right)

        order = []
        merged_into = set()
        for m in self.merges:
            merged_into.add(m.left)
            merged_into.add(m.right)
        roots = [i for i in range(self.p + len(self.merges)) if i not in merged_into]
        for r in roots:
            order.extend(walk(r))
        return order

    def to_json_doc(self):
        return [
            {
                "left": m.left,
                "right": m.right,
                "height": _round12(m.height),
                "members": list(m.members),
            }
            for m in self.merges
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_json_doc(), indent=2)

    @staticmethod
    def from_json_doc(doc) -> "MergeTree":
        merges = tuple(
            MergeRecord(int(d["left"]), int(d["right"]), float(d["height"]), tuple(d["members"]))
            for d in doc
        )
        return MergeTree(len(merges) + 1, merges)


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


def correlation_matrix(table: NumericTable, method: str = "spearman") -> CorrelationMatrix:
    """Sample correlation of all column pairs.

    Spearman is Pearson on average ranks (ties get the mean rank).
    """
    if method not in ("pearson", "spearman"):
        raise AspectraError(f"correlation method must be pearson|spearman, got {method!r}")
    X = table.values
    if method == "spearman":
        X = np.column_stack([rankdata(X[:, j], method="average") for j in range(table.p)])
    Xc = X - X.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    for j, s in enumerate(norms):
        if s == 0.0:
            raise ZeroVarianceColumn(table.column_names[j])
    C = (Xc.T @ Xc) / np.outer(norms, norms)
    C = np.clip((C + C.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(C, 1.0)
    return CorrelationMatrix(C, method)


def cor_distance(C: CorrelationMatrix) -> np.ndarray:
    """Distance d(i,j) = 1 - |r(i,j)|; zero diagonal, entries in [0,1]."""
    D = 1.0 - np.abs(C.values)
    np.fill_diagonal(D, 0.0)
    return D


def agglomerative(D: np.ndarray, linkage: str = "complete") -> MergeTree:
    """Agglomerative clustering of a symmetric distance matrix.

    At each step the pair of clusters at minimal linkage distance merges, with
    ties broken by the lexicographically smallest (left id, right id). Cluster
    distances update by the Lance-Williams rules for the chosen linkage.
    """
    if linkage not in VALID_LINKAGES:
        raise AspectraError(f"linkage must be one of {VALID_LINKAGES}, got {linkage!r}")
    D = np.asarray(D, dtype=np.float64)
    p = D.shape[0]
    if D.shape != (p, p) or not np.allclose(D, D.T) or np.any(np.diag(D) != 0) or np.any(D < 0):
        raise AspectraError("distance matrix must be symmetric, nonnegative, zero-diagonal")
    if p == 1:
        return MergeTree(1, ())

    members = {i: (i,) for i in range(p)}
    dist = {}
    for i in range(p):
        for j in range(i + 1, p):
            dist[(i, j)] = D[i, j]
    active = list(range(p))
    merges = []
    for step in range(p - 1):
        best_pair = None
        best_d = np.inf
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                a, b = active[ai], active[bi]
                dv = dist[(a, b)]
                if dv < best_d or (dv == best_d and (a, b) < best_pair):
                    best_d = dv
                    best_pair = (a, b)
        a, b = best_pair
        new_id = p + step
        new_members = tuple(sorted(members[a] + members[b]))
        merges.append(MergeRecord(a, b, float(best_d), new_members))
        active.remove(a)
        active.remove(b)
        for k in active:
            da = dist.pop((min(a, k), max(a, k)))
            db = dist.pop((min(b, k), max(b, k)))
            if linkage == "complete":
                dn = max(da, db)
            elif linkage == "single":
                dn = min(da, db)
            else:
                na, nb = len(members[a]), len(members[b])
                dn = (na * da + nb * db) / (na + nb)
            dist[(k, new_id)] = dn
        del dist[(a, b)]
        members[new_id] = new_members
        del members[a], members[b]
        active.append(new_id)
    return MergeTree(p, tuple(merges))


def _group_name(members, column_names) -> str:
    name = "_".join(column_names[i] for i in members)
    return name[:40]


def partition_after_merges(tree: MergeTree, count: int, column_names) -> AspectPartition:
    """Partition induced by applying the first `count` merges of the tree."""
    if not 0 <= count <= len(tree.merges):
        raise AspectraError(
            f"merge count must be in [0, {len(tree.merges)}], got {count}"
        )
    parent = list(range(tree.p))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for m in tree.merges[:count]:
        ra = find(m.members[0])
        for i in m.members[1:]:
            rb = find(i)
            parent[rb] = ra
    clusters = {}
    for i in range(tree.p):
        clusters.setdefault(find(i), []).append(i)
    ordered = sorted(clusters.values(), key=lambda ms: ms[0])
    names = []
    for ms in ordered:
        name = _group_name(ms, column_names)
        k = 2
        base = name
        while name in names:
            name = f"{base}_{k}"
            k += 1
        names.append(name)
    return AspectPartition(tuple((n, tuple(ms)) for n, ms in zip(names, ordered)))


def cut_tree(tree: MergeTree, h: float, column_names) -> AspectPartition:
    """Clusters formed by all merges with height <= h."""
    count = int(np.searchsorted(tree.heights, h, side="right"))
    return partition_after_merges(tree, count, column_names)


def group_variables(table: NumericTable, cutoff: float, method: str = "spearman") -> AspectPartition:
    """Group columns so every within-group pair satisfies |r| >= cutoff.

    Complete-linkage clustering of the 1 - |r| distances, cut at 1 - cutoff;
    complete linkage makes the within-group bound exact.
    """
    if not 0.0 <= cutoff <= 1.0:
        raise AspectraError(f"cutoff must be in [0, 1], got {cutoff}")
    C = correlation_matrix(table, method)
    tree = agglomerative(cor_distance(C), "complete")
    return cut_tree(tree, 1.0 - cutoff, table.column_names)
