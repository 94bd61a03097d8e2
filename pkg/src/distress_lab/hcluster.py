"""Agglomerative hierarchical clustering with Lance-Williams distance updates."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidK, LabelCountMismatch, TooFewRows


class Linkage(enum.Enum):
    SINGLE = "single"
    COMPLETE = "complete"
    AVERAGE = "average"
    CENTROID = "centroid"
    WARD = "ward"

    @classmethod
    def parse(cls, name) -> "Linkage":
        if isinstance(name, cls):
            return name
        aliases = {"nearest": cls.SINGLE, "farthest": cls.COMPLETE, "upgma": cls.AVERAGE}
        key = str(name).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


# Monotone linkages: fusion heights never decrease.
MONOTONE = frozenset({Linkage.SINGLE, Linkage.COMPLETE, Linkage.AVERAGE, Linkage.WARD})


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple[Merge, ...]
    linkage: Linkage

    def children(self, node: int) -> tuple[int, int]:
        m = self.merges[node - self.n_leaves]
        return m.left, m.right

    @property
    def root(self) -> int:
        return 2 * self.n_leaves - 2


def distance_matrix(points) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of ``points``."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] < 2:
        raise TooFewRows(f"need at least 2 points, got {P.shape[0]}")
    if not np.all(np.isfinite(P)):
        raise ValueError("points contain non-finite values")
    diff = P[:, None, :] - P[None, :, :]
    D = np.sqrt(np.sum(diff**2, axis=-1))
    return (D + D.T) / 2


def _lance_williams(kind: Linkage, d_ki, d_kj, d_ij, n_i, n_j, n_k):
    if kind is Linkage.SINGLE:
        return np.minimum(d_ki, d_kj)
    if kind is Linkage.COMPLETE:
        return np.maximum(d_ki, d_kj)
    if kind is Linkage.AVERAGE:
        return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)
    if kind is Linkage.CENTROID:
        n = n_i + n_j
        return (n_i * d_ki + n_j * d_kj) / n - n_i * n_j * d_ij / n**2
    if kind is Linkage.WARD:
        n = n_i + n_j + n_k
        return ((n_i + n_k) * d_ki + (n_j + n_k) * d_kj - n_k * d_ij) / n
    raise ValueError(kind)


def agglomerate(dist, linkage=Linkage.SINGLE) -> Dendrogram:
    """Fuse the closest pair of clusters until one remains.

    Heights are the linkage distance at fusion: minimum, maximum and mean
    pairwise distance for single/complete/average, the distance between
    centroids for centroid linkage, and the increase in the error sum of
    squares for Ward. Ties go to the lexicographically smallest id pair.
    """
    kind = Linkage.parse(linkage)
    D0 = np.asarray(dist, dtype=float)
    n = D0.shape[0]
    if D0.ndim != 2 or D0.shape[1] != n:
        raise ValueError("distance matrix must be square")
    if n < 2:
        raise TooFewRows("need at least 2 observations")
    if np.max(np.abs(D0 - D0.T)) > 1e-10 or np.any(np.diag(D0) != 0) or np.any(D0 < 0):
        raise ValueError("not a valid distance matrix")

    # centroid and Ward recurrences are exact on squared distances;
    # Ward is held at half the squared distance so that values equal ESS increases
    if kind is Linkage.CENTROID:
        work0 = D0**2
    elif kind is Linkage.WARD:
        work0 = D0**2 / 2.0
    else:
        work0 = D0

    total = 2 * n - 1
    W = np.full((total, total), np.inf)
    W[:n, :n] = work0
    sizes = np.zeros(total, dtype=int)
    sizes[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True
    upper = np.triu(np.ones((total, total), dtype=bool), k=1)

    merges = []
    for step in range(n - 1):
        mask = upper & active[:, None] & active[None, :]
        cand = np.where(mask, W, np.inf)
        flat = int(np.argmin(cand))  # row-major: first hit is the smallest (i, j)
        i, j = divmod(flat, total)
        d_ij = W[i, j]
        new = n + step
        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        upd = _lance_williams(kind, W[others, i], W[others, j], d_ij, sizes[i], sizes[j], sizes[others])
        W[others, new] = upd
        W[new, others] = upd
        W[new, new] = 0.0
        active[i] = active[j] = False
        active[new] = True
        sizes[new] = sizes[i] + sizes[j]
        height = float(np.sqrt(max(d_ij, 0.0))) if kind is Linkage.CENTROID else float(d_ij)
        merges.append(Merge(int(i), int(j), height, int(sizes[new])))
    return Dendrogram(n, tuple(merges), kind)


def cut(d: Dendrogram, k: int) -> list[int]:
    """Cluster labels after undoing the last ``k - 1`` merges.

    Labels run 0..k-1 in order of each cluster's smallest member index.
    """
    n = d.n_leaves
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, m in enumerate(d.merges[: n - k]):
        new = n + step
        parent[find(m.left)] = new
        parent[find(m.right)] = new

    label_of_root: dict[int, int] = {}
    labels = []
    for leaf in range(n):
        r = find(leaf)
        if r not in label_of_root:
            label_of_root[r] = len(label_of_root)
        labels.append(label_of_root[r])
    return labels


def leaf_order(d: Dendrogram) -> list[int]:
    """Left-to-right leaf order of the merge tree."""
    out = []
    stack = [d.root]
    while stack:
        node = stack.pop()
        if node < d.n_leaves:
            out.append(node)
        else:
            left, right = d.children(node)
            stack.append(right)
            stack.append(left)
    return out


def _dot_quote(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(d: Dendrogram, labels: Sequence[str]) -> str:
    """Graphviz description of the merge tree, one node per cluster id."""
    if len(labels) != d.n_leaves:
        raise LabelCountMismatch(f"{len(labels)} labels for {d.n_leaves} leaves")
    lines = ["digraph dendrogram {", "  node [shape=box];"]
    for i, lab in enumerate(labels):
        lines.append(f"  n{i} [label={_dot_quote(lab)}];")
    for step, m in enumerate(d.merges):
        node = d.n_leaves + step
        lines.append(f'  n{node} [shape=ellipse, label="h={m.height:.6g}\\nsize={m.size}"];')
    for step, m in enumerate(d.merges):
        node = d.n_leaves + step
        lines.append(f"  n{node} -> n{m.left};")
        lines.append(f"  n{node} -> n{m.right};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def confusion_table(assign: Sequence[int], y: Sequence[int], k: int) -> list[list[int]]:
    """Rows: clusters 0..k-1; columns: label 0 (healthy), 1 (distressed)."""
    table = [[0, 0] for _ in range(k)]
    for a, lab in zip(assign, y):
        table[a][int(lab)] += 1
    return table


def misclassified(table: list[list[int]]) -> int:
    """Rows not matching their cluster's majority label."""
    return int(sum(sum(row) - max(row) for row in table))
