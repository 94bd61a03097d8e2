"""CHAID tree induction for a binary healthy/distressed target.

Continuous ratios are cut into equal-frequency bins, giving ordered
categories. At every node, adjacent categories are merged while the pair
that is least significantly different (largest Pearson chi-square p-value)
stays above ``alpha_merge``; the predictor with the smallest
Bonferroni-adjusted p-value then splits the node if it is below
``alpha_split``.

Intervals are half-open, ``lo <= x < hi``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateFeature, InvalidFeature
from .finstat import Dataset, Label, RatioVector
from .numcore import chi_square_sf


@dataclass(frozen=True)
class ChaidParams:
    alpha_merge: float = 0.05
    alpha_split: float = 0.05
    max_depth: int = 3
    min_node: int = 10
    min_child: int = 5
    bins: int = 10
    bonferroni: bool = True

    def __post_init__(self):
        if not (0 < self.alpha_merge < 1 and 0 < self.alpha_split < 1):
            raise ValueError("significance levels must lie in (0, 1)")
        if self.min_child > self.min_node:
            raise ValueError("min_child must not exceed min_node")
        if self.bins < 2:
            raise ValueError("bins must be at least 2")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")


@dataclass(frozen=True)
class CategoricalPredictor:
    name: str
    cut_points: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.cut_points, self.cut_points[1:])):
            raise ValueError("cut points must be strictly increasing")

    @property
    def n_categories(self) -> int:
        return len(self.cut_points) + 1

    def category_of(self, value: float) -> int:
        return int(np.searchsorted(self.cut_points, value, side="right"))

    def categories(self, values) -> np.ndarray:
        return np.searchsorted(np.asarray(self.cut_points), np.asarray(values, dtype=float), side="right")

    def interval(self, first: int, last: int | None = None) -> "Interval":
        last = first if last is None else last
        lo = -math.inf if first == 0 else self.cut_points[first - 1]
        hi = math.inf if last >= len(self.cut_points) else self.cut_points[last]
        return Interval(lo, hi)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x < self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def describe(self, name: str) -> str:
        if self.lo == -math.inf and self.hi == math.inf:
            return f"{name} any"
        if self.lo == -math.inf:
            return f"{name} < {_num(self.hi)}"
        if self.hi == math.inf:
            return f"{name} >= {_num(self.lo)}"
        return f"{_num(self.lo)} <= {name} < {_num(self.hi)}"


def _num(x: float) -> str:
    return f"{x:.6g}"


def discretize_values(name: str, values, bins: int) -> CategoricalPredictor:
    v = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError("bins must be at least 2")
    distinct = np.unique(v)
    if distinct.size < 2:
        raise DegenerateFeature(f"{name}: fewer than 2 distinct values")
    qs = np.quantile(v, np.arange(1, bins) / bins)
    cuts = np.unique(qs)
    # a cut at the minimum would leave the bottom category empty
    cuts = cuts[(cuts > distinct[0]) & (cuts <= distinct[-1])]
    if cuts.size == 0:
        cuts = distinct[1:2]
    return CategoricalPredictor(name, tuple(float(c) for c in cuts))


def discretize(ds: Dataset, feature: str, bins: int = 10) -> CategoricalPredictor:
    """Equal-frequency discretization of one ratio over the dataset."""
    ds.check_features([feature])
    return discretize_values(feature, ds.matrix([feature])[:, 0], bins)


# --- chi-square machinery -------------------------------------------------

def pearson_chi_square(table) -> tuple[float, int, float]:
    """Pearson statistic, degrees of freedom and p-value of a contingency table.

    Empty rows and columns are dropped; a table with fewer than two
    non-empty rows or columns carries no evidence and gets p = 1.
    """
    T = np.asarray(table, dtype=float)
    T = T[T.sum(axis=1) > 0][:, T.sum(axis=0) > 0]
    if T.shape[0] < 2 or T.shape[1] < 2:
        return 0.0, 0, 1.0
    n = T.sum()
    E = np.outer(T.sum(axis=1), T.sum(axis=0)) / n
    stat = float(np.sum((T - E) ** 2 / E))
    df = (T.shape[0] - 1) * (T.shape[1] - 1)
    return stat, df, chi_square_sf(stat, df)


def category_counts(codes, y, n_categories: int) -> np.ndarray:
    """(n_categories, 2) table of healthy/distressed counts per category."""
    counts = np.zeros((n_categories, 2), dtype=int)
    np.add.at(counts, (np.asarray(codes, dtype=int), np.asarray(y, dtype=int)), 1)
    return counts


def _group_table(counts, groups):
    return np.array([counts[list(g)].sum(axis=0) for g in groups])


def merge_groups(counts, alpha_merge: float) -> list[tuple[int, ...]]:
    """Merge adjacent categories while the least-different pair has p > alpha_merge.

    ``counts`` is a per-category (healthy, distressed) table; categories with
    no rows are left out of the result.
    """
    counts = np.asarray(counts)
    groups = [(c,) for c in range(len(counts)) if counts[c].sum() > 0]
    while len(groups) > 1:
        pvals = [
            pearson_chi_square(_group_table(counts, groups[i : i + 2]))[2]
            for i in range(len(groups) - 1)
        ]
        best = int(np.argmax(pvals))
        if pvals[best] <= alpha_merge:
            break
        groups[best : best + 2] = [groups[best] + groups[best + 1]]
    return groups


def merge_categories(pred: CategoricalPredictor, ds: Dataset, params: ChaidParams) -> list[tuple[int, ...]]:
    codes = pred.categories(ds.matrix([pred.name])[:, 0])
    return merge_groups(category_counts(codes, ds.y, pred.n_categories), params.alpha_merge)


def _enforce_min_child(counts, groups, min_child: int):
    groups = list(groups)
    while len(groups) > 1:
        sizes = [int(counts[list(g)].sum()) for g in groups]
        small = int(np.argmin(sizes))
        if sizes[small] >= min_child:
            break
        # fold the undersized group into its more similar neighbour
        candidates = [i for i in (small - 1, small + 1) if 0 <= i < len(groups)]
        scores = [
            pearson_chi_square(_group_table(counts, [groups[small], groups[i]]))[2]
            for i in candidates
        ]
        nb = candidates[int(np.argmax(scores))]
        lo, hi = sorted((small, nb))
        groups[lo : hi + 1] = [groups[lo] + groups[hi]]
    return groups


def bonferroni_multiplier(n_categories: int, n_groups: int) -> int:
    """Ways to merge ``n_categories`` ordered categories into ``n_groups`` contiguous groups."""
    return math.comb(n_categories - 1, n_groups - 1)


@dataclass(frozen=True)
class SplitChoice:
    predictor: int
    groups: tuple[tuple[int, ...], ...]
    chi2: float
    df: int
    p_value: float
    adjusted_p: float


def evaluate_predictor(codes, y, n_categories: int, params: ChaidParams) -> SplitChoice | None:
    counts = category_counts(codes, y, n_categories)
    present = int(np.sum(counts.sum(axis=1) > 0))
    if present < 2:
        return None
    groups = merge_groups(counts, params.alpha_merge)
    groups = _enforce_min_child(counts, groups, params.min_child)
    if len(groups) < 2:
        return None
    stat, df, p = pearson_chi_square(_group_table(counts, groups))
    adj = p * bonferroni_multiplier(present, len(groups)) if params.bonferroni else p
    return SplitChoice(-1, tuple(groups), stat, df, p, min(adj, 1.0))


def best_split(codes, y, predictors: Sequence[CategoricalPredictor], params: ChaidParams) -> SplitChoice | None:
    """Pick the most significant predictor for a node, or None.

    ``codes`` is an (n, len(predictors)) array of category indices for the
    node's rows and ``y`` their 0/1 labels.
    """
    codes = np.asarray(codes, dtype=int)
    y = np.asarray(y, dtype=int)
    if len(y) < params.min_node or len(np.unique(y)) < 2:
        return None
    best = None
    for j, pred in enumerate(predictors):
        choice = evaluate_predictor(codes[:, j], y, pred.n_categories, params)
        if choice is None:
            continue
        if best is None or choice.adjusted_p < best.adjusted_p:
            best = SplitChoice(j, choice.groups, choice.chi2, choice.df, choice.p_value, choice.adjusted_p)
    if best is not None and best.adjusted_p < params.alpha_split:
        return best
    return None


# --- tree -------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    feature: str
    groups: tuple[tuple[int, ...], ...]  # surviving categories per child
    ranges: tuple[tuple[int, int], ...]  # contiguous category cover per child, inclusive
    children: tuple[int, ...]
    chi2: float = math.nan
    df: int = 0
    p_value: float = math.nan


@dataclass(frozen=True)
class ChaidNode:
    id: int
    depth: int
    class_counts: tuple[int, int]  # (healthy, distressed)
    parent: int | None = None
    split: Split | None = None
    adjusted_p: float | None = None

    @property
    def n(self) -> int:
        return sum(self.class_counts)

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def label(self) -> Label:
        healthy, distressed = self.class_counts
        return Label.DISTRESSED if distressed >= healthy else Label.HEALTHY

    @property
    def confidence(self) -> float:
        return max(self.class_counts) / self.n if self.n else 0.0


@dataclass(frozen=True)
class ChaidTree:
    nodes: tuple[ChaidNode, ...]
    predictors: dict = field(default_factory=dict)  # name -> CategoricalPredictor
    params: ChaidParams = ChaidParams()

    @property
    def root(self) -> ChaidNode:
        return self.nodes[0]

    def leaves(self) -> list[ChaidNode]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def used_features(self) -> list[str]:
        seen = []
        for nd in self.nodes:
            if nd.split and nd.split.feature not in seen:
                seen.append(nd.split.feature)
        return seen


def _ranges_for(groups, n_categories):
    starts = [g[0] for g in groups]
    starts[0] = 0
    ends = [s - 1 for s in starts[1:]] + [n_categories - 1]
    return tuple(zip(starts, ends))


def grow_tree(ds: Dataset, features: Sequence[str] | None = None, params: ChaidParams = ChaidParams()) -> ChaidTree:
    features = list(ds.feature_names if features is None else features)
    ds.check_features(features)
    ds.require_both_classes()
    X = ds.matrix(features)
    y = ds.y.astype(int)

    predictors = []
    for j, code in enumerate(features):
        try:
            predictors.append(discretize_values(code, X[:, j], params.bins))
        except DegenerateFeature:
            predictors.append(None)
    usable = [j for j, p in enumerate(predictors) if p is not None]
    codes = np.column_stack([predictors[j].categories(X[:, j]) for j in usable]) if usable else np.empty((len(y), 0), int)
    preds = [predictors[j] for j in usable]

    nodes: list[dict] = [dict(id=0, depth=0, rows=np.arange(len(y)), parent=None)]
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        nd = nodes[nid]
        rows = nd["rows"]
        if nd["depth"] >= params.max_depth or not preds:
            continue
        choice = best_split(codes[rows], y[rows], preds, params)
        if choice is None:
            continue
        pred = preds[choice.predictor]
        ranges = _ranges_for(choice.groups, pred.n_categories)
        child_ids = []
        for lo, hi in ranges:
            col = codes[rows, choice.predictor]
            sub = rows[(col >= lo) & (col <= hi)]
            cid = len(nodes)
            nodes.append(dict(id=cid, depth=nd["depth"] + 1, rows=sub, parent=nid))
            child_ids.append(cid)
            queue.append(cid)
        nd["split"] = Split(pred.name, choice.groups, ranges, tuple(child_ids), choice.chi2, choice.df, choice.p_value)
        nd["adjusted_p"] = choice.adjusted_p

    built = tuple(
        ChaidNode(
            id=nd["id"],
            depth=nd["depth"],
            class_counts=(int(np.sum(y[nd["rows"]] == 0)), int(np.sum(y[nd["rows"]] == 1))),
            parent=nd["parent"],
            split=nd.get("split"),
            adjusted_p=nd.get("adjusted_p"),
        )
        for nd in nodes
    )
    return ChaidTree(built, {p.name: p for p in preds}, params)


def route_values(t: ChaidTree, lookup) -> int:
    """Walk the tree with ``lookup(feature) -> value``; returns the leaf id."""
    node = t.root
    while node.split is not None:
        sp = node.split
        cat = t.predictors[sp.feature].category_of(lookup(sp.feature))
        for (lo, hi), child in zip(sp.ranges, sp.children):
            if lo <= cat <= hi:
                node = t.nodes[child]
                break
        else:  # pragma: no cover - ranges cover every category by construction
            raise AssertionError("category not covered by split")
    return node.id


def classify(t: ChaidTree, rv: RatioVector) -> tuple[Label, int]:
    """Predicted label and leaf id for one ratio vector."""
    for code in t.used_features():
        if not rv.is_valid(code):
            raise InvalidFeature(code, "ratio is invalid in this vector")
    leaf = route_values(t, rv.get)
    return t.nodes[leaf].label, leaf


# --- rules and exports --------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    conjuncts: tuple[tuple[str, Interval], ...]
    label: Label
    support: int
    confidence: float
    leaf: int

    def fires(self, lookup) -> bool:
        return all(iv.contains(lookup(name)) for name, iv in self.conjuncts)

    def describe(self) -> str:
        cond = " and ".join(iv.describe(name) for name, iv in self.conjuncts) or "always"
        return f'if {cond} => "{label_word(self.label)}" (n={self.support}, confidence={self.confidence:.3f})'


def label_word(label: Label) -> str:
    return "unhealthy" if label is Label.DISTRESSED else "healthy"


def extract_rules(t: ChaidTree, predictors: dict | None = None) -> list[Rule]:
    """One rule per leaf, in depth-first leaf order."""
    predictors = t.predictors if predictors is None else predictors
    rules = []

    def walk(node, path):
        if node.split is None:
            rules.append(Rule(tuple(path.items()), node.label, node.n, node.confidence, node.id))
            return
        sp = node.split
        for (lo, hi), child in zip(sp.ranges, sp.children):
            iv = predictors[sp.feature].interval(lo, hi)
            sub = dict(path)
            sub[sp.feature] = sub[sp.feature].intersect(iv) if sp.feature in sub else iv
            walk(t.nodes[child], sub)

    walk(t.root, {})
    return rules


def rules_text(t: ChaidTree) -> str:
    """Nested if / else-if listing of the tree."""
    lines: list[str] = []

    def walk(node, indent):
        sp = node.split
        pad = "    " * indent
        for g, ((lo, hi), child) in enumerate(zip(sp.ranges, sp.children)):
            kw = "if" if g == 0 else "else if"
            cond = t.predictors[sp.feature].interval(lo, hi).describe(sp.feature)
            cnode = t.nodes[child]
            if cnode.is_leaf:
                lines.append(
                    f'{pad}{kw} {cond} => "{label_word(cnode.label)}"'
                    f"  [n={cnode.n}, confidence={cnode.confidence:.3f}]"
                )
            else:
                lines.append(f"{pad}{kw} {cond} then")
                walk(cnode, indent + 1)

    if t.root.is_leaf:
        r = t.root
        lines.append(f'always => "{label_word(r.label)}"  [n={r.n}, confidence={r.confidence:.3f}]')
    else:
        walk(t.root, 0)
    return "\n".join(lines) + "\n"


def tree_to_dict(t: ChaidTree) -> dict:
    nodes = []
    for nd in t.nodes:
        entry = {
            "id": nd.id,
            "depth": nd.depth,
            "parent": nd.parent,
            "class_counts": {"healthy": nd.class_counts[0], "distressed": nd.class_counts[1]},
            "label": nd.label.value,
        }
        if nd.split is not None:
            sp = nd.split
            pred = t.predictors[sp.feature]
            entry["split"] = {
                "feature": sp.feature,
                "chi2": sp.chi2,
                "df": sp.df,
                "p_value": sp.p_value,
                "adjusted_p": nd.adjusted_p,
                "branches": [
                    {
                        "child": c,
                        "categories": list(g),
                        "interval": _interval_json(pred.interval(lo, hi)),
                    }
                    for g, (lo, hi), c in zip(sp.groups, sp.ranges, sp.children)
                ],
            }
        nodes.append(entry)
    return {
        "params": {
            "alpha_merge": t.params.alpha_merge,
            "alpha_split": t.params.alpha_split,
            "max_depth": t.params.max_depth,
            "min_node": t.params.min_node,
            "min_child": t.params.min_child,
            "bins": t.params.bins,
            "bonferroni": t.params.bonferroni,
        },
        "predictors": {name: list(p.cut_points) for name, p in t.predictors.items()},
        "nodes": nodes,
    }


def _interval_json(iv: Interval) -> list:
    return [None if math.isinf(iv.lo) else iv.lo, None if math.isinf(iv.hi) else iv.hi]


def tree_to_dot(t: ChaidTree) -> str:
    lines = ["digraph chaid {", "  node [shape=box];"]
    for nd in t.nodes:
        h, d = nd.class_counts
        text = f"node {nd.id}\\nhealthy={h} distressed={d}\\n{label_word(nd.label)}"
        if nd.split is not None:
            text += f"\\nsplit {nd.split.feature} (adj. p={nd.adjusted_p:.4g})"
        lines.append(f'  n{nd.id} [label="{text}"];')
    for nd in t.nodes:
        if nd.split is None:
            continue
        pred = t.predictors[nd.split.feature]
        for (lo, hi), c in zip(nd.split.ranges, nd.split.children):
            cond = pred.interval(lo, hi).describe(nd.split.feature)
            lines.append(f'  n{nd.id} -> n{c} [label="{cond}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def reference_tree() -> ChaidTree:
    """A fixed two-level rule set: I1 cut at 0.04, then I2 at 0.03 below it
    and I13 at 44.17 above it. Leaf counts are unit placeholders that only carry
    the predicted label.
    """
    H, D = (1, 0), (0, 1)
    preds = {
        "I1": CategoricalPredictor("I1", (0.04,)),
        "I2": CategoricalPredictor("I2", (0.03,)),
        "I13": CategoricalPredictor("I13", (44.17,)),
    }
    two = ((0,), (1,))
    cover = ((0, 0), (1, 1))
    nodes = (
        ChaidNode(0, 0, (2, 2), None, Split("I1", two, cover, (1, 2))),
        ChaidNode(1, 1, (1, 1), 0, Split("I2", two, cover, (3, 4))),
        ChaidNode(2, 1, (1, 1), 0, Split("I13", two, cover, (5, 6))),
        ChaidNode(3, 2, D, 1),
        ChaidNode(4, 2, H, 1),
        ChaidNode(5, 2, H, 2),
        ChaidNode(6, 2, D, 2),
    )
    return ChaidTree(nodes, preds)
