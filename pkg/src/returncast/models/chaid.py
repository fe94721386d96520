"""Multiway tree for a continuous target: decile bins, F-test merge/split.

Each split bins one predictor into deciles, merges adjacent bins that are
statistically alike, and keeps the split only if the across-group ANOVA
survives a Bonferroni-adjusted significance test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ..core import FeatureMatrix
from .base import FittedModel, ModelKind, ModelSpec, register_fitter, require_rows

DEFAULT_MIN_SEGMENT = 5
DEFAULT_MERGE_ALPHA = 0.05
DEFAULT_SPLIT_ALPHA = 0.05
DEFAULT_MAX_DEPTH = 4
DECILES = tuple(i / 10.0 for i in range(1, 10))


def _anova_p(groups: list[np.ndarray]) -> float:
    """One-way ANOVA F-test p-value across groups of target values."""
    groups = [g for g in groups if len(g)]
    k = len(groups)
    n = sum(len(g) for g in groups)
    if k < 2 or n - k <= 0:
        return 1.0
    grand = float(np.concatenate(groups).mean())
    ssb = sum(len(g) * (float(g.mean()) - grand) ** 2 for g in groups)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    if ssw <= 1e-300:
        return 0.0 if ssb > 1e-12 else 1.0
    f_stat = (ssb / (k - 1)) / (ssw / (n - k))
    return float(stats.f.sf(f_stat, k - 1, n - k))


def _decile_edges(x: np.ndarray) -> np.ndarray:
    """Distinct interior bin edges from order statistics.

    Order statistics (not interpolated quantiles) keep the binning
    equivariant under strictly monotone predictor transforms.
    """
    edges = np.quantile(x, DECILES, method="lower")
    return np.unique(edges)


def _bin_ids(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.searchsorted(edges, x, side="right")


@dataclass(frozen=True)
class _MergeResult:
    groups: tuple[tuple[int, ...], ...]  # adjacent bin ids, merged
    p_adjusted: float


def _merge_bins(
    bins: np.ndarray,
    y: np.ndarray,
    n_bins: int,
    min_segment: int,
    merge_alpha: float,
) -> Optional[_MergeResult]:
    """Merge adjacent bins that the F-test cannot distinguish.

    Undersized groups are folded into their most-similar neighbor first.
    Returns None when everything collapses into a single group.
    """
    # bin 0 (strictly below the lowest edge) is empty when that edge is the
    # minimum; seed the merge from the occupied bins only
    groups: list[list[int]] = [[b] for b in range(n_bins) if np.any(bins == b)]
    occupied = len(groups)

    def group_values(g: list[int]) -> np.ndarray:
        return y[np.isin(bins, g)]

    while len(groups) > 1:
        pair_ps = [
            _anova_p([group_values(groups[i]), group_values(groups[i + 1])])
            for i in range(len(groups) - 1)
        ]
        multiplier = len(pair_ps)
        undersized = [i for i, g in enumerate(groups) if len(group_values(g)) < min_segment]
        if undersized:
            i = undersized[0]
            # merge toward the more similar neighbor
            left_p = pair_ps[i - 1] if i > 0 else -1.0
            right_p = pair_ps[i] if i < len(pair_ps) else -1.0
            at = i - 1 if left_p >= right_p else i
        else:
            best = max(range(len(pair_ps)), key=lambda i: pair_ps[i])
            if min(1.0, pair_ps[best] * multiplier) <= merge_alpha:
                break
            at = best
        groups[at] = groups[at] + groups[at + 1]
        del groups[at + 1]

    if len(groups) < 2:
        return None
    final = [group_values(g) for g in groups]
    p_raw = _anova_p(final)
    # Bonferroni cost of reducing the occupied ordered bins to these groups
    p_adj = min(1.0, p_raw * math.comb(occupied - 1, len(groups) - 1))
    return _MergeResult(groups=tuple(tuple(g) for g in groups), p_adjusted=p_adj)


@dataclass(frozen=True, eq=False)
class ChaidNode:
    value: float
    feature: Optional[int] = None
    edges: Optional[np.ndarray] = None
    groups: tuple[tuple[int, ...], ...] = ()
    children: tuple["ChaidNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def child_for(self, x: float) -> "ChaidNode":
        b = int(np.searchsorted(self.edges, x, side="right"))
        for g, child in zip(self.groups, self.children):
            if b in g:
                return child
        # value beyond any training bin: clamp to the nearest outer group
        return self.children[0] if b < self.groups[0][0] else self.children[-1]


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    min_segment: int,
    merge_alpha: float,
    split_alpha: float,
    max_depth: int,
) -> ChaidNode:
    leaf = ChaidNode(value=float(y.mean()))
    if depth >= max_depth or len(y) < 2 * min_segment:
        return leaf

    best: Optional[tuple[float, int, np.ndarray, _MergeResult]] = None
    for j in range(X.shape[1]):
        edges = _decile_edges(X[:, j])
        n_bins = len(edges) + 1
        if n_bins < 2:
            continue
        merged = _merge_bins(_bin_ids(X[:, j], edges), y, n_bins, min_segment, merge_alpha)
        if merged is None:
            continue
        if best is None or merged.p_adjusted < best[0] - 1e-15:
            best = (merged.p_adjusted, j, edges, merged)

    if best is None or best[0] >= split_alpha:
        return leaf
    _, j, edges, merged = best
    bins = _bin_ids(X[:, j], edges)
    children = []
    for g in merged.groups:
        mask = np.isin(bins, list(g))
        children.append(
            _grow(X[mask], y[mask], depth + 1, min_segment, merge_alpha, split_alpha, max_depth)
        )
    return ChaidNode(
        value=leaf.value,
        feature=j,
        edges=edges,
        groups=merged.groups,
        children=tuple(children),
    )


class ChaidModel(FittedModel):
    def __init__(self, spec: ModelSpec, predictor_names, window, root: ChaidNode):
        super().__init__(spec, predictor_names, window)
        self.root = root

    def _predict_one(self, x: np.ndarray) -> float:
        node = self.root
        while not node.is_leaf:
            node = node.child_for(float(x[node.feature]))
        return node.value

    def _predict_raw(self, matrix: FeatureMatrix) -> np.ndarray:
        X = matrix.X
        return np.array([self._predict_one(X[i]) for i in range(len(X))])


def fit_chaid(spec: ModelSpec, train: FeatureMatrix) -> ChaidModel:
    min_segment = int(spec.param("min_segment", DEFAULT_MIN_SEGMENT))
    merge_alpha = float(spec.param("merge_alpha", DEFAULT_MERGE_ALPHA))
    split_alpha = float(spec.param("split_alpha", DEFAULT_SPLIT_ALPHA))
    max_depth = int(spec.param("max_depth", DEFAULT_MAX_DEPTH))
    require_rows(spec.kind, train, 2 * min_segment)
    root = _grow(train.X, train.y, 0, min_segment, merge_alpha, split_alpha, max_depth)
    return ChaidModel(spec, train.predictor_names, train.interval, root)


register_fitter(ModelKind.CHAID, fit_chaid)
