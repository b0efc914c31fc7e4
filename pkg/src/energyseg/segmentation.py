"""Supervised rank-band classes and cluster↔class matching.

Players are classed Low/Medium/High efficiency by where their per-minute
leaderboard ranks fall inside three near-equal integer bands of the observed
rank range (rank 1 — the best — lies in the High band). Unsupervised
clusters are then labelled by matching their feature-correlation matrices to
the per-class matrices with the RV coefficient, maximizing total similarity
over all bijections.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import IntEnum
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyBuckets,
    EmptyTable,
    FeatureOrderMismatch,
    MissingRank,
    TooFewRows,
    ZeroMatrix,
)
from .features import FeatureMatrix, raw_columns
from .records import DatasetTable


class ClassLabel(IntEnum):
    """Efficiency classes, totally ordered LOW < MEDIUM < HIGH."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "ClassLabel":
        try:
            return cls[label.upper()]
        except KeyError:
            raise MissingRank(f"unknown class label {label!r}") from None


@dataclass(frozen=True)
class RankBands:
    """Three integer bands over [rank_min, rank_max], widths differing ≤ 1.

    ``boundaries = (b1, b2)``: ranks ≤ b1 are High, ranks in (b1, b2] are
    Medium, ranks > b2 are Low. With ``invert_rank`` the orientation flips
    (largest rank = best).
    """

    rank_min: int
    rank_max: int
    boundaries: tuple[int, int]
    invert_rank: bool = False

    def band_of(self, rank: int) -> ClassLabel:
        if self.invert_rank:
            rank = self.rank_min + self.rank_max - rank
        if rank <= self.boundaries[0]:
            return ClassLabel.HIGH
        if rank <= self.boundaries[1]:
            return ClassLabel.MEDIUM
        return ClassLabel.LOW


def make_rank_bands(rank_min: int, rank_max: int, invert_rank: bool = False) -> RankBands:
    span = rank_max - rank_min + 1
    base, rem = divmod(span, 3)
    widths = [base + (1 if i < rem else 0) for i in range(3)]
    b1 = rank_min + widths[0] - 1
    b2 = b1 + widths[1]
    return RankBands(rank_min=rank_min, rank_max=rank_max, boundaries=(b1, b2),
                     invert_rank=invert_rank)


def assign_classes(
    table: DatasetTable, invert_rank: bool = False
) -> tuple[dict[str, ClassLabel], RankBands]:
    """Per-player efficiency class from rank-band occupancy counts.

    Ties in the band counts resolve toward the more efficient class.
    """
    if not table.records:
        raise EmptyTable("cannot assign classes on an empty table")
    cache = raw_columns(table)
    ranks = cache["rank"]
    if not np.isfinite(ranks).all() or (ranks < 1).any():
        raise MissingRank("every record needs a rank >= 1")
    bands = make_rank_bands(int(ranks.min()), int(ranks.max()), invert_rank)

    # vectorized band id per record: 2=High, 1=Medium, 0=Low
    r = ranks.astype(np.int64)
    if invert_rank:
        r = bands.rank_min + bands.rank_max - r
    band = np.where(r <= bands.boundaries[0], 2, np.where(r <= bands.boundaries[1], 1, 0))

    players = np.asarray(cache["player_id"])
    result: dict[str, ClassLabel] = {}
    for player in dict.fromkeys(cache["player_id"]):
        counts = np.bincount(band[players == player], minlength=3)
        # argmax with ties toward the more efficient class
        best = max((counts[2], 2), (counts[1], 1), (counts[0], 0))[1]
        result[player] = ClassLabel(best)
    return result, bands


def correlation_matrix(matrix: FeatureMatrix) -> np.ndarray:
    """Pearson correlations with unit diagonal; constant columns zeroed."""
    values = matrix.values
    n = values.shape[0]
    if n < 2:
        raise TooFewRows(f"need at least 2 rows, got {n}")
    means = values.mean(axis=0)
    centered = values - means
    norms = np.sqrt((centered**2).sum(axis=0))
    constant = norms == 0.0
    if constant.any():
        names = [matrix.column_names[i] for i in np.flatnonzero(constant)]
        warnings.warn(f"constant columns have undefined correlations: {names}",
                      RuntimeWarning, stacklevel=2)
    safe = np.where(constant, 1.0, norms)
    z = centered / safe
    corr = z.T @ z
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def rv_coefficient(a: np.ndarray, b: np.ndarray) -> float:
    """Matrix similarity trace(AB)/√(trace(A²)·trace(B²)) for symmetric PSD."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"need equal square matrices, got {a.shape} vs {b.shape}")
    aa = float(np.einsum("ij,ij->", a, a))
    bb = float(np.einsum("ij,ij->", b, b))
    if aa == 0.0 or bb == 0.0:
        raise ZeroMatrix("RV coefficient is undefined for an all-zero matrix")
    ab = float(np.einsum("ij,ji->", a, b))
    return ab / np.sqrt(aa * bb)


@dataclass
class ClusterLabelling:
    """Bijection from cluster ids to class labels with its RV evidence."""

    mapping: dict[int, ClassLabel]
    similarity_matrix: np.ndarray  # rows: cluster id, cols: ClassLabel order
    method: str = "RV"


def label_clusters(
    cluster_corrs: Sequence[np.ndarray],
    class_corrs: Mapping[ClassLabel, np.ndarray],
) -> ClusterLabelling:
    """Match clusters to classes by maximizing total RV similarity."""
    if len(cluster_corrs) != 3 or len(class_corrs) != 3:
        raise DimensionMismatch(
            f"need exactly 3 cluster and 3 class matrices, got "
            f"{len(cluster_corrs)} and {len(class_corrs)}"
        )
    shape = cluster_corrs[0].shape
    all_mats = list(cluster_corrs) + [class_corrs[label] for label in ClassLabel]
    if any(m.shape != shape for m in all_mats):
        raise FeatureOrderMismatch(
            "cluster and class matrices must share one feature set and order"
        )
    similarity = np.empty((3, 3))
    for c in range(3):
        for label in ClassLabel:
            similarity[c, int(label)] = rv_coefficient(cluster_corrs[c], class_corrs[label])

    best_perm = None
    best_total = -np.inf
    for perm in permutations(range(3)):
        total = sum(similarity[c, perm[c]] for c in range(3))
        if total > best_total:
            best_total = total
            best_perm = perm
    mapping = {c: ClassLabel(best_perm[c]) for c in range(3)}
    return ClusterLabelling(mapping=mapping, similarity_matrix=similarity)


@dataclass
class ProportionReport:
    """Per-player cluster occupancy and its histogram per (class, cluster)."""

    bucket_edges: tuple[float, ...]
    per_player: dict[str, np.ndarray]  # player -> k proportions, sum 1
    counts: dict[ClassLabel, np.ndarray]  # class -> k × n_buckets histogram


def proportion_buckets(
    class_map: Mapping[str, ClassLabel],
    players: Sequence[str],
    assignments: Sequence[int],
    k: int,
    bucket_edges: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
) -> ProportionReport:
    """Histogram, per (class, cluster), of players' in-cluster data shares.

    Buckets are [e0,e1), …, [e_{m-1}, e_m] with the last edge inclusive.
    """
    edges = tuple(float(e) for e in bucket_edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise EmptyBuckets(f"bucket edges must be strictly increasing, got {edges}")
    if len(players) != len(assignments):
        raise DimensionMismatch(
            f"{len(players)} players vs {len(assignments)} assignments"
        )
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DimensionMismatch(f"assignments must lie in [0, {k})")

    player_arr = np.asarray(players)
    per_player: dict[str, np.ndarray] = {}
    counts = {label: np.zeros((k, len(edges) - 1), dtype=np.int64) for label in ClassLabel}
    n_buckets = len(edges) - 1
    for player in dict.fromkeys(players):
        own = labels[player_arr == player]
        props = np.bincount(own, minlength=k) / len(own)
        per_player[player] = props
        label = class_map[player]
        for cluster in range(k):
            bucket = int(np.searchsorted(edges, props[cluster], side="right") - 1)
            bucket = min(max(bucket, 0), n_buckets - 1)
            if props[cluster] < edges[0] or props[cluster] > edges[-1]:
                continue  # outside the histogram domain
            counts[label][cluster, bucket] += 1
    return ProportionReport(bucket_edges=edges, per_player=per_player, counts=counts)
