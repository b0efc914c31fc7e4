"""Feature pooling and standardization.

Raw per-minute columns are pooled into a named design matrix at one of two
granularities:

* ``minute`` — one row per record; daily pooled features (switch frequency,
  usage percentage) are broadcast to every minute of their day.
* ``daily`` — one row per (player, day); per-minute columns are aggregated
  by their daily mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AlreadyStandardized,
    EmptyTable,
    TooFewRows,
    UnknownFeatureName,
)
from .records import FLAG_NAMES, RESOURCES, DatasetTable

MINUTE_FEATURES: tuple[str, ...] = (
    tuple(f"status_{r.value}" for r in RESOURCES)
    + ("humidity", "temperature", "solar_radiation")
    + FLAG_NAMES
    + ("portal_visits", "points_total", "rank")
)

DAILY_POOLED_FEATURES: tuple[str, ...] = tuple(
    f"switch_freq_{r.value}" for r in RESOURCES
) + tuple(f"usage_pct_{r.value}" for r in RESOURCES)

ALL_FEATURES: tuple[str, ...] = MINUTE_FEATURES + DAILY_POOLED_FEATURES

# Independent features only (no points/rank): used for clustering defaults.
DEFAULT_CLUSTERING_FEATURES: tuple[str, ...] = DAILY_POOLED_FEATURES + ("portal_visits",)

# Default correlation/graph feature set: statuses, weather, calendar flags.
# Game-state columns (points, rank, portal visits) are available but not
# part of the default dependency graph.
DEFAULT_GRAPH_FEATURES: tuple[str, ...] = (
    tuple(f"status_{r.value}" for r in RESOURCES)
    + ("humidity", "temperature", "solar_radiation")
    + FLAG_NAMES
)


@dataclass
class FeatureSpec:
    """Which features to emit and at which granularity."""

    features: tuple[str, ...]
    granularity: str = "daily"  # "daily" | "minute"

    def __post_init__(self) -> None:
        self.features = tuple(self.features)
        unknown = [f for f in self.features if f not in ALL_FEATURES]
        if unknown:
            raise UnknownFeatureName(f"unknown feature name(s): {unknown}")
        if self.granularity not in ("daily", "minute"):
            raise UnknownFeatureName(f"unknown granularity: {self.granularity!r}")


@dataclass
class FeatureMatrix:
    """N×p design matrix with named columns.

    ``row_players``/``row_days`` identify each row's (player, day) origin.
    After :func:`standardize`, ``column_means``/``column_stds`` hold the
    inverse-transform parameters and ``constant_columns`` names the columns
    that were zeroed because they had no variance.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    standardized: bool = False
    column_means: np.ndarray | None = None
    column_stds: np.ndarray | None = None
    constant_columns: frozenset[str] = frozenset()
    row_players: tuple[str, ...] | None = None
    row_days: tuple[str, ...] | None = None

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.column_names.index(name)]
        except ValueError:
            raise UnknownFeatureName(f"no column named {name!r}") from None


def raw_columns(table: DatasetTable) -> dict[str, np.ndarray]:
    """Columnar view of a table's per-minute fields (cached on the table)."""
    cache = table._column_cache
    if "player_id" in cache:
        return cache
    n = len(table.records)
    cols: dict[str, list] = {name: [] for name in MINUTE_FEATURES}
    players: list[str] = []
    days: list[str] = []
    for rec in table.records:
        players.append(rec.player_id)
        days.append(rec.day_key())
        for i, r in enumerate(RESOURCES):
            cols[f"status_{r.value}"].append(rec.statuses[i])
        cols["humidity"].append(rec.humidity)
        cols["temperature"].append(rec.temperature)
        cols["solar_radiation"].append(rec.solar_radiation)
        for name in FLAG_NAMES:
            cols[name].append(getattr(rec, name))
        cols["portal_visits"].append(rec.portal_visits)
        cols["points_total"].append(rec.points_total)
        cols["rank"].append(rec.rank)
    cache["player_id"] = players
    cache["day"] = days
    for name, values in cols.items():
        cache[name] = np.asarray(values, dtype=np.float64)
    # contiguous (player, day) group start offsets; table is sorted
    starts = [0]
    for i in range(1, n):
        if players[i] != players[i - 1] or days[i] != days[i - 1]:
            starts.append(i)
    cache["_group_starts"] = np.asarray(starts, dtype=np.intp)
    return cache


def _group_slices(cache: dict) -> list[slice]:
    starts = cache["_group_starts"]
    n = len(cache["player_id"])
    ends = np.append(starts[1:], n)
    return [slice(int(a), int(b)) for a, b in zip(starts, ends)]


def _daily_pooled(cache: dict, slices: list[slice]) -> dict[str, np.ndarray]:
    pooled: dict[str, np.ndarray] = {}
    for r in RESOURCES:
        status = cache[f"status_{r.value}"]
        switches = np.empty(len(slices))
        usage_pct = np.empty(len(slices))
        for g, sl in enumerate(slices):
            day_status = status[sl]
            switches[g] = np.count_nonzero(np.diff(day_status)) if day_status.size > 1 else 0.0
            usage_pct[g] = day_status.mean()
        pooled[f"switch_freq_{r.value}"] = switches
        pooled[f"usage_pct_{r.value}"] = usage_pct
    return pooled


def pool_features(table: DatasetTable, spec: FeatureSpec) -> FeatureMatrix:
    """Build the named design matrix described by ``spec``.

    Daily granularity yields one row per (player, day); minute granularity
    one row per record. Column order follows ``spec.features``.
    """
    if not table.records:
        raise EmptyTable("cannot pool features from an empty table")
    cache = raw_columns(table)
    slices = _group_slices(cache)
    need_pooled = any(f in DAILY_POOLED_FEATURES for f in spec.features)
    pooled = _daily_pooled(cache, slices) if need_pooled else {}

    if spec.granularity == "daily":
        counts = np.asarray([sl.stop - sl.start for sl in slices], dtype=np.float64)
        columns = []
        for name in spec.features:
            if name in DAILY_POOLED_FEATURES:
                columns.append(pooled[name])
            else:
                col = cache[name]
                sums = np.add.reduceat(col, cache["_group_starts"])
                columns.append(sums / counts)
        row_players = tuple(cache["player_id"][sl.start] for sl in slices)
        row_days = tuple(cache["day"][sl.start] for sl in slices)
    else:
        n = len(table.records)
        columns = []
        for name in spec.features:
            if name in DAILY_POOLED_FEATURES:
                broadcast = np.empty(n)
                for g, sl in enumerate(slices):
                    broadcast[sl] = pooled[name][g]
                columns.append(broadcast)
            else:
                columns.append(cache[name])
        row_players = tuple(cache["player_id"])
        row_days = tuple(cache["day"])

    values = np.column_stack(columns) if columns else np.empty((0, 0))
    return FeatureMatrix(
        values=values,
        column_names=spec.features,
        row_players=row_players,
        row_days=row_days,
    )


def standardize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Zero-mean, unit-sample-std copy of ``matrix``.

    Constant columns are mapped to all-zero and reported in
    ``constant_columns`` instead of raising; downstream sparse regressions
    simply never select them.
    """
    if matrix.standardized:
        raise AlreadyStandardized("matrix is already standardized")
    if matrix.n_rows < 2:
        raise TooFewRows(f"need at least 2 rows to standardize, got {matrix.n_rows}")
    values = matrix.values
    means = values.mean(axis=0)
    stds = values.std(axis=0, ddof=1)
    constant = stds == 0.0
    safe = np.where(constant, 1.0, stds)
    out = (values - means) / safe
    if constant.any():
        out[:, constant] = 0.0
    return FeatureMatrix(
        values=out,
        column_names=matrix.column_names,
        standardized=True,
        column_means=means,
        column_stds=stds,
        constant_columns=frozenset(
            name for name, const in zip(matrix.column_names, constant) if const
        ),
        row_players=matrix.row_players,
        row_days=matrix.row_days,
    )


def destandardize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Invert :func:`standardize` using the stored means/stds."""
    if not matrix.standardized:
        raise ValueError("matrix is not standardized")
    values = matrix.values * matrix.column_stds + matrix.column_means
    return FeatureMatrix(
        values=values,
        column_names=matrix.column_names,
        row_players=matrix.row_players,
        row_days=matrix.row_days,
    )


def player_day_segments(
    table: DatasetTable, names: Sequence[str]
) -> list[tuple[str, str, dict[str, np.ndarray]]]:
    """Per-(player, day) contiguous minute series for the named raw columns.

    Used to build lagged designs that never cross a day boundary.
    """
    unknown = [n for n in names if n not in MINUTE_FEATURES]
    if unknown:
        raise UnknownFeatureName(f"unknown minute feature(s): {unknown}")
    cache = raw_columns(table)
    segments = []
    for sl in _group_slices(cache):
        series = {name: cache[name][sl] for name in names}
        segments.append((cache["player_id"][sl.start], cache["day"][sl.start], series))
    return segments
