######################################################################
# Copyright 2024 The netsensor Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
######################################################################

"""
Sentiment sensing

Messages are aggregated per hour and grid cell; a cell raises an alert
when its mean sentiment stays far below its own recent baseline for
several consecutive hours.

Detection tests blocks of ``persistence_hours`` consecutive hours. The
baseline of a block is the median and normal-scaled MAD of the cell's
hourly means in the ``baseline_window_h`` hours before the block. Every
hour of the block needs ``min_count`` messages and a mean at or below
median - k_mad * MAD. Overlapping and adjacent qualifying blocks merge
into one alert window.
"""
import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import geojson
import numpy as np
import pandas as pd
from scipy import stats

from netsensor import config
from netsensor.geo import GridSpec, assign_cell
from netsensor.models import ArgumentError

logger = logging.getLogger("netsensor")

ALERT_COLUMNS = ["row", "col", "start_h", "end_h", "severity", "count"]
HOUR_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CellStat:
    """Messages of one cell in one hour"""

    count: int
    mean_sentiment: Optional[float]
    positive: int = 0
    negative: int = 0

    def __post_init__(self):
        if (self.count > 0) != (self.mean_sentiment is not None):
            raise ArgumentError("mean_sentiment must be present exactly when count > 0")


@dataclass
class GridSnapshot:
    """Cell statistics of one hour; only cells with messages are listed"""

    hour_start: float
    cells: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        """Messages in the hour"""
        return sum(stat.count for stat in self.cells.values())


@dataclass(frozen=True)
class Alert:
    """A cell whose sentiment dropped below its baseline"""

    cell: tuple
    start_h: float
    end_h: float
    severity: float
    count: int

    @property
    def window(self) -> tuple:
        """[start_h, end_h]"""
        return self.start_h, self.end_h

    def as_row(self) -> dict:
        """Alert table row"""
        return {
            "row": self.cell[0],
            "col": self.cell[1],
            "start_h": self.start_h,
            "end_h": self.end_h,
            "severity": self.severity,
            "count": self.count,
        }


@dataclass
class DetectionReport:
    """Alerts plus the cells that never had enough baseline history"""

    alerts: list
    skipped_cells: list
    evaluated_blocks: int = 0
    skipped_blocks: int = 0


######################################################################
#  A G G R E G A T I O N
######################################################################
def grid_aggregate(points: Iterable, g: GridSpec, hour_h: float = 1.0) -> tuple:
    """Counts and mean scores per hour and cell

    :param points: (offset_h, GeoPoint, relative score) triples
    :return: (snapshots ordered by hour, number of off-grid points)
    """
    if not hour_h > 0:
        raise ArgumentError(f"hour_h must be positive, got {hour_h}")
    rows = []
    dropped = 0
    for offset_h, point, score in points:
        cell = assign_cell(point, g) if point is not None else None
        if cell is None:
            dropped += 1
            continue
        rows.append((math.floor(offset_h / hour_h), cell[0], cell[1], float(score)))
    if dropped:
        logger.debug("Dropped %d messages outside the grid", dropped)
    if not rows:
        return [], dropped
    frame = pd.DataFrame(rows, columns=["hour", "row", "col", "score"])
    frame = frame.sort_values(["hour", "row", "col", "score"], kind="mergesort")
    frame["positive"] = frame["score"] > 0
    frame["negative"] = frame["score"] < 0
    grouped = frame.groupby(["hour", "row", "col"]).agg(
        count=("score", "size"),
        mean=("score", "mean"),
        positive=("positive", "sum"),
        negative=("negative", "sum"),
    )
    snapshots = {}
    for (hour, row, col), stat in grouped.iterrows():
        snapshot = snapshots.setdefault(hour, GridSnapshot(hour_start=float(hour * hour_h)))
        snapshot.cells[(int(row), int(col))] = CellStat(
            int(stat["count"]), float(stat["mean"]), int(stat["positive"]), int(stat["negative"])
        )
    return [snapshots[hour] for hour in sorted(snapshots)], dropped


######################################################################
#  D E T E C T I O N
######################################################################
def _cell_series(snapshots: list) -> dict:
    series = {}
    for snapshot in sorted(snapshots, key=lambda snap: snap.hour_start):
        for cell, stat in snapshot.cells.items():
            if stat.count > 0:
                series.setdefault(cell, []).append((snapshot.hour_start, stat))
    return series


def _consecutive(hours: list, start: int, length: int, hour_h: float) -> bool:
    if start + length > len(hours):
        return False
    return all(
        abs(hours[index + 1] - hours[index] - hour_h) <= HOUR_TOLERANCE
        for index in range(start, start + length - 1)
    )


def detect_with_report(
    snapshots: list,
    min_count: int = config.MIN_COUNT,
    k_mad: float = config.K_MAD,
    persistence_hours: int = config.PERSISTENCE_HOURS,
    baseline_window_h: int = config.BASELINE_WINDOW_HOURS,
    hour_h: float = 1.0,
    min_history: int = config.MIN_HISTORY_HOURS,
    mad_floor: float = config.MAD_FLOOR,
    require_composition_shift: bool = False,
) -> DetectionReport:
    """Runs the detector and reports the cells it could not evaluate"""
    if baseline_window_h < 24:
        raise ArgumentError(f"baseline_window_h must cover a day, got {baseline_window_h}")
    if persistence_hours < 1 or min_count < 1:
        raise ArgumentError("persistence_hours and min_count must be at least 1")
    if not k_mad > 0:
        raise ArgumentError(f"k_mad must be positive, got {k_mad}")
    if not mad_floor > 0:
        raise ArgumentError(f"mad_floor must be positive, got {mad_floor}")

    alerts, skipped_cells = [], []
    evaluated = skipped = 0
    for cell, series in sorted(_cell_series(snapshots).items()):
        hours = [hour for hour, _ in series]
        means = np.array([stat.mean_sentiment for _, stat in series])
        depth = {}
        cell_evaluated = False
        for start in range(len(series)):
            if not _consecutive(hours, start, persistence_hours, hour_h):
                continue
            block = [stat for _, stat in series[start:start + persistence_hours]]
            first = bisect.bisect_left(hours, hours[start] - baseline_window_h - HOUR_TOLERANCE)
            baseline = means[first:start]
            if len(baseline) < min_history:
                skipped += 1
                continue
            evaluated += 1
            cell_evaluated = True
            if any(stat.count < min_count for stat in block):
                continue
            median = float(np.median(baseline))
            spread = max(float(stats.median_abs_deviation(baseline, scale="normal")), mad_floor)
            threshold = median - k_mad * spread
            if any(stat.mean_sentiment > threshold for stat in block):
                continue
            if require_composition_shift and any(stat.negative <= stat.positive for stat in block):
                continue
            for offset, stat in enumerate(block):
                index = start + offset
                depth[index] = max(depth.get(index, 0.0), (median - stat.mean_sentiment) / spread)
        if not cell_evaluated:
            skipped_cells.append(cell)
        alerts.extend(_merge(cell, series, depth, hour_h))
    alerts.sort(key=lambda alert: (alert.start_h, alert.cell))
    logger.info(
        "Detector raised %d alerts (%d blocks evaluated, %d skipped for short history)",
        len(alerts), evaluated, skipped,
    )
    return DetectionReport(alerts, skipped_cells, evaluated, skipped)


def _merge(cell: tuple, series: list, depth: dict, hour_h: float) -> list:
    alerts = []
    run = []
    for index in sorted(depth):
        if run and not abs(series[index][0] - series[run[-1]][0] - hour_h) <= HOUR_TOLERANCE:
            alerts.append(_alert(cell, series, run, depth, hour_h))
            run = []
        run.append(index)
    if run:
        alerts.append(_alert(cell, series, run, depth, hour_h))
    return alerts


def _alert(cell: tuple, series: list, run: list, depth: dict, hour_h: float) -> Alert:
    return Alert(
        cell=cell,
        start_h=series[run[0]][0],
        end_h=series[run[-1]][0] + hour_h,
        severity=max(depth[index] for index in run),
        count=sum(series[index][1].count for index in run),
    )


def detect(
    snapshots: list,
    min_count: int = config.MIN_COUNT,
    k_mad: float = config.K_MAD,
    persistence_hours: int = config.PERSISTENCE_HOURS,
    baseline_window_h: int = config.BASELINE_WINDOW_HOURS,
    **kwargs,
) -> list:
    """Alerts for cells whose sentiment dropped below their baseline"""
    return detect_with_report(
        snapshots, min_count, k_mad, persistence_hours, baseline_window_h, **kwargs
    ).alerts


######################################################################
#  E X P O R T S
######################################################################
def snapshot_to_geojson(snapshot: GridSnapshot, g: GridSpec) -> geojson.FeatureCollection:
    """One polygon feature per cell with messages"""
    features = []
    for (row, col), stat in sorted(snapshot.cells.items()):
        features.append(
            geojson.Feature(
                geometry=geojson.Polygon([g.cell_polygon(row, col)]),
                properties={
                    "hour_start_h": snapshot.hour_start,
                    "row": row,
                    "col": col,
                    "count": stat.count,
                    "mean_sentiment": stat.mean_sentiment,
                    "positive": stat.positive,
                    "negative": stat.negative,
                },
            )
        )
    return geojson.FeatureCollection(features)


def snapshots_to_geojson(snapshots: list, g: GridSpec, provenance: dict = None) -> geojson.FeatureCollection:
    """All hours in one collection; features carry hour_start_h"""
    features = []
    for snapshot in snapshots:
        features.extend(snapshot_to_geojson(snapshot, g)["features"])
    collection = geojson.FeatureCollection(features)
    if provenance:
        collection["provenance"] = provenance
    return collection


def alerts_frame(alerts: Iterable) -> pd.DataFrame:
    """Alert table"""
    return pd.DataFrame([alert.as_row() for alert in alerts], columns=ALERT_COLUMNS)
