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

"""
Test cases for grid aggregation and the sentiment drop detector
"""
import logging
import math
from unittest import TestCase

from netsensor import app
from netsensor.geo import GridSpec
from netsensor.models import ArgumentError, GeoPoint
from netsensor.sensing import (
    CellStat,
    GridSnapshot,
    alerts_frame,
    detect,
    detect_with_report,
    grid_aggregate,
    snapshots_to_geojson,
)

GRID = GridSpec(0.0, 3.0, 0.0, 3.0, 1.0)
CENTERS = {(row, col): GeoPoint(row + 0.5, col + 0.5) for row in range(3) for col in range(3)}
DROP_CELL = (1, 1)
DROP_HOURS = range(96, 100)


def scenario_points(per_cell: int = 25) -> list:
    """Five days of a daily cycle in every cell; one cell drops on day five"""
    points = []
    for hour in range(120):
        for cell, center in CENTERS.items():
            score = 0.2 + 0.05 * math.sin(2 * math.pi * hour / 24)
            if cell == DROP_CELL and hour in DROP_HOURS:
                score = -0.5
            points.extend([(hour + 0.5, center, score)] * per_cell)
    return points


def alert_hours(alerts: list) -> set:
    """(cell, hour) pairs covered by alert windows"""
    return {
        (alert.cell, hour) for alert in alerts for hour in range(int(alert.start_h), int(alert.end_h))
    }


######################################################################
#  A G G R E G A T I O N   T E S T   C A S E S
######################################################################
class TestAggregation(TestCase):
    """Hourly cell statistics"""

    @classmethod
    def setUpClass(cls):
        app.logger.setLevel(logging.CRITICAL)

    def test_grid_aggregate(self):
        """It should count and average per hour and cell, dropping off-grid points"""
        points = [
            (0.5, GeoPoint(0.5, 0.5), 1.0),
            (0.7, GeoPoint(0.5, 0.5), -0.5),
            (1.2, GeoPoint(2.5, 2.5), 0.0),
            (0.1, GeoPoint(10.0, 10.0), 1.0),
            (0.2, None, 1.0),
        ]
        snapshots, dropped = grid_aggregate(points, GRID)
        self.assertEqual(dropped, 2)
        self.assertEqual([snapshot.hour_start for snapshot in snapshots], [0.0, 1.0])
        self.assertEqual(snapshots[0].cells, {(0, 0): CellStat(2, 0.25, 1, 1)})
        self.assertEqual(snapshots[1].cells, {(2, 2): CellStat(1, 0.0, 0, 0)})
        self.assertEqual(snapshots[0].total, 2)

    def test_empty_and_bad_input(self):
        """It should return nothing for no points and refuse bad hours"""
        self.assertEqual(grid_aggregate([], GRID), ([], 0))
        self.assertRaises(ArgumentError, grid_aggregate, [], GRID, 0.0)

    def test_cell_stat_invariant(self):
        """It should carry a mean exactly when it has messages"""
        self.assertRaises(ArgumentError, CellStat, 0, 0.1)
        self.assertRaises(ArgumentError, CellStat, 3, None)
        self.assertIsNone(CellStat(0, None).mean_sentiment)

    def test_geojson_export(self):
        """It should write one feature per populated cell and hour"""
        snapshots, _ = grid_aggregate([(0.5, GeoPoint(0.5, 0.5), 1.0), (3.5, GeoPoint(1.5, 0.5), -1.0)], GRID)
        collection = snapshots_to_geojson(snapshots, GRID, {"config_hash": "h", "seed": 0})
        self.assertEqual(len(collection["features"]), 2)
        self.assertEqual(collection["provenance"]["config_hash"], "h")
        second = collection["features"][1]["properties"]
        self.assertEqual(second["hour_start_h"], 3.0)
        self.assertEqual((second["row"], second["col"]), (1, 0))
        self.assertEqual(second["negative"], 1)


######################################################################
#  D E T E C T O R   T E S T   C A S E S
######################################################################
class TestDetector(TestCase):
    """Alerts on persistent drops below a cell's baseline"""

    @classmethod
    def setUpClass(cls):
        app.logger.setLevel(logging.CRITICAL)
        cls.snapshots, _ = grid_aggregate(scenario_points(), GRID)

    def test_detects_the_drop(self):
        """It should raise exactly one alert covering the drop"""
        report = detect_with_report(self.snapshots)
        self.assertEqual(len(report.alerts), 1)
        alert = report.alerts[0]
        self.assertEqual(alert.cell, DROP_CELL)
        self.assertEqual(alert.window, (96.0, 100.0))
        self.assertGreater(alert.severity, 3.0)
        self.assertEqual(alert.count, 100)
        self.assertEqual(report.skipped_cells, [])
        self.assertGreater(report.skipped_blocks, 0)
        self.assertEqual(detect(self.snapshots), report.alerts)

    def test_stricter_k_raises_fewer_alerts(self):
        """It should nest alert windows as k_mad grows"""
        previous = None
        for k_mad in (2.0, 3.0, 10.0, 20.0):
            covered = alert_hours(detect(self.snapshots, k_mad=k_mad))
            if previous is not None:
                self.assertTrue(covered <= previous)
            previous = covered
        self.assertEqual(previous, set())

    def test_stricter_min_count_raises_fewer_alerts(self):
        """It should need min_count messages in every hour of a block"""
        self.assertEqual(len(detect(self.snapshots, min_count=25)), 1)
        self.assertEqual(detect(self.snapshots, min_count=26), [])

    def test_longer_persistence(self):
        """It should still find a four-hour drop with four-hour blocks but not five"""
        self.assertEqual(detect(self.snapshots, persistence_hours=4)[0].window, (96.0, 100.0))
        self.assertEqual(detect(self.snapshots, persistence_hours=5), [])

    def test_composition_shift(self):
        """It should keep the alert when negatives outnumber positives"""
        alerts = detect(self.snapshots, require_composition_shift=True)
        self.assertEqual([alert.cell for alert in alerts], [DROP_CELL])

    def test_short_history(self):
        """It should skip cells without a day of baseline"""
        snapshots = [GridSnapshot(float(hour), {(0, 0): CellStat(25, 0.1, 25, 0)}) for hour in range(10)]
        report = detect_with_report(snapshots)
        self.assertEqual(report.alerts, [])
        self.assertEqual(report.skipped_cells, [(0, 0)])
        self.assertEqual(report.evaluated_blocks, 0)

    def test_bad_arguments(self):
        """It should refuse a short window and nonpositive settings"""
        self.assertRaises(ArgumentError, detect, self.snapshots, baseline_window_h=12)
        self.assertRaises(ArgumentError, detect, self.snapshots, k_mad=0.0)
        self.assertRaises(ArgumentError, detect, self.snapshots, persistence_hours=0)
        self.assertRaises(ArgumentError, detect, self.snapshots, min_count=0)

    def test_alerts_frame(self):
        """It should tabulate alerts"""
        frame = alerts_frame(detect(self.snapshots))
        self.assertEqual(list(frame.columns), ["row", "col", "start_h", "end_h", "severity", "count"])
        self.assertEqual(frame["start_h"][0], 96.0)
        self.assertEqual(len(alerts_frame([])), 0)
