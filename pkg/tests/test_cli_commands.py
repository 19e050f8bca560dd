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
CLI Command Test Suite

Every stage runs against one small simulated data set. Exit statuses are
checked through ``run``, which maps errors the way ``python -m netsensor``
does.

  coverage run -m pytest tests/test_cli_commands.py
"""
import json
import logging
import shutil
import tempfile
from pathlib import Path
from unittest import TestCase

from netsensor import app
from netsensor.common import status
from netsensor.common.cli_commands import run
from netsensor.runconfig import RunConfig, read_table
from netsensor.sampling import GroupKind, read_groups

TRACK_CSV = """timestamp,lat,lon,r34_ne,r34_se,r34_sw,r34_nw,r50_ne,r50_se,r50_sw,r50_nw
2012-10-29T12:00:00Z,36.0,-71.0,300,250,200,250,120,100,80,100
2012-10-30T00:00:00Z,39.4,-74.4,280,240,180,220,100,80,60,80
"""


def raw_record(index: int, text: str) -> str:
    """One line of a raw message stream"""
    return json.dumps(
        {"id": f"r{index}", "user": f"u{index % 4}", "ts": f"2012-10-29T{index % 24:02d}:15:00Z", "text": text}
    )


######################################################################
#  T E S T   C A S E S
######################################################################
# pylint: disable=too-many-public-methods
class TestPipelineCommands(TestCase):
    """Subcommands run end to end on simulated data"""

    @classmethod
    def setUpClass(cls):
        """Simulates, geocodes and scores once for every test"""
        app.config["TESTING"] = True
        app.logger.setLevel(logging.CRITICAL)
        cls.tmp = tempfile.TemporaryDirectory()
        cls.data = Path(cls.tmp.name) / "data"
        runner = app.test_cli_runner()
        for args in (
            ["simulate", "--preset", "sandy", "--nodes", "300", "--seed", "3"],
            ["geocode"],
            ["sentiment"],
        ):
            result = runner.invoke(args=args + ["--data-dir", str(cls.data)])
            if result.exit_code != 0:
                raise AssertionError(f"{args[0]} failed: {result.output}")

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def setUp(self):
        self.runner = app.test_cli_runner()

    def invoke(self, *args, data_dir=None):
        """Runs a subcommand against the shared data directory"""
        return self.runner.invoke(args=list(args) + ["--data-dir", str(data_dir or self.data)])

    ######################################################################
    #  S T A G E S
    ######################################################################

    def test_simulate(self):
        """It should write the simulated inputs and their run config"""
        for name in ("messages.jsonl", "profiles.jsonl", "edges.txt", "truth.csv", "area.geojson", "sim_config.json"):
            self.assertTrue((self.data / name).exists(), name)
        with open(self.data / "sim_config.json", encoding="utf-8") as stream:
            stored = json.load(stream)
        self.assertEqual(stored["n_nodes"], 300)
        self.assertEqual(stored["seed"], 3)
        self.assertEqual(stored["provenance"]["seed"], 3)

    def test_geocode(self):
        """It should locate every simulated user from device coordinates"""
        located = read_table(self.data / "located.csv")
        self.assertEqual(len(located), 300)
        self.assertEqual(set(located["precision"]), {"exact"})

    def test_sentiment(self):
        """It should score every message with a position"""
        scores = read_table(self.data / "scores.csv")
        self.assertEqual(list(scores.columns), ["id", "user", "offset_h", "lat", "lon", "relative", "absolute", "discrete"])
        self.assertFalse(scores["lat"].isna().any())
        self.assertTrue(scores["relative"].between(-1.0, 1.0).all())

    def test_ingest(self):
        """It should parse, filter and report a raw stream"""
        with tempfile.TemporaryDirectory() as directory:
            raw = Path(directory) / "raw.jsonl"
            lines = [raw_record(index, "sandy is here" if index % 2 else "lunch time") for index in range(10)]
            lines.append("{broken")
            raw.write_text("\n".join(lines) + "\n", encoding="utf-8")
            out = Path(directory) / "out"
            result = self.runner.invoke(
                args=["ingest", "--input", str(raw), "--keyword-report", "--data-dir", str(out)]
            )
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("10 messages, 1 malformed", result.output)
            with open(out / "ingest_report.json", encoding="utf-8") as stream:
                report = json.load(stream)
            self.assertEqual(report["kept"], 5)
            self.assertIn("config_hash", report["provenance"])
            keywords = read_table(out / "keywords.csv")
            self.assertIn("sandy", set(keywords["keyword"]))
            self.assertEqual(RunConfig.load(out).subcommand, "ingest")

    def test_area(self):
        """It should write the affected area of a track"""
        with tempfile.TemporaryDirectory() as directory:
            track = Path(directory) / "track.csv"
            track.write_text(TRACK_CSV, encoding="utf-8")
            result = self.invoke("area", "--track", str(track), "--threshold", "50", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            with open(Path(directory) / "area.geojson", encoding="utf-8") as stream:
                area = json.load(stream)
        self.assertEqual(area["type"], "Feature")
        self.assertIn("provenance", area)

    def test_sample_and_leadtime(self):
        """It should draw groups and measure their lead time"""
        with tempfile.TemporaryDirectory() as directory:
            for name in ("messages.jsonl", "edges.txt", "located.csv"):
                shutil.copy(self.data / name, directory)
            result = self.invoke("sample", "--size", "20", "--seed", "5", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            groups = read_groups(Path(directory) / "groups.csv")
            self.assertEqual([group.kind for group in groups], [GroupKind.CONTROL, GroupKind.SENSOR])
            self.assertEqual(len(groups[0]), 20)
            self.assertTrue(groups[0].member_set.isdisjoint(groups[1].member_set))

            result = self.invoke("leadtime", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("leadtime: dt =", result.output)
            table = read_table(Path(directory) / "leadtime.csv")
            self.assertEqual(table["size"][0], 20)
            cdf = read_table(Path(directory) / "cdf.csv")
            self.assertEqual(
                set(cdf["curve"]), {"entry_control", "messages_control", "entry_sensor", "messages_sensor"}
            )
            self.assertTrue((Path(directory) / "daily_counts.csv").exists())
            self.assertEqual(RunConfig.load(directory).seed, 5)

    def test_sweep(self):
        """It should write one row per sample size"""
        result = self.invoke("sweep", "--sizes", "10,20", "--trials", "2")
        self.assertEqual(result.exit_code, 0, result.output)
        table = read_table(self.data / "sweep_any.csv")
        self.assertEqual(list(table["size"]), [10, 20])
        self.assertEqual(list(table["trials"]), [2, 2])

    def test_null(self):
        """It should sweep the shuffled messages"""
        result = self.invoke("null", "--sizes", "10", "--trials", "2")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(len(read_table(self.data / "null_any.csv")), 1)

    def test_trend(self):
        """It should bin the scores and align against a reference trend"""
        with tempfile.TemporaryDirectory() as directory:
            shutil.copy(self.data / "scores.csv", directory)
            shutil.copy(self.data / "area.geojson", directory)
            result = self.invoke("trend", "--bin-hours", "6", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            reference = Path(directory) / "reference.csv"
            shutil.copy(Path(directory) / "trend.csv", reference)
            result = self.invoke("trend", "--bin-hours", "6", "--reference", str(reference), data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            with open(Path(directory) / "alignment.json", encoding="utf-8") as stream:
                alignment = json.load(stream)
            self.assertAlmostEqual(alignment["scale"], 1.0, places=6)
            self.assertAlmostEqual(alignment["offset"], 0.0, places=6)
            result = self.invoke("trend", "--bin-hours", "6", "--region", "in", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("(in)", result.output)
            composition = read_table(Path(directory) / "composition.csv")
        self.assertEqual(list(composition.columns), ["bin_start_h", "positive", "negative", "neutral", "count"])

    def test_sense(self):
        """It should write grid snapshots and an alert table"""
        with tempfile.TemporaryDirectory() as directory:
            shutil.copy(self.data / "scores.csv", directory)
            result = self.invoke("sense", "--grid-cell-deg", "5", "--min-count", "1", data_dir=directory)
            self.assertEqual(result.exit_code, 0, result.output)
            with open(Path(directory) / "snapshots.geojson", encoding="utf-8") as stream:
                snapshots = json.load(stream)
            self.assertEqual(snapshots["type"], "FeatureCollection")
            self.assertTrue(snapshots["features"])
            alerts = read_table(Path(directory) / "alerts.csv")
        self.assertEqual(list(alerts.columns), ["row", "col", "start_h", "end_h", "severity", "count"])

    def test_report(self):
        """It should bundle every artifact with a manifest"""
        with tempfile.TemporaryDirectory() as directory:
            out = Path(directory) / "report"
            result = self.invoke(
                "report", "--sizes", "10", "--trials", "2", "--grid-cell-deg", "5", "--min-count", "1",
                "--out", str(out),
            )
            self.assertEqual(result.exit_code, 0, result.output)
            with open(out / "manifest.json", encoding="utf-8") as stream:
                manifest = json.load(stream)
            for name in ("sweep_any.csv", "null_any.csv", "cdf.csv", "trend.csv", "alerts.csv", "run_config.json",
                         "trend_in.csv", "composition_in.csv"):
                self.assertIn(name, manifest["artifacts"])
            self.assertTrue(any(name.startswith("grid/") for name in manifest["artifacts"]))
            for name in manifest["artifacts"]:
                self.assertTrue((out / name).exists(), name)
            stages = read_table(out / "activity_vs_entry.csv")
        self.assertEqual(set(stages["stage"]), {"all", "pre", "post"})


######################################################################
#  E X I T   S T A T U S   T E S T   C A S E S
######################################################################
class TestExitStatus(TestCase):
    """Exit statuses of the command-line entry point"""

    @classmethod
    def setUpClass(cls):
        app.logger.setLevel(logging.CRITICAL)

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.data = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_ok(self):
        """It should exit 0 after a successful stage"""
        self.assertEqual(run(["simulate", "--nodes", "30", "--seed", "2", "--data-dir", self.data]), status.EXIT_0_OK)

    def test_unknown_subcommand(self):
        """It should exit 1 on an unknown subcommand"""
        self.assertEqual(run(["forecast"]), status.EXIT_1_USAGE)

    def test_bad_option(self):
        """It should exit 1 on an out-of-range option"""
        self.assertEqual(run(["sweep", "--trials", "1", "--data-dir", self.data]), status.EXIT_1_USAGE)
        self.assertEqual(run(["sweep", "--sizes", "10,x", "--data-dir", self.data]), status.EXIT_1_USAGE)
        self.assertEqual(run(["ingest", "--data-dir", self.data]), status.EXIT_1_USAGE)

    def test_combo_needs_area(self):
        """It should exit 1 when a geographic combination has no area"""
        self.assertEqual(run(["sample", "--combo", "in-out", "--data-dir", self.data]), status.EXIT_1_USAGE)

    def test_output_over_input(self):
        """It should exit 1 rather than overwrite an input"""
        messages = Path(self.data) / "messages.jsonl"
        messages.write_text(raw_record(1, "sandy") + "\n", encoding="utf-8")
        self.assertEqual(run(["ingest", "--input", str(messages), "--data-dir", self.data]), status.EXIT_1_USAGE)

    def test_missing_input(self):
        """It should exit 2 when an input file is missing"""
        self.assertEqual(run(["sample", "--size", "5", "--data-dir", self.data]), status.EXIT_2_DATA_ERROR)

    def test_malformed_input(self):
        """It should exit 2 on a mostly malformed stream"""
        raw = Path(self.data) / "raw.jsonl"
        raw.write_text("{broken\n[]\n" + raw_record(1, "sandy") + "\n", encoding="utf-8")
        out = str(Path(self.data) / "out")
        self.assertEqual(run(["ingest", "--input", str(raw), "--data-dir", out]), status.EXIT_2_DATA_ERROR)

    def test_capacity(self):
        """It should exit 2 when the pool is too small for the sample"""
        self.assertEqual(run(["simulate", "--nodes", "30", "--data-dir", self.data]), status.EXIT_0_OK)
        self.assertEqual(run(["sample", "--size", "5000", "--data-dir", self.data]), status.EXIT_2_DATA_ERROR)
