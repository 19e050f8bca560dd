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
Test cases for run configuration and artifact helpers
"""
import json
import os
import tempfile
from unittest import TestCase

import pandas as pd

from netsensor.models import DataValidationError
from netsensor.runconfig import RunConfig, read_table, write_json, write_table


class TestRunConfig(TestCase):
    """Config hashing and persistence"""

    def test_hash_is_canonical(self):
        """It should hash equal parameters equally regardless of key order"""
        first = RunConfig("sweep", {"sizes": [5, 10], "trials": 2}, seed=1)
        second = RunConfig("sweep", {"trials": 2, "sizes": [5, 10]}, seed=1)
        self.assertEqual(first.config_hash, second.config_hash)
        self.assertEqual(len(first.config_hash), 64)
        self.assertNotEqual(first.config_hash, RunConfig("sweep", {"sizes": [5, 10], "trials": 2}, seed=2).config_hash)
        self.assertEqual(first.provenance, {"config_hash": first.config_hash, "seed": 1})

    def test_params_are_normalized(self):
        """It should store parameters in their JSON form"""
        run_config = RunConfig("area", {"radii": (34, 50), "path": None})
        self.assertEqual(run_config.params, {"path": None, "radii": [34, 50]})

    def test_save_and_load(self):
        """It should load back an equal configuration from a directory or file"""
        run_config = RunConfig("sample", {"size": 100, "combo": "in_out"}, seed=7)
        with tempfile.TemporaryDirectory() as directory:
            path = run_config.save(directory)
            self.assertEqual(RunConfig.load(directory), run_config)
            self.assertEqual(RunConfig.load(path), run_config)

    def test_hash_mismatch(self):
        """It should refuse a stored hash that does not match"""
        data = {**RunConfig("sense").to_dict(), "config_hash": "0" * 64}
        self.assertRaises(DataValidationError, RunConfig.from_dict, data)

    def test_bad_documents(self):
        """It should refuse missing fields and non-object JSON"""
        self.assertRaises(DataValidationError, RunConfig.from_dict, {"params": {}})
        self.assertRaises(DataValidationError, RunConfig.from_json, "[1, 2]")
        self.assertRaises(DataValidationError, RunConfig.from_json, "{oops")


class TestArtifacts(TestCase):
    """Tables and JSON files with provenance"""

    def test_table_round_trip(self):
        """It should skip the provenance line when reading a table back"""
        frame = pd.DataFrame({"size": [5, 10], "dt": [-1.5, float("nan")]})
        with tempfile.TemporaryDirectory() as directory:
            path = write_table(os.path.join(directory, "t.csv"), frame, {"config_hash": "abc", "seed": 3})
            with open(path, encoding="utf-8") as stream:
                self.assertEqual(stream.readline(), "# config_hash=abc seed=3\n")
            table = read_table(path)
        self.assertEqual(list(table["size"]), [5, 10])
        self.assertEqual(table["dt"][0], -1.5)
        self.assertTrue(pd.isna(table["dt"][1]))

    def test_json_provenance(self):
        """It should add a provenance member"""
        with tempfile.TemporaryDirectory() as directory:
            path = write_json(os.path.join(directory, "r.json"), {"b": 1, "a": 2}, {"config_hash": "x", "seed": None})
            with open(path, encoding="utf-8") as stream:
                data = json.load(stream)
        self.assertEqual(data["provenance"], {"config_hash": "x", "seed": None})
        self.assertEqual(data["a"], 2)
