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
Run configuration and provenance

Every subcommand records its parameters in a RunConfig. The SHA-256 of
its canonical JSON form is the config hash stamped on every artifact.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import pandas as pd

from netsensor import config
from netsensor.models import DataValidationError

logger = logging.getLogger("netsensor")

RUN_CONFIG_FILE = "run_config.json"
FLOAT_FORMAT = "%.12g"


@dataclass
class RunConfig:
    """Parameters of one subcommand invocation"""

    subcommand: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    reference_epoch: str = config.REFERENCE_EPOCH

    def __post_init__(self):
        # JSON-normalize so a saved config loads back equal
        try:
            self.params = json.loads(json.dumps(self.params, sort_keys=True, default=str))
        except (TypeError, ValueError) as error:
            raise DataValidationError(f"Run parameters are not serializable: {error}") from error

    def to_dict(self) -> dict:
        """Serializes the configuration into a dictionary"""
        return {
            "subcommand": self.subcommand,
            "params": self.params,
            "seed": self.seed,
            "reference_epoch": self.reference_epoch,
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no whitespace"""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @property
    def config_hash(self) -> str:
        """SHA-256 hex digest of the canonical JSON form"""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @property
    def provenance(self) -> dict:
        """What every artifact carries"""
        return {"config_hash": self.config_hash, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Deserializes a configuration; a stored hash must match"""
        try:
            run_config = cls(
                subcommand=data["subcommand"],
                params=data.get("params", {}),
                seed=data.get("seed"),
                reference_epoch=data.get("reference_epoch", config.REFERENCE_EPOCH),
            )
        except KeyError as error:
            raise DataValidationError("Invalid run config: missing " + error.args[0]) from error
        except TypeError as error:
            raise DataValidationError("Invalid run config: bad or no data") from error
        stored = data.get("config_hash")
        if stored is not None and stored != run_config.config_hash:
            raise DataValidationError(f"Run config hash mismatch: stored {stored}, computed {run_config.config_hash}")
        return run_config

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        """Parses JSON text written by ``to_json`` or ``save``"""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as error:
            raise DataValidationError(f"Invalid run config JSON: {error}") from error
        if not isinstance(data, dict):
            raise DataValidationError("Invalid run config: not an object")
        return cls.from_dict(data)

    def save(self, directory) -> Path:
        """Writes run_config.json into a directory"""
        path = Path(directory) / RUN_CONFIG_FILE
        data = {**self.to_dict(), "config_hash": self.config_hash}
        path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Reads a run config file, or run_config.json inside a directory"""
        path = Path(path)
        if path.is_dir():
            path = path / RUN_CONFIG_FILE
        return cls.from_json(path.read_text(encoding="utf-8"))


######################################################################
#  A R T I F A C T   H E L P E R S
######################################################################
def provenance_line(provenance: dict) -> str:
    """'# config_hash=... seed=...' comment line"""
    return "# " + " ".join(f"{key}={value}" for key, value in provenance.items()) + "\n"


def write_table(path, frame: pd.DataFrame, provenance: Optional[dict] = None) -> Path:
    """Writes a delimited table with a header row, after the provenance line"""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as stream:
        if provenance:
            stream.write(provenance_line(provenance))
        frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_table(path, **kwargs) -> pd.DataFrame:
    """Reads a table written by ``write_table``; leading '#' lines are skipped"""
    skip = 0
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            if not line.startswith("#"):
                break
            skip += 1
    return pd.read_csv(path, skiprows=skip, keep_default_na=False, na_values=[""], **kwargs)


def write_json(path, data: dict, provenance: Optional[dict] = None) -> Path:
    """Writes JSON with sorted keys and a provenance member"""
    path = Path(path)
    body = dict(data)
    if provenance:
        body["provenance"] = provenance
    path.write_text(json.dumps(body, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
