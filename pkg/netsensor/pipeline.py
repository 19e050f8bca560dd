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
Pipeline artifacts

Stages hand off plain files. This module reads and writes them and holds
the export steps shared by the individual subcommands and ``report``.
"""
import json
import logging
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd

from netsensor.geo import AffectedArea, GridSpec, area_from_geojson, area_to_geojson
from netsensor.ingest import parse_profiles, parse_stream, serialize_stream
from netsensor.leadtime import (
    LeadTimeInputs,
    daily_counts,
    entry_cdf,
    message_cdf,
)
from netsensor.models import DataValidationError, GeoPoint, Precision
from netsensor.network import SocialGraph
from netsensor.runconfig import read_table, write_json, write_table
from netsensor.sampling import SamplePair
from netsensor.sensing import alerts_frame, snapshot_to_geojson, snapshots_to_geojson
from netsensor.sentiment import composition, smooth3, trend

logger = logging.getLogger("netsensor")

MESSAGES_FILE = "messages.jsonl"
PROFILES_FILE = "profiles.jsonl"
LOCATED_FILE = "located.csv"
AREA_FILE = "area.geojson"
EDGES_FILE = "edges.txt"
GROUPS_FILE = "groups.csv"
SCORES_FILE = "scores.csv"
SCORE_COLUMNS = ["id", "user", "offset_h", "lat", "lon", "relative", "absolute", "discrete"]


def read_lines(path) -> list:
    """Raw lines of a line-delimited file"""
    with open(path, "rb") as stream:
        return stream.readlines()


def write_records(path, records: Iterable) -> Path:
    """Writes Messages or UserProfiles in the ingest format"""
    path = Path(path)
    with path.open("wb") as stream:
        stream.writelines(serialize_stream(records))
    return path


def load_messages(path, epoch=None, workers: int = 1) -> list:
    """Messages of an ingest-format file"""
    messages, _, _ = parse_stream(read_lines(path), epoch=epoch, workers=workers)
    return messages


def load_profiles(path, workers: int = 1) -> list:
    """Profiles of a profile file"""
    profiles, _ = parse_profiles(read_lines(path), workers=workers)
    return profiles


def write_located(path, located: dict, provenance: Optional[dict] = None) -> Path:
    """user, lat, lon, precision per located user"""
    frame = pd.DataFrame(
        [(user, point.lat, point.lon, point.precision.value) for user, point in sorted(located.items())],
        columns=["user", "lat", "lon", "precision"],
    )
    return write_table(path, frame, provenance)


def load_located(path) -> dict:
    """user -> GeoPoint from a located table"""
    frame = read_table(path, dtype={"user": str, "precision": str})
    try:
        return {
            row.user: GeoPoint(float(row.lat), float(row.lon), Precision(row.precision))
            for row in frame.itertuples(index=False)
        }
    except (AttributeError, ValueError) as error:
        raise DataValidationError(f"Invalid located table {path}: {error}") from error


def write_area(path, area: AffectedArea, provenance: Optional[dict] = None) -> Path:
    """Area as a GeoJSON feature"""
    path = Path(path)
    path.write_text(json.dumps(area_to_geojson(area, provenance), sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_area(path) -> AffectedArea:
    """Area written by ``write_area``"""
    return area_from_geojson(Path(path).read_text(encoding="utf-8"))


def load_inputs(
    messages_path,
    edges_path,
    located_path=None,
    area_path=None,
    epoch=None,
    window: Optional[tuple] = None,
    workers: int = 1,
) -> tuple:
    """Messages and LeadTimeInputs from stage files

    Without a located file every user with messages is in the pool;
    without an area no geographic restriction is possible.
    """
    messages = load_messages(messages_path, epoch, workers)
    graph = SocialGraph.load(edges_path)
    located = load_located(located_path) if located_path else None
    area = load_area(area_path) if area_path else None
    return messages, LeadTimeInputs.build(graph, messages, located, area, window)


######################################################################
#  S C O R E S
######################################################################
def scores_frame(scored: list, located: Optional[dict] = None) -> pd.DataFrame:
    """One row per scored message; position from the message or its author"""
    rows = []
    for item in scored:
        message = item.message
        point = message.geo or (located or {}).get(message.user_id)
        rows.append(
            (
                message.message_id,
                message.user_id,
                message.offset_h,
                point.lat if point else None,
                point.lon if point else None,
                item.score.relative,
                item.score.absolute,
                item.score.discrete,
            )
        )
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


def load_scores(path) -> pd.DataFrame:
    """Scores table written by the sentiment stage"""
    frame = read_table(path, dtype={"id": str, "user": str})
    missing = set(SCORE_COLUMNS) - set(frame.columns)
    if missing:
        raise DataValidationError(f"Invalid scores table {path}: missing {sorted(missing)}")
    return frame


def score_points(frame: pd.DataFrame) -> list:
    """(offset_h, GeoPoint or None, relative) per row"""
    points = []
    for row in frame.itertuples(index=False):
        located = not (pd.isna(row.lat) or pd.isna(row.lon))
        point = GeoPoint(float(row.lat), float(row.lon)) if located else None
        points.append((float(row.offset_h), point, float(row.relative)))
    return points


def region_mask(frame: pd.DataFrame, area: AffectedArea, region: str) -> pd.Series:
    """Rows inside ("in") or outside ("out") the area; unlocated rows drop out"""
    located = frame["lat"].notna() & frame["lon"].notna()
    if region == "any":
        return pd.Series(True, index=frame.index)
    inside = pd.Series(False, index=frame.index)
    if located.any():
        inside[located] = area.contains(frame.loc[located, "lat"].to_numpy(), frame.loc[located, "lon"].to_numpy())
    return located & (inside if region == "in" else ~inside)


######################################################################
#  E X P O R T   S T E P S
######################################################################
def write_trend_tables(
    directory, frame: pd.DataFrame, bin_h: float, provenance: Optional[dict] = None, suffix: str = ""
) -> tuple:
    """trend.csv (raw and smoothed means) and composition.csv from scores

    A suffix such as "_in" names the tables of a regional subset.
    """
    directory = Path(directory)
    series = trend(zip(frame["offset_h"], frame["relative"]), bin_h)
    table = series.to_frame()
    table.insert(2, "smoothed", smooth3(series).as_array())
    mix = composition(zip(frame["offset_h"], frame["discrete"]), bin_h)
    trend_path = write_table(directory / f"trend{suffix}.csv", table, provenance)
    composition_path = write_table(directory / f"composition{suffix}.csv", mix.to_frame(), provenance)
    return series, mix, [trend_path, composition_path]


def write_cdf_tables(
    directory,
    pair: SamplePair,
    entry: dict,
    messages: list,
    bandwidth_h: float,
    provenance: Optional[dict] = None,
) -> list:
    """cdf.csv (entry and message CDFs of both groups) and daily_counts.csv"""
    directory = Path(directory)
    curves = []
    for group in (pair.control, pair.sensor):
        for name, curve in (
            ("entry", entry_cdf(group, entry, bandwidth_h)),
            ("messages", message_cdf(group, messages, bandwidth_h)),
        ):
            frame = curve.to_frame("cdf")
            frame.insert(0, "curve", f"{name}_{group.kind.value}")
            curves.append(frame)
    counts = pd.DataFrame(
        [
            (group.kind.value, start, count)
            for group in (pair.control, pair.sensor)
            for start, count in daily_counts(group, messages).items()
        ],
        columns=["group", "bin_start_h", "count"],
    )
    return [
        write_table(directory / "cdf.csv", pd.concat(curves, ignore_index=True), provenance),
        write_table(directory / "daily_counts.csv", counts, provenance),
    ]


def write_sensing_outputs(
    directory,
    snapshots: list,
    alerts: list,
    grid: GridSpec,
    provenance: Optional[dict] = None,
    per_hour: bool = False,
) -> list:
    """snapshots.geojson (or one file per hour) and alerts.csv"""
    directory = Path(directory)
    paths = []
    if per_hour:
        grid_dir = directory / "grid"
        grid_dir.mkdir(parents=True, exist_ok=True)
        for snapshot in snapshots:
            collection = snapshot_to_geojson(snapshot, grid)
            if provenance:
                collection["provenance"] = provenance
            path = grid_dir / f"hour_{snapshot.hour_start:+08.1f}.geojson"
            path.write_text(json.dumps(collection, sort_keys=True) + "\n", encoding="utf-8")
            paths.append(path)
    else:
        path = directory / "snapshots.geojson"
        path.write_text(
            json.dumps(snapshots_to_geojson(snapshots, grid, provenance), sort_keys=True) + "\n", encoding="utf-8"
        )
        paths.append(path)
    paths.append(write_table(directory / "alerts.csv", alerts_frame(alerts), provenance))
    return paths


def write_manifest(directory, artifacts: Iterable, provenance: Optional[dict] = None, skipped: dict = None) -> Path:
    """manifest.json listing artifacts relative to the directory"""
    directory = Path(directory)
    names = sorted(str(Path(path).relative_to(directory)) for path in artifacts)
    return write_json(directory / "manifest.json", {"artifacts": names, "skipped": skipped or {}}, provenance)
