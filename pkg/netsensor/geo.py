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
Geography

Gazetteer geocoding of self-reported locations, the affected area built
from a storm track and its wind radii, area membership and the regular
grid used for spatial aggregation.

Distances use a local equirectangular projection around each track
point: one nautical mile is 1/60 degree of latitude and longitude
degrees are scaled by cos(latitude).
"""
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

import geojson
import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, QhullError

from netsensor import config
from netsensor.models import (
    ArgumentError,
    DataValidationError,
    EmptyAreaError,
    GeoPoint,
    Precision,
    UserProfile,
    parse_timestamp,
)

logger = logging.getLogger("netsensor")

NM_PER_DEGREE = 60.0
THRESHOLDS = (34, 50, 64)
QUADRANTS = ("ne", "se", "sw", "nw")

# lat_min, lat_max, lon_min, lon_max of the United States and Canada
NORTH_AMERICA_BBOX = (24.0, 84.0, -170.0, -52.0)

EDGE_TOLERANCE = 1e-12


######################################################################
#  G A Z E T T E E R
######################################################################
class AdminLevel(Enum):
    """Administrative level of a gazetteer entry"""

    COUNTRY = "country"
    STATE_PROVINCE = "state_province"
    CITY = "city"

    @property
    def specificity(self) -> int:
        """Higher is more specific"""
        return {"country": 0, "state_province": 1, "city": 2}[self.value]


def normalize_name(text: str) -> str:
    """Lowercases a place name and strips its punctuation"""
    kept = "".join(
        char for char in text.lower() if not unicodedata.category(char).startswith("P")
    )
    return " ".join(kept.split())


@dataclass(frozen=True)
class GazetteerEntry:
    """A named place with its centroid"""

    normalized_name: str
    alt_names: frozenset
    admin_level: AdminLevel
    country_code: str
    centroid: GeoPoint
    population: int = 0

    def __post_init__(self):
        if self.normalized_name != normalize_name(self.normalized_name):
            raise DataValidationError(f"Name is not normalized: {self.normalized_name!r}")
        if len(self.country_code) != 2:
            raise DataValidationError(f"Invalid country code: {self.country_code!r}")
        if self.population < 0:
            raise DataValidationError(f"Invalid population: {self.population}")

    @property
    def rank(self) -> tuple:
        """Sort key: most specific, then most populous, then by name"""
        return (-self.admin_level.specificity, -self.population, self.normalized_name)


class Gazetteer:
    """Name index over gazetteer entries"""

    def __init__(self, entries: Iterable):
        self.entries = tuple(entries)
        self._index = {}
        for entry in self.entries:
            for name in {entry.normalized_name, *entry.alt_names}:
                self._index.setdefault(normalize_name(name), []).append(entry)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def lookup(self, name: str) -> list:
        """Entries whose name or alternative name matches"""
        return list(self._index.get(normalize_name(name), ()))

    def best(self, name: str) -> Optional[GazetteerEntry]:
        """The highest ranked entry for a name"""
        candidates = self.lookup(name)
        return min(candidates, key=lambda entry: entry.rank) if candidates else None

    def match(self, location: str) -> Optional[GazetteerEntry]:
        """Matches free text: the full string, then its comma-separated
        components in the order written (most specific first)"""
        if not location or not location.strip():
            return None
        entry = self.best(location)
        if entry is not None:
            return entry
        for component in location.split(","):
            if component.strip():
                entry = self.best(component)
                if entry is not None:
                    return entry
        return None

    @classmethod
    def load(cls, path) -> "Gazetteer":
        """Loads a delimited gazetteer file

        Columns: name, alt_names ('|' separated), admin_level, country,
        lat, lon, population.
        """
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, sep=None, engine="python")
        entries = []
        for row in frame.itertuples(index=False):
            try:
                entries.append(
                    GazetteerEntry(
                        normalized_name=normalize_name(row.name),
                        alt_names=frozenset(
                            normalize_name(name) for name in row.alt_names.split("|") if name.strip()
                        ),
                        admin_level=AdminLevel(row.admin_level.strip()),
                        country_code=row.country.strip().upper(),
                        centroid=GeoPoint(float(row.lat), float(row.lon), Precision.CENTROID),
                        population=int(row.population or 0),
                    )
                )
            except (AttributeError, ValueError) as error:
                raise DataValidationError(f"Invalid gazetteer row {tuple(row)}: {error}") from error
        logger.info("Loaded %d gazetteer entries from %s", len(entries), path)
        return cls(entries)


def load_gazetteer(path=None) -> Gazetteer:
    """Loads a gazetteer file; the bundled sample when path is None"""
    if path is None:
        from importlib import resources  # pylint: disable=import-outside-toplevel

        path = resources.files("netsensor").joinpath("data/sample_gazetteer.csv")
    return Gazetteer.load(path)


def geocode(profile: UserProfile, gaz) -> Optional[GeoPoint]:
    """Locates a user from profile data only

    Device coordinates win; otherwise the centroid of the best gazetteer
    match of the self-reported location; otherwise None.
    """
    if profile.geopoint is not None and profile.geopoint.precision is Precision.EXACT:
        return profile.geopoint
    if not isinstance(gaz, Gazetteer):
        gaz = Gazetteer(gaz)
    entry = gaz.match(profile.self_location or "")
    return entry.centroid if entry is not None else None


def in_bbox(point: GeoPoint, bbox: tuple) -> bool:
    """True when the point lies in (lat_min, lat_max, lon_min, lon_max)"""
    lat_min, lat_max, lon_min, lon_max = bbox
    return lat_min <= point.lat <= lat_max and lon_min <= point.lon <= lon_max


@dataclass
class GeocodeReport:
    """Outcome counts of geocoding a profile set"""

    users: int = 0
    exact: int = 0
    centroid: int = 0
    unmatched: int = 0
    filtered: int = 0

    @property
    def located(self) -> int:
        """Users kept after the country filter"""
        return self.exact + self.centroid

    @property
    def detection_rate(self) -> float:
        """Fraction of users with a location, before the country filter"""
        if not self.users:
            return 0.0
        return (self.located + self.filtered) / self.users

    def serialize(self) -> dict:
        """Serializes the report into a dictionary"""
        return {
            "users": self.users,
            "exact": self.exact,
            "centroid": self.centroid,
            "unmatched": self.unmatched,
            "filtered": self.filtered,
            "detection_rate": self.detection_rate,
        }


def geocode_profiles(
    profiles: Iterable,
    gaz: Gazetteer,
    countries: Optional[Iterable] = config.COUNTRIES,
    exact_bbox: Optional[tuple] = NORTH_AMERICA_BBOX,
) -> tuple:
    """Geocodes every profile and keeps users in the given countries

    Centroid matches are filtered by the entry's country code, device
    coordinates by ``exact_bbox``. Pass ``countries=None`` to keep all.

    :return: (user_id -> GeoPoint, GeocodeReport)
    """
    allowed = None if countries is None else {code.upper() for code in countries}
    located = {}
    report = GeocodeReport()
    for profile in profiles:
        report.users += 1
        if profile.geopoint is not None and profile.geopoint.precision is Precision.EXACT:
            if allowed is not None and exact_bbox is not None and not in_bbox(profile.geopoint, exact_bbox):
                report.filtered += 1
                continue
            located[profile.user_id] = profile.geopoint
            report.exact += 1
            continue
        entry = gaz.match(profile.self_location or "")
        if entry is None:
            report.unmatched += 1
        elif allowed is not None and entry.country_code not in allowed:
            report.filtered += 1
        else:
            located[profile.user_id] = entry.centroid
            report.centroid += 1
    logger.info(
        "Geocoded %d of %d users (detection rate %.1f%%, %d outside the country filter)",
        report.located, report.users, 100.0 * report.detection_rate, report.filtered,
    )
    return located, report


######################################################################
#  S T O R M   T R A C K   A N D   A F F E C T E D   A R E A
######################################################################
@dataclass(frozen=True)
class StormTrackPoint:
    """One best-track fix with wind radii (nm) per threshold and quadrant"""

    time: datetime
    center: GeoPoint
    radii_nm: dict = field(default_factory=lambda: {kt: (0.0,) * 4 for kt in THRESHOLDS})

    def __post_init__(self):
        if set(self.radii_nm) != set(THRESHOLDS):
            raise DataValidationError(f"Wind thresholds must be {THRESHOLDS}, got {sorted(self.radii_nm)}")
        for threshold, radii in self.radii_nm.items():
            if len(radii) != 4 or any(radius < 0 for radius in radii):
                raise DataValidationError(f"Invalid {threshold} kt radii: {radii}")

    def quadrant_radii(self, threshold_kt: int) -> tuple:
        """(NE, SE, SW, NW) radii with stronger-wind extents folded in

        A radius at a lower threshold never falls below the radius at a
        higher one, so areas nest by threshold.
        """
        stronger = [kt for kt in THRESHOLDS if kt >= threshold_kt]
        return tuple(max(self.radii_nm[kt][quadrant] for kt in stronger) for quadrant in range(4))

    def radius(self, threshold_kt: int) -> float:
        """Largest quadrant radius at the threshold"""
        return max(self.quadrant_radii(threshold_kt))


def load_track(path) -> list:
    """Loads a delimited best-track file ordered by time

    Columns: timestamp, lat, lon and r34_ne .. r64_nw in nautical miles;
    absent radius columns read as 0.
    """
    frame = pd.read_csv(path, sep=None, engine="python")
    points = []
    for row in frame.to_dict("records"):
        try:
            radii = {
                kt: tuple(
                    float(0.0 if pd.isna(row.get(f"r{kt}_{quad}", 0.0)) else row.get(f"r{kt}_{quad}", 0.0))
                    for quad in QUADRANTS
                )
                for kt in THRESHOLDS
            }
            points.append(
                StormTrackPoint(
                    time=parse_timestamp(row["timestamp"]),
                    center=GeoPoint(float(row["lat"]), float(row["lon"])),
                    radii_nm=radii,
                )
            )
        except KeyError as error:
            raise DataValidationError("Invalid track: missing " + str(error.args[0])) from error
        except (TypeError, ValueError) as error:
            raise DataValidationError(f"Invalid track row {row}: {error}") from error
    points.sort(key=lambda point: point.time)
    logger.info("Loaded %d track points from %s", len(points), path)
    return points


def _disk(center: GeoPoint, radii: tuple, segments: int, quadrant_mode: bool) -> np.ndarray:
    """Vertices (lon, lat) of a polygon whose inradius is the wind radius

    Counterclockwise in the (lon, lat) plane; not closed.
    """
    lon_scale = NM_PER_DEGREE * max(math.cos(math.radians(center.lat)), 1e-6)
    if not quadrant_mode:
        radius = max(radii) / math.cos(math.pi / segments)
        angles = 2.0 * math.pi * np.arange(segments) / segments
        return np.column_stack(
            (
                center.lon + radius * np.cos(angles) / lon_scale,
                center.lat + radius * np.sin(angles) / NM_PER_DEGREE,
            )
        )
    # Bearings are clockwise from north; quadrant q spans [90q, 90q + 90]
    steps = max(2, segments // 4)
    bearings, lengths = [], []
    for quadrant in range(4):
        radius = radii[quadrant] / math.cos(math.pi / (4 * steps))
        for step in range(steps + 1):
            bearings.append(math.radians(90.0 * quadrant + 90.0 * step / steps))
            lengths.append(radius)
    bearings = np.array(bearings)[::-1]
    lengths = np.array(lengths)[::-1]
    vertices = np.column_stack(
        (
            center.lon + lengths * np.sin(bearings) / lon_scale,
            center.lat + lengths * np.cos(bearings) / NM_PER_DEGREE,
        )
    )
    keep = np.ones(len(vertices), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(vertices, axis=0)) > EDGE_TOLERANCE, axis=1)
    return vertices[keep]


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Hull vertices in counterclockwise order, not closed"""
    unique = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(unique) < 3:
        return unique
    try:
        return unique[ConvexHull(unique).vertices]
    except QhullError:
        # collinear: lexicographic order puts the extremes at the ends
        return unique[[0, -1]]


def _ring(vertices: np.ndarray) -> tuple:
    """Closed ring of GeoPoints from (lon, lat) vertices"""
    points = [GeoPoint(float(lat), float(lon)) for lon, lat in vertices]
    return tuple(points + [points[0]])


@dataclass(frozen=True)
class AffectedArea:
    """Area reached by winds at or above a threshold

    The polygon is a union of simple closed rings (one per track segment
    or isolated track point). A point is affected when it lies inside any
    ring by even-odd ray casting; ring boundaries count as inside.
    """

    threshold_kt: int
    polygon: tuple

    def __post_init__(self):
        if self.threshold_kt not in THRESHOLDS:
            raise ArgumentError(f"threshold_kt must be one of {THRESHOLDS}")
        for ring in self.polygon:
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise DataValidationError("Area rings must be closed with at least 4 vertices")

    @cached_property
    def _arrays(self) -> list:
        arrays = []
        for ring in self.polygon:
            lons = np.array([point.lon for point in ring])
            lats = np.array([point.lat for point in ring])
            arrays.append((lons, lats, (lons.min(), lons.max(), lats.min(), lats.max())))
        return arrays

    def contains(self, lats, lons) -> np.ndarray:
        """Vectorized membership of points given as latitude/longitude arrays"""
        lats = np.atleast_1d(np.asarray(lats, dtype=float))
        lons = np.atleast_1d(np.asarray(lons, dtype=float))
        inside = np.zeros(lats.shape, dtype=bool)
        for ring_lons, ring_lats, (lon_lo, lon_hi, lat_lo, lat_hi) in self._arrays:
            candidates = (
                ~inside
                & (lons >= lon_lo - EDGE_TOLERANCE) & (lons <= lon_hi + EDGE_TOLERANCE)
                & (lats >= lat_lo - EDGE_TOLERANCE) & (lats <= lat_hi + EDGE_TOLERANCE)
            )
            if candidates.any():
                inside[candidates] = _in_ring(lons[candidates], lats[candidates], ring_lons, ring_lats)
        return inside

    @property
    def bbox(self) -> tuple:
        """(lat_min, lat_max, lon_min, lon_max) over all rings"""
        boxes = [box for _, _, box in self._arrays]
        return (
            min(box[2] for box in boxes),
            max(box[3] for box in boxes),
            min(box[0] for box in boxes),
            max(box[1] for box in boxes),
        )


def _in_ring(x: np.ndarray, y: np.ndarray, ring_x: np.ndarray, ring_y: np.ndarray) -> np.ndarray:
    """Even-odd ray casting with boundary points counted as inside"""
    inside = np.zeros(x.shape, dtype=bool)
    on_edge = np.zeros(x.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for x1, y1, x2, y2 in zip(ring_x[:-1], ring_y[:-1], ring_x[1:], ring_y[1:]):
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            scale = max(abs(x2 - x1), abs(y2 - y1), 1.0)
            on_edge |= (
                (np.abs(cross) <= EDGE_TOLERANCE * scale)
                & (x >= min(x1, x2) - EDGE_TOLERANCE) & (x <= max(x1, x2) + EDGE_TOLERANCE)
                & (y >= min(y1, y2) - EDGE_TOLERANCE) & (y <= max(y1, y2) + EDGE_TOLERANCE)
            )
            straddles = (y1 > y) != (y2 > y)
            crossing_x = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= straddles & (x < crossing_x)
    return inside | on_edge


def build_affected_area(
    track: list,
    threshold_kt: int = config.THRESHOLD_KT,
    arc_segments: int = config.ARC_SEGMENTS,
    quadrant_mode: bool = False,
) -> AffectedArea:
    """Sweeps the wind extent along the track

    Each track point contributes a disk (an ``arc_segments``-gon whose
    inradius is the largest quadrant radius, or per-quadrant wedges in
    ``quadrant_mode``). Consecutive points with wind at the threshold are
    joined by the convex hull of their two disks; points without such a
    neighbour contribute their disk alone.
    """
    if threshold_kt not in THRESHOLDS:
        raise ArgumentError(f"threshold_kt must be one of {THRESHOLDS}, got {threshold_kt}")
    if arc_segments < 8:
        raise ArgumentError(f"arc_segments must be at least 8, got {arc_segments}")
    if any(later.time < earlier.time for earlier, later in zip(track, track[1:])):
        raise ArgumentError("Track points must be ordered by time")
    active = [point.radius(threshold_kt) > 0 for point in track]
    if not any(active):
        raise EmptyAreaError(f"No track point has {threshold_kt} kt winds: empty area")

    disks = [
        _disk(point.center, point.quadrant_radii(threshold_kt), arc_segments, quadrant_mode)
        if is_active else None
        for point, is_active in zip(track, active)
    ]
    rings = []
    for index, disk in enumerate(disks):
        if disk is None:
            continue
        has_next = index + 1 < len(disks) and disks[index + 1] is not None
        has_previous = index > 0 and disks[index - 1] is not None
        if has_next:
            rings.append(_ring(_convex_hull(np.vstack((disk, disks[index + 1])))))
        elif not has_previous:
            rings.append(_ring(disk))
    logger.info("Built %d kt affected area from %d rings", threshold_kt, len(rings))
    return AffectedArea(threshold_kt=threshold_kt, polygon=tuple(rings))


def is_affected(p: GeoPoint, area: AffectedArea) -> bool:
    """True when the point lies inside the affected area"""
    return bool(area.contains(p.lat, p.lon)[0])


def area_to_geojson(area: AffectedArea, provenance: dict = None) -> geojson.Feature:
    """Exports the area as a MultiPolygon feature"""
    geometry = geojson.MultiPolygon(
        [[[(point.lon, point.lat) for point in ring]] for ring in area.polygon]
    )
    properties = {"threshold_kt": area.threshold_kt}
    feature = geojson.Feature(geometry=geometry, properties=properties)
    if provenance:
        feature["provenance"] = provenance
    return feature


def area_from_geojson(data) -> AffectedArea:
    """Reads an area written by ``area_to_geojson``"""
    if isinstance(data, str):
        data = geojson.loads(data)
    try:
        rings = tuple(
            tuple(GeoPoint(float(lat), float(lon)) for lon, lat in polygon[0])
            for polygon in data["geometry"]["coordinates"]
        )
        return AffectedArea(threshold_kt=int(data["properties"]["threshold_kt"]), polygon=rings)
    except KeyError as error:
        raise DataValidationError("Invalid area: missing " + str(error.args[0])) from error
    except (TypeError, ValueError) as error:
        raise DataValidationError(f"Invalid area: {error}") from error


######################################################################
#  G R I D
######################################################################
@dataclass(frozen=True)
class GridSpec:
    """Regular latitude/longitude grid over a bounding box"""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    cell_deg: float = config.GRID_CELL_DEG

    def __post_init__(self):
        if not self.lat_min < self.lat_max or not self.lon_min < self.lon_max:
            raise ArgumentError(f"Invalid grid bbox {self.bbox}")
        if not self.cell_deg > 0:
            raise ArgumentError(f"cell_deg must be positive, got {self.cell_deg}")

    @property
    def bbox(self) -> tuple:
        """(lat_min, lat_max, lon_min, lon_max)"""
        return (self.lat_min, self.lat_max, self.lon_min, self.lon_max)

    @property
    def n_rows(self) -> int:
        """Number of latitude bands"""
        return max(1, math.ceil((self.lat_max - self.lat_min) / self.cell_deg - 1e-9))

    @property
    def n_cols(self) -> int:
        """Number of longitude bands"""
        return max(1, math.ceil((self.lon_max - self.lon_min) / self.cell_deg - 1e-9))

    def row_edge(self, row: int) -> float:
        """Southern edge of a row"""
        return self.lat_min + row * self.cell_deg

    def col_edge(self, col: int) -> float:
        """Western edge of a column"""
        return self.lon_min + col * self.cell_deg

    def cell_bounds(self, row: int, col: int) -> tuple:
        """(lat_lo, lat_hi, lon_lo, lon_hi) of a cell, clipped to the bbox"""
        return (
            self.row_edge(row),
            min(self.row_edge(row + 1), self.lat_max),
            self.col_edge(col),
            min(self.col_edge(col + 1), self.lon_max),
        )

    def cell_polygon(self, row: int, col: int) -> list:
        """Closed (lon, lat) ring of a cell"""
        lat_lo, lat_hi, lon_lo, lon_hi = self.cell_bounds(row, col)
        return [(lon_lo, lat_lo), (lon_hi, lat_lo), (lon_hi, lat_hi), (lon_lo, lat_hi), (lon_lo, lat_lo)]


def _band(value: float, origin: float, step: float, count: int, edge) -> int:
    index = min(int(math.floor((value - origin) / step)), count - 1)
    # floor of a rounded quotient can be off by one next to an edge
    if index > 0 and value < edge(index):
        index -= 1
    elif index + 1 < count and value >= edge(index + 1):
        index += 1
    return index


def assign_cell(p: GeoPoint, g: GridSpec) -> Optional[tuple]:
    """(row, col) of the cell holding the point, None outside the bbox

    Points on an interior edge go to the higher-index cell; points on the
    outer northern or eastern edge stay in the last cell.
    """
    if not (g.lat_min <= p.lat <= g.lat_max and g.lon_min <= p.lon <= g.lon_max):
        return None
    row = _band(p.lat, g.lat_min, g.cell_deg, g.n_rows, g.row_edge)
    col = _band(p.lon, g.lon_min, g.cell_deg, g.n_cols, g.col_edge)
    return row, col
