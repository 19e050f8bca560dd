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
Synthetic social network sensor data

Grows a follow graph by preferential attachment, places users inside or
outside a synthetic affected area and runs a continuous-time awareness
process mixing an exogenous clock (broadcast news, stronger inside the
area and ramping up before landfall) with endogenous spread from aware
friends. Aware users post messages that mention "sandy".

Simulation time runs from 0 to horizon_h; message offsets are measured
from landfall_h.
"""
import heapq
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import timedelta
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from netsensor import config
from netsensor.geo import AffectedArea, StormTrackPoint, area_to_geojson, build_affected_area
from netsensor.ingest import serialize_stream
from netsensor.models import ArgumentError, GeoPoint, Message, Precision, UserProfile, parse_timestamp
from netsensor.network import SocialGraph
from netsensor.runconfig import write_json, write_table
from netsensor.sampling import rng_for

logger = logging.getLogger("netsensor")

NETWORK_STREAM = 10
REGION_STREAM = 11
AWARENESS_STREAM = 12
POSTING_STREAM = 13
SENTIMENT_STREAM = 14
PLACEMENT_STREAM = 15

POSITIVE_WORDS = ("good", "safe", "thanks", "hope", "calm")
NEGATIVE_WORDS = ("scary", "damage", "flooded", "outage", "worried")
NEUTRAL_WORDS = ("update", "news", "today", "now")
MOOD_MARGIN = 0.1


@dataclass
class SimConfig:
    """Parameters of one simulation run

    Rates are per hour. ``homophily`` is the probability that an
    attachment target is drawn from the attaching user's own region.
    ``ramp_h`` is how long lambda_in takes to ramp up to its full value
    at landfall; 0 keeps it constant. ``beta_cross`` is the endogenous
    rate along follow edges that cross the area boundary (``beta`` when
    None). ``out_onset_h`` starts the outside clock that many hours after
    landfall instead of at time 0.
    """

    n_nodes: int = 2000
    attach_m: int = 3
    reciprocity: float = 0.5
    affected_fraction: float = 0.3
    homophily: float = 0.0
    beta: float = 0.05
    lambda_in: float = 0.005
    lambda_out: float = 0.005
    ramp_h: float = 0.0
    beta_cross: Optional[float] = None
    out_onset_h: Optional[float] = None
    post_rate_coeff: float = 0.1
    gamma: float = config.ACTIVITY_EXPONENT
    jitter_h: float = 0.5
    horizon_h: float = 240.0
    landfall_h: float = 120.0
    seed: int = 0
    epoch: str = config.REFERENCE_EPOCH
    # sentiment of generated messages
    baseline_mu: float = 0.2
    diurnal_amplitude: float = 0.05
    disturbance_mu: float = -0.4
    disturbance_h: float = 48.0
    sentiment_sd: float = 0.15
    # synthetic geography
    bbox: tuple = (25.0, 50.0, -100.0, -60.0)
    track_start: tuple = (27.0, -77.0)
    track_end: tuple = (40.0, -74.5)
    track_points: int = 12
    track_radius_nm: float = 180.0

    def __post_init__(self):
        self.bbox = tuple(self.bbox)
        self.track_start = tuple(self.track_start)
        self.track_end = tuple(self.track_end)

    def validate(self) -> "SimConfig":
        """Raises ArgumentError on an invalid parameter"""
        if self.attach_m < 1:
            raise ArgumentError(f"attach_m must be at least 1, got {self.attach_m}")
        if self.n_nodes <= self.attach_m:
            raise ArgumentError(f"n_nodes must exceed attach_m, got {self.n_nodes} <= {self.attach_m}")
        for name in ("reciprocity", "affected_fraction", "homophily"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ArgumentError(f"{name} must be a probability, got {value}")
        for name in ("beta", "lambda_in", "lambda_out", "post_rate_coeff", "gamma", "jitter_h",
                     "ramp_h", "sentiment_sd", "disturbance_h", "track_radius_nm"):
            value = getattr(self, name)
            if value < 0:
                raise ArgumentError(f"{name} must be nonnegative, got {value}")
        if self.beta_cross is not None and self.beta_cross < 0:
            raise ArgumentError(f"beta_cross must be nonnegative, got {self.beta_cross}")
        if not self.horizon_h > 0:
            raise ArgumentError(f"horizon_h must be positive, got {self.horizon_h}")
        if self.track_points < 2:
            raise ArgumentError("track_points must be at least 2")
        lat_min, lat_max, lon_min, lon_max = self.bbox
        if not (lat_min < lat_max and lon_min < lon_max):
            raise ArgumentError(f"Invalid bbox {self.bbox}")
        return self

    def to_dict(self) -> dict:
        """Serializes the configuration"""
        return {key: list(value) if isinstance(value, tuple) else value for key, value in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        """Deserializes a configuration; unknown keys are rejected"""
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ArgumentError(f"Unknown simulator parameters: {sorted(unknown)}")
        return cls(**data)

    ##################################################
    # PRESETS
    ##################################################

    @classmethod
    def endogenous_dominant(cls, **overrides) -> "SimConfig":
        """Awareness spreads mostly over follow edges"""
        params = dict(
            beta=0.1, lambda_in=0.0005, lambda_out=0.0005, ramp_h=0.0,
            post_rate_coeff=0.3, gamma=0.0, horizon_h=240.0,
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def exogenous_dominant(cls, **overrides) -> "SimConfig":
        """Awareness arrives from outside the network at a uniform rate"""
        params = dict(
            beta=0.0, lambda_in=0.02, lambda_out=0.02, ramp_h=0.0,
            post_rate_coeff=0.02, gamma=0.5, horizon_h=240.0,
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def sandy_like(cls, **overrides) -> "SimConfig":
        """Local storm: the area hears first, everyone else at landfall

        Inside the area a ramping exogenous clock seeds spread along local
        follow edges days ahead of landfall. Awareness does not travel
        over edges crossing the boundary; outside users hear from broadcast
        news starting at landfall, with some local spread. Mood inside the
        area turns negative after landfall.
        """
        params = dict(
            affected_fraction=0.35, homophily=0.85, beta=0.05, beta_cross=0.0,
            lambda_in=0.02, lambda_out=0.2, ramp_h=96.0, out_onset_h=0.0,
            post_rate_coeff=0.05, gamma=0.5, horizon_h=240.0, landfall_h=120.0,
        )
        params.update(overrides)
        return cls(**params)

    ##################################################
    # GEOGRAPHY
    ##################################################

    def storm_track(self) -> list:
        """Straight synthetic track reaching its end point at landfall"""
        epoch = parse_timestamp(self.epoch)
        track = []
        for index in range(self.track_points):
            fraction = index / (self.track_points - 1)
            radius = self.track_radius_nm
            track.append(
                StormTrackPoint(
                    time=epoch + timedelta(hours=6.0 * (index - self.track_points + 1)),
                    center=GeoPoint(
                        self.track_start[0] + fraction * (self.track_end[0] - self.track_start[0]),
                        self.track_start[1] + fraction * (self.track_end[1] - self.track_start[1]),
                    ),
                    radii_nm={34: (radius,) * 4, 50: (radius / 2,) * 4, 64: (radius / 4,) * 4},
                )
            )
        return track

    def affected_area(self) -> AffectedArea:
        """The 34 kt area of the synthetic track"""
        return build_affected_area(self.storm_track(), 34)


@dataclass
class SimOutput:
    """Graph, users, messages and the awareness ground truth"""

    graph: SocialGraph
    profiles: list
    messages: list
    truth: dict
    area: AffectedArea
    config: SimConfig = field(default_factory=SimConfig)

    def write(self, directory, provenance: Optional[dict] = None) -> dict:
        """Writes ingest-format files plus truth, area and configuration

        :return: artifact name -> path
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "messages": directory / "messages.jsonl",
            "profiles": directory / "profiles.jsonl",
            "edges": directory / "edges.txt",
            "truth": directory / "truth.csv",
            "area": directory / "area.geojson",
            "sim_config": directory / "sim_config.json",
        }
        with paths["messages"].open("wb") as stream:
            stream.writelines(serialize_stream(self.messages))
        with paths["profiles"].open("wb") as stream:
            stream.writelines(serialize_stream(self.profiles))
        self.graph.write(paths["edges"])
        truth = pd.DataFrame(sorted(self.truth.items()), columns=["user", "awareness_h"])
        write_table(paths["truth"], truth, provenance)
        paths["area"].write_text(
            json.dumps(area_to_geojson(self.area, provenance), sort_keys=True) + "\n", encoding="utf-8"
        )
        write_json(paths["sim_config"], self.config.to_dict(), provenance)
        logger.info("Wrote simulation with %d messages to %s", len(self.messages), directory)
        return paths


######################################################################
#  N E T W O R K
######################################################################
def node_name(index: int) -> str:
    """Synthetic user id; sorts in creation order"""
    return f"u{index:06d}"


def assign_regions(cfg: SimConfig, n: Optional[int] = None) -> np.ndarray:
    """True for users inside the affected area, by node index"""
    n = cfg.n_nodes if n is None else n
    return rng_for(cfg.seed, REGION_STREAM).random(n) < cfg.affected_fraction


def generate_network(cfg: SimConfig) -> SocialGraph:
    """Preferential-attachment follow graph

    Node m follows the m seed nodes; every later node follows m distinct
    existing nodes picked with probability proportional to their degree,
    from its own region with probability ``homophily``. Each follow is
    mirrored with probability ``reciprocity``.
    """
    cfg.validate()
    rng = rng_for(cfg.seed, NETWORK_STREAM)
    inside = assign_regions(cfg)
    m = cfg.attach_m
    edges = set()
    # nodes repeated once per incident attachment edge
    repeated = []
    repeated_by_region = {True: [], False: []}
    distinct_by_region = {True: set(), False: set()}

    def remember(node):
        region = bool(inside[node])
        repeated.append(node)
        repeated_by_region[region].append(node)
        distinct_by_region[region].add(node)

    for source in range(m, cfg.n_nodes):
        region = bool(inside[source])
        if source == m:
            targets = list(range(m))
        else:
            local = repeated_by_region[region] if len(distinct_by_region[region]) >= m else None
            chosen = set()
            while len(chosen) < m:
                candidates = local if local is not None and rng.random() < cfg.homophily else repeated
                chosen.add(candidates[int(rng.integers(len(candidates)))])
            targets = sorted(chosen)
        for target in targets:
            edges.add((node_name(source), node_name(target)))
            if rng.random() < cfg.reciprocity:
                edges.add((node_name(target), node_name(source)))
            remember(target)
            remember(source)
    graph = SocialGraph(edges, (node_name(index) for index in range(cfg.n_nodes)))
    logger.info("Generated graph with %d users and %d follow edges", len(graph), graph.number_of_edges())
    return graph


######################################################################
#  S P R E A D
######################################################################
def exogenous_time(draw: float, rate: float, ramp_start: Optional[float], ramp_h: float) -> float:
    """Time at which the integrated exogenous hazard reaches ``draw``

    The rate is constant, or ramps linearly from 0 at ramp_start to
    ``rate`` at ramp_start + ramp_h and stays there. With ramp_h 0 the
    clock switches on at ramp_start.
    """
    if rate <= 0:
        return math.inf
    if ramp_start is None:
        return draw / rate
    if ramp_h <= 0:
        return max(ramp_start, 0.0) + draw / rate

    def ramp_integral(t):
        # integral of clip((s - ramp_start) / ramp_h, 0, 1) from -inf to t
        elapsed = t - ramp_start
        if elapsed <= 0:
            return 0.0
        if elapsed <= ramp_h:
            return elapsed * elapsed / (2.0 * ramp_h)
        return ramp_h / 2.0 + elapsed - ramp_h

    target = draw / rate + ramp_integral(0.0)
    if target <= ramp_h / 2.0:
        return ramp_start + math.sqrt(2.0 * ramp_h * target)
    return ramp_start + ramp_h + (target - ramp_h / 2.0)


def _place_users(rng: np.random.Generator, count: int, bbox: tuple, area: AffectedArea, inside: bool) -> list:
    """Uniform points of the bbox inside (or outside) the area"""
    if not count:
        return []
    lat_min, lat_max, lon_min, lon_max = bbox
    if inside:
        area_lat_min, area_lat_max, area_lon_min, area_lon_max = area.bbox
        lat_min, lat_max = max(lat_min, area_lat_min), min(lat_max, area_lat_max)
        lon_min, lon_max = max(lon_min, area_lon_min), min(lon_max, area_lon_max)
    points = []
    for _ in range(1000):
        lats = rng.uniform(lat_min, lat_max, 2 * count)
        lons = rng.uniform(lon_min, lon_max, 2 * count)
        keep = area.contains(lats, lons) == inside
        points.extend(zip(lats[keep].tolist(), lons[keep].tolist()))
        if len(points) >= count:
            return [GeoPoint(round(lat, 6), round(lon, 6), Precision.EXACT) for lat, lon in points[:count]]
    raise ArgumentError("Could not place users: the affected area does not fit the bbox")


def _mood(cfg: SimConfig, t: float, inside: bool) -> float:
    mean = cfg.baseline_mu + cfg.diurnal_amplitude * math.sin(2.0 * math.pi * t / 24.0)
    if inside and cfg.landfall_h <= t < cfg.landfall_h + cfg.disturbance_h:
        mean = cfg.disturbance_mu
    return mean


def _text(score: float, rng: np.random.Generator) -> str:
    if score > MOOD_MARGIN:
        words = POSITIVE_WORDS
    elif score < -MOOD_MARGIN:
        words = NEGATIVE_WORDS
    else:
        words = NEUTRAL_WORDS
    return f"sandy {words[int(rng.integers(len(words)))]}"


def simulate_spread(cfg: SimConfig, g: SocialGraph) -> SimOutput:
    """Runs awareness and posting on a graph

    Users are processed in sorted id order; regions follow that order.
    """
    cfg.validate()
    nodes = sorted(g.nodes)
    inside = dict(zip(nodes, assign_regions(cfg, len(nodes)).tolist()))
    area = cfg.affected_area()
    epoch = parse_timestamp(cfg.epoch)

    placement = rng_for(cfg.seed, PLACEMENT_STREAM)
    inside_nodes = [node for node in nodes if inside[node]]
    outside_nodes = [node for node in nodes if not inside[node]]
    geopoints = dict(zip(inside_nodes, _place_users(placement, len(inside_nodes), cfg.bbox, area, True)))
    geopoints.update(zip(outside_nodes, _place_users(placement, len(outside_nodes), cfg.bbox, area, False)))

    # event-driven awareness: a node's earliest predicted time wins
    awareness_rng = rng_for(cfg.seed, AWARENESS_STREAM)
    ramp_start = cfg.landfall_h - cfg.ramp_h if cfg.ramp_h > 0 else None
    out_start = None if cfg.out_onset_h is None else cfg.landfall_h + cfg.out_onset_h
    cross = cfg.beta if cfg.beta_cross is None else cfg.beta_cross
    predicted = {}
    queue = []
    sequence = 0
    draws = awareness_rng.exponential(1.0, len(nodes))
    for node, draw in zip(nodes, draws):
        if inside[node]:
            t = exogenous_time(draw, cfg.lambda_in, ramp_start, cfg.ramp_h)
        else:
            t = exogenous_time(draw, cfg.lambda_out, out_start, 0.0)
        predicted[node] = t
        if t < cfg.horizon_h:
            heapq.heappush(queue, (t, sequence, node))
            sequence += 1
    aware = {}
    while queue:
        t, _, node = heapq.heappop(queue)
        if node in aware or t > predicted[node]:
            continue
        aware[node] = t
        if cfg.beta <= 0 and cross <= 0:
            continue
        for follower in g.followers(node):
            if follower in aware:
                continue
            rate = cfg.beta if inside[follower] == inside[node] else cross
            if rate <= 0:
                continue
            t_push = t + awareness_rng.exponential(1.0 / rate)
            if t_push < predicted[follower] and t_push < cfg.horizon_h:
                predicted[follower] = t_push
                heapq.heappush(queue, (t_push, sequence, follower))
                sequence += 1

    if not aware:
        logger.warning("Nobody became aware within %.1f h: no messages generated", cfg.horizon_h)
        return SimOutput(g, _profiles(g, nodes, geopoints), [], {}, area, cfg)

    posting_rng = rng_for(cfg.seed, POSTING_STREAM)
    sentiment_rng = rng_for(cfg.seed, SENTIMENT_STREAM)
    posts = []
    for node in sorted(aware):
        rate = cfg.post_rate_coeff * (1.0 + g.out_degree(node)) ** cfg.gamma
        t = aware[node] + (posting_rng.exponential(cfg.jitter_h) if cfg.jitter_h > 0 else 0.0)
        while t < cfg.horizon_h:
            posts.append((t, node))
            if rate <= 0:
                break
            t += posting_rng.exponential(1.0 / rate)

    # whole seconds, rounded up so no post precedes its author's awareness
    rows = [(math.ceil((t - cfg.landfall_h) * 3600.0), node, t) for t, node in posts]
    rows.sort()
    messages = []
    for index, (seconds, node, t) in enumerate(rows):
        mood = float(np.clip(sentiment_rng.normal(_mood(cfg, t, inside[node]), cfg.sentiment_sd), -1.0, 1.0))
        timestamp = epoch + timedelta(seconds=seconds)
        messages.append(
            Message(
                message_id=f"m{index:08d}",
                user_id=node,
                timestamp=timestamp,
                offset_h=seconds / 3600.0,
                text=_text(mood, sentiment_rng),
                hashtags=("sandy",),
                geo=geopoints[node],
                precomputed_sentiment=round(mood, 6),
            )
        )
    truth = {node: t - cfg.landfall_h for node, t in sorted(aware.items())}
    logger.info(
        "Simulated %d aware users of %d and %d messages", len(aware), len(nodes), len(messages)
    )
    return SimOutput(g, _profiles(g, nodes, geopoints), messages, truth, area, cfg)


def _profiles(g: SocialGraph, nodes: list, geopoints: dict) -> list:
    return [
        UserProfile(
            user_id=node,
            friends_count=g.out_degree(node),
            followers_count=g.in_degree(node),
            geopoint=geopoints[node],
        )
        for node in nodes
    ]


def simulate(cfg: SimConfig) -> SimOutput:
    """Generates a graph and runs the spread on it"""
    return simulate_spread(cfg, generate_network(cfg))
