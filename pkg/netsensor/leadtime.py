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
Lead times

Entry times, the lead time of a sensor group over its control group,
sweeps over sample sizes and trials, the shuffled-timestamp null model,
entry-time CDFs and activity/degree profiles by entry time.

A negative lead time means the sensor group entered earlier.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd
from scipy import stats

from netsensor import config
from netsensor.geo import AffectedArea
from netsensor.ingest import activity_counts
from netsensor.models import ArgumentError, CapacityError, IntegrityError
from netsensor.network import SocialGraph
from netsensor.runconfig import write_table
from netsensor.sampling import GeoCombo, SampleGroup, draw_pair, rng_for

logger = logging.getLogger("netsensor")

NULL_STREAM = 2
# values per block of kernels evaluated at once
KERNEL_CHUNK = 2048
SWEEP_COLUMNS = ["size", "combo", "trials", "dt", "dt_sigma", "mean_tc", "mean_ts", "n_c", "n_s"]


def entry_times(messages: Iterable) -> dict:
    """user_id -> offset hours of the user's first message"""
    table = {}
    for message in messages:
        current = table.get(message.user_id)
        if current is None or message.offset_h < current:
            table[message.user_id] = message.offset_h
    return table


######################################################################
#  L E A D   T I M E
######################################################################
@dataclass(frozen=True)
class LeadTimeResult:
    """Lead time of one trial, or the aggregate of a sweep row"""

    sample_size: int
    combo: GeoCombo
    trials: int
    dt: float
    dt_sigma: float
    mean_tc: float
    mean_ts: float
    n_c: float
    n_s: float

    def as_row(self) -> dict:
        """Sweep table row"""
        return {
            "size": self.sample_size,
            "combo": self.combo.label,
            "trials": self.trials,
            "dt": self.dt,
            "dt_sigma": self.dt_sigma,
            "mean_tc": self.mean_tc,
            "mean_ts": self.mean_ts,
            "n_c": self.n_c,
            "n_s": self.n_s,
        }


def _group_entries(group: SampleGroup, e: Mapping) -> list:
    missing = [user for user in group.members if user not in e]
    if missing:
        raise IntegrityError(
            f"{len(missing)} {group.kind.value} members have no entry time, e.g. {missing[:3]}"
        )
    return [e[user] for user in group.members]


def lead_time(control: SampleGroup, sensor: SampleGroup, e: Mapping, activity: Mapping) -> LeadTimeResult:
    """Single-trial lead time: mean sensor entry minus mean control entry"""
    if not len(control) or not len(sensor):
        raise ArgumentError("Lead time needs nonempty groups")
    mean_tc = math.fsum(_group_entries(control, e)) / len(control)
    mean_ts = math.fsum(_group_entries(sensor, e)) / len(sensor)
    return LeadTimeResult(
        sample_size=len(control),
        combo=control.combo,
        trials=1,
        dt=mean_ts - mean_tc,
        dt_sigma=0.0,
        mean_tc=mean_tc,
        mean_ts=mean_ts,
        n_c=math.fsum(activity.get(user, 0) for user in control.members) / len(control),
        n_s=math.fsum(activity.get(user, 0) for user in sensor.members) / len(sensor),
    )


@dataclass(frozen=True)
class LeadTimeInputs:
    """Everything a trial needs besides its size, combo and seed

    ``affected`` maps every located user to True inside the affected area
    and False outside; ``pool`` holds the located users with an entry time.
    """

    graph: SocialGraph
    entry: dict
    activity: dict
    affected: dict
    pool: tuple

    @property
    def eligible(self) -> frozenset:
        """Users with an entry time"""
        return frozenset(self.entry)

    @classmethod
    def build(
        cls,
        graph: SocialGraph,
        messages: list,
        located: Optional[Mapping] = None,
        area: Optional[AffectedArea] = None,
        window: Optional[tuple] = None,
    ) -> "LeadTimeInputs":
        """Derives entry times, activity, geography and the pool

        :param located: user_id -> GeoPoint; None treats every user with
            messages as located (no geographic restriction possible)
        :param window: (start_h, end_h) observation window for activity
        """
        entry = entry_times(messages)
        activity = activity_counts(messages, window)
        affected = {}
        if located is not None and area is not None:
            users = sorted(located)
            inside = area.contains([located[user].lat for user in users], [located[user].lon for user in users])
            affected = dict(zip(users, (bool(flag) for flag in inside)))
        pool = tuple(sorted(user for user in entry if located is None or user in located))
        logger.info("Sampling pool holds %d users (%d with geography)", len(pool), len(affected))
        return cls(graph, entry, activity, affected, pool)

    def with_messages(self, messages: list, window: Optional[tuple] = None) -> "LeadTimeInputs":
        """Same graph and geography, entry times and activity from other messages"""
        entry = entry_times(messages)
        pool = tuple(user for user in self.pool if user in entry)
        return replace(self, entry=entry, activity=activity_counts(messages, window), pool=pool)


def run_trial(size: int, combo: GeoCombo, inputs: LeadTimeInputs, trial_seed: int) -> LeadTimeResult:
    """Draws one control/sensor pair and measures its lead time"""
    pair = draw_pair(
        inputs.pool,
        size,
        inputs.graph,
        combo,
        trial_seed,
        affected=inputs.affected,
        eligible=inputs.eligible,
    )
    return lead_time(pair.control, pair.sensor, inputs.entry, inputs.activity)


def _run_trial_args(args):
    return run_trial(*args)


def lead_time_sweep(
    sizes: Iterable,
    trials: int = config.TRIALS,
    combo: Union[GeoCombo, str] = GeoCombo.ANY,
    inputs: LeadTimeInputs = None,
    base_seed: int = 0,
    workers: int = 1,
) -> list:
    """One aggregated LeadTimeResult per sample size

    Trial i of every size uses seed ``base_seed + i``; dt is the mean over
    trials and dt_sigma their sample standard deviation.
    """
    combo = GeoCombo(combo)
    if trials < 2:
        raise ArgumentError(f"trials must be at least 2 to estimate dt_sigma, got {trials}")
    if inputs is None:
        raise ArgumentError("lead_time_sweep needs inputs")
    rows = []
    for size in sizes:
        jobs = [(int(size), combo, inputs, base_seed + index) for index in range(trials)]
        try:
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as executor:
                    results = list(executor.map(_run_trial_args, jobs))
            else:
                results = [run_trial(*job) for job in jobs]
        except CapacityError as error:
            raise CapacityError(
                f"Sample size {size}, combo {combo.label}: {error}", shortfall=error.shortfall
            ) from error
        dts = np.array([result.dt for result in results])
        rows.append(
            LeadTimeResult(
                sample_size=int(size),
                combo=combo,
                trials=trials,
                dt=float(dts.mean()),
                dt_sigma=float(dts.std(ddof=1)),
                mean_tc=float(np.mean([result.mean_tc for result in results])),
                mean_ts=float(np.mean([result.mean_ts for result in results])),
                n_c=float(np.mean([result.n_c for result in results])),
                n_s=float(np.mean([result.n_s for result in results])),
            )
        )
        logger.info("Size %d combo %s: dt = %.3f +/- %.3f h", size, combo.label, rows[-1].dt, rows[-1].dt_sigma)
    return rows


def write_sweep_table(path, results: Iterable, provenance: Optional[dict] = None):
    """Writes sweep rows with the columns size .. n_s"""
    frame = pd.DataFrame([result.as_row() for result in results], columns=SWEEP_COLUMNS)
    return write_table(path, frame, provenance)


def attenuation(results: list) -> float:
    """Spearman correlation between sample size and |dt|; NaN below 3 rows"""
    if len(results) < 3:
        return float("nan")
    correlation = stats.spearmanr([result.sample_size for result in results], [abs(result.dt) for result in results])
    return float(correlation[0])


######################################################################
#  N U L L   M O D E L
######################################################################
def null_model_shuffle(messages: list, rng_seed: int) -> list:
    """Permutes timestamps across messages

    Every other field stays with its message, so per-user message counts
    and each user's link to the graph are preserved.
    """
    messages = list(messages)
    if len(messages) < 2:
        return messages
    order = rng_for(rng_seed, NULL_STREAM).permutation(len(messages))
    return [
        replace(message, timestamp=messages[source].timestamp, offset_h=messages[source].offset_h)
        for message, source in zip(messages, order)
    ]


def null_model_sweep(
    messages: list,
    sizes: Iterable,
    trials: int = config.TRIALS,
    combo: Union[GeoCombo, str] = GeoCombo.ANY,
    inputs: LeadTimeInputs = None,
    rng_seed: int = 0,
    base_seed: int = 0,
    workers: int = 1,
    window: Optional[tuple] = None,
) -> list:
    """Lead-time sweep on shuffled timestamps"""
    shuffled = null_model_shuffle(messages, rng_seed)
    return lead_time_sweep(sizes, trials, combo, inputs.with_messages(shuffled, window), base_seed, workers)


######################################################################
#  C D F S
######################################################################
@dataclass
class CdfCurve:
    """Cumulative fraction on an ascending grid of offset hours"""

    grid: np.ndarray
    value: np.ndarray

    def at(self, t: float) -> float:
        """Value at t, linearly interpolated"""
        return float(np.interp(t, self.grid, self.value, left=0.0, right=1.0))

    def to_frame(self, label: str = "value") -> pd.DataFrame:
        """Two-column table: offset_h and the curve"""
        return pd.DataFrame({"offset_h": self.grid, label: self.value})


def kde_cdf(
    values,
    bandwidth_h: float = config.BANDWIDTH_HOURS,
    grid_step_h: float = config.CDF_GRID_STEP_HOURS,
    pad_bandwidths: float = config.CDF_PAD_BANDWIDTHS,
) -> CdfCurve:
    """Gaussian-kernel CDF of the values

    Each value contributes the normal CDF of its kernel, so the curve is
    exact at every grid point. The grid is aligned to multiples of the
    step and covers min - pad to max + pad bandwidths.
    """
    if not bandwidth_h > 0:
        raise ArgumentError(f"bandwidth must be positive, got {bandwidth_h}")
    if not grid_step_h > 0:
        raise ArgumentError(f"grid step must be positive, got {grid_step_h}")
    values = np.asarray(values, dtype=float)
    if not values.size:
        raise ArgumentError("Cannot estimate a CDF from no values")
    first = math.floor((values.min() - pad_bandwidths * bandwidth_h) / grid_step_h)
    last = math.ceil((values.max() + pad_bandwidths * bandwidth_h) / grid_step_h)
    grid = grid_step_h * np.arange(first, last + 1, dtype=float)
    cumulative = np.zeros_like(grid)
    for start in range(0, values.size, KERNEL_CHUNK):
        chunk = values[start:start + KERNEL_CHUNK]
        cumulative += stats.norm.cdf((grid[:, None] - chunk[None, :]) / bandwidth_h).sum(axis=1)
    return CdfCurve(grid=grid, value=cumulative / values.size)


def entry_cdf(
    group: SampleGroup,
    e: Mapping,
    bandwidth_h: float = config.BANDWIDTH_HOURS,
    grid_step_h: float = config.CDF_GRID_STEP_HOURS,
) -> CdfCurve:
    """CDF of the group's entry times"""
    if not len(group):
        raise ArgumentError("Cannot estimate a CDF for an empty group")
    return kde_cdf(_group_entries(group, e), bandwidth_h, grid_step_h)


def message_cdf(
    group: SampleGroup,
    messages: Iterable,
    bandwidth_h: float = config.BANDWIDTH_HOURS,
    grid_step_h: float = config.CDF_GRID_STEP_HOURS,
) -> CdfCurve:
    """CDF of every message posted by the group"""
    members = group.member_set
    return kde_cdf([message.offset_h for message in messages if message.user_id in members], bandwidth_h, grid_step_h)


def daily_counts(group: SampleGroup, messages: Iterable, bin_h: float = 24.0) -> dict:
    """bin start -> messages posted by the group, contiguous and zero-filled"""
    if not bin_h > 0:
        raise ArgumentError(f"bin_h must be positive, got {bin_h}")
    members = group.member_set
    offsets = np.array([message.offset_h for message in messages if message.user_id in members], dtype=float)
    if not offsets.size:
        return {}
    index = np.floor(offsets / bin_h).astype(np.int64)
    first = int(index.min())
    counts = np.bincount(index - first)
    return {float((first + step) * bin_h): int(count) for step, count in enumerate(counts)}


######################################################################
#  A C T I V I T Y   B Y   E N T R Y   T I M E
######################################################################
def activity_vs_entry(
    users: Iterable,
    e: Mapping,
    activity: Mapping,
    degrees: Mapping,
    bin_h: float,
    stage: str = "all",
) -> pd.DataFrame:
    """Mean activity, in-degree and out-degree per entry-time bin

    ``stage`` keeps users entering before offset 0 ("pre"), at or after
    it ("post") or all of them. Bins are contiguous; empty bins have a
    count of 0 and NaN means.
    """
    if not bin_h > 0:
        raise ArgumentError(f"bin_h must be positive, got {bin_h}")
    if stage not in ("all", "pre", "post"):
        raise ArgumentError(f"stage must be all, pre or post, got {stage!r}")
    rows = []
    for user in sorted(set(users)):
        if user not in e:
            continue
        entry = e[user]
        if (stage == "pre" and entry >= 0) or (stage == "post" and entry < 0):
            continue
        in_degree, out_degree = degrees.get(user, (0, 0))
        rows.append((math.floor(entry / bin_h), activity.get(user, 0), in_degree, out_degree))
    columns = ["bin_start_h", "count", "activity", "in_degree", "out_degree"]
    if not rows:
        return pd.DataFrame(columns=columns)
    frame = pd.DataFrame(rows, columns=["bin", "activity", "in_degree", "out_degree"])
    grouped = frame.groupby("bin").agg(
        count=("activity", "size"),
        activity=("activity", "mean"),
        in_degree=("in_degree", "mean"),
        out_degree=("out_degree", "mean"),
    )
    grouped = grouped.reindex(range(int(frame["bin"].min()), int(frame["bin"].max()) + 1))
    grouped["count"] = grouped["count"].fillna(0).astype(int)
    grouped.insert(0, "bin_start_h", grouped.index.to_numpy(dtype=float) * bin_h)
    return grouped.reset_index(drop=True)[columns]
