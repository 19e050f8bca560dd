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
Control and sensor groups

A control group is a uniform random sample of the eligible pool; its
sensor group takes one random friend of each control member. Both may be
restricted to users inside or outside the affected area.

Random streams come from numpy SeedSequences: the control draw and the
sensor draw of one trial use separate streams of the same seed.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd

from netsensor.models import ArgumentError, CapacityError, DataValidationError
from netsensor.network import SocialGraph
from netsensor.runconfig import read_table, write_table

logger = logging.getLogger("netsensor")

CONTROL_STREAM = 0
SENSOR_STREAM = 1
GROUP_COLUMNS = ["kind", "user_id", "seed", "combo"]


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent deterministic generator for (seed, stream)"""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


######################################################################
#  E N U M E R A T I O N S
######################################################################
class Constraint(Enum):
    """Geographic restriction of one group"""

    IN = "in"
    OUT = "out"
    ANY = "any"

    def admits(self, user_id: str, affected: Optional[Mapping]) -> bool:
        """True when the user satisfies the restriction

        Under ANY no location is needed; IN and OUT need a known location.
        """
        if self is Constraint.ANY:
            return True
        if affected is None or user_id not in affected:
            return False
        return bool(affected[user_id]) is (self is Constraint.IN)


class GeoCombo(Enum):
    """Control and sensor restrictions, in that order"""

    ANY = "any"
    IN_IN = "in_in"
    IN_OUT = "in_out"
    OUT_IN = "out_in"
    OUT_OUT = "out_out"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            normalized = value.strip().lower().replace("-", "_").replace("/", "_")
            for member in cls:
                if member.value == normalized:
                    return member
        return None

    @property
    def label(self) -> str:
        """Command line spelling: any, in-in, in-out, out-in, out-out"""
        return self.value.replace("_", "-")

    @property
    def control(self) -> Constraint:
        """Restriction on the control group"""
        return Constraint.ANY if self is GeoCombo.ANY else Constraint(self.value.split("_")[0])

    @property
    def sensor(self) -> Constraint:
        """Restriction on the sensor group"""
        return Constraint.ANY if self is GeoCombo.ANY else Constraint(self.value.split("_")[1])


class GroupKind(Enum):
    """Role of a sample group"""

    CONTROL = "control"
    SENSOR = "sensor"


######################################################################
#  G R O U P S
######################################################################
@dataclass(frozen=True)
class SampleGroup:
    """An ordered set of users drawn with a known seed"""

    kind: GroupKind
    members: tuple
    seed: int
    combo: GeoCombo = GeoCombo.ANY

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise DataValidationError(f"Duplicate members in {self.kind.value} group")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, user_id):
        return user_id in self.member_set

    @property
    def member_set(self) -> frozenset:
        """Members as a set"""
        return frozenset(self.members)


@dataclass(frozen=True)
class SamplePair:
    """A control group with its sensor group"""

    control: SampleGroup
    sensor: SampleGroup
    replaced: int = 0


def constrained_pool(pool: Iterable, constraint: Constraint, affected: Optional[Mapping]) -> list:
    """Sorted users of the pool that satisfy the restriction"""
    return sorted(user for user in set(pool) if constraint.admits(user, affected))


def sample_control(
    pool: Iterable,
    n: int,
    constraint: Union[Constraint, str] = Constraint.ANY,
    rng_seed: int = 0,
    affected: Optional[Mapping] = None,
    combo: GeoCombo = GeoCombo.ANY,
) -> SampleGroup:
    """Uniform sample of n users without replacement

    :param pool: eligible users (geocoded, with a relevant message)
    :param affected: user -> True inside the affected area, False outside
    """
    constraint = Constraint(constraint)
    if n < 1:
        raise ArgumentError(f"Sample size must be positive, got {n}")
    candidates = constrained_pool(pool, constraint, affected)
    if len(candidates) < n:
        raise CapacityError(
            f"Pool of {len(candidates)} users ({constraint.value}) cannot supply {n}: "
            f"short by {n - len(candidates)}",
            shortfall=n - len(candidates),
        )
    picks = rng_for(rng_seed, CONTROL_STREAM).choice(len(candidates), size=n, replace=False)
    return SampleGroup(GroupKind.CONTROL, tuple(candidates[i] for i in picks), rng_seed, combo)


def derive_sensor(
    control: SampleGroup,
    g: SocialGraph,
    constraint: Union[Constraint, str] = Constraint.ANY,
    rng_seed: int = 0,
    pool: Optional[Iterable] = None,
    affected: Optional[Mapping] = None,
    eligible: Optional[set] = None,
) -> SamplePair:
    """Picks one random admissible friend per control member

    A friend is admissible when it is eligible (has an entry time),
    satisfies the restriction and is neither a control member nor an
    earlier sensor pick. A control member without admissible friends is
    replaced by a fresh draw from ``pool`` under the control group's
    restriction.

    :param pool: replacement candidates; the eligible users when None, or
        every user of the graph when eligibility is unrestricted
    :return: the final control group and its sensor group
    """
    constraint = Constraint(constraint)
    if not len(control):
        raise ArgumentError("Control group is empty")
    rng = rng_for(rng_seed, SENSOR_STREAM)
    members = list(control.members)
    used = set(members)
    discarded = set()
    if pool is None:
        pool = eligible if eligible is not None else g.nodes
    # replacements are drawn by swap-remove; entries used since are skipped on the way
    refill = [user for user in constrained_pool(pool, control.combo.control, affected) if user not in used]
    sensor = []
    index = 0
    while index < len(members):
        member = members[index]
        friends = g.friends(member) if member in g else []
        admissible = [
            friend
            for friend in friends
            if friend not in used
            and (eligible is None or friend in eligible)
            and constraint.admits(friend, affected)
        ]
        if admissible:
            pick = admissible[int(rng.integers(len(admissible)))]
            sensor.append(pick)
            used.add(pick)
            index += 1
            continue
        discarded.add(member)
        replacement = None
        while refill and replacement is None:
            slot = int(rng.integers(len(refill)))
            refill[slot], refill[-1] = refill[-1], refill[slot]
            candidate = refill.pop()
            if candidate not in used:
                replacement = candidate
        if replacement is None:
            raise CapacityError(
                f"Pool exhausted: completed {index} of {len(members)} control/sensor pairs",
                shortfall=len(members) - index,
            )
        logger.debug("Replaced dead-end control member %s with %s", member, replacement)
        members[index] = replacement
        used.add(replacement)
    if discarded:
        logger.debug("Replaced %d control members without admissible friends", len(discarded))
    return SamplePair(
        control=SampleGroup(GroupKind.CONTROL, tuple(members), control.seed, control.combo),
        sensor=SampleGroup(GroupKind.SENSOR, tuple(sensor), rng_seed, control.combo),
        replaced=len(discarded),
    )


def draw_pair(
    pool: Iterable,
    n: int,
    g: SocialGraph,
    combo: Union[GeoCombo, str] = GeoCombo.ANY,
    trial_seed: int = 0,
    affected: Optional[Mapping] = None,
    eligible: Optional[set] = None,
) -> SamplePair:
    """Control and sensor groups of one trial"""
    combo = GeoCombo(combo)
    pool = sorted(set(pool))
    control = sample_control(pool, n, combo.control, trial_seed, affected, combo)
    return derive_sensor(control, g, combo.sensor, trial_seed, pool, affected, eligible)


######################################################################
#  A U D I T   T A B L E
######################################################################
def groups_to_frame(groups: Iterable) -> pd.DataFrame:
    """One row per member: kind, user_id, seed, combo"""
    rows = [
        (group.kind.value, user_id, group.seed, group.combo.label)
        for group in groups
        for user_id in group.members
    ]
    return pd.DataFrame(rows, columns=GROUP_COLUMNS)


def write_groups(path, groups: Iterable, provenance: Optional[dict] = None):
    """Writes the group audit table"""
    return write_table(path, groups_to_frame(groups), provenance)


def read_groups(path) -> list:
    """Reads groups back in file order"""
    frame = read_table(path, dtype={"kind": str, "user_id": str, "combo": str})
    missing = set(GROUP_COLUMNS) - set(frame.columns)
    if missing:
        raise DataValidationError(f"Invalid group table: missing {sorted(missing)}")
    groups = []
    for (kind, seed, combo), rows in frame.groupby(["kind", "seed", "combo"], sort=False):
        try:
            groups.append(SampleGroup(GroupKind(kind), tuple(rows["user_id"]), int(seed), GeoCombo(combo)))
        except ValueError as error:
            raise DataValidationError(f"Invalid group table: {error}") from error
    return groups
