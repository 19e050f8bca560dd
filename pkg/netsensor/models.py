# Copyright 2024 The netsensor Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License');
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an 'AS IS' BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Models for the Network Sensor toolkit

The records shared by every stage of the pipeline live in this module,
together with the error hierarchy the stages raise.

Models
------
GeoPoint - a latitude/longitude pair with its geocoding precision
Message - one tweet-like record of the message stream
UserProfile - self-reported location and follow counts of one user
ParseReport - counts collected while parsing a line-delimited stream

Attributes:
-----------
message_id (string) - unique identifier of the message within a stream
offset_h (float) - hours between the message timestamp and the reference epoch
hashtags (tuple) - lowercase hashtags without the leading '#'
"""
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from functools import cached_property
from typing import Optional

logger = logging.getLogger("netsensor")

TOKEN_PATTERN = re.compile(r"\w+", re.UNICODE)

# Logical field name -> key used in the line-delimited message records
MESSAGE_SCHEMA = {
    "id": "id",
    "user": "user",
    "ts": "ts",
    "text": "text",
    "hashtags": "hashtags",
    "lat": "lat",
    "lon": "lon",
    "retweet": "retweet",
    "sentiment": "sentiment",
    "location": "location",
    "friends": "friends",
    "followers": "followers",
}

PROFILE_SCHEMA = {
    "user": "user",
    "location": "location",
    "friends": "friends",
    "followers": "followers",
    "lat": "lat",
    "lon": "lon",
}


######################################################################
#  E R R O R S
######################################################################
class DataValidationError(Exception):
    """Used for data that fails validation, the root of every error below"""


class ArgumentError(DataValidationError, ValueError):
    """A parameter is outside the range an operation accepts"""


class SuspiciousInputError(DataValidationError):
    """Too many malformed lines: the input probably has the wrong schema"""

    def __init__(self, message: str, sample: list):
        super().__init__(message)
        self.sample = sample


class UnknownUserError(DataValidationError, KeyError):
    """A user id was looked up in a graph that does not contain it"""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CapacityError(DataValidationError):
    """A sample could not be completed from the pool available"""

    def __init__(self, message: str, shortfall: int = 0):
        super().__init__(message)
        self.shortfall = shortfall


class IntegrityError(DataValidationError):
    """Inputs that upstream stages guarantee turned out inconsistent"""


class EmptyAreaError(DataValidationError):
    """No track point has wind extent at the requested threshold"""


class UndefinedStatisticError(DataValidationError):
    """A statistic was requested on input where it is not defined"""


class DegenerateFitError(DataValidationError):
    """A least-squares fit has no unique solution"""


######################################################################
#  E N U M E R A T I O N S
######################################################################
class Precision(Enum):
    """How a geographic position was obtained"""

    EXACT = "exact"
    CENTROID = "centroid"


class FilterLevel(Enum):
    """Relevance filter levels with their keyword sets"""

    NONE = "none"
    MODERATE = "moderate"
    STRICT = "strict"

    @property
    def keyword_set(self) -> frozenset:
        """Keywords a message must contain to pass this level"""
        return _FILTER_KEYWORDS[self]


_FILTER_KEYWORDS = {
    FilterLevel.NONE: frozenset(),
    FilterLevel.MODERATE: frozenset(
        {"sandy", "storm", "hurricane", "huracán", "superstorm", "frankenstorm"}
    ),
    FilterLevel.STRICT: frozenset({"sandy"}),
}


######################################################################
#  U T I L I T Y   F U N C T I O N S
######################################################################
def tokenize(text: str) -> list:
    """Splits text into case-folded Unicode word tokens

    '#' and other punctuation separate tokens, so "#Sandy" yields "sandy".
    Diacritics are kept: "huracán" and "huracan" are different tokens.
    Folding is full Unicode folding, so "STRASSE" and "Straße" agree.
    """
    return TOKEN_PATTERN.findall(text.casefold())


def normalize_hashtags(values) -> tuple:
    """Case-folds hashtags and strips the leading '#'"""
    if isinstance(values, str):
        values = values.split()
    tags = []
    for value in values:
        if not isinstance(value, str):
            raise DataValidationError(f"Invalid hashtag: {value!r}")
        tag = value.lstrip("#").casefold()
        if tag:
            tags.append(tag)
    return tuple(tags)


def parse_timestamp(value) -> datetime:
    """Parses ISO-8601 text or epoch seconds into an aware UTC datetime

    Sub-second parts are dropped: offsets are exact to one second.
    """
    if isinstance(value, bool):
        raise DataValidationError(f"Invalid timestamp: {value!r}")
    if isinstance(value, str):
        text = value.strip()
        try:
            value = float(text)
        except ValueError:
            if text.endswith("Z"):
                text = text[:-1] + "+00:00"
            stamp = datetime.fromisoformat(text)
            if stamp.tzinfo is None:
                stamp = stamp.replace(tzinfo=timezone.utc)
            return stamp.astimezone(timezone.utc).replace(microsecond=0)
    if isinstance(value, (int, float)):
        try:
            return datetime.fromtimestamp(int(value), tz=timezone.utc)
        except (OverflowError, OSError, ValueError) as error:
            raise DataValidationError(f"Timestamp out of range: {value!r}") from error
    raise DataValidationError(f"Invalid timestamp: {value!r}")


def offset_hours(timestamp: datetime, epoch: datetime) -> float:
    """Hours from the reference epoch to the timestamp"""
    return (timestamp - epoch).total_seconds() / 3600.0


def _optional_float(value) -> Optional[float]:
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        raise TypeError(f"expected a number, got {value!r}")
    return float(value)


def _count(value, name: str) -> int:
    if value is None or value == "":
        return 0
    if isinstance(value, bool):
        raise DataValidationError(f"Invalid type for count [{name}]: bool")
    count = int(value)
    if count < 0:
        raise DataValidationError(f"Invalid count [{name}]: {count} < 0")
    return count


######################################################################
#  G E O P O I N T
######################################################################
@dataclass(frozen=True)
class GeoPoint:
    """A position in degrees with its precision"""

    lat: float
    lon: float
    precision: Precision = Precision.EXACT

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise DataValidationError(f"Latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise DataValidationError(f"Longitude out of range: {self.lon}")


######################################################################
#  M E S S A G E
######################################################################
@dataclass(frozen=True)
class Message:
    """One tweet-like record of the message stream"""

    message_id: str
    user_id: str
    timestamp: datetime
    offset_h: float
    text: str
    hashtags: tuple = ()
    geo: Optional[GeoPoint] = None
    is_retweet: bool = False
    precomputed_sentiment: Optional[float] = None

    def __repr__(self):
        return f"<Message {self.message_id} user=[{self.user_id}] t={self.offset_h:+.2f}h>"

    @cached_property
    def tokens(self) -> frozenset:
        """Word tokens of the text plus the hashtags"""
        return frozenset(tokenize(self.text)) | frozenset(self.hashtags)

    def serialize(self) -> dict:
        """Serializes a Message into an ingest record"""
        data = {
            "id": self.message_id,
            "user": self.user_id,
            "ts": self.timestamp.isoformat().replace("+00:00", "Z"),
            "text": self.text,
            "hashtags": list(self.hashtags),
            "retweet": self.is_retweet,
        }
        if self.geo is not None:
            data["lat"] = self.geo.lat
            data["lon"] = self.geo.lon
        if self.precomputed_sentiment is not None:
            data["sentiment"] = self.precomputed_sentiment
        return data

    @classmethod
    def deserialize(cls, data: dict, epoch: datetime, schema: dict = None):
        """
        Deserializes a Message from an ingest record
        Args:
            data (dict): A dictionary containing the message fields
            epoch (datetime): the reference epoch offsets are measured from
            schema (dict): logical field name -> record key
        """
        schema = schema or MESSAGE_SCHEMA
        try:
            timestamp = parse_timestamp(data[schema["ts"]])
            text = data[schema["text"]]
            if not isinstance(text, str):
                raise DataValidationError(
                    "Invalid type for text: " + str(type(text))
                )
            is_retweet = data.get(schema["retweet"], False)
            if not isinstance(is_retweet, bool):
                raise DataValidationError(
                    "Invalid type for boolean [retweet]: " + str(type(is_retweet))
                )
            lat = _optional_float(data.get(schema["lat"]))
            lon = _optional_float(data.get(schema["lon"]))
            geo = GeoPoint(lat, lon) if lat is not None and lon is not None else None
            return cls(
                message_id=str(data[schema["id"]]),
                user_id=str(data[schema["user"]]),
                timestamp=timestamp,
                offset_h=offset_hours(timestamp, epoch),
                text=text,
                hashtags=normalize_hashtags(data.get(schema["hashtags"]) or ()),
                geo=geo,
                is_retweet=is_retweet,
                precomputed_sentiment=_optional_float(data.get(schema["sentiment"])),
            )
        except KeyError as error:
            raise DataValidationError("Invalid message: missing " + error.args[0]) from error
        except (TypeError, ValueError, OverflowError) as error:
            raise DataValidationError(
                "Invalid message: record contained bad or no data " + str(error)
            ) from error


######################################################################
#  U S E R   P R O F I L E
######################################################################
@dataclass
class UserProfile:
    """Profile data of one user; geopoint is filled by geocoding"""

    user_id: str
    self_location: Optional[str] = None
    friends_count: int = 0
    followers_count: int = 0
    geopoint: Optional[GeoPoint] = None

    def __post_init__(self):
        if self.friends_count < 0 or self.followers_count < 0:
            raise DataValidationError(
                f"Invalid profile {self.user_id}: negative follow count"
            )

    def merge(self, other: "UserProfile") -> None:
        """Folds a later record of the same user into this one

        Counts are last-write-wins; location and coordinates are only
        replaced by values that are present.
        """
        self.friends_count = other.friends_count
        self.followers_count = other.followers_count
        if other.self_location:
            self.self_location = other.self_location
        if other.geopoint is not None:
            self.geopoint = other.geopoint

    def serialize(self) -> dict:
        """Serializes a UserProfile into a profile record"""
        data = {
            "user": self.user_id,
            "location": self.self_location,
            "friends": self.friends_count,
            "followers": self.followers_count,
        }
        if self.geopoint is not None:
            data["lat"] = self.geopoint.lat
            data["lon"] = self.geopoint.lon
            data["precision"] = self.geopoint.precision.value
        return data

    @classmethod
    def deserialize(cls, data: dict, schema: dict = None):
        """
        Deserializes a UserProfile from a profile record
        Args:
            data (dict): A dictionary containing the profile fields
            schema (dict): logical field name -> record key
        """
        schema = schema or PROFILE_SCHEMA
        try:
            location = data.get(schema["location"])
            if location is not None and not isinstance(location, str):
                raise DataValidationError(
                    "Invalid type for location: " + str(type(location))
                )
            lat = _optional_float(data.get(schema["lat"]))
            lon = _optional_float(data.get(schema["lon"]))
            geopoint = None
            if lat is not None and lon is not None:
                precision = Precision(data.get("precision", Precision.EXACT.value))
                geopoint = GeoPoint(lat, lon, precision)
            return cls(
                user_id=str(data[schema["user"]]),
                self_location=location or None,
                friends_count=_count(data.get(schema["friends"]), "friends"),
                followers_count=_count(data.get(schema["followers"]), "followers"),
                geopoint=geopoint,
            )
        except KeyError as error:
            raise DataValidationError("Invalid profile: missing " + error.args[0]) from error
        except (TypeError, ValueError) as error:
            raise DataValidationError(
                "Invalid profile: record contained bad or no data " + str(error)
            ) from error


######################################################################
#  P A R S E   R E P O R T
######################################################################
@dataclass
class ParseReport:
    """Counts gathered while parsing a line-delimited stream"""

    lines: int = 0
    parsed: int = 0
    malformed: int = 0
    duplicates: int = 0
    profiles: int = 0
    malformed_sample: list = field(default_factory=list)

    def serialize(self) -> dict:
        """Serializes the report into a dictionary"""
        return {
            "lines": self.lines,
            "parsed": self.parsed,
            "malformed": self.malformed,
            "duplicates": self.duplicates,
            "profiles": self.profiles,
            "malformed_sample": list(self.malformed_sample),
        }
