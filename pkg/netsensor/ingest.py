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
Message stream ingestion

Parses line-delimited JSON records into Messages and UserProfiles,
drops duplicates, applies the relevance filter levels and builds keyword
histograms. Parsing may be sharded over worker processes; the merged
result does not depend on the number of workers.
"""
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from typing import Iterable, Optional, Union

import numpy as np

from netsensor import config
from netsensor.models import (
    MESSAGE_SCHEMA,
    PROFILE_SCHEMA,
    ArgumentError,
    DataValidationError,
    FilterLevel,
    Message,
    ParseReport,
    SuspiciousInputError,
    UserProfile,
    parse_timestamp,
    tokenize,
)

logger = logging.getLogger("netsensor")

SAMPLE_LINES = 5
SAMPLE_WIDTH = 120
PROFILE_FIELDS = ("location", "friends", "followers")


def default_epoch() -> datetime:
    """The configured reference epoch"""
    return parse_timestamp(config.REFERENCE_EPOCH)


######################################################################
#  P A R S I N G
######################################################################
@dataclass
class _Shard:
    """What one worker hands back: parsed items keyed by line index"""

    messages: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    malformed: list = field(default_factory=list)


def _decode(line) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    record = json.loads(line)
    if not isinstance(record, dict):
        raise DataValidationError("record is not an object")
    return record


def _embedded_profile(record: dict, user_id: str, schema: dict) -> Optional[UserProfile]:
    """Profile fields carried inline by a message record, if any"""
    keys = {name: schema.get(name, name) for name in PROFILE_FIELDS}
    if not any(key in record for key in keys.values()):
        return None
    return UserProfile.deserialize(
        {
            "user": user_id,
            "location": record.get(keys["location"]),
            "friends": record.get(keys["friends"]),
            "followers": record.get(keys["followers"]),
        }
    )


def _parse_message_lines(numbered_lines: list, schema: dict, epoch: datetime) -> _Shard:
    shard = _Shard()
    for index, line in numbered_lines:
        try:
            record = _decode(line)
            message = Message.deserialize(record, epoch, schema)
            profile = _embedded_profile(record, message.user_id, schema)
        except (UnicodeDecodeError, json.JSONDecodeError, DataValidationError) as error:
            logger.debug("Line %d skipped: %s", index + 1, error)
            shard.malformed.append((index, line))
            continue
        shard.messages.append((index, message))
        if profile is not None:
            shard.profiles.append((index, profile))
    return shard


def _parse_profile_lines(numbered_lines: list, schema: dict) -> _Shard:
    shard = _Shard()
    for index, line in numbered_lines:
        try:
            shard.profiles.append((index, UserProfile.deserialize(_decode(line), schema)))
        except (UnicodeDecodeError, json.JSONDecodeError, DataValidationError) as error:
            logger.debug("Line %d skipped: %s", index + 1, error)
            shard.malformed.append((index, line))
    return shard


def _numbered(raw: Iterable) -> list:
    """Non-blank lines with their 0-based position in the input"""
    lines = []
    for index, line in enumerate(raw):
        if line.strip():
            lines.append((index, line))
    return lines


def _chunks(items: list, count: int) -> list:
    size = max(1, -(-len(items) // count))
    return [items[start:start + size] for start in range(0, len(items), size)]


def _run_shards(func, lines: list, workers: int, *args) -> list:
    if workers <= 1 or len(lines) < 2 * workers:
        return [func(lines, *args)]
    chunks = _chunks(lines, workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(func, chunk, *args) for chunk in chunks]
        return [future.result() for future in futures]


def _check_malformed(report: ParseReport, malformed: list, limit: float) -> None:
    malformed.sort(key=lambda item: item[0])
    report.malformed = len(malformed)
    report.malformed_sample = [_snippet(line) for _, line in malformed[:SAMPLE_LINES]]
    if report.lines and report.malformed / report.lines > limit:
        raise SuspiciousInputError(
            f"Suspicious input: {report.malformed} of {report.lines} lines are malformed; "
            f"check the schema. Sample: {report.malformed_sample}",
            report.malformed_sample,
        )


def _snippet(line) -> str:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    return line.rstrip("\r\n")[:SAMPLE_WIDTH]


def _merge_profiles(numbered_profiles: list) -> list:
    merged = {}
    for _, profile in sorted(numbered_profiles, key=lambda item: item[0]):
        if profile.user_id in merged:
            merged[profile.user_id].merge(profile)
        else:
            merged[profile.user_id] = profile
    return [merged[user] for user in sorted(merged)]


def parse_stream(
    raw: Iterable,
    schema: dict = None,
    epoch: datetime = None,
    workers: int = 1,
    malformed_limit: float = config.MALFORMED_LIMIT,
) -> tuple:
    """Parses a line-delimited message stream

    :param raw: lines of UTF-8 encoded JSON records (bytes or str)
    :param schema: logical field name -> record key
    :param epoch: reference epoch for offsets (configured default when None)
    :param workers: number of processes to shard the lines over

    :return: (messages, profiles, report); messages are ordered by
        (timestamp, message_id), duplicates keep their first occurrence
    :rtype: tuple

    """
    schema = {**MESSAGE_SCHEMA, **(schema or {})}
    epoch = epoch or default_epoch()
    lines = _numbered(raw)
    report = ParseReport(lines=len(lines))

    shards = _run_shards(_parse_message_lines, lines, workers, schema, epoch)
    numbered_messages, numbered_profiles, malformed = [], [], []
    for shard in shards:
        numbered_messages.extend(shard.messages)
        numbered_profiles.extend(shard.profiles)
        malformed.extend(shard.malformed)
    _check_malformed(report, malformed, malformed_limit)

    numbered_messages.sort(key=lambda item: item[0])
    seen = set()
    messages = []
    for _, message in numbered_messages:
        if message.message_id in seen:
            report.duplicates += 1
            continue
        seen.add(message.message_id)
        messages.append(message)
    messages.sort(key=lambda message: (message.timestamp, message.message_id))

    profiles = _merge_profiles(numbered_profiles)
    report.parsed = len(messages)
    report.profiles = len(profiles)
    logger.info(
        "Parsed %d messages from %d lines (%d malformed, %d duplicates)",
        report.parsed, report.lines, report.malformed, report.duplicates,
    )
    return messages, profiles, report


def parse_profiles(
    raw: Iterable,
    schema: dict = None,
    workers: int = 1,
    malformed_limit: float = config.MALFORMED_LIMIT,
) -> tuple:
    """Parses a line-delimited profile file into merged UserProfiles"""
    schema = {**PROFILE_SCHEMA, **(schema or {})}
    lines = _numbered(raw)
    report = ParseReport(lines=len(lines))
    shards = _run_shards(_parse_profile_lines, lines, workers, schema)
    numbered_profiles, malformed = [], []
    for shard in shards:
        numbered_profiles.extend(shard.profiles)
        malformed.extend(shard.malformed)
    _check_malformed(report, malformed, malformed_limit)
    profiles = _merge_profiles(numbered_profiles)
    report.parsed = len(numbered_profiles)
    report.profiles = len(profiles)
    logger.info("Parsed %d profiles from %d lines", report.profiles, report.lines)
    return profiles, report


def serialize_stream(records: Iterable) -> Iterable:
    """Emits Messages (or UserProfiles) as UTF-8 JSON lines"""
    for record in records:
        yield (json.dumps(record.serialize(), ensure_ascii=False) + "\n").encode("utf-8")


def merge_profiles(*groups: Iterable) -> list:
    """Merges profile lists; later groups win on counts"""
    numbered = []
    for group in groups:
        numbered.extend((len(numbered), profile) for profile in group)
    return _merge_profiles(numbered)


######################################################################
#  R E L E V A N C E   F I L T E R I N G
######################################################################
def filter_relevance(messages: Iterable, level: Union[FilterLevel, str]) -> list:
    """Keeps the messages that contain a keyword of the filter level

    A keyword matches a whole word token of the text or a hashtag; the
    order of the input is preserved.
    """
    level = FilterLevel(level)
    if level is FilterLevel.NONE:
        return list(messages)
    keywords = level.keyword_set
    kept = [message for message in messages if not keywords.isdisjoint(message.tokens)]
    logger.debug("Filter %s kept %d messages", level.value, len(kept))
    return kept


def contains_keyword(message: Message, keyword: str) -> bool:
    """True when the keyword occurs as a token, a token run or a hashtag"""
    parts = tokenize(keyword)
    if not parts:
        return False
    if len(parts) == 1:
        return parts[0] in message.tokens
    if "".join(parts) in message.hashtags:
        return True
    tokens = tokenize(message.text)
    width = len(parts)
    return any(tokens[start:start + width] == parts for start in range(len(tokens) - width + 1))


@dataclass
class KeywordHistogram:
    """Per-bin counts of a keyword, alone and together with 'sandy'"""

    keyword: str
    bin_h: float
    bins: list
    counts: list
    with_sandy: list

    def as_dict(self) -> dict:
        """bin start -> count"""
        return dict(zip(self.bins, self.counts))

    def with_sandy_dict(self) -> dict:
        """bin start -> count of messages that also contain 'sandy'"""
        return dict(zip(self.bins, self.with_sandy))


def keyword_histogram(messages: list, keyword: str, bin_h: float) -> KeywordHistogram:
    """Histograms the messages containing a keyword

    Bins are aligned so that offset 0 is a bin boundary and span every
    message of the input, so an absent keyword yields all-zero bins.
    """
    if not bin_h > 0:
        raise ArgumentError(f"bin_h must be positive, got {bin_h}")
    if not messages:
        return KeywordHistogram(keyword, bin_h, [], [], [])
    offsets = np.fromiter((message.offset_h for message in messages), float, len(messages))
    index = np.floor(offsets / bin_h).astype(np.int64)
    first = int(index.min())
    width = int(index.max()) - first + 1
    matches = np.fromiter(
        (contains_keyword(message, keyword) for message in messages), bool, len(messages)
    )
    sandy = np.fromiter(("sandy" in message.tokens for message in messages), bool, len(messages))
    counts = np.bincount(index[matches] - first, minlength=width)
    together = np.bincount(index[matches & sandy] - first, minlength=width)
    bins = [float((first + step) * bin_h) for step in range(width)]
    return KeywordHistogram(keyword, bin_h, bins, counts.tolist(), together.tolist())


def load_keywords() -> list:
    """The bundled keyword list used to build the extended dataset"""
    text = resources.files("netsensor").joinpath("data/keywords.txt").read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def keyword_report(messages: list, keywords: Iterable, bin_h: float) -> dict:
    """One histogram per keyword"""
    return {keyword: keyword_histogram(messages, keyword, bin_h) for keyword in keywords}


def activity_counts(messages: Iterable, window: tuple = None) -> dict:
    """Messages per user, optionally inside a (start_h, end_h) window"""
    if window is None:
        return dict(Counter(message.user_id for message in messages))
    start, end = window
    return dict(
        Counter(message.user_id for message in messages if start <= message.offset_h <= end)
    )
