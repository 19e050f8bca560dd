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
Test cases for message stream ingestion
"""
import json
import logging
import os
import time
from unittest import TestCase, skipUnless

from netsensor import app
from netsensor.ingest import (
    activity_counts,
    contains_keyword,
    filter_relevance,
    keyword_histogram,
    keyword_report,
    load_keywords,
    merge_profiles,
    parse_profiles,
    parse_stream,
    serialize_stream,
)
from netsensor.models import ArgumentError, FilterLevel, SuspiciousInputError, UserProfile
from tests.factories import EPOCH, MessageFactory


def record(message_id, user, ts, text, **extra) -> bytes:
    """One encoded message line"""
    data = {"id": message_id, "user": user, "ts": ts, "text": text, **extra}
    return (json.dumps(data, ensure_ascii=False) + "\n").encode("utf-8")


######################################################################
#  P A R S I N G   T E S T   C A S E S
######################################################################
class TestParseStream(TestCase):
    """Parsing the line-delimited stream"""

    @classmethod
    def setUpClass(cls):
        app.logger.setLevel(logging.CRITICAL)

    def test_parse_and_order(self):
        """It should parse records and order them by time, then id"""
        lines = [
            record("b", "u2", "2012-10-30T01:00:00Z", "sandy b"),
            record("a", "u1", "2012-10-30T01:00:00Z", "sandy a"),
            record("c", "u1", "2012-10-29T23:00:00Z", "sandy c"),
        ]
        messages, profiles, report = parse_stream(lines, epoch=EPOCH)
        self.assertEqual([message.message_id for message in messages], ["c", "a", "b"])
        self.assertEqual(messages[0].offset_h, -1.0)
        self.assertEqual(profiles, [])
        self.assertEqual(report.lines, 3)
        self.assertEqual(report.parsed, 3)

    def test_duplicates_keep_first(self):
        """It should keep the first occurrence of a duplicate id"""
        lines = [
            record("a", "u1", "2012-10-30T01:00:00Z", "first sandy"),
            record("a", "u1", "2012-10-30T02:00:00Z", "second sandy"),
        ]
        messages, _, report = parse_stream(lines, epoch=EPOCH)
        self.assertEqual(len(messages), 1)
        self.assertEqual(messages[0].text, "first sandy")
        self.assertEqual(report.duplicates, 1)

    def test_malformed_lines_are_counted(self):
        """It should skip and count malformed lines, ignoring blank ones"""
        lines = [
            record("a", "u1", "2012-10-30T01:00:00Z", "sandy"),
            b"{not json\n",
            b"\n",
            record("b", "u1", "2012-10-30T02:00:00Z", "sandy"),
            record("c", "u1", "2012-10-30T03:00:00Z", "sandy"),
        ]
        messages, _, report = parse_stream(lines, epoch=EPOCH)
        self.assertEqual(len(messages), 3)
        self.assertEqual(report.lines, 4)
        self.assertEqual(report.malformed, 1)
        self.assertEqual(report.malformed_sample, ["{not json"])

    def test_suspicious_input(self):
        """It should refuse a stream that is mostly malformed"""
        lines = [b'{"id": 1}\n', b"[]\n", record("a", "u1", "2012-10-30T01:00:00Z", "sandy")]
        with self.assertRaises(SuspiciousInputError) as context:
            parse_stream(lines, epoch=EPOCH)
        self.assertEqual(len(context.exception.sample), 2)

    def test_embedded_profiles(self):
        """It should collect profile fields carried by message records"""
        lines = [
            record("a", "u1", "2012-10-30T01:00:00Z", "sandy", location="Boston", followers=3),
            record("b", "u1", "2012-10-30T02:00:00Z", "sandy", location="", followers=5),
        ]
        _, profiles, report = parse_stream(lines, epoch=EPOCH)
        self.assertEqual(report.profiles, 1)
        self.assertEqual(profiles[0].self_location, "Boston")
        self.assertEqual(profiles[0].followers_count, 5)

    def test_workers_do_not_change_the_result(self):
        """It should give the same result with several workers"""
        lines = [
            record(f"m{index}", f"u{index % 3}", f"2012-10-30T{index % 24:02d}:00:00Z", "sandy")
            for index in range(40)
        ]
        lines.insert(5, b"garbage\n")
        single = parse_stream(lines, epoch=EPOCH, workers=1)
        sharded = parse_stream(lines, epoch=EPOCH, workers=2)
        self.assertEqual(single[0], sharded[0])
        self.assertEqual(single[2], sharded[2])

    def test_out_of_range_timestamps_are_malformed(self):
        """It should count unrepresentable timestamps as malformed lines"""
        lines = [
            record("a", "u1", "2012-10-30T01:00:00Z", "sandy"),
            b'{"id": "b", "user": "u1", "ts": 1e400, "text": "sandy"}\n',
            record("c", "u1", 10**20, "sandy"),
            record("d", "u1", "2012-10-30T02:00:00Z", "sandy"),
            record("e", "u2", "2012-10-30T03:00:00Z", "sandy"),
        ]
        for workers in (1, 2):
            messages, _, report = parse_stream(lines, epoch=EPOCH, workers=workers)
            self.assertEqual([message.message_id for message in messages], ["a", "d", "e"])
            self.assertEqual(report.malformed, 2)

    def test_serialize_stream(self):
        """It should write records that parse back to the same messages"""
        messages = sorted(MessageFactory.create_batch(5), key=lambda m: (m.timestamp, m.message_id))
        found, _, _ = parse_stream(list(serialize_stream(messages)), epoch=EPOCH)
        self.assertEqual([m.message_id for m in found], [m.message_id for m in messages])

    def test_parse_profiles(self):
        """It should merge profile records of the same user"""
        lines = [
            b'{"user": "u1", "location": "Boston", "friends": 1}\n',
            b'{"user": "u2", "location": "Toronto"}\n',
            b'{"user": "u1", "friends": 4, "lat": 42.3, "lon": -71.0}\n',
        ]
        profiles, report = parse_profiles(lines)
        self.assertEqual([profile.user_id for profile in profiles], ["u1", "u2"])
        self.assertEqual(profiles[0].friends_count, 4)
        self.assertEqual(profiles[0].self_location, "Boston")
        self.assertIsNotNone(profiles[0].geopoint)
        self.assertEqual(report.parsed, 3)

    def test_merge_profiles(self):
        """It should let later profile groups win on counts"""
        merged = merge_profiles([UserProfile("u1", "Boston", 1, 1)], [UserProfile("u1", None, 2, 3)])
        self.assertEqual(len(merged), 1)
        self.assertEqual(merged[0].followers_count, 3)
        self.assertEqual(merged[0].self_location, "Boston")


######################################################################
#  F I L T E R   A N D   K E Y W O R D   T E S T   C A S E S
######################################################################
class TestRelevance(TestCase):
    """Relevance filters and keyword histograms"""

    def setUp(self):
        self.messages = [
            MessageFactory(text="Sandy is here", hours=0.5),
            MessageFactory(text="big storm tonight", hours=1.5),
            MessageFactory(text="#Huracán sandy", hours=1.6),
            MessageFactory(text="sandycheeks", hours=2.5),
            MessageFactory(text="lunch", hours=2.7),
        ]

    def test_filter_levels_nest(self):
        """It should keep more messages at looser levels"""
        strict = filter_relevance(self.messages, FilterLevel.STRICT)
        moderate = filter_relevance(self.messages, "moderate")
        everything = filter_relevance(self.messages, FilterLevel.NONE)
        self.assertEqual(len(strict), 2)
        self.assertEqual(len(moderate), 3)
        self.assertEqual(len(everything), 5)
        self.assertTrue(set(strict) <= set(moderate) <= set(everything))

    def test_strict_filter_drops_early_noise(self):
        """It should leave almost nothing before the storm formed"""
        messages = [MessageFactory(text="sandy update", hours=-96.0 + 0.24 * index) for index in range(800)]
        noise = ["big storm tonight", "hurricane season", "#frankenstorm"]
        messages += [MessageFactory(text=noise[index % 3], hours=-400.0 + index) for index in range(200)]
        strict = filter_relevance(messages, FilterLevel.STRICT)
        early = [message for message in strict if message.offset_h < -192.0]
        self.assertLess(len(early), 0.01 * len(strict))
        moderate = filter_relevance(messages, FilterLevel.MODERATE)
        self.assertEqual(sum(1 for message in moderate if message.offset_h < -192.0), 200)

    def test_whole_words_only(self):
        """It should not match a keyword inside a longer word"""
        self.assertFalse(contains_keyword(self.messages[3], "sandy"))
        self.assertTrue(contains_keyword(self.messages[0], "SANDY"))

    def test_multi_word_keyword(self):
        """It should match a multi-word keyword as a token run or a hashtag"""
        self.assertTrue(contains_keyword(MessageFactory(text="flooding in New York"), "New York"))
        self.assertTrue(contains_keyword(MessageFactory(text="x", hashtags=("newyork",)), "New York"))
        self.assertFalse(contains_keyword(MessageFactory(text="york is new"), "New York"))

    def test_keyword_histogram(self):
        """It should count keyword messages per bin"""
        histogram = keyword_histogram(self.messages, "sandy", 1.0)
        self.assertEqual(histogram.bins, [0.0, 1.0, 2.0])
        self.assertEqual(histogram.counts, [1, 1, 0])
        self.assertEqual(histogram.with_sandy, [1, 1, 0])
        storm = keyword_histogram(self.messages, "storm", 1.0)
        self.assertEqual(storm.as_dict(), {0.0: 0, 1.0: 1, 2.0: 0})
        self.assertEqual(storm.with_sandy_dict(), {0.0: 0, 1.0: 0, 2.0: 0})

    def test_keyword_histogram_bad_bin(self):
        """It should refuse a nonpositive bin width"""
        self.assertRaises(ArgumentError, keyword_histogram, self.messages, "sandy", 0)

    def test_keyword_report(self):
        """It should histogram every bundled keyword"""
        keywords = load_keywords()
        self.assertIn("sandy", keywords)
        report = keyword_report(self.messages, keywords, 24.0)
        self.assertEqual(set(report), set(keywords))

    def test_activity_counts(self):
        """It should count messages per user, optionally in a window"""
        messages = [MessageFactory(user_id="a", hours=h) for h in (0.0, 1.0, 5.0)]
        messages.append(MessageFactory(user_id="b", hours=1.0))
        self.assertEqual(activity_counts(messages), {"a": 3, "b": 1})
        self.assertEqual(activity_counts(messages, (0.5, 2.0)), {"a": 1, "b": 1})


######################################################################
#  S C A L E   T E S T   C A S E S
######################################################################
def synthetic_lines(count: int) -> list:
    """Encoded records, one in ten off topic"""
    return [
        record(
            f"m{index:07d}",
            f"u{index % 5000:05d}",
            f"2012-10-{25 + index % 5:02d}T{index % 24:02d}:{index % 60:02d}:00Z",
            "storm watch" if index % 10 == 0 else "#Sandy flooding update",
            hashtags=["sandy"] if index % 10 else [],
        )
        for index in range(count)
    ]


class TestScale(TestCase):
    """Sharded parsing at volume"""

    @classmethod
    def setUpClass(cls):
        app.logger.setLevel(logging.CRITICAL)

    def test_sharding_is_deterministic(self):
        """It should give identical messages for any worker count"""
        lines = synthetic_lines(20000)
        single, _, report = parse_stream(lines, epoch=EPOCH)
        sharded, _, _ = parse_stream(lines, epoch=EPOCH, workers=4)
        self.assertEqual(report.parsed, 20000)
        self.assertEqual(single, sharded)
        self.assertEqual(len(filter_relevance(sharded, FilterLevel.STRICT)), 18000)

    @skipUnless(os.getenv("NETSENSOR_SCALE_TESTS"), "set NETSENSOR_SCALE_TESTS to run")
    def test_million_lines(self):
        """It should parse and filter a million lines within a minute"""
        lines = synthetic_lines(1_000_000)
        start = time.perf_counter()
        messages, _, _ = parse_stream(lines, epoch=EPOCH, workers=4)
        kept = filter_relevance(messages, FilterLevel.STRICT)
        elapsed = time.perf_counter() - start
        self.assertEqual(len(kept), 900_000)
        self.assertLess(elapsed, 60.0)
