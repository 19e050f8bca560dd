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
Test cases for the data models

Test cases can be run with:
    coverage run -m pytest
    coverage report -m

While debugging just these tests it's convenient to use this:
    pytest -x tests/test_models.py::TestMessageModel

"""
import logging
import unittest
from datetime import datetime, timezone

from netsensor import app
from netsensor.models import (
    MESSAGE_SCHEMA,
    DataValidationError,
    FilterLevel,
    GeoPoint,
    Message,
    Precision,
    UserProfile,
    normalize_hashtags,
    parse_timestamp,
    tokenize,
)
from tests.factories import EPOCH, MessageFactory, UserProfileFactory


######################################################################
#  M E S S A G E   M O D E L   T E S T   C A S E S
######################################################################
class TestMessageModel(unittest.TestCase):
    """Test Cases for the Message Model"""

    @classmethod
    def setUpClass(cls):
        """This runs once before the entire test suite"""
        app.config["TESTING"] = True
        app.logger.setLevel(logging.CRITICAL)

    def test_create_a_message(self):
        """It should Create a message and assert that it exists"""
        stamp = datetime(2012, 10, 30, 2, 30, tzinfo=timezone.utc)
        message = Message("m1", "u1", stamp, 2.5, "Stay safe #Sandy", ("sandy",))
        self.assertEqual(repr(message), "<Message m1 user=[u1] t=+2.50h>")
        self.assertEqual(message.offset_h, 2.5)
        self.assertIsNone(message.geo)
        self.assertFalse(message.is_retweet)
        self.assertEqual(message.tokens, frozenset({"stay", "safe", "sandy"}))

    def test_serialize_a_message(self):
        """It should Serialize a message"""
        message = MessageFactory(geo=GeoPoint(40.7, -74.0), precomputed_sentiment=-0.25)
        data = message.serialize()
        self.assertEqual(data["id"], message.message_id)
        self.assertEqual(data["user"], message.user_id)
        self.assertTrue(data["ts"].endswith("Z"))
        self.assertEqual(data["lat"], 40.7)
        self.assertEqual(data["lon"], -74.0)
        self.assertEqual(data["sentiment"], -0.25)

    def test_deserialize_a_message(self):
        """It should Deserialize a message it serialized"""
        message = MessageFactory()
        found = Message.deserialize(message.serialize(), EPOCH)
        self.assertEqual(found.message_id, message.message_id)
        self.assertEqual(found.timestamp, message.timestamp)
        self.assertAlmostEqual(found.offset_h, message.offset_h)
        self.assertEqual(found.text, message.text)
        self.assertEqual(found.is_retweet, message.is_retweet)

    def test_deserialize_with_schema(self):
        """It should Deserialize a record with renamed fields"""
        schema = {"id": "tweet_id", "user": "screen_name", "ts": "created_at", "text": "body"}
        data = {"tweet_id": 7, "screen_name": "alice", "created_at": "2012-10-29T23:00:00Z", "body": "sandy"}
        message = Message.deserialize(data, EPOCH, {**MESSAGE_SCHEMA, **schema})
        self.assertEqual(message.message_id, "7")
        self.assertEqual(message.user_id, "alice")
        self.assertAlmostEqual(message.offset_h, -1.0)

    def test_deserialize_missing_field(self):
        """It should not Deserialize a record without a timestamp"""
        self.assertRaises(DataValidationError, Message.deserialize, {"id": "1", "user": "u", "text": "x"}, EPOCH)

    def test_deserialize_bad_retweet(self):
        """It should not Deserialize a non-boolean retweet flag"""
        data = {"id": "1", "user": "u", "ts": "2012-10-30T00:00:00Z", "text": "sandy", "retweet": "yes"}
        self.assertRaises(DataValidationError, Message.deserialize, data, EPOCH)

    def test_deserialize_bad_text(self):
        """It should not Deserialize a record whose text is not a string"""
        data = {"id": "1", "user": "u", "ts": "2012-10-30T00:00:00Z", "text": 12}
        self.assertRaises(DataValidationError, Message.deserialize, data, EPOCH)

    def test_deserialize_bad_coordinates(self):
        """It should not Deserialize a record with an impossible latitude"""
        data = {"id": "1", "user": "u", "ts": "2012-10-30T00:00:00Z", "text": "sandy", "lat": 91, "lon": 0}
        self.assertRaises(DataValidationError, Message.deserialize, data, EPOCH)


######################################################################
#  U S E R   P R O F I L E   T E S T   C A S E S
######################################################################
class TestUserProfileModel(unittest.TestCase):
    """Test Cases for the UserProfile Model"""

    def test_create_a_profile(self):
        """It should Create a profile"""
        profile = UserProfile("u1", "Hoboken, NJ", 10, 20)
        self.assertEqual(profile.self_location, "Hoboken, NJ")
        self.assertEqual(profile.friends_count, 10)
        self.assertEqual(profile.followers_count, 20)
        self.assertIsNone(profile.geopoint)

    def test_negative_counts(self):
        """It should not Create a profile with a negative count"""
        self.assertRaises(DataValidationError, UserProfile, "u1", None, -1, 0)

    def test_merge_profiles(self):
        """It should Merge a later record: counts win, empty fields do not"""
        profile = UserProfile("u1", "Boston", 10, 20, GeoPoint(42.36, -71.06))
        profile.merge(UserProfile("u1", None, 11, 25))
        self.assertEqual(profile.friends_count, 11)
        self.assertEqual(profile.followers_count, 25)
        self.assertEqual(profile.self_location, "Boston")
        self.assertEqual(profile.geopoint, GeoPoint(42.36, -71.06))

    def test_serialize_a_profile(self):
        """It should Serialize and Deserialize a profile"""
        profile = UserProfileFactory(geopoint=GeoPoint(40.0, -75.0, Precision.CENTROID))
        found = UserProfile.deserialize(profile.serialize())
        self.assertEqual(found, profile)

    def test_deserialize_bad_count(self):
        """It should not Deserialize a boolean follower count"""
        self.assertRaises(DataValidationError, UserProfile.deserialize, {"user": "u", "followers": True})

    def test_deserialize_bad_location(self):
        """It should not Deserialize a location that is not text"""
        self.assertRaises(DataValidationError, UserProfile.deserialize, {"user": "u", "location": 5})

    def test_deserialize_missing_user(self):
        """It should not Deserialize a profile without a user"""
        self.assertRaises(DataValidationError, UserProfile.deserialize, {"location": "Boston"})


######################################################################
#  U T I L I T Y   T E S T   C A S E S
######################################################################
class TestUtilities(unittest.TestCase):
    """Test Cases for the parsing helpers"""

    def test_tokenize(self):
        """It should lowercase and split on punctuation, keeping diacritics"""
        self.assertEqual(tokenize("#Sandy, Huracán!"), ["sandy", "huracán"])
        self.assertNotIn("huracan", tokenize("Huracán"))
        self.assertEqual(tokenize("STRASSE Straße"), ["strasse", "strasse"])

    def test_normalize_hashtags(self):
        """It should strip '#' and lowercase hashtags"""
        self.assertEqual(normalize_hashtags(["#Sandy", "NYC", "#"]), ("sandy", "nyc"))
        self.assertEqual(normalize_hashtags("#a #B"), ("a", "b"))
        self.assertRaises(DataValidationError, normalize_hashtags, [3])

    def test_parse_timestamp(self):
        """It should parse ISO-8601 text and epoch seconds to UTC"""
        expected = datetime(2012, 10, 30, tzinfo=timezone.utc)
        self.assertEqual(parse_timestamp("2012-10-30T00:00:00Z"), expected)
        self.assertEqual(parse_timestamp("2012-10-29T20:00:00-04:00"), expected)
        self.assertEqual(parse_timestamp("2012-10-30T00:00:00.750Z"), expected)
        self.assertEqual(parse_timestamp(expected.timestamp()), expected)
        self.assertEqual(parse_timestamp(str(int(expected.timestamp()))), expected)

    def test_parse_bad_timestamp(self):
        """It should reject booleans and other types"""
        self.assertRaises(DataValidationError, parse_timestamp, True)
        self.assertRaises(DataValidationError, parse_timestamp, None)
        self.assertRaises(ValueError, parse_timestamp, "yesterday")

    def test_parse_timestamp_out_of_range(self):
        """It should reject epoch seconds no datetime can hold"""
        self.assertRaises(DataValidationError, parse_timestamp, float("inf"))
        self.assertRaises(DataValidationError, parse_timestamp, 10**20)
        self.assertRaises(DataValidationError, parse_timestamp, "1e400")
        record = {"id": "m1", "user": "u1", "ts": 10**20, "text": "sandy"}
        self.assertRaises(DataValidationError, Message.deserialize, record, EPOCH)

    def test_filter_levels(self):
        """It should nest the filter keyword sets"""
        self.assertEqual(FilterLevel.NONE.keyword_set, frozenset())
        self.assertLess(FilterLevel.STRICT.keyword_set, FilterLevel.MODERATE.keyword_set)
        self.assertIn("huracán", FilterLevel.MODERATE.keyword_set)

