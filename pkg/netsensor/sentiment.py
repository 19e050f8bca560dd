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
Sentiment

Lexicon scoring of messages, binned trends with three-point smoothing,
per-bin composition of positive/negative/neutral messages and the
least-squares alignment of two trends.
"""
import logging
import math
from dataclasses import dataclass
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from netsensor.models import ArgumentError, DataValidationError, DegenerateFitError, tokenize

logger = logging.getLogger("netsensor")

NEGEMO_FACTOR = 1.5


######################################################################
#  L E X I C O N
######################################################################
@dataclass(frozen=True)
class Lexicon:
    """Token weights in [-1, 1]"""

    weights: MappingProxyType
    name: str = "lexicon"

    def __post_init__(self):
        for token, weight in self.weights.items():
            if token != token.casefold():
                raise DataValidationError(f"Lexicon token must be case-folded: {token!r}")
            if not -1.0 <= weight <= 1.0:
                raise DataValidationError(f"Lexicon weight out of [-1, 1] for {token!r}: {weight}")
        object.__setattr__(self, "weights", MappingProxyType(dict(self.weights)))

    def __len__(self):
        return len(self.weights)

    def __contains__(self, token):
        return token in self.weights

    @property
    def max_weight(self) -> float:
        """Largest absolute weight"""
        return max((abs(weight) for weight in self.weights.values()), default=0.0)


def load_lexicon(path=None, name: Optional[str] = None) -> Lexicon:
    """Reads "token weight" lines; the bundled sample lexicon when path is None

    Tokens are case-folded on reading so they match tokenized text.
    """
    if path is None:
        path = resources.files("netsensor").joinpath("data/sample_lexicon.txt")
    try:
        frame = pd.read_csv(
            path, sep=r"\s+", comment="#", header=None, names=["token", "weight"],
            dtype={"token": str, "weight": float}, keep_default_na=False,
        )
    except ValueError as error:
        raise DataValidationError(f"Invalid lexicon {path}: {error}") from error
    tokens = frame["token"].str.casefold()
    lexicon = Lexicon(dict(zip(tokens, frame["weight"].astype(float))), name or str(path))
    logger.info("Loaded lexicon %s with %d tokens", lexicon.name, len(lexicon))
    return lexicon


######################################################################
#  S C O R I N G
######################################################################
@dataclass(frozen=True)
class SentimentScore:
    """Signed mean, absolute mean and sign class of a message"""

    relative: float = 0.0
    absolute: float = 0.0
    discrete: int = 0

    @classmethod
    def from_relative(cls, relative: float, threshold: float = 0.0) -> "SentimentScore":
        """Score from a precomputed relative value"""
        return cls(relative, abs(relative), _sign(relative, threshold))


def _sign(value: float, threshold: float) -> int:
    if value > threshold:
        return 1
    if value < -threshold:
        return -1
    return 0


def score_message(text: str, lex: Lexicon, normalize: str = "total", threshold: float = 0.0) -> SentimentScore:
    """Scores text by its matched lexicon weights

    ``normalize`` divides by all tokens ("total") or by matched tokens
    only ("matched").
    """
    if normalize not in ("total", "matched"):
        raise ArgumentError(f"normalize must be 'total' or 'matched', got {normalize!r}")
    tokens = tokenize(text)
    weights = [lex.weights[token] for token in tokens if token in lex.weights]
    if not weights:
        return SentimentScore()
    denominator = len(tokens) if normalize == "total" else len(weights)
    relative = math.fsum(weights) / denominator
    return SentimentScore(relative, math.fsum(abs(weight) for weight in weights) / denominator, _sign(relative, threshold))


@dataclass(frozen=True)
class ScoredMessage:
    """A message with its score"""

    message: object
    score: SentimentScore


def score_messages(
    messages: Iterable, lex: Lexicon, normalize: str = "total", use_precomputed: bool = True
) -> list:
    """Scores every message; precomputed relative scores win when present"""
    scored = []
    for message in messages:
        if use_precomputed and message.precomputed_sentiment is not None:
            score = SentimentScore.from_relative(message.precomputed_sentiment)
        else:
            score = score_message(message.text, lex, normalize)
        scored.append(ScoredMessage(message, score))
    return scored


def combine_polarity(posemo: float, negemo: float) -> float:
    """posemo - 1.5 * negemo"""
    if posemo < 0 or negemo < 0:
        raise ArgumentError(f"Emotion rates must be nonnegative, got ({posemo}, {negemo})")
    return posemo - NEGEMO_FACTOR * negemo


def emotion_rates(text: str, lex: Lexicon) -> tuple:
    """(posemo, negemo): percent of tokens with positive / negative weight"""
    tokens = tokenize(text)
    if not tokens:
        return 0.0, 0.0
    positive = sum(1 for token in tokens if lex.weights.get(token, 0.0) > 0)
    negative = sum(1 for token in tokens if lex.weights.get(token, 0.0) < 0)
    return 100.0 * positive / len(tokens), 100.0 * negative / len(tokens)


def polarity_score(text: str, lex: Lexicon) -> float:
    """Category-count polarity of a message"""
    return combine_polarity(*emotion_rates(text, lex))


######################################################################
#  T R E N D S
######################################################################
@dataclass
class TrendSeries:
    """Per-bin mean values; None marks a bin without messages"""

    bin_h: float
    bin_start: list
    value: list
    count: list

    def __len__(self):
        return len(self.bin_start)

    def as_array(self) -> np.ndarray:
        """Values with NaN for missing bins"""
        return np.array([np.nan if value is None else value for value in self.value], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        """Table with bin_start_h, value and count"""
        return pd.DataFrame({"bin_start_h": self.bin_start, "value": self.as_array(), "count": self.count})


def _bins(offsets: np.ndarray, bin_h: float) -> tuple:
    index = np.floor(offsets / bin_h).astype(np.int64)
    first = int(index.min())
    width = int(index.max()) - first + 1
    starts = [float((first + step) * bin_h) for step in range(width)]
    return index - first, width, starts


def trend(messages: Iterable, bin_h: float) -> TrendSeries:
    """Mean relative score per bin from (offset_h, score) pairs"""
    if not bin_h > 0:
        raise ArgumentError(f"bin_h must be positive, got {bin_h}")
    points = np.array(list(messages), dtype=float).reshape(-1, 2)
    if not len(points):
        return TrendSeries(bin_h, [], [], [])
    # fixed summation order regardless of input order
    points = points[np.lexsort((points[:, 1], points[:, 0]))]
    index, width, starts = _bins(points[:, 0], bin_h)
    counts = np.bincount(index, minlength=width)
    sums = np.bincount(index, weights=points[:, 1], minlength=width)
    values = [float(total / count) if count else None for total, count in zip(sums, counts)]
    return TrendSeries(bin_h, starts, values, counts.tolist())


def smooth3(s: TrendSeries) -> TrendSeries:
    """Three-point running mean over present neighbours; missing stays missing"""
    smoothed = []
    for index, value in enumerate(s.value):
        if value is None:
            smoothed.append(None)
            continue
        window = [
            s.value[position]
            for position in (index - 1, index, index + 1)
            if 0 <= position < len(s.value) and s.value[position] is not None
        ]
        smoothed.append(math.fsum(window) / len(window))
    return TrendSeries(s.bin_h, list(s.bin_start), smoothed, list(s.count))


def diurnal_period(s: TrendSeries, min_lag: int = 12, max_lag: int = 36) -> int:
    """Lag (in bins) with the largest autocorrelation; missing bins read as the mean"""
    values = s.as_array()
    if np.all(np.isnan(values)):
        raise ArgumentError("Series has no values")
    values = np.where(np.isnan(values), np.nanmean(values), values)
    values = values - values.mean()
    max_lag = min(max_lag, len(values) - 2)
    if max_lag < min_lag:
        raise ArgumentError(f"Series of {len(values)} bins is too short for lag {min_lag}")
    scores = [np.dot(values[:-lag], values[lag:]) / (len(values) - lag) for lag in range(min_lag, max_lag + 1)]
    return min_lag + int(np.argmax(scores))


@dataclass
class CompositionSeries:
    """Per-bin fractions of positive, negative and neutral messages"""

    bin_h: float
    bin_start: list
    positive: list
    negative: list
    neutral: list
    count: list

    def to_frame(self) -> pd.DataFrame:
        """Table with bin_start_h, the three fractions and count"""
        def column(values):
            return [np.nan if value is None else value for value in values]

        return pd.DataFrame(
            {
                "bin_start_h": self.bin_start,
                "positive": column(self.positive),
                "negative": column(self.negative),
                "neutral": column(self.neutral),
                "count": self.count,
            }
        )


def composition(messages: Iterable, bin_h: float) -> CompositionSeries:
    """Fractions per bin from (offset_h, discrete class) pairs"""
    if not bin_h > 0:
        raise ArgumentError(f"bin_h must be positive, got {bin_h}")
    points = np.array(list(messages), dtype=float).reshape(-1, 2)
    if not len(points):
        return CompositionSeries(bin_h, [], [], [], [], [])
    index, width, starts = _bins(points[:, 0], bin_h)
    classes = np.sign(points[:, 1])
    counts = np.bincount(index, minlength=width)
    tallies = {
        label: np.bincount(index[classes == sign], minlength=width)
        for label, sign in (("positive", 1), ("negative", -1), ("neutral", 0))
    }
    fractions = {
        label: [float(part / total) if total else None for part, total in zip(tally, counts)]
        for label, tally in tallies.items()
    }
    return CompositionSeries(
        bin_h, starts, fractions["positive"], fractions["negative"], fractions["neutral"], counts.tolist()
    )


@dataclass(frozen=True)
class Alignment:
    """b ~ scale * a + offset with its root-mean-square residual"""

    scale: float
    offset: float
    residual: float

    def __iter__(self):
        return iter((self.scale, self.offset, self.residual))


def align_trends(a: TrendSeries, b: TrendSeries) -> Alignment:
    """Least-squares fit of b on a over bins present in both"""
    if a.bin_h != b.bin_h:
        raise ArgumentError(f"Trends have different bins: {a.bin_h} h and {b.bin_h} h")
    b_values = {start: value for start, value in zip(b.bin_start, b.value) if value is not None}
    pairs = [(value, b_values[start]) for start, value in zip(a.bin_start, a.value) if value is not None and start in b_values]
    if len(pairs) < 2:
        raise ArgumentError(f"Need at least 2 overlapping bins, got {len(pairs)}")
    x, y = np.array(pairs, dtype=float).T
    if np.ptp(x) == 0:
        raise DegenerateFitError("Reference trend is constant over the overlap")
    design = np.column_stack((x, np.ones_like(x)))
    (scale, offset), *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = math.sqrt(float(np.mean((design @ np.array([scale, offset]) - y) ** 2)))
    return Alignment(float(scale), float(offset), residual)
