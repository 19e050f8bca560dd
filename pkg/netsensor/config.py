"""
Global Configuration for Application
"""
import os
import logging

from dotenv import find_dotenv, load_dotenv

# the flask CLI loads these itself; python -m netsensor does not
# .env wins over .flaskenv and neither overrides the environment
load_dotenv(find_dotenv())
load_dotenv(find_dotenv(".flaskenv"))

# Get configuration from environment
DATA_DIR = os.getenv("NETSENSOR_DATA_DIR", "data")

# Offsets are hours relative to this instant (ISO-8601, UTC)
REFERENCE_EPOCH = os.getenv("NETSENSOR_EPOCH", "2012-10-30T00:00:00+00:00")

# Worker processes for sharded parsing and sweeps
WORKERS = int(os.getenv("NETSENSOR_WORKERS", "1"))

LOGGING_LEVEL = getattr(
    logging, os.getenv("NETSENSOR_LOG_LEVEL", "INFO").upper(), logging.INFO
)

# Ingest
FILTER_LEVEL = "strict"
MALFORMED_LIMIT = 0.5
BIN_HOURS = 1.0

# Geography
THRESHOLD_KT = 34
ARC_SEGMENTS = 32
GRID_CELL_DEG = 1.0
COUNTRIES = ("US", "CA")

# Lead times
SIZES = (500, 1000, 2500, 5000)
TRIALS = 20
BANDWIDTH_HOURS = 8.0
CDF_GRID_STEP_HOURS = 1.0
CDF_PAD_BANDWIDTHS = 7.0

# Sensing
MIN_COUNT = 20
K_MAD = 3.0
PERSISTENCE_HOURS = 2
BASELINE_WINDOW_HOURS = 72
MIN_HISTORY_HOURS = 24
MAD_FLOOR = 0.01

# Simulator
ACTIVITY_EXPONENT = 0.5
