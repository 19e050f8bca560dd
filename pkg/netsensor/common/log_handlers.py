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
Log Handlers

This module contains utility functions to set up logging
consistently
"""
import logging
import sys

FORMAT_STRING = "[%(asctime)s] [%(levelname)s] [%(module)s] %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S %z"


def init_logging(app, logger_name: str):
    """Set up logging for the command line tools

    The handlers of ``logger_name`` are shared with the app logger. When
    that logger has none (nothing configured it), a stderr handler is
    created so stdout stays free for the one-line summaries.
    """
    app.logger.propagate = False
    source_logger = logging.getLogger(logger_name)
    if not source_logger.handlers:
        source_logger.addHandler(logging.StreamHandler(sys.stderr))
    app.logger.handlers = source_logger.handlers
    app.logger.setLevel(app.config.get("LOGGING_LEVEL", logging.INFO))
    # Make all log formats consistent
    formatter = logging.Formatter(FORMAT_STRING, DATE_FORMAT)
    for handler in app.logger.handlers:
        handler.setFormatter(formatter)
    app.logger.debug("Logging handler established")
