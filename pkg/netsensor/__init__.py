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
Package: netsensor

Early detection of events from a social network: lead times of friend
sensor groups, lexicon sentiment and gridded sentiment sensing.
This module creates the Flask app that carries the configuration,
logging and the command line subcommands.
"""
from flask import Flask
from netsensor import config
from netsensor.common import log_handlers

# NOTE: Do not change the order of this code
# The Flask app must be created
# BEFORE you import modules that depend on it !!!

# Create the Flask app
app = Flask(__name__)  # pylint: disable=invalid-name

# Load Configurations
app.config.from_object(config)

# Dependencies require we import the commands AFTER the Flask app is created
# pylint: disable=wrong-import-position, wrong-import-order, cyclic-import
from netsensor import models  # noqa: F401, E402
from netsensor.common import error_handlers, cli_commands  # noqa: F401, E402

log_handlers.init_logging(app, "netsensor.cli")

app.logger.debug(70 * "*")
app.logger.debug("  N E T S E N S O R   R E A D Y  ".center(70, "*"))
app.logger.debug(70 * "*")
