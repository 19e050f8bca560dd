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
Module: error_handlers

Maps exceptions raised by subcommands onto process exit statuses.
"""
import click

from netsensor import app
from netsensor.models import ArgumentError, DataValidationError, SuspiciousInputError
from . import status

HANDLERS = {}


def errorhandler(exc_type):
    """Registers the decorated function as the handler of an exception type"""

    def decorator(func):
        HANDLERS[exc_type] = func
        return func

    return decorator


def handle_error(error: BaseException) -> int:
    """Runs the handler of the closest registered base class

    :return: the exit status
    :raises: the error itself when no handler applies
    """
    for klass in type(error).__mro__:
        if klass in HANDLERS:
            return HANDLERS[klass](error)
    raise error


######################################################################
# Error Handlers
######################################################################
@errorhandler(click.UsageError)
def usage_error(error):
    """Handles bad invocations with EXIT_1_USAGE"""
    app.logger.warning(error.format_message())
    error.show()
    return status.EXIT_1_USAGE


@errorhandler(ArgumentError)
def argument_error(error):
    """Handles out-of-range parameters with EXIT_1_USAGE"""
    message = str(error)
    app.logger.warning(message)
    click.echo(f"Error: {message}", err=True)
    return status.EXIT_1_USAGE


@errorhandler(SuspiciousInputError)
def suspicious_input(error):
    """Handles inputs that are mostly malformed"""
    for line in error.sample:
        app.logger.warning("  malformed: %s", line)
    return data_error(error)


@errorhandler(DataValidationError)
def data_validation_error(error):
    """Handles data that failed validation"""
    return data_error(error)


@errorhandler(OSError)
def data_error(error):
    """Handles unreadable or invalid inputs with EXIT_2_DATA_ERROR"""
    message = str(error)
    app.logger.warning(message)
    click.echo(f"Error: {message}", err=True)
    return status.EXIT_2_DATA_ERROR
