"""
Environment for Behave Testing
"""
import logging
import shutil
import tempfile
from os import getenv
from pathlib import Path

from netsensor import app

KEEP_DATA = getenv("KEEP_DATA", "false").lower() in ("1", "true", "yes")


def before_all(context):
    """ Executed once before all tests """
    app.logger.setLevel(logging.CRITICAL)
    context.config.setup_logging()


def before_scenario(context, scenario):  # pylint: disable=unused-argument
    """ Every scenario gets its own data directory """
    context.data_dir = Path(tempfile.mkdtemp(prefix="netsensor-"))
    context.exit_status = None


def after_scenario(context, scenario):  # pylint: disable=unused-argument
    """ Removes the data directory unless KEEP_DATA is set """
    if KEEP_DATA:
        print(f"data kept in {context.data_dir}")
        return
    shutil.rmtree(context.data_dir, ignore_errors=True)
