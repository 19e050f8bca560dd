"""
Command line entry point: python -m netsensor <subcommand> [OPTIONS]

The same subcommands are available as ``flask <subcommand>``.
"""
import sys

from netsensor.common.cli_commands import run

sys.exit(run())
