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
Pipeline Steps

Steps file for pipeline.feature
"""
import shlex
import shutil

from behave import given, then, when

from netsensor.common import status
from netsensor.common.cli_commands import run
from netsensor.runconfig import read_table


def run_in_data_dir(context, arguments: str) -> int:
    """Runs one subcommand against the scenario's data directory"""
    argv = shlex.split(arguments) + ["--data-dir", str(context.data_dir)]
    context.exit_status = run(argv)
    return context.exit_status


@given('a simulated data set of {users:d} users with seed {seed:d}')
def step_impl(context, users, seed):
    """ Simulates a small network into the data directory """
    exit_status = run_in_data_dir(context, f"simulate --preset sandy --nodes {users} --seed {seed}")
    assert exit_status == status.EXIT_0_OK


@given('an empty data directory')
def step_impl(context):  # noqa: F811
    """ Drops everything the background wrote """
    shutil.rmtree(context.data_dir)
    context.data_dir.mkdir()


@when('I run "{arguments}"')
def step_impl(context, arguments):  # noqa: F811
    """ Runs a subcommand; a failing one stops later steps in the scenario """
    if context.exit_status not in (None, status.EXIT_0_OK):
        return
    run_in_data_dir(context, arguments)


@then('the exit status should be {expected:d}')
def step_impl(context, expected):  # noqa: F811
    """ Checks the status of the last subcommand """
    assert context.exit_status == expected, f"exit status {context.exit_status}, expected {expected}"


@then('the file "{name}" should exist')
def step_impl(context, name):  # noqa: F811
    """ Checks that a stage wrote an artifact """
    assert (context.data_dir / name).exists(), f"{name} was not written"


@then('the file "{name}" should have {rows:d} rows')
def step_impl(context, name, rows):  # noqa: F811
    """ Counts the data rows of a table """
    table = read_table(context.data_dir / name)
    assert len(table) == rows, f"{name} has {len(table)} rows, expected {rows}"
