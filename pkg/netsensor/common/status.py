# coding: utf8

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
Descriptive process exit statuses, for improved code readability

Every subcommand ends with one of these.
"""

# Success
EXIT_0_OK = 0

# Bad invocation: unknown subcommand, missing or malformed option
EXIT_1_USAGE = 1

# Input data failed validation, could not be read, or a stage could
# not complete with the data given
EXIT_2_DATA_ERROR = 2
