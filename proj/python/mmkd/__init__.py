# Copyright 2026 The mmkd Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the mmkd toolkit."""

from ._mmkd import __version__
from ._mmkd import (
    Error,
    ValidationError,
    cosine,
    encoder_checksum,
    extract_translation,
    format_query,
    format_target,
    loss_e,
    loss_i,
    mcnemar,
    mse,
    pool_size,
    precision_at_1,
    run_cli,
    tokenize,
    wrap_for_translation,
)

__all__ = [
    "Error",
    "ValidationError",
    "cosine",
    "encoder_checksum",
    "extract_translation",
    "format_query",
    "format_target",
    "loss_e",
    "loss_i",
    "mcnemar",
    "mse",
    "pool_size",
    "precision_at_1",
    "run_cli",
    "tokenize",
    "wrap_for_translation",
]
