# Copyright 2026 The RELNET Authors
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
"""Entropy relevance, late fusion and expert inference for weakly labelled audio."""

from relnet._relnet import (
    Expert,
    RelnetError,
    entropy,
    expert_probabilities,
    fuse,
    generate_synthetic,
    load_expert,
    map_at3,
    mel_spectrogram,
    pad_center,
    rank_scores,
    recall_at3,
    relevance,
    relevance_profile,
    render_relevance_svg,
    weighted_relevance,
)

__all__ = [
    "Expert",
    "RelnetError",
    "entropy",
    "expert_probabilities",
    "fuse",
    "generate_synthetic",
    "load_expert",
    "map_at3",
    "mel_spectrogram",
    "pad_center",
    "rank_scores",
    "recall_at3",
    "relevance",
    "relevance_profile",
    "render_relevance_svg",
    "weighted_relevance",
]
