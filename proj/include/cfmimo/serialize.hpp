// SPDX-License-Identifier: Apache-2.0
//
// cfmimo — cell-free massive MIMO downlink simulator
// Copyright (C) 2026 The cfmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef cfmimo_serialize_H
#define cfmimo_serialize_H

#include <string>

#include "cfmimo/channel.hpp"
#include "cfmimo/evaluation.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo
{

// Deterministic decimal formatting used in every text artifact, so that
// identical runs produce byte-identical files
std::string format_number(double v);

// Self-describing structured-text (JSON) fixture of a network snapshot:
// config echo, placements, large-scale state, covariances, clusters and
// pilot plan. Identical snapshots serialize to identical bytes.
std::string scenario_to_text(const ScenarioStats& stats);
void write_scenario_fixture(const std::string& path, const ScenarioStats& stats);

// Fixture of one coherence block: true channels, estimates and the error
// covariances, for cross-implementation regression
std::string block_to_text(const ChannelRealization& real, const ChannelEstimate& est);
void write_block_fixture(const std::string& path, const ChannelRealization& real,
                         const ChannelEstimate& est);

// Per-sample results: header "scheme,setup,user,sinr,se"
void write_report_csv(const std::string& path, const SEReport& report);

// Summary metadata (percentiles, alpha_g statistics, per-AP power
// exceedance) as structured text
std::string report_summary_text(const SEReport& report);

} // namespace cfmimo

#endif
