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

#ifndef cfmimo_harness_H
#define cfmimo_harness_H

#include <cstdint>
#include <string>
#include <vector>

#include "cfmimo/evaluation.hpp"
#include "cfmimo/power.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo
{

enum class PowerControl
{
    epa,
    maxmin
};

const char* to_string(PowerControl pc);

// One scheme combination of an experiment sweep
struct Combination
{
    Scheme scheme;
    Mode mode;
    PowerControl power_control;
    Enforcement enforcement; // centralized only; distributed is always none

    std::string label() const;
};

// Declarative description of a full experiment: scenario, swept scheme
// combinations, Monte-Carlo budgets and output location. Everything needed
// to reproduce a run byte-for-byte lives here.
struct ExperimentPlan
{
    ScenarioConfig scenario;

    std::vector<Scheme> schemes = {Scheme::mmse};
    std::vector<Mode> modes = {Mode::distributed, Mode::centralized};
    std::vector<PowerControl> power_controls = {PowerControl::epa, PowerControl::maxmin};
    // Applied to centralized combinations only (per-AP enforcement has no
    // meaning for short-term-normalized distributed precoding)
    std::vector<Enforcement> enforcements = {Enforcement::power_scaling, Enforcement::local_norm};

    arma::uword n_setups = 100;
    arma::uword n_blocks = 200;
    std::uint64_t master_seed = 1;
    std::string out_dir = "results";
    bool include_overhead = true;
    // Centralized combinations run with full cooperation (the CPU precodes
    // over all APs); distributed ones always use the user-centric clusters.
    // Set false to puncture the centralized schemes onto the clusters too.
    bool centralized_full = true;
    // Recompute the MMSE directions once with the solved max-min
    // coefficients (single re-iteration of the precoder/power coupling)
    bool mmse_reiterate = false;
    bool fig1 = false;
    bool dump_fixtures = false;
    unsigned jobs = 0; // 0: hardware concurrency

    std::vector<Combination> combinations() const;
    void validate() const; // throws std::invalid_argument
};

// Parses the declarative TOML-style config ([scenario] and [run] sections,
// key = value lines). Unknown keys are rejected.
ExperimentPlan load_plan(const std::string& path);
ExperimentPlan parse_plan(const std::string& toml_text);

// Name parsers shared by the config reader and CLI flags; throw
// std::invalid_argument on unknown names
Scheme scheme_from_string(const std::string& name);
Mode mode_from_string(const std::string& name);
PowerControl power_control_from_string(const std::string& name);
Enforcement enforcement_from_string(const std::string& name);

// Sub-seed of a (label, setup, pass) work item under the master seed
std::uint64_t experiment_seed(std::uint64_t master, const std::string& label,
                              arma::uword setup, arma::uword pass = 0);

// Evaluates one setup under one combination; numerical failures are
// captured in the result rather than thrown
SetupResult run_setup(const ExperimentPlan& plan, const Combination& combo, arma::uword setup);

// Exit codes of run()/fig1_mode(): 0 success (possibly with skipped
// setups), 2 when a combination produced no usable setup at all. Config
// errors throw std::invalid_argument before any compute.
int run(const ExperimentPlan& plan);

// Power-concentration experiment: single-antenna APs, full clustering,
// centralized ZF with equal power coefficients. Writes the per-snapshot
// per-AP normalized powers and the 1/L reference.
int fig1_mode(const ExperimentPlan& plan);

} // namespace cfmimo

#endif
