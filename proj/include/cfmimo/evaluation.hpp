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

#ifndef cfmimo_evaluation_H
#define cfmimo_evaluation_H

#include <armadillo>
#include <string>
#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/hardening.hpp"
#include "cfmimo/power.hpp"
#include "cfmimo/precoding.hpp"

namespace cfmimo
{

// One scheme variant to push a coherence block through: direction scheme,
// implementation mode, normalization flavor and per-AP enforcement. The
// MMSE directions always use the equal-power coefficients internally;
// power_eps is the allocation the PS back-off (and the power sampling)
// reacts to.
struct PrecodingPipeline
{
    Scheme scheme = Scheme::mmse;
    Mode mode = Mode::centralized;
    Enforcement enforcement = Enforcement::none;
    NormalizationKind normalization = NormalizationKind::short_term;
    arma::vec power_eps;                        // centralized coefficients for PS / sampling
    const DirectionPower* direction_power = nullptr; // long-term normalization statistics

    // Power coefficients inside the MMSE direction formulas; empty selects
    // the equal-power defaults (the re-iteration after power control fills
    // these with the solved allocation)
    arma::vec mmse_eps;
    arma::mat mmse_eta;
};

// Per-realization power diagnostics collected alongside the hardening pass
struct PowerSamples
{
    arma::mat per_ap_fraction; // n_blocks x L: emitted power / budget per AP
    arma::vec alpha_g;         // n_blocks; 1.0 where PS is inactive
};

// Monte-Carlo estimate of the hardening statistics of a pipeline over
// n_blocks independent coherence blocks, conditioned on the model's setup
HardeningStats estimate_hardening(const PrecodingPipeline& pipeline, const ChannelModel& model,
                                  arma::uword n_blocks, Rng& rng,
                                  PowerSamples* samples = nullptr);

// Mean direction powers E[||d||^2] for long-term normalization
DirectionPower estimate_direction_power(Scheme scheme, Mode mode, const ChannelModel& model,
                                        arma::uword n_blocks, Rng& rng);

// Effective-SINR expressions on hardening statistics (wrappers over the
// raw forms in hardening.hpp)
arma::vec sinr_distributed(const HardeningStats& hs, const PowerAllocation& alloc,
                           const ScenarioStats& stats);
arma::vec sinr_centralized(const HardeningStats& hs, const PowerAllocation& alloc);

// SE = overhead * log2(1 + sinr); the default overhead is the pilot
// fraction (tau_c - tau_p) / tau_c
arma::vec spectral_efficiency(const arma::vec& sinr, double overhead);

inline double pilot_overhead(const ScenarioConfig& cfg)
{
    return static_cast<double>(cfg.tau_c - cfg.tau_p) / static_cast<double>(cfg.tau_c);
}

// Empirical quantile with linear interpolation between order statistics
// (the common "type 7" definition); p in [0, 1]
double percentile(const arma::vec& samples, double p);

// Outcome of one setup under one scheme combination
struct SetupResult
{
    bool ok = true;
    std::string error;
    arma::vec sinr; // K
    arma::vec se;   // K
    double alpha_g_median = 1.0;
    arma::vec per_ap_fraction_max; // per-block max_l P_l / budget
};

// Pooled spectral-efficiency distribution of one scheme combination
struct SEReport
{
    std::string label;
    arma::uvec setup_of; // per pooled sample
    arma::uvec user_of;
    arma::vec sinr;
    arma::vec se;

    arma::vec cdf_grid;
    arma::vec cdf;

    double likely95 = 0.0; // 5th percentile of se
    double median = 0.0;
    double p95 = 0.0;
    double mean = 0.0;

    arma::vec alpha_g_medians;      // one per successful setup
    arma::vec per_ap_fraction_max;  // pooled block maxima
    arma::uword n_setups_ok = 0;
    arma::uword n_setups_failed = 0;
};

SEReport aggregate(const std::string& label, const std::vector<SetupResult>& results);

} // namespace cfmimo

#endif
