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

#ifndef cfmimo_power_H
#define cfmimo_power_H

#include <armadillo>
#include <string>

#include "cfmimo/hardening.hpp"
#include "cfmimo/precoding.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo
{

enum class NormalizationKind
{
    short_term, // ||w|| = 1 in every realization
    long_term   // E[||w||^2] = 1 on average
};

enum class Enforcement
{
    none,          // sum-power only (no per-AP guarantee)
    power_scaling, // PS: global back-off alpha_g = min(1, p_a / max_l P_l)
    local_norm     // LN: every nonzero segment renormalized to norm 1/sqrt(L)
};

const char* to_string(Enforcement e);

// Unit-power precoders. Distributed: w(l) holds the local precoders of AP l
// (N_t x K, zero columns for non-served users). Centralized: column k of v
// is the network-wide precoder with per-AP segments.
struct PrecoderSet
{
    Mode mode = Mode::centralized;
    NormalizationKind normalization = NormalizationKind::short_term;
    Enforcement enforcement = Enforcement::none;
    arma::uword n_t = 1;         // antennas per AP (segment size)
    arma::cx_mat v;              // M x K
    arma::field<arma::cx_mat> w; // L of N_t x K

    arma::uword n_aps() const
    {
        return mode == Mode::centralized ? v.n_rows / n_t : w.n_elem;
    }
    arma::uword n_users() const
    {
        return mode == Mode::centralized ? v.n_cols : w(0).n_cols;
    }
    arma::cx_vec segment(arma::uword k, arma::uword l) const
    {
        if (mode == Mode::centralized)
            return v.col(k).subvec(l * n_t, (l + 1) * n_t - 1);
        return w(l).col(k);
    }
};

// Power-control coefficients. Centralized: eps(k) with sum <= 1;
// distributed: eta(k, l) with per-AP column sums <= 1 (zero off-cluster).
struct PowerAllocation
{
    Mode mode = Mode::centralized;
    arma::vec eps;   // K
    arma::mat eta;   // K x L
    double alpha_g = 1.0;
    std::string scheme = "EPA";
};

// Monte-Carlo mean direction powers E[||d||^2], required by long-term
// normalization (estimated by evaluation::estimate_direction_power)
struct DirectionPower
{
    arma::vec central; // K
    arma::mat local;   // K x L
};

// w_kl = d_kl / ||d_kl|| (short-term) or d_kl / sqrt(E[||d_kl||^2])
// (long-term); centralized analog with c_k. A zero direction for a served
// pair raises std::runtime_error.
PrecoderSet normalize(const DirectionSet& dirs, NormalizationKind kind,
                      const arma::umat& serving, const DirectionPower* dp = nullptr);

// Power emitted per AP. Centralized: P_l = P_s sum_k eps_k ||v_kl||^2;
// distributed: P_l = p_a sum_{k in K_l} eta_kl. `budget` is P_s or p_a
// accordingly.
arma::vec per_ap_power(const PrecoderSet& prec, const PowerAllocation& alloc, double budget);

// PS: alpha_g = min(1, p_a / max_l P_l), eps_bar = alpha_g * eps. Precoders
// untouched; every per-AP power becomes alpha_g P_l <= p_a.
PowerAllocation enforce_ps(const PowerAllocation& alloc, const arma::vec& per_ap_watts,
                           double p_a);

// LN: v_bar_kl = v_kl / (sqrt(L) ||v_kl||) for every nonzero segment; zero
// segments of non-serving APs stay zero; a zero segment at a serving AP
// raises std::runtime_error. Per-AP power becomes (P_s/L) sum_k eps_k.
PrecoderSet enforce_ln(const PrecoderSet& prec, const arma::umat& serving);

// Equal power allocation: eps_k = 1/K, eta_kl = 1/|K_l| for k in K_l
PowerAllocation epa(Mode mode, const ScenarioStats& stats);

struct MaxminOptions
{
    double rel_tol = 1e-3; // relative bisection tolerance in linear SINR
    int max_iter = 100;

    // When > 0, feasibility additionally requires the mean per-AP powers
    // P_s sum_k eps_k E[||v_kl||^2] to stay within per_ap_budget * P_s at
    // every AP (uses HardeningStats::segment_power). Used by the PS
    // pipeline so that the per-realization back-off stays mild instead of
    // collapsing the whole allocation.
    double per_ap_budget = 0.0; // as a fraction of P_s, i.e. p_a / P_s = 1/L
};

// Max-min fair power control for fixed centralized precoders under the
// sum-power budget sum eps <= 1 (optionally also mean per-AP budgets, see
// MaxminOptions). Bisection over the common SINR target; for each target
// the equal-SINR allocation solves a K x K linear system, and the largest
// feasible target is returned (all SINRs equal by construction, never
// below the EPA min-SINR when EPA is feasible). LN enters through the
// hardening statistics of the LN-enforced precoders.
PowerAllocation maxmin_centralized(const HardeningStats& hs, const MaxminOptions& opt = {});

// Distributed max-min heuristic over the factorization eta_kl = q_k *
// split_kl, with the per-user AP split fixed from the channel-estimate
// energies (split_kl proportional to E[||h_hat_kl||^2] over l in L_k).
// Bisection on the common SINR with per-AP feasibility sum_{k in K_l}
// eta_kl <= 1; falls back to EPA whenever the factorized family cannot
// match it, so the returned min-SINR never drops below EPA's.
PowerAllocation maxmin_distributed(const HardeningStats& hs, const ScenarioStats& stats,
                                   const arma::mat& estimate_energy,
                                   const MaxminOptions& opt = {});

} // namespace cfmimo

#endif
