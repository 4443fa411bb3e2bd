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

#ifndef cfmimo_hardening_H
#define cfmimo_hardening_H

#include <armadillo>
#include <vector>

namespace cfmimo
{

// Monte-Carlo channel-hardening statistics of the effective gains between
// true channels and normalized (and, where requested, enforced) precoders,
// conditioned on one network snapshot. These are the inputs of the
// effective-SINR expressions and the max-min power-control solvers.
struct HardeningStats
{
    bool distributed = false;
    arma::uword n_blocks = 0;
    double noise_over_power = 0.0; // sigma_n^2 / p_a (dist) or sigma_n^2 / P_s (cent)

    // Centralized: mean_gain(k) = E[h_k^T v_k],
    // second_moment(k, k') = E[|h_k^T v_k'|^2]
    arma::cx_vec mean_gain_c;
    arma::mat second_moment_c;

    // Distributed: mean_gain(k, l) = E[h_kl^T w_kl] (l in L_k),
    // second_moment(k, k', l) = E[|h_kl^T w_k'l|^2] (l in L_k')
    arma::cx_mat mean_gain_d;
    arma::cube second_moment_d;

    // Centralized only: segment_power(k, l) = E[||v_kl||^2], the mean share
    // of user k's precoder power emitted by AP l (per-AP-aware max-min)
    arma::mat segment_power;
};

// Effective SINR of every user under centralized precoding:
//   xi_k = eps_k |E[h_k^T v_k]|^2 /
//          ( sum_k' eps_k' E[|h_k^T v_k'|^2] - eps_k |E[h_k^T v_k]|^2 + noise )
arma::vec effective_sinr_centralized(const HardeningStats& hs, const arma::vec& eps);

// Effective SINR under distributed precoding:
//   gamma_k = |sum_{l in L_k} sqrt(eta_kl) E[h_kl^T w_kl]|^2 /
//             ( sum_k' sum_{l in L_k'} eta_k'l E[|h_kl^T w_k'l|^2]
//               - sum_{l in L_k} eta_kl |E[h_kl^T w_kl]|^2 + noise )
arma::vec effective_sinr_distributed(const HardeningStats& hs, const arma::mat& eta,
                                     const std::vector<std::vector<arma::uword>>& serving_aps);

} // namespace cfmimo

#endif
