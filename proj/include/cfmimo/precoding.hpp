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

#ifndef cfmimo_precoding_H
#define cfmimo_precoding_H

#include <armadillo>

#include "cfmimo/channel.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo
{

enum class Mode
{
    distributed, // per-AP local precoders w_kl
    centralized  // network-wide precoders v_k of length M
};

enum class Scheme
{
    mr,  // conjugate beamforming
    zf,  // zero-forcing (unregularized)
    rzf, // regularized zero-forcing
    mmse
};

const char* to_string(Mode m);
const char* to_string(Scheme s);

// Cluster-masked channel estimates: column k of every matrix is zeroed on
// APs outside L_k. With full clustering this equals the unpunctured layout.
struct PuncturedChannels
{
    arma::field<arma::cx_mat> local; // L entries, N_t x K
    arma::cx_mat global;             // M x K, AP blocks stacked
    arma::umat serving;              // K x L mask
    arma::uword n_antennas = 0;

    arma::uword n_aps() const { return local.n_elem; }
    arma::uword n_users() const { return global.n_cols; }

    // AP-l block of the punctured collective estimate of user k
    arma::cx_vec segment(arma::uword k, arma::uword l) const
    {
        return local(l).col(k);
    }
};

PuncturedChannels build_punctured(const ChannelEstimate& est);

// Same construction from explicitly supplied per-pair channels (used for
// perfect-CSI experiments and tests)
PuncturedChannels build_punctured(const arma::field<arma::cx_vec>& channels,
                                  const arma::umat& serving);

// Unnormalized precoding directions. Centralized: columns of `central`
// (M x K); distributed: columns of `local(l)` (N_t x K), identically zero
// for users the AP does not serve.
struct DirectionSet
{
    Mode mode = Mode::centralized;
    Scheme scheme = Scheme::mr;
    arma::cx_mat central;            // M x K (centralized mode)
    arma::field<arma::cx_mat> local; // L of N_t x K (distributed mode)

    arma::cx_vec segment(arma::uword k, arma::uword l, arma::uword n_t) const
    {
        if (mode == Mode::centralized)
            return central.col(k).subvec(l * n_t, (l + 1) * n_t - 1);
        return local(l).col(k);
    }
};

// d_k = conj(punctured h_k) (centralized) or d_kl = conj(punctured h_kl)
DirectionSet mr_direction(const PuncturedChannels& pch, Mode mode);

// Regularized zero-forcing. Centralized: d_k = H* (H^T H* + sigma2 I_K)^{-1} e_k,
// equal to the transmit-side form (H* H^T + sigma2 I_M)^{-1} H* e_k by the
// push-through identity; the K x K form is computed. Distributed solves the
// N_t x N_t form per AP. With regularize = false this is plain ZF and a
// rank-deficient Gram raises std::runtime_error.
DirectionSet rzf_direction(const PuncturedChannels& pch, Mode mode, double sigma2,
                           bool regularize = true);

// MMSE directions. Centralized:
//   d_k = conj( (p_u H E H^H + p_u sum_k U_k Theta_k U_k + sigma2 I_M)^{-1} H ) e_k
// with E = diag(eps); computed through the block-diagonal regularizer and a
// K x K Woodbury solve. Distributed uses E_l = diag(eta(:,l)) per AP.
// error_reg holds the per-AP blocks p_u sum_{k in K_l} Theta_kl (pass zero
// matrices for the perfect-CSI variant).
DirectionSet mmse_direction_centralized(const PuncturedChannels& pch,
                                        const arma::field<arma::cx_mat>& error_reg,
                                        const arma::vec& eps, double p_u, double sigma2);

DirectionSet mmse_direction_distributed(const PuncturedChannels& pch,
                                        const arma::field<arma::cx_mat>& error_reg,
                                        const arma::mat& eta, double p_u, double sigma2);

} // namespace cfmimo

#endif
