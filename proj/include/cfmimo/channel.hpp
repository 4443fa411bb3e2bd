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

#ifndef cfmimo_channel_H
#define cfmimo_channel_H

#include <armadillo>

#include "cfmimo/rng.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo
{

// Per-setup channel operators, precomputed once from ScenarioStats:
// covariance factors for sampling, the phase-aware MMSE filter and the
// estimation-error statistics. Immutable; blocks drawn from it are
// embarrassingly parallel given independent rng streams.
class ChannelModel
{
  public:
    explicit ChannelModel(ScenarioStats stats);

    const ScenarioStats& stats() const { return stats_; }
    arma::uword n_aps() const { return stats_.cfg.n_aps; }
    arma::uword n_users() const { return stats_.cfg.n_users; }
    arma::uword n_antennas() const { return stats_.cfg.n_antennas; }
    arma::uword total_antennas() const { return stats_.cfg.total_antennas(); }

    // F with F F^H = Q_kl (eigen square root, tolerates singular Q)
    const arma::cx_mat& q_factor(arma::uword k, arma::uword l) const { return q_factor_(k, l); }

    // LoS mean without the block phase: sqrt(beta kappa / (1+kappa)) a(theta)
    const arma::cx_vec& mu_direction(arma::uword k, arma::uword l) const { return mu_dir_(k, l); }

    // Psi_tl = p_u tau_p sum_{i on pilot t} Q_il + sigma_n^2 I, per (pilot, AP)
    const arma::cx_mat& psi(arma::uword pilot, arma::uword l) const { return psi_(pilot, l); }

    // W_kl = sqrt(p_u tau_p) Q_kl Psi_kl^{-1}, the MMSE filter
    const arma::cx_mat& estimator(arma::uword k, arma::uword l) const { return est_filter_(k, l); }

    // Theta_kl = Q_kl - p_u tau_p Q_kl Psi_kl^{-1} Q_kl (error covariance)
    const arma::cx_mat& error_cov(arma::uword k, arma::uword l) const { return theta_(k, l); }

    // p_u tau_p Q_kl Psi_kl^{-1} Q_kl (covariance of the estimate around mu)
    const arma::cx_mat& estimate_cov(arma::uword k, arma::uword l) const { return est_cov_(k, l); }

    // p_u sum_{k in K_l} Theta_kl: the per-AP error-regularization block of
    // the MMSE precoder (without the sigma_n^2 I term)
    const arma::field<arma::cx_mat>& error_reg_blocks() const { return error_reg_; }

    // E[||h_hat_kl||^2], used as the per-AP split weight in distributed
    // max-min power control
    const arma::mat& estimate_energy() const { return est_energy_; }

  private:
    ScenarioStats stats_;
    arma::field<arma::cx_mat> q_factor_;   // K x L
    arma::field<arma::cx_vec> mu_dir_;     // K x L
    arma::field<arma::cx_mat> psi_;        // tau_p x L
    arma::field<arma::cx_mat> est_filter_; // K x L
    arma::field<arma::cx_mat> theta_;      // K x L
    arma::field<arma::cx_mat> est_cov_;    // K x L
    arma::field<arma::cx_mat> error_reg_;  // L
    arma::mat est_energy_;                 // K x L
};

// One coherence block of the Rician model:
//   h_kl = sqrt(beta kappa/(1+kappa)) e^{j theta_kl} a(los_angle_kl) + g,
//   g ~ CN(0, Q_kl) with Q_kl = R_kl / (1+kappa_kl),
// with theta_kl redrawn uniformly on [0, 2pi) every block.
struct ChannelRealization
{
    arma::mat theta;              // K x L phases
    arma::field<arma::cx_vec> mu; // K x L LoS means (phase included)
    arma::field<arma::cx_vec> h;  // K x L true channels

    // Collective channel of user k, stacked over APs (length M)
    arma::cx_vec stacked(arma::uword k) const;
};

// Pilot-correlated training observations. Co-pilot users share one
// observation per AP: phi is indexed by (pilot, AP), and the noise
// realizations are kept for construction audits.
struct PilotObservations
{
    arma::field<arma::cx_vec> phi;   // tau_p x L
    arma::field<arma::cx_vec> noise; // tau_p x L

    const arma::cx_vec& of_user(arma::uword k, const ScenarioStats& s, arma::uword l) const
    {
        return phi(s.pilot_of(k), l);
    }
};

// Phase-aware MMSE estimates; error statistics live in the model
struct ChannelEstimate
{
    arma::field<arma::cx_vec> h_hat; // K x L
    const ChannelModel* model = nullptr;

    arma::cx_vec stacked(arma::uword k) const;
    const arma::cx_mat& error_cov(arma::uword k, arma::uword l) const
    {
        return model->error_cov(k, l);
    }
};

ChannelRealization draw_channel(const ChannelModel& model, Rng& rng);

// phi_tl = sum_{i: pilot(i)=t} sqrt(p_u tau_p) h_il + n_tl, n ~ CN(0, sigma^2 I)
PilotObservations uplink_training(const ChannelRealization& real, const ChannelModel& model,
                                  Rng& rng);

// h_hat_kl = mu_kl + W_kl (phi_kl - E[phi_kl]); the estimator knows the
// block phases (conditional MMSE)
ChannelEstimate mmse_estimate(const ChannelRealization& real, const PilotObservations& obs,
                              const ChannelModel& model);

} // namespace cfmimo

#endif
