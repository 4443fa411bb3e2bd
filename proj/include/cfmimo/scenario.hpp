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

#ifndef cfmimo_scenario_H
#define cfmimo_scenario_H

#include <armadillo>
#include <cstdint>
#include <vector>

#include "cfmimo/rng.hpp"

namespace cfmimo
{

enum class PilotScheme
{
    round_robin, // user k gets pilot k mod tau_p
    random       // uniform over {0..tau_p-1}
};

// Static parameters of one network: geometry, power budget, channel model
// constants and Monte-Carlo-relevant dimensions. Defaults reproduce the
// simulator's standard configuration (50 four-antenna APs, 10 users, 1 km
// disc, 200 mW per node, 5 MHz at 1.9 GHz).
struct ScenarioConfig
{
    arma::uword n_aps = 50;       // L
    arma::uword n_antennas = 4;   // N_t per AP
    arma::uword n_users = 10;     // K (single-antenna)
    arma::uword cluster_size = 10; // |L_k|, APs serving each user
    double radius_m = 1000.0;

    arma::uword tau_p = 5;   // pilot length in channel uses
    arma::uword tau_c = 200; // coherence block length in channel uses

    double p_u = 0.2; // uplink transmit power per user [W]
    double p_a = 0.2; // transmit power limit per AP [W]

    double noise_psd_dbm_hz = -174.0;
    double noise_figure_db = 9.0;
    double bandwidth_hz = 5e6;

    // Three-slope COST-Hata path loss (urban macro constants)
    double carrier_mhz = 1900.0;
    double ap_height_m = 15.0;
    double user_height_m = 1.65;
    double d0_m = 10.0; // inner breakpoint, flat below
    double d1_m = 50.0; // outer breakpoint, 3.5-exponent beyond
    double shadowing_std_db = 8.0;
    bool shadowing = true;       // log-normal term beyond d1
    double min_distance_m = 1.0; // AP-user distance clamp

    double angular_spread_deg = 10.0;
    double kappa_mean_db = 8.0; // Rician K-factor, dB domain
    double kappa_std_db = 4.0;

    bool cluster_by_gain = true; // false: rank serving APs by distance instead of beta
    PilotScheme pilot_scheme = PilotScheme::round_robin;

    std::uint64_t seed = 1;

    arma::uword total_antennas() const { return n_aps * n_antennas; } // M
    double system_power() const { return static_cast<double>(n_aps) * p_a; } // P_s = L p_a

    // sigma_n^2 in watts from PSD, noise figure and bandwidth
    double noise_variance() const
    {
        double dbm = noise_psd_dbm_hz + noise_figure_db + 10.0 * std::log10(bandwidth_hz);
        return std::pow(10.0, dbm / 10.0) * 1e-3;
    }

    // Throws std::invalid_argument on an inconsistent configuration
    void validate() const;
};

// One network snapshot: placements, large-scale statistics, spatial
// covariances, user-centric clusters and the pilot plan. Immutable after
// drop_network() and safe to share across evaluation workers.
struct ScenarioStats
{
    ScenarioConfig cfg;

    arma::mat ap_pos;   // L x 2 [m]
    arma::mat user_pos; // K x 2 [m]

    arma::mat beta;      // K x L, linear path gain
    arma::mat kappa;     // K x L, linear Rician factor >= 0
    arma::mat los_angle; // K x L, azimuth AP->user [rad]

    arma::field<arma::cx_mat> R; // K x L, N_t x N_t NLoS covariance, trace = N_t beta
    arma::field<arma::cx_mat> Q; // K x L, R / (1 + kappa)

    std::vector<std::vector<arma::uword>> serving_aps;  // L_k, sorted, |.| = cluster_size
    std::vector<std::vector<arma::uword>> served_users; // K_l, sorted
    arma::umat serving;                                 // K x L mask, 1 iff l in L_k

    arma::uvec pilot_of;                            // K, values in {0..tau_p-1}
    std::vector<std::vector<arma::uword>> copilots; // P_k, includes k itself

    bool serves(arma::uword k, arma::uword l) const { return serving(k, l) != 0; }
};

// Steering vector of a half-wavelength ULA: element m = exp(j pi m sin angle)
arma::cx_vec steering_vector(double angle_rad, arma::uword n_antennas);

// Median (shadowing-free) path gain in dB for the three-slope model
double pathloss_mean_db(double distance_m, const ScenarioConfig& cfg);

// Linear path gain; draws the log-normal shadowing term from rng when the
// model applies it (beyond d1 and enabled in cfg)
double pathloss(double distance_m, const ScenarioConfig& cfg, Rng& rng);

// NLoS spatial covariance of the Gaussian local scattering model: entry
// (m,n) = beta * E[exp(j pi (m-n) sin(angle + delta))] with delta ~
// N(0, spread^2), evaluated by fixed-resolution quadrature. Hermitian PSD,
// diagonal = beta.
arma::cx_mat gaussian_scattering_covariance(double beta_nlos, double los_angle_rad,
                                            double spread_deg, arma::uword n_antennas);

// Pilot indices for all users; when n_users > tau_p at least one pilot is
// reused and pilot contamination exists
arma::uvec assign_pilots(arma::uword n_users, arma::uword tau_p, PilotScheme scheme, Rng& rng);

// Draws one full network snapshot. Deterministic given cfg (the rng carries
// the seed). Placement is uniform on the disc of radius cfg.radius_m.
ScenarioStats drop_network(const ScenarioConfig& cfg, Rng& rng);

// Same snapshot with the user-centric clusters replaced by full
// cooperation (every AP serves every user); large-scale state and pilot
// plan are untouched
ScenarioStats with_full_clusters(ScenarioStats stats);

inline ScenarioStats drop_network(const ScenarioConfig& cfg)
{
    Rng rng(cfg.seed);
    return drop_network(cfg, rng);
}

} // namespace cfmimo

#endif
