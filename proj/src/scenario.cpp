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

#include "cfmimo/scenario.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cfmimo
{

void ScenarioConfig::validate() const
{
    if (n_aps < 1 || n_antennas < 1 || n_users < 1)
        throw std::invalid_argument("n_aps, n_antennas and n_users must all be >= 1");
    if (cluster_size < 1 || cluster_size > n_aps)
        throw std::invalid_argument("cluster_size must be in [1, n_aps]");
    if (tau_p < 1 || tau_p > tau_c)
        throw std::invalid_argument("tau_p must be in [1, tau_c]");
    if (p_u <= 0.0 || p_a <= 0.0)
        throw std::invalid_argument("transmit powers must be positive");
    if (bandwidth_hz <= 0.0)
        throw std::invalid_argument("bandwidth must be positive");
    if (radius_m <= 0.0)
        throw std::invalid_argument("coverage radius must be positive");
    if (angular_spread_deg <= 0.0)
        throw std::invalid_argument("angular spread must be positive");
    if (min_distance_m <= 0.0)
        throw std::invalid_argument("minimum distance must be positive");
    if (d0_m <= 0.0 || d1_m <= d0_m)
        throw std::invalid_argument("breakpoints must satisfy 0 < d0 < d1");
}

arma::cx_vec steering_vector(double angle_rad, arma::uword n_antennas)
{
    arma::cx_vec a(n_antennas);
    const double s = std::sin(angle_rad);
    for (arma::uword m = 0; m < n_antennas; ++m)
        a(m) = std::exp(std::complex<double>(0.0, arma::datum::pi * static_cast<double>(m) * s));
    return a;
}

// Fixed antenna/terminal offset of the COST-Hata urban model
static double cost_hata_offset_db(const ScenarioConfig& cfg)
{
    const double lf = std::log10(cfg.carrier_mhz);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(cfg.ap_height_m) -
           (1.1 * lf - 0.7) * cfg.user_height_m + (1.56 * lf - 0.8);
}

double pathloss_mean_db(double distance_m, const ScenarioConfig& cfg)
{
    const double d_km = std::max(distance_m, cfg.min_distance_m) / 1000.0;
    const double d0_km = cfg.d0_m / 1000.0;
    const double d1_km = cfg.d1_m / 1000.0;
    const double off = cost_hata_offset_db(cfg);

    if (d_km > d1_km)
        return -off - 35.0 * std::log10(d_km);
    if (d_km > d0_km)
        return -off - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d_km);
    return -off - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d0_km);
}

double pathloss(double distance_m, const ScenarioConfig& cfg, Rng& rng)
{
    double db = pathloss_mean_db(distance_m, cfg);
    if (cfg.shadowing && distance_m > cfg.d1_m)
        db += cfg.shadowing_std_db * rng.gaussian();
    return std::pow(10.0, db / 10.0);
}

// E[exp(j pi u sin(angle + delta))], delta ~ N(0, sigma^2), via composite
// Simpson over +-8 sigma. The integrand is entire, so the fixed grid is
// accurate far beyond the verification tolerances used in the tests.
static std::complex<double> scattering_moment(int lag, double angle, double sigma)
{
    if (lag == 0)
        return {1.0, 0.0};

    constexpr int n_intervals = 2048; // even
    const double lo = -8.0 * sigma;
    const double h = (8.0 * sigma - lo) / n_intervals;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * arma::datum::pi));

    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i <= n_intervals; ++i)
    {
        const double d = lo + i * h;
        double w = (i == 0 || i == n_intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double pdf = norm * std::exp(-d * d / (2.0 * sigma * sigma));
        acc += w * pdf * std::exp(std::complex<double>(0.0, arma::datum::pi * lag * std::sin(angle + d)));
    }
    return acc * (h / 3.0);
}

arma::cx_mat gaussian_scattering_covariance(double beta_nlos, double los_angle_rad,
                                            double spread_deg, arma::uword n_antennas)
{
    if (spread_deg <= 0.0)
        throw std::invalid_argument("angular spread must be positive");

    const double sigma = spread_deg * arma::datum::pi / 180.0;

    arma::cx_vec rho(n_antennas);
    for (arma::uword u = 0; u < n_antennas; ++u)
        rho(u) = scattering_moment(static_cast<int>(u), los_angle_rad, sigma);

    arma::cx_mat r(n_antennas, n_antennas);
    for (arma::uword m = 0; m < n_antennas; ++m)
        for (arma::uword n = 0; n < n_antennas; ++n)
            r(m, n) = (m >= n) ? beta_nlos * rho(m - n) : beta_nlos * std::conj(rho(n - m));

    // The model is PSD exactly; quadrature can leave eigenvalues a hair
    // below zero. Clip those, error on anything structurally negative.
    r = 0.5 * (r + r.t());
    arma::vec ev;
    arma::cx_mat evec;
    if (!arma::eig_sym(ev, evec, r))
        throw std::runtime_error("eigendecomposition failed for scattering covariance");
    const double tr = arma::accu(arma::real(r.diag()));
    if (ev.min() < -1e-10 * tr)
        throw std::runtime_error("scattering covariance is not positive semi-definite");
    if (ev.min() < 0.0)
    {
        ev.transform([](double x) { return std::max(x, 0.0); });
        r = evec * arma::diagmat(ev) * evec.t();
        r = 0.5 * (r + r.t());
    }
    return r;
}

arma::uvec assign_pilots(arma::uword n_users, arma::uword tau_p, PilotScheme scheme, Rng& rng)
{
    if (tau_p < 1)
        throw std::invalid_argument("tau_p must be >= 1");
    arma::uvec pilots(n_users);
    if (scheme == PilotScheme::round_robin)
    {
        for (arma::uword k = 0; k < n_users; ++k)
            pilots(k) = k % tau_p;
    }
    else
    {
        for (arma::uword k = 0; k < n_users; ++k)
            pilots(k) = std::min<arma::uword>(static_cast<arma::uword>(rng.uniform() * tau_p), tau_p - 1);
    }
    return pilots;
}

static arma::mat uniform_disc(arma::uword n, double radius, Rng& rng)
{
    arma::mat pos(n, 2);
    for (arma::uword i = 0; i < n; ++i)
    {
        const double r = radius * std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 2.0 * arma::datum::pi);
        pos(i, 0) = r * std::cos(phi);
        pos(i, 1) = r * std::sin(phi);
    }
    return pos;
}

ScenarioStats drop_network(const ScenarioConfig& cfg, Rng& rng)
{
    cfg.validate();

    const arma::uword L = cfg.n_aps, K = cfg.n_users, Nt = cfg.n_antennas;

    ScenarioStats s;
    s.cfg = cfg;
    s.ap_pos = uniform_disc(L, cfg.radius_m, rng);
    s.user_pos = uniform_disc(K, cfg.radius_m, rng);

    s.beta.set_size(K, L);
    s.kappa.set_size(K, L);
    s.los_angle.set_size(K, L);
    s.R.set_size(K, L);
    s.Q.set_size(K, L);

    arma::mat dist(K, L);
    for (arma::uword k = 0; k < K; ++k)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            const double dx = s.user_pos(k, 0) - s.ap_pos(l, 0);
            const double dy = s.user_pos(k, 1) - s.ap_pos(l, 1);
            dist(k, l) = std::max(std::hypot(dx, dy), cfg.min_distance_m);
            s.los_angle(k, l) = std::atan2(dy, dx);
            s.beta(k, l) = pathloss(dist(k, l), cfg, rng);

            const double kappa_db = cfg.kappa_mean_db + cfg.kappa_std_db * rng.gaussian();
            s.kappa(k, l) = std::max(std::pow(10.0, kappa_db / 10.0), 0.0);

            s.R(k, l) = gaussian_scattering_covariance(s.beta(k, l), s.los_angle(k, l),
                                                       cfg.angular_spread_deg, Nt);
            s.Q(k, l) = s.R(k, l) / (1.0 + s.kappa(k, l));
        }
    }

    // User-centric clusters: the cluster_size APs with the largest beta
    // (or smallest distance in geometric mode); ties broken by AP index
    s.serving_aps.assign(K, {});
    s.served_users.assign(L, {});
    s.serving.zeros(K, L);
    for (arma::uword k = 0; k < K; ++k)
    {
        std::vector<arma::uword> order(L);
        std::iota(order.begin(), order.end(), arma::uword(0));
        std::stable_sort(order.begin(), order.end(), [&](arma::uword a, arma::uword b) {
            return cfg.cluster_by_gain ? s.beta(k, a) > s.beta(k, b) : dist(k, a) < dist(k, b);
        });
        order.resize(cfg.cluster_size);
        std::sort(order.begin(), order.end());
        s.serving_aps[k] = order;
        for (arma::uword l : order)
        {
            s.serving(k, l) = 1;
            s.served_users[l].push_back(k);
        }
    }

    s.pilot_of = assign_pilots(K, cfg.tau_p, cfg.pilot_scheme, rng);
    s.copilots.assign(K, {});
    for (arma::uword k = 0; k < K; ++k)
        for (arma::uword i = 0; i < K; ++i)
            if (s.pilot_of(i) == s.pilot_of(k))
                s.copilots[k].push_back(i);

    return s;
}

ScenarioStats with_full_clusters(ScenarioStats stats)
{
    const arma::uword L = stats.cfg.n_aps, K = stats.cfg.n_users;
    stats.cfg.cluster_size = L;
    stats.serving.ones(K, L);
    stats.serving_aps.assign(K, {});
    stats.served_users.assign(L, {});
    for (arma::uword k = 0; k < K; ++k)
    {
        stats.serving_aps[k].resize(L);
        std::iota(stats.serving_aps[k].begin(), stats.serving_aps[k].end(), arma::uword(0));
    }
    for (arma::uword l = 0; l < L; ++l)
    {
        stats.served_users[l].resize(K);
        std::iota(stats.served_users[l].begin(), stats.served_users[l].end(), arma::uword(0));
    }
    return stats;
}

} // namespace cfmimo
