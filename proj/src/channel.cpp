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

#include "cfmimo/channel.hpp"

#include <stdexcept>

namespace cfmimo
{

// Eigen-based square root; Cholesky would reject the PSD-singular Q that
// arises at small angular spread
static arma::cx_mat psd_sqrt(const arma::cx_mat& q, double trace_scale)
{
    arma::vec ev;
    arma::cx_mat evec;
    if (!arma::eig_sym(ev, evec, q))
        throw std::runtime_error("covariance factorization failed");
    if (ev.min() < -1e-10 * std::max(trace_scale, 1e-300))
        throw std::runtime_error("channel covariance is not positive semi-definite");
    ev.transform([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
    return evec * arma::diagmat(ev);
}

ChannelModel::ChannelModel(ScenarioStats stats) : stats_(std::move(stats))
{
    const arma::uword L = stats_.cfg.n_aps, K = stats_.cfg.n_users, Nt = stats_.cfg.n_antennas;
    const arma::uword tp = stats_.cfg.tau_p;
    const double put = stats_.cfg.p_u * static_cast<double>(tp);
    const double sigma2 = stats_.cfg.noise_variance();

    q_factor_.set_size(K, L);
    mu_dir_.set_size(K, L);
    psi_.set_size(tp, L);
    est_filter_.set_size(K, L);
    theta_.set_size(K, L);
    est_cov_.set_size(K, L);
    error_reg_.set_size(L);
    est_energy_.set_size(K, L);

    for (arma::uword t = 0; t < tp; ++t)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            arma::cx_mat psi(Nt, Nt, arma::fill::zeros);
            for (arma::uword i = 0; i < K; ++i)
                if (stats_.pilot_of(i) == t)
                    psi += put * stats_.Q(i, l);
            psi += sigma2 * arma::eye<arma::cx_mat>(Nt, Nt);

            arma::vec ev;
            arma::cx_mat evec;
            if (!arma::eig_sym(ev, evec, psi))
                throw std::runtime_error("Psi eigendecomposition failed");
            if (ev.min() <= 0.0 || ev.max() / ev.min() > 1e12)
                throw std::runtime_error("Psi is near-singular (condition number > 1e12)");
            psi_(t, l) = psi;
        }
    }

    for (arma::uword k = 0; k < K; ++k)
    {
        const arma::uword t = stats_.pilot_of(k);
        for (arma::uword l = 0; l < L; ++l)
        {
            const arma::cx_mat& q = stats_.Q(k, l);
            q_factor_(k, l) = psd_sqrt(q, std::abs(arma::trace(q)));

            const double los_power = stats_.beta(k, l) * stats_.kappa(k, l) / (1.0 + stats_.kappa(k, l));
            mu_dir_(k, l) = std::sqrt(los_power) * steering_vector(stats_.los_angle(k, l), Nt);

            // W = sqrt(p_u tau_p) Q Psi^{-1} = sqrt(p_u tau_p) (Psi^{-1} Q)^H
            // since both Q and Psi are Hermitian
            arma::cx_mat psi_inv_q = arma::solve(psi_(t, l), q, arma::solve_opts::likely_sympd);
            est_filter_(k, l) = std::sqrt(put) * psi_inv_q.t();

            est_cov_(k, l) = std::sqrt(put) * est_filter_(k, l) * q;
            est_cov_(k, l) = 0.5 * (est_cov_(k, l) + est_cov_(k, l).t());

            theta_(k, l) = q - est_cov_(k, l);
            theta_(k, l) = 0.5 * (theta_(k, l) + theta_(k, l).t());

            est_energy_(k, l) = arma::norm(mu_dir_(k, l)) * arma::norm(mu_dir_(k, l)) +
                                arma::accu(arma::real(est_cov_(k, l).diag()));
        }
    }

    for (arma::uword l = 0; l < L; ++l)
    {
        arma::cx_mat acc(Nt, Nt, arma::fill::zeros);
        for (arma::uword k : stats_.served_users[l])
            acc += theta_(k, l);
        error_reg_(l) = stats_.cfg.p_u * acc;
    }
}

arma::cx_vec ChannelRealization::stacked(arma::uword k) const
{
    const arma::uword L = h.n_cols, Nt = h(k, 0).n_elem;
    arma::cx_vec out(L * Nt);
    for (arma::uword l = 0; l < L; ++l)
        out.subvec(l * Nt, (l + 1) * Nt - 1) = h(k, l);
    return out;
}

arma::cx_vec ChannelEstimate::stacked(arma::uword k) const
{
    const arma::uword L = h_hat.n_cols, Nt = h_hat(k, 0).n_elem;
    arma::cx_vec out(L * Nt);
    for (arma::uword l = 0; l < L; ++l)
        out.subvec(l * Nt, (l + 1) * Nt - 1) = h_hat(k, l);
    return out;
}

ChannelRealization draw_channel(const ChannelModel& model, Rng& rng)
{
    const arma::uword L = model.n_aps(), K = model.n_users(), Nt = model.n_antennas();

    ChannelRealization real;
    real.theta.set_size(K, L);
    real.mu.set_size(K, L);
    real.h.set_size(K, L);

    for (arma::uword k = 0; k < K; ++k)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            real.theta(k, l) = rng.uniform(0.0, 2.0 * arma::datum::pi);
            const std::complex<double> phase =
                std::exp(std::complex<double>(0.0, real.theta(k, l)));

            arma::cx_vec z(Nt);
            for (arma::uword m = 0; m < Nt; ++m)
                z(m) = rng.cgaussian(1.0);

            real.mu(k, l) = phase * model.mu_direction(k, l);
            real.h(k, l) = real.mu(k, l) + model.q_factor(k, l) * z;
        }
    }
    return real;
}

PilotObservations uplink_training(const ChannelRealization& real, const ChannelModel& model,
                                  Rng& rng)
{
    const ScenarioStats& s = model.stats();
    const arma::uword L = model.n_aps(), K = model.n_users(), Nt = model.n_antennas();
    const double amp = std::sqrt(s.cfg.p_u * static_cast<double>(s.cfg.tau_p));
    const double sigma2 = s.cfg.noise_variance();

    PilotObservations obs;
    obs.phi.set_size(s.cfg.tau_p, L);
    obs.noise.set_size(s.cfg.tau_p, L);

    for (arma::uword t = 0; t < s.cfg.tau_p; ++t)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            arma::cx_vec n(Nt);
            for (arma::uword m = 0; m < Nt; ++m)
                n(m) = rng.cgaussian(sigma2);

            arma::cx_vec acc = n;
            for (arma::uword i = 0; i < K; ++i)
                if (s.pilot_of(i) == t)
                    acc += amp * real.h(i, l);

            obs.noise(t, l) = n;
            obs.phi(t, l) = acc;
        }
    }
    return obs;
}

ChannelEstimate mmse_estimate(const ChannelRealization& real, const PilotObservations& obs,
                              const ChannelModel& model)
{
    const ScenarioStats& s = model.stats();
    const arma::uword L = model.n_aps(), K = model.n_users();
    const double amp = std::sqrt(s.cfg.p_u * static_cast<double>(s.cfg.tau_p));

    ChannelEstimate est;
    est.model = &model;
    est.h_hat.set_size(K, L);

    // E[phi_tl] given the block phases, shared by co-pilot users
    arma::field<arma::cx_vec> phi_mean(s.cfg.tau_p, L);
    for (arma::uword t = 0; t < s.cfg.tau_p; ++t)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            arma::cx_vec acc(model.n_antennas(), arma::fill::zeros);
            for (arma::uword i = 0; i < K; ++i)
                if (s.pilot_of(i) == t)
                    acc += amp * real.mu(i, l);
            phi_mean(t, l) = acc;
        }
    }

    for (arma::uword k = 0; k < K; ++k)
    {
        const arma::uword t = s.pilot_of(k);
        for (arma::uword l = 0; l < L; ++l)
            est.h_hat(k, l) =
                real.mu(k, l) + model.estimator(k, l) * (obs.phi(t, l) - phi_mean(t, l));
    }
    return est;
}

} // namespace cfmimo
