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

#include "doctest.h"

#include "cfmimo/channel.hpp"
#include "test_helpers.hpp"

using namespace cfmimo;
using cfmimo::testing::ManualScenario;
using cfmimo::testing::uniform_scenario;

TEST_CASE("draw_channel limits")
{
    SUBCASE("huge Rician factor collapses onto the LoS mean")
    {
        ManualScenario m = uniform_scenario(2, 2, 4, 1e-8, 1e9);
        const ChannelModel model(m.build());
        Rng rng(5);
        const ChannelRealization real = draw_channel(model, rng);
        for (arma::uword k = 0; k < 2; ++k)
            for (arma::uword l = 0; l < 2; ++l)
            {
                const double rel = arma::norm(real.h(k, l) - real.mu(k, l)) /
                                   arma::norm(real.mu(k, l));
                CHECK(rel < 1e-3);
            }
    }

    SUBCASE("kappa = 0 with R = beta I matches the analytic covariance")
    {
        const double beta = 0.7;
        ManualScenario m = uniform_scenario(1, 1, 4, beta, 0.0);
        m.r_override.set_size(1, 1);
        m.r_override(0, 0) = beta * arma::eye<arma::cx_mat>(4, 4);
        const ChannelModel model(m.build());

        Rng rng(17);
        const arma::uword n = 100000;
        arma::cx_mat acc(4, 4, arma::fill::zeros);
        for (arma::uword i = 0; i < n; ++i)
        {
            const ChannelRealization real = draw_channel(model, rng);
            acc += real.h(0, 0) * real.h(0, 0).t();
        }
        acc /= double(n);
        const arma::cx_mat expect = beta * arma::eye<arma::cx_mat>(4, 4);
        CHECK(arma::norm(acc - expect, "fro") / arma::norm(expect, "fro") < 0.03);
    }

    SUBCASE("phase-aligned sample mean converges to the LoS direction")
    {
        ManualScenario m = uniform_scenario(1, 1, 4, 1.0, 2.0);
        const ChannelModel model(m.build());
        Rng rng(23);
        const arma::uword n = 100000;
        arma::cx_vec acc(4, arma::fill::zeros);
        for (arma::uword i = 0; i < n; ++i)
        {
            const ChannelRealization real = draw_channel(model, rng);
            acc += real.h(0, 0) * std::exp(std::complex<double>(0.0, -real.theta(0, 0)));
        }
        acc /= double(n);
        // per-entry Monte-Carlo std: sqrt(Q_mm / n); Q = R / (1 + kappa)
        const double mc_std = std::sqrt(1.0 / 3.0 / double(n));
        const arma::cx_vec mu = model.mu_direction(0, 0);
        for (arma::uword i = 0; i < 4; ++i)
            CHECK(std::abs(acc(i) - mu(i)) < 4.0 * mc_std);
    }
}

TEST_CASE("uplink_training")
{
    SUBCASE("construction audit: phi equals the signal sum plus stored noise")
    {
        ManualScenario m = uniform_scenario(3, 4, 2, 1.0, 1.0);
        m.cfg.tau_p = 2; // users {0,2} and {1,3} share pilots
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        Rng rng(31);
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);

        const double amp = std::sqrt(stats.cfg.p_u * double(stats.cfg.tau_p));
        for (arma::uword t = 0; t < stats.cfg.tau_p; ++t)
            for (arma::uword l = 0; l < 3; ++l)
            {
                arma::cx_vec expect = obs.noise(t, l);
                for (arma::uword i = 0; i < 4; ++i)
                    if (stats.pilot_of(i) == t)
                        expect += amp * real.h(i, l);
                CHECK(arma::norm(obs.phi(t, l) - expect) == 0.0);
            }
    }

    SUBCASE("noiseless single-user pilot returns the scaled channel")
    {
        ManualScenario m = uniform_scenario(1, 1, 3, 1.0, 1.0);
        m.cfg.noise_psd_dbm_hz = -400.0; // effectively zero noise
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        Rng rng(37);
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const double amp = std::sqrt(stats.cfg.p_u * double(stats.cfg.tau_p));
        CHECK(arma::norm(obs.phi(0, 0) - amp * real.h(0, 0)) / arma::norm(obs.phi(0, 0)) < 1e-9);
    }

    SUBCASE("two co-pilot users with identical channels double the signal term")
    {
        ManualScenario m = uniform_scenario(1, 2, 3, 1.0, 1.0);
        m.cfg.tau_p = 1;
        m.cfg.noise_psd_dbm_hz = -400.0;
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        Rng rng(41);
        ChannelRealization real = draw_channel(model, rng);
        real.h(1, 0) = real.h(0, 0); // force identical channels
        const PilotObservations obs = uplink_training(real, model, rng);
        const double amp = std::sqrt(stats.cfg.p_u * double(stats.cfg.tau_p));
        CHECK(arma::norm(obs.phi(0, 0) - 2.0 * amp * real.h(0, 0)) / arma::norm(obs.phi(0, 0)) <
              1e-9);
    }

    SUBCASE("noise-only variance audit")
    {
        ManualScenario m = uniform_scenario(1, 1, 1, 1.0, 1.0);
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        const double sigma2 = stats.cfg.noise_variance();

        Rng rng(43);
        ChannelRealization real = draw_channel(model, rng);
        real.h(0, 0).zeros(); // silence the signal

        const arma::uword n = 100000;
        double acc = 0.0;
        for (arma::uword i = 0; i < n; ++i)
        {
            const PilotObservations obs = uplink_training(real, model, rng);
            acc += std::norm(obs.phi(0, 0)(0));
        }
        acc /= double(n);
        CHECK(std::abs(acc - sigma2) / sigma2 < 0.03);
    }
}

TEST_CASE("mmse_estimate")
{
    SUBCASE("perfect-CSI limit: vanishing noise and no contamination")
    {
        ManualScenario m = uniform_scenario(1, 1, 3, 1.0, 1.0);
        m.cfg.noise_psd_dbm_hz = -300.0;
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        Rng rng(47);
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const ChannelEstimate est = mmse_estimate(real, obs, model);
        CHECK(arma::norm(est.h_hat(0, 0) - real.h(0, 0)) / arma::norm(real.h(0, 0)) < 1e-6);
    }

    SUBCASE("deterministic channel: estimate equals the mean, zero error covariance")
    {
        ManualScenario m = uniform_scenario(1, 1, 3, 1.0, 1e12);
        const ScenarioStats stats = m.build();
        const ChannelModel model(stats);
        Rng rng(53);
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const ChannelEstimate est = mmse_estimate(real, obs, model);
        CHECK(arma::norm(est.h_hat(0, 0) - real.mu(0, 0)) / arma::norm(real.mu(0, 0)) < 1e-5);
        CHECK(arma::norm(model.error_cov(0, 0), "fro") < 1e-11 * arma::norm(stats.R(0, 0), "fro"));
    }

    // Contaminated two-user setting shared by the statistical subcases
    ManualScenario m = uniform_scenario(2, 2, 3, 1e-1, 1.5);
    m.cfg.tau_p = 1;
    m.cfg.noise_psd_dbm_hz = -10.0; // sigma^2 = 0.1 with 1 Hz bandwidth, 0 dB figure
    m.cfg.bandwidth_hz = 1.0;
    m.cfg.noise_figure_db = 0.0;
    const ScenarioStats stats = m.build();
    const ChannelModel model(stats);

    SUBCASE("psi and error-covariance definitions hold")
    {
        const double put = stats.cfg.p_u * double(stats.cfg.tau_p);
        for (arma::uword l = 0; l < 2; ++l)
        {
            arma::cx_mat psi_expect = put * (stats.Q(0, l) + stats.Q(1, l)) +
                                      stats.cfg.noise_variance() *
                                          arma::eye<arma::cx_mat>(3, 3);
            CHECK(arma::norm(model.psi(0, l) - psi_expect, "fro") <
                  1e-12 * arma::norm(psi_expect, "fro"));

            for (arma::uword k = 0; k < 2; ++k)
            {
                const arma::cx_mat expect =
                    stats.Q(k, l) -
                    put * stats.Q(k, l) * arma::inv_sympd(psi_expect) * stats.Q(k, l);
                CHECK(arma::norm(model.error_cov(k, l) - expect, "fro") <
                      1e-10 * arma::norm(stats.Q(k, l), "fro"));

                arma::vec ev = arma::eig_sym(model.error_cov(k, l));
                CHECK(ev.min() >
                      -1e-9 * arma::accu(arma::real(model.error_cov(k, l).diag())));
            }
        }
    }

    SUBCASE("sampled estimate/error covariances match the analytic forms")
    {
        Rng rng(59);
        const arma::uword n = 10000;
        arma::cx_mat cov_err(3, 3, arma::fill::zeros), cov_est(3, 3, arma::fill::zeros),
            cross(3, 3, arma::fill::zeros);
        for (arma::uword i = 0; i < n; ++i)
        {
            const ChannelRealization real = draw_channel(model, rng);
            const PilotObservations obs = uplink_training(real, model, rng);
            const ChannelEstimate est = mmse_estimate(real, obs, model);
            const arma::cx_vec err = real.h(0, 0) - est.h_hat(0, 0);
            const arma::cx_vec dev = est.h_hat(0, 0) - real.mu(0, 0);
            cov_err += err * err.t();
            cov_est += dev * dev.t();
            cross += est.h_hat(0, 0) * err.t();
        }
        cov_err /= double(n);
        cov_est /= double(n);
        cross /= double(n);

        CHECK(arma::norm(cov_err - model.error_cov(0, 0), "fro") /
                  arma::norm(model.error_cov(0, 0), "fro") <
              0.05);
        CHECK(arma::norm(cov_est - model.estimate_cov(0, 0), "fro") /
                  arma::norm(model.estimate_cov(0, 0), "fro") <
              0.05);

        // MMSE orthogonality: E[h_hat err^H] = 0, checked entrywise at 4
        // Monte-Carlo standard errors (entry scale ~ sqrt(E|hhat|^2 E|err|^2 / n))
        const double scale =
            std::sqrt(model.estimate_energy()(0, 0) *
                      arma::accu(arma::real(model.error_cov(0, 0).diag())) / 3.0 / double(n));
        for (arma::uword r = 0; r < 3; ++r)
            for (arma::uword c = 0; c < 3; ++c)
                CHECK(std::abs(cross(r, c)) < 4.0 * scale);
    }

    SUBCASE("adding a co-pilot user never shrinks the error covariance")
    {
        ManualScenario solo = m;
        solo.cfg.tau_p = 2;
        solo.pilots = arma::uvec{0, 1}; // orthogonal pilots
        const ChannelModel model_solo(solo.build());
        for (arma::uword k = 0; k < 2; ++k)
            for (arma::uword l = 0; l < 2; ++l)
            {
                const double contaminated =
                    arma::accu(arma::real(model.error_cov(k, l).diag()));
                const double clean =
                    arma::accu(arma::real(model_solo.error_cov(k, l).diag()));
                CHECK(contaminated >= clean - 1e-15);
            }
    }

    SUBCASE("near-singular Psi raises a diagnostic error")
    {
        ManualScenario bad = uniform_scenario(1, 1, 2, 1.0, 0.0);
        bad.cfg.noise_psd_dbm_hz = -174.0;
        bad.cfg.bandwidth_hz = 1e-30; // noise underflows, Psi loses rank
        bad.r_override.set_size(1, 1);
        bad.r_override(0, 0) = arma::cx_mat{{std::complex<double>(1.0, 0.0),
                                             std::complex<double>(1.0, 0.0)},
                                            {std::complex<double>(1.0, 0.0),
                                             std::complex<double>(1.0, 0.0)}};
        CHECK_THROWS_AS(ChannelModel(bad.build()), std::runtime_error);
    }
}
