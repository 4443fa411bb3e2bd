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

#include "cfmimo/evaluation.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfmimo
{

arma::vec effective_sinr_centralized(const HardeningStats& hs, const arma::vec& eps)
{
    const arma::uword K = hs.mean_gain_c.n_elem;
    if (eps.n_elem != K)
        throw std::invalid_argument("effective_sinr_centralized: eps size mismatch");

    arma::vec out(K);
    for (arma::uword k = 0; k < K; ++k)
    {
        const double signal = eps(k) * std::norm(hs.mean_gain_c(k));
        // The self-variance E|g|^2 - |E g|^2 is nonnegative for sample
        // statistics; group it with its mean term and clamp the rounding
        // residue so extreme-SNR cases do not lose the noise floor.
        const double self_var =
            std::max(hs.second_moment_c(k, k) - std::norm(hs.mean_gain_c(k)), 0.0);
        double denom = hs.noise_over_power + eps(k) * self_var;
        for (arma::uword kp = 0; kp < K; ++kp)
            if (kp != k)
                denom += eps(kp) * hs.second_moment_c(k, kp);
        if (!(denom > 0.0))
            throw std::runtime_error("inconsistent hardening statistics: non-positive SINR "
                                     "denominator (centralized)");
        out(k) = signal / denom;
    }
    return out;
}

arma::vec effective_sinr_distributed(const HardeningStats& hs, const arma::mat& eta,
                                     const std::vector<std::vector<arma::uword>>& serving_aps)
{
    const arma::uword K = hs.mean_gain_d.n_rows;
    if (eta.n_rows != K || eta.n_cols != hs.mean_gain_d.n_cols)
        throw std::invalid_argument("effective_sinr_distributed: eta size mismatch");

    arma::vec out(K);
    for (arma::uword k = 0; k < K; ++k)
    {
        std::complex<double> amp(0.0, 0.0);
        double self = 0.0; // sum_l eta (E|.|^2 - |E .|^2), nonnegative per AP
        for (arma::uword l : serving_aps[k])
        {
            amp += std::sqrt(eta(k, l)) * hs.mean_gain_d(k, l);
            self += eta(k, l) * std::max(hs.second_moment_d(k, k, l) -
                                             std::norm(hs.mean_gain_d(k, l)),
                                         0.0);
        }

        double denom = hs.noise_over_power + self;
        for (arma::uword kp = 0; kp < K; ++kp)
        {
            if (kp == k)
                continue;
            for (arma::uword l : serving_aps[kp])
                denom += eta(kp, l) * hs.second_moment_d(k, kp, l);
        }

        if (!(denom > 0.0))
            throw std::runtime_error("inconsistent hardening statistics: non-positive SINR "
                                     "denominator (distributed)");
        out(k) = std::norm(amp) / denom;
    }
    return out;
}

arma::vec sinr_centralized(const HardeningStats& hs, const PowerAllocation& alloc)
{
    if (alloc.mode != Mode::centralized || hs.distributed)
        throw std::invalid_argument("sinr_centralized: centralized stats and allocation required");
    return effective_sinr_centralized(hs, alloc.eps);
}

arma::vec sinr_distributed(const HardeningStats& hs, const PowerAllocation& alloc,
                           const ScenarioStats& stats)
{
    if (alloc.mode != Mode::distributed || !hs.distributed)
        throw std::invalid_argument("sinr_distributed: distributed stats and allocation required");
    return effective_sinr_distributed(hs, alloc.eta, stats.serving_aps);
}

arma::vec spectral_efficiency(const arma::vec& sinr, double overhead)
{
    return overhead * arma::log2(1.0 + sinr);
}

// Builds the direction set of one block under the given scheme. The MMSE
// regularization uses the model's per-AP error blocks and the pipeline's
// power coefficients, defaulting to equal power (the precoder/power-control
// coupling is broken at EPA unless a re-iteration supplies the solved
// allocation).
static DirectionSet make_directions(const PrecodingPipeline& pl, const PuncturedChannels& pch,
                                    const ChannelModel& model)
{
    const double sigma2 = model.stats().cfg.noise_variance();
    switch (pl.scheme)
    {
    case Scheme::mr:
        return mr_direction(pch, pl.mode);
    case Scheme::zf:
        return rzf_direction(pch, pl.mode, sigma2, false);
    case Scheme::rzf:
        return rzf_direction(pch, pl.mode, sigma2, true);
    default:
        break;
    }
    if (pl.mode == Mode::centralized)
    {
        const arma::vec eps = pl.mmse_eps.is_empty() ? epa(pl.mode, model.stats()).eps
                                                     : pl.mmse_eps;
        return mmse_direction_centralized(pch, model.error_reg_blocks(), eps,
                                          model.stats().cfg.p_u, sigma2);
    }
    const arma::mat eta =
        pl.mmse_eta.is_empty() ? epa(pl.mode, model.stats()).eta : pl.mmse_eta;
    return mmse_direction_distributed(pch, model.error_reg_blocks(), eta,
                                      model.stats().cfg.p_u, sigma2);
}

HardeningStats estimate_hardening(const PrecodingPipeline& pipeline, const ChannelModel& model,
                                  arma::uword n_blocks, Rng& rng, PowerSamples* samples)
{
    if (n_blocks < 1)
        throw std::invalid_argument("estimate_hardening: n_blocks must be >= 1");

    const ScenarioStats& s = model.stats();
    const arma::uword L = model.n_aps(), K = model.n_users(), Nt = model.n_antennas();
    const arma::uword M = model.total_antennas();
    const double sigma2 = s.cfg.noise_variance();
    const double p_s = s.cfg.system_power();
    const bool dist = (pipeline.mode == Mode::distributed);

    if (pipeline.enforcement != Enforcement::none && dist)
        throw std::invalid_argument("per-AP enforcement applies to centralized precoding only");
    if (pipeline.enforcement == Enforcement::power_scaling && pipeline.power_eps.n_elem != K)
        throw std::invalid_argument("PS enforcement requires power_eps");

    HardeningStats hs;
    hs.distributed = dist;
    hs.n_blocks = n_blocks;
    hs.noise_over_power = dist ? sigma2 / s.cfg.p_a : sigma2 / p_s;
    if (dist)
    {
        hs.mean_gain_d.zeros(K, L);
        hs.second_moment_d.zeros(K, K, L);
    }
    else
    {
        hs.mean_gain_c.zeros(K);
        hs.second_moment_c.zeros(K, K);
        hs.segment_power.zeros(K, L);
    }

    if (samples)
    {
        samples->per_ap_fraction.zeros(n_blocks, L);
        samples->alpha_g.ones(n_blocks);
    }

    arma::cx_mat h_true(dist ? Nt : M, K);

    for (arma::uword b = 0; b < n_blocks; ++b)
    {
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const ChannelEstimate est = mmse_estimate(real, obs, model);
        const PuncturedChannels pch = build_punctured(est);

        const DirectionSet dirs = make_directions(pipeline, pch, model);
        PrecoderSet prec =
            normalize(dirs, pipeline.normalization, s.serving, pipeline.direction_power);
        if (pipeline.enforcement == Enforcement::local_norm)
            prec = enforce_ln(prec, s.serving);

        double amp_scale = 1.0; // sqrt(alpha_g) folded into the gains under PS
        arma::vec pw;
        if (pipeline.enforcement == Enforcement::power_scaling)
        {
            PowerAllocation tmp;
            tmp.mode = Mode::centralized;
            tmp.eps = pipeline.power_eps;
            pw = per_ap_power(prec, tmp, p_s);
            const double alpha = std::min(1.0, s.cfg.p_a / pw.max());
            amp_scale = std::sqrt(alpha);
            if (samples)
            {
                samples->alpha_g(b) = alpha;
                samples->per_ap_fraction.row(b) = alpha * (pw / p_s).t();
            }
        }
        else if (samples && !dist)
        {
            PowerAllocation tmp;
            tmp.mode = Mode::centralized;
            tmp.eps = pipeline.power_eps.n_elem == K
                          ? pipeline.power_eps
                          : arma::vec(K, arma::fill::value(1.0 / static_cast<double>(K)));
            pw = per_ap_power(prec, tmp, p_s);
            samples->per_ap_fraction.row(b) = (pw / p_s).t();
        }

        if (dist)
        {
            for (arma::uword l = 0; l < L; ++l)
            {
                for (arma::uword k = 0; k < K; ++k)
                    h_true.col(k) = real.h(k, l);
                const arma::cx_mat g = arma::strans(h_true) * prec.w(l); // (k,k') = h_kl^T w_k'l
                hs.second_moment_d.slice(l) += arma::square(arma::abs(g));
                for (arma::uword k = 0; k < K; ++k)
                    hs.mean_gain_d(k, l) += g(k, k);
            }
        }
        else
        {
            for (arma::uword k = 0; k < K; ++k)
                h_true.col(k) = real.stacked(k);
            const arma::cx_mat g = amp_scale * (arma::strans(h_true) * prec.v);
            hs.second_moment_c += arma::square(arma::abs(g));
            hs.mean_gain_c += g.diag();
            // per-AP shape of the (LN-enforced, PS-unscaled) precoders
            for (arma::uword k = 0; k < K; ++k)
                for (arma::uword l = 0; l < L; ++l)
                {
                    const double sn = arma::norm(prec.segment(k, l));
                    hs.segment_power(k, l) += sn * sn;
                }
        }
    }

    const double inv = 1.0 / static_cast<double>(n_blocks);
    if (dist)
    {
        hs.mean_gain_d *= inv;
        hs.second_moment_d *= inv;
    }
    else
    {
        hs.mean_gain_c *= inv;
        hs.second_moment_c *= inv;
        hs.segment_power *= inv;
    }
    return hs;
}

DirectionPower estimate_direction_power(Scheme scheme, Mode mode, const ChannelModel& model,
                                        arma::uword n_blocks, Rng& rng)
{
    const arma::uword L = model.n_aps(), K = model.n_users();

    DirectionPower dp;
    dp.central.zeros(K);
    dp.local.zeros(K, L);

    for (arma::uword b = 0; b < n_blocks; ++b)
    {
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const ChannelEstimate est = mmse_estimate(real, obs, model);
        const PuncturedChannels pch = build_punctured(est);
        PrecodingPipeline pl;
        pl.scheme = scheme;
        pl.mode = mode;
        const DirectionSet dirs = make_directions(pl, pch, model);

        if (mode == Mode::centralized)
        {
            for (arma::uword k = 0; k < K; ++k)
            {
                const double n = arma::norm(dirs.central.col(k));
                dp.central(k) += n * n;
            }
        }
        else
        {
            for (arma::uword l = 0; l < L; ++l)
                for (arma::uword k = 0; k < K; ++k)
                {
                    const double n = arma::norm(dirs.local(l).col(k));
                    dp.local(k, l) += n * n;
                }
        }
    }
    dp.central /= static_cast<double>(n_blocks);
    dp.local /= static_cast<double>(n_blocks);
    return dp;
}

double percentile(const arma::vec& samples, double p)
{
    if (samples.is_empty())
        throw std::invalid_argument("percentile of empty sample set");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("percentile level must be in [0, 1]");

    arma::vec sorted = arma::sort(samples);
    const double idx = p * static_cast<double>(sorted.n_elem - 1);
    const arma::uword lo = static_cast<arma::uword>(std::floor(idx));
    const arma::uword hi = static_cast<arma::uword>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return (1.0 - frac) * sorted(lo) + frac * sorted(hi);
}

SEReport aggregate(const std::string& label, const std::vector<SetupResult>& results)
{
    SEReport rep;
    rep.label = label;

    std::vector<double> se_pool, sinr_pool, alpha_pool, frac_pool;
    std::vector<arma::uword> setup_pool, user_pool;

    for (arma::uword si = 0; si < results.size(); ++si)
    {
        const SetupResult& r = results[si];
        if (!r.ok)
        {
            ++rep.n_setups_failed;
            continue;
        }
        ++rep.n_setups_ok;
        for (arma::uword k = 0; k < r.se.n_elem; ++k)
        {
            se_pool.push_back(r.se(k));
            sinr_pool.push_back(r.sinr(k));
            setup_pool.push_back(si);
            user_pool.push_back(k);
        }
        alpha_pool.push_back(r.alpha_g_median);
        for (double f : r.per_ap_fraction_max)
            frac_pool.push_back(f);
    }

    if (se_pool.empty())
        throw std::runtime_error("aggregate: no successful setups for " + label);

    rep.se = arma::vec(se_pool);
    rep.sinr = arma::vec(sinr_pool);
    rep.setup_of = arma::uvec(setup_pool);
    rep.user_of = arma::uvec(user_pool);
    rep.alpha_g_medians = arma::vec(alpha_pool);
    rep.per_ap_fraction_max = arma::vec(frac_pool);

    rep.likely95 = percentile(rep.se, 0.05);
    rep.median = percentile(rep.se, 0.50);
    rep.p95 = percentile(rep.se, 0.95);
    rep.mean = arma::mean(rep.se);

    // Fixed grid covering the pooled range; CDF(x) = fraction of samples <= x
    const double top = std::max(1.0, std::ceil(rep.se.max() * 1.05));
    rep.cdf_grid = arma::linspace(0.0, top, 501);
    rep.cdf.set_size(rep.cdf_grid.n_elem);
    arma::vec sorted = arma::sort(rep.se);
    for (arma::uword i = 0; i < rep.cdf_grid.n_elem; ++i)
    {
        const double* ub =
            std::upper_bound(sorted.begin(), sorted.end(), rep.cdf_grid(i));
        rep.cdf(i) = static_cast<double>(ub - sorted.begin()) / static_cast<double>(sorted.n_elem);
    }
    return rep;
}

} // namespace cfmimo
