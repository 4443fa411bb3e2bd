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

#include "cfmimo/power.hpp"

#include <stdexcept>

namespace cfmimo
{

const char* to_string(Enforcement e)
{
    switch (e)
    {
    case Enforcement::none:
        return "sum";
    case Enforcement::power_scaling:
        return "PS";
    default:
        return "LN";
    }
}

PrecoderSet normalize(const DirectionSet& dirs, NormalizationKind kind,
                      const arma::umat& serving, const DirectionPower* dp)
{
    if (kind == NormalizationKind::long_term && dp == nullptr)
        throw std::invalid_argument("long-term normalization requires direction-power statistics");

    PrecoderSet p;
    p.mode = dirs.mode;
    p.normalization = kind;
    p.enforcement = Enforcement::none;

    if (dirs.mode == Mode::centralized)
    {
        const arma::uword K = dirs.central.n_cols;
        p.n_t = dirs.central.n_rows / serving.n_cols;
        p.v = dirs.central;
        for (arma::uword k = 0; k < K; ++k)
        {
            const double c = (kind == NormalizationKind::short_term)
                                 ? arma::norm(dirs.central.col(k))
                                 : std::sqrt(dp->central(k));
            if (!(c > 0.0))
                throw std::runtime_error("zero precoding direction for served user " +
                                         std::to_string(k));
            p.v.col(k) /= c;
        }
    }
    else
    {
        const arma::uword L = dirs.local.n_elem;
        const arma::uword K = serving.n_rows;
        p.n_t = dirs.local(0).n_rows;
        p.w.set_size(L);
        for (arma::uword l = 0; l < L; ++l)
        {
            p.w(l) = dirs.local(l);
            for (arma::uword k = 0; k < K; ++k)
            {
                if (serving(k, l) == 0)
                {
                    p.w(l).col(k).zeros();
                    continue;
                }
                const double c = (kind == NormalizationKind::short_term)
                                     ? arma::norm(dirs.local(l).col(k))
                                     : std::sqrt(dp->local(k, l));
                if (!(c > 0.0))
                    throw std::runtime_error("zero local direction for served pair (user " +
                                             std::to_string(k) + ", AP " + std::to_string(l) +
                                             ")");
                p.w(l).col(k) /= c;
            }
        }
    }
    return p;
}

arma::vec per_ap_power(const PrecoderSet& prec, const PowerAllocation& alloc, double budget)
{
    const arma::uword L = prec.n_aps();
    arma::vec watts(L, arma::fill::zeros);

    if (prec.mode == Mode::centralized)
    {
        const arma::uword K = prec.n_users();
        if (alloc.eps.n_elem != K)
            throw std::invalid_argument("per_ap_power: eps size mismatch");
        for (arma::uword l = 0; l < L; ++l)
        {
            double acc = 0.0;
            for (arma::uword k = 0; k < K; ++k)
            {
                const double seg = arma::norm(prec.segment(k, l));
                acc += alloc.eps(k) * seg * seg;
            }
            watts(l) = budget * acc; // budget = P_s
        }
    }
    else
    {
        if (alloc.eta.n_rows != prec.n_users() || alloc.eta.n_cols != L)
            throw std::invalid_argument("per_ap_power: eta size mismatch");
        for (arma::uword l = 0; l < L; ++l)
            watts(l) = budget * arma::accu(alloc.eta.col(l)); // budget = p_a
    }
    return watts;
}

PowerAllocation enforce_ps(const PowerAllocation& alloc, const arma::vec& per_ap_watts,
                           double p_a)
{
    if (alloc.mode != Mode::centralized)
        throw std::invalid_argument("PS enforcement applies to centralized allocations only");

    PowerAllocation out = alloc;
    const double pmax = per_ap_watts.max();
    out.alpha_g = (pmax > p_a) ? p_a / pmax : 1.0;
    out.eps *= out.alpha_g;
    return out;
}

PrecoderSet enforce_ln(const PrecoderSet& prec, const arma::umat& serving)
{
    if (prec.mode != Mode::centralized)
        throw std::invalid_argument("LN enforcement applies to centralized precoders only");

    const arma::uword L = prec.n_aps(), K = prec.n_users(), Nt = prec.n_t;
    const double root_l = std::sqrt(static_cast<double>(L));

    PrecoderSet out = prec;
    out.enforcement = Enforcement::local_norm;
    for (arma::uword k = 0; k < K; ++k)
    {
        for (arma::uword l = 0; l < L; ++l)
        {
            arma::cx_vec seg = prec.v.col(k).subvec(l * Nt, (l + 1) * Nt - 1);
            if (serving(k, l) == 0)
            {
                // The per-AP normalization is defined on the serving
                // cluster; renormalizing the numerically tiny residues that
                // partial RZF/MMSE leave on non-serving APs would blast
                // noise-level directions at full power.
                out.v.col(k).subvec(l * Nt, (l + 1) * Nt - 1).zeros();
                continue;
            }
            const double n = arma::norm(seg);
            if (!(n > 0.0))
                throw std::runtime_error("LN undefined: zero precoder segment at serving AP " +
                                         std::to_string(l) + " for user " + std::to_string(k));
            out.v.col(k).subvec(l * Nt, (l + 1) * Nt - 1) = seg / (root_l * n);
        }
    }
    return out;
}

PowerAllocation epa(Mode mode, const ScenarioStats& stats)
{
    const arma::uword K = stats.cfg.n_users, L = stats.cfg.n_aps;

    PowerAllocation a;
    a.mode = mode;
    a.scheme = "EPA";
    if (mode == Mode::centralized)
    {
        a.eps = arma::vec(K, arma::fill::value(1.0 / static_cast<double>(K)));
    }
    else
    {
        a.eta.zeros(K, L);
        for (arma::uword l = 0; l < L; ++l)
        {
            const auto& users = stats.served_users[l];
            if (users.empty())
                continue; // silent AP
            for (arma::uword k : users)
                a.eta(k, l) = 1.0 / static_cast<double>(users.size());
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Max-min solvers
// ---------------------------------------------------------------------------

namespace
{

// Equal-SINR allocation at target t: (1+t) diag(a) x - t B x = t n0 * 1.
// Returns an empty vector when the system is unsolvable or the solution
// leaves the nonnegative orthant.
arma::vec balanced_allocation(const arma::vec& a, const arma::mat& b, double n0, double t)
{
    const arma::uword K = a.n_elem;
    arma::mat m = arma::diagmat((1.0 + t) * a) - t * b;
    arma::vec rhs(K, arma::fill::value(t * n0));
    arma::vec x;
    if (!arma::solve(x, m, rhs, arma::solve_opts::no_approx))
        return {};
    if (!x.is_finite() || x.min() < -1e-12)
        return {};
    x.transform([](double v) { return std::max(v, 0.0); });
    return x;
}

} // namespace

PowerAllocation maxmin_centralized(const HardeningStats& hs, const MaxminOptions& opt)
{
    const arma::uword K = hs.mean_gain_c.n_elem;
    const arma::vec a = arma::square(arma::abs(hs.mean_gain_c));
    const arma::mat& b = hs.second_moment_c;
    const double n0 = hs.noise_over_power;

    const bool per_ap = opt.per_ap_budget > 0.0;
    if (per_ap && hs.segment_power.n_rows != K)
        throw std::invalid_argument("per-AP max-min requires segment_power statistics");
    const arma::uword L = per_ap ? hs.segment_power.n_cols : 0;

    PowerAllocation out;
    out.mode = Mode::centralized;
    out.scheme = "MM";

    auto within_budgets = [&](const arma::vec& eps) {
        if (arma::accu(eps) > 1.0 + 1e-12)
            return false;
        if (!per_ap)
            return true;
        for (arma::uword l = 0; l < L; ++l)
        {
            double load = 0.0;
            for (arma::uword k = 0; k < K; ++k)
                load += eps(k) * hs.segment_power(k, l);
            if (load > opt.per_ap_budget + 1e-12)
                return false;
        }
        return true;
    };

    // Feasibility of a target: the balanced solution exists, is
    // nonnegative, fits the sum-power (and optional per-AP) budgets, and
    // verifiably achieves the target (a near-singular system can hand back
    // a nonnegative vector that solves nothing). The balanced allocation
    // grows componentwise with t, so feasibility is monotone and bisection
    // applies.
    auto feasible = [&](double t, arma::vec& eps) {
        eps = balanced_allocation(a, b, n0, t);
        if (eps.is_empty() || !within_budgets(eps))
            return false;
        try
        {
            return effective_sinr_centralized(hs, eps).min() >= t * (1.0 - 1e-6);
        }
        catch (const std::runtime_error&)
        {
            return false;
        }
    };

    const arma::vec eps_epa(K, arma::fill::value(1.0 / static_cast<double>(K)));
    const double t_epa = effective_sinr_centralized(hs, eps_epa).min();
    const bool epa_ok = within_budgets(eps_epa);

    double lo = 0.0;
    arma::vec eps_lo(K, arma::fill::zeros);
    arma::vec scratch;
    if (epa_ok && feasible(t_epa, scratch))
    {
        lo = t_epa;
        eps_lo = scratch;
    }

    // Interference-free upper bound: no user can exceed a_k / n0 even with
    // the whole budget and no interference
    double hi = arma::min(a) / n0;
    if (hi <= lo)
        hi = 2.0 * std::max(lo, 1e-30);

    if (feasible(hi, scratch))
    {
        eps_lo = scratch; // bound already attainable (degenerate instance)
        lo = hi;
    }
    else
    {
        for (int it = 0; it < opt.max_iter && (hi - lo) > opt.rel_tol * std::max(lo, 1e-30); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if (feasible(mid, scratch))
            {
                lo = mid;
                eps_lo = scratch;
            }
            else
            {
                hi = mid;
            }
        }
    }

    if (!(arma::accu(eps_lo) > 0.0))
    {
        out.eps = eps_epa; // nothing feasible beyond the origin: keep EPA
        out.scheme = "MM(EPA-fallback)";
        return out;
    }

    // Saturating the tightest budget shrinks the relative noise term, so
    // every SINR weakly improves; with mixed noise/interference users the
    // improvements differ, so keep the scaled allocation only while it
    // stays balanced (the unscaled solution is exactly equal-SINR).
    arma::vec eps_scaled = eps_lo;
    double c = 1.0 / arma::accu(eps_scaled);
    if (per_ap)
        for (arma::uword l = 0; l < L; ++l)
        {
            double load = 0.0;
            for (arma::uword k = 0; k < K; ++k)
                load += eps_scaled(k) * hs.segment_power(k, l);
            if (load > 1e-300)
                c = std::min(c, opt.per_ap_budget / load);
        }
    if (c > 1.0)
    {
        eps_scaled *= c;
        const arma::vec sinr = effective_sinr_centralized(hs, eps_scaled);
        const double spread_db = 10.0 * std::log10(sinr.max() / std::max(sinr.min(), 1e-300));
        if (sinr.min() >= effective_sinr_centralized(hs, eps_lo).min() && spread_db <= 0.02)
            eps_lo = eps_scaled;
    }

    out.eps = eps_lo;
    if (epa_ok)
    {
        const double t_mm = effective_sinr_centralized(hs, out.eps).min();
        // rounding tolerance: the balanced solution at t_epa evaluates back
        // to t_epa only up to the linear-solve precision, far inside the
        // 1e-9 dominance slack
        if (t_mm < t_epa - 1e-9 && t_mm < t_epa * (1.0 - 1e-12))
        {
            out.eps = eps_epa; // never return less fair than EPA
            out.scheme = "MM(EPA-fallback)";
        }
    }
    return out;
}

PowerAllocation maxmin_distributed(const HardeningStats& hs, const ScenarioStats& stats,
                                   const arma::mat& estimate_energy, const MaxminOptions& opt)
{
    const arma::uword K = stats.cfg.n_users, L = stats.cfg.n_aps;

    // Fixed per-user AP split proportional to the mean estimate energy
    arma::mat split(K, L, arma::fill::zeros);
    for (arma::uword k = 0; k < K; ++k)
    {
        double tot = 0.0;
        for (arma::uword l : stats.serving_aps[k])
            tot += estimate_energy(k, l);
        if (!(tot > 0.0))
            throw std::runtime_error("max-min split undefined: zero estimate energy for user " +
                                     std::to_string(k));
        for (arma::uword l : stats.serving_aps[k])
            split(k, l) = estimate_energy(k, l) / tot;
    }

    // Reduced coefficients of gamma_k(q) = q_k A_k / (sum q_k' B_kk' - q_k C_k + n0)
    arma::vec acoef(K, arma::fill::zeros), ccoef(K, arma::fill::zeros);
    arma::mat bcoef(K, K, arma::fill::zeros);
    for (arma::uword k = 0; k < K; ++k)
    {
        std::complex<double> num(0.0, 0.0);
        for (arma::uword l : stats.serving_aps[k])
            num += std::sqrt(split(k, l)) * hs.mean_gain_d(k, l);
        acoef(k) = std::norm(num);
        for (arma::uword l : stats.serving_aps[k])
            ccoef(k) += split(k, l) * std::norm(hs.mean_gain_d(k, l));
        for (arma::uword kp = 0; kp < K; ++kp)
            for (arma::uword l : stats.serving_aps[kp])
                bcoef(k, kp) += split(kp, l) * hs.second_moment_d(k, kp, l);
    }
    const double n0 = hs.noise_over_power;

    const PowerAllocation alloc_epa = epa(Mode::distributed, stats);
    const double t_epa =
        effective_sinr_distributed(hs, alloc_epa.eta, stats.serving_aps).min();

    // Balanced q at target t: q_k A_k = t (sum q B - q_k C_k + n0)
    auto balanced_q = [&](double t) -> arma::vec {
        arma::mat m = arma::diagmat(acoef + t * ccoef) - t * bcoef;
        arma::vec rhs(K, arma::fill::value(t * n0));
        arma::vec q;
        if (!arma::solve(q, m, rhs, arma::solve_opts::no_approx))
            return {};
        if (!q.is_finite() || q.min() < -1e-12)
            return {};
        q.transform([](double v) { return std::max(v, 0.0); });
        return q;
    };
    auto eta_from = [&](const arma::vec& q) {
        arma::mat eta(K, L, arma::fill::zeros);
        for (arma::uword k = 0; k < K; ++k)
            for (arma::uword l : stats.serving_aps[k])
                eta(k, l) = q(k) * split(k, l);
        return eta;
    };
    auto feasible = [&](double t, arma::vec& q) {
        q = balanced_q(t);
        if (q.is_empty())
            return false;
        for (arma::uword l = 0; l < L; ++l)
        {
            double load = 0.0;
            for (arma::uword k : stats.served_users[l])
                load += q(k) * split(k, l);
            if (load > 1.0 + 1e-12)
                return false;
        }
        try
        {
            // reject spurious solutions of a near-singular balance system
            return effective_sinr_distributed(hs, eta_from(q), stats.serving_aps).min() >=
                   t * (1.0 - 1e-6);
        }
        catch (const std::runtime_error&)
        {
            return false;
        }
    };

    PowerAllocation out;
    out.mode = Mode::distributed;
    out.scheme = "MM";

    double lo = t_epa;
    arma::vec q_lo;
    if (!feasible(lo, q_lo))
    {
        // The rank-1 family cannot reach the EPA operating point
        out = alloc_epa;
        out.scheme = "MM(EPA-fallback)";
        return out;
    }

    double hi = arma::min(acoef) / n0;
    if (hi <= lo)
        hi = 2.0 * std::max(lo, 1e-30);

    arma::vec scratch;
    if (feasible(hi, scratch))
    {
        q_lo = scratch;
        lo = hi;
    }
    else
    {
        for (int it = 0; it < opt.max_iter && (hi - lo) > opt.rel_tol * std::max(lo, 1e-30); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            if (feasible(mid, scratch))
            {
                lo = mid;
                q_lo = scratch;
            }
            else
            {
                hi = mid;
            }
        }
    }

    // Scale the whole q vector up to the tightest per-AP budget; uniform
    // scaling leaves the balance intact and only dilutes the noise term
    double c = arma::datum::inf;
    for (arma::uword l = 0; l < L; ++l)
    {
        double load = 0.0;
        for (arma::uword k : stats.served_users[l])
            load += q_lo(k) * split(k, l);
        if (load > 1e-300)
            c = std::min(c, 1.0 / load);
    }
    if (std::isfinite(c) && c > 1.0)
        q_lo *= c;

    out.eta = eta_from(q_lo);

    const double t_mm = effective_sinr_distributed(hs, out.eta, stats.serving_aps).min();
    if (t_mm < t_epa - 1e-9 && t_mm < t_epa * (1.0 - 1e-12))
    {
        out = alloc_epa;
        out.scheme = "MM(EPA-fallback)";
    }
    return out;
}

} // namespace cfmimo
