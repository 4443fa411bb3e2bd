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

#include "cfmimo/precoding.hpp"

#include <stdexcept>

namespace cfmimo
{

const char* to_string(Mode m)
{
    return m == Mode::distributed ? "dist" : "cent";
}

const char* to_string(Scheme s)
{
    switch (s)
    {
    case Scheme::mr:
        return "MR";
    case Scheme::zf:
        return "ZF";
    case Scheme::rzf:
        return "RZF";
    default:
        return "MMSE";
    }
}

static PuncturedChannels assemble(const arma::field<arma::cx_vec>& channels,
                                  const arma::umat& serving)
{
    const arma::uword K = channels.n_rows, L = channels.n_cols;
    const arma::uword Nt = channels(0, 0).n_elem;

    PuncturedChannels pch;
    pch.serving = serving;
    pch.n_antennas = Nt;
    pch.local.set_size(L);
    pch.global.zeros(L * Nt, K);

    for (arma::uword l = 0; l < L; ++l)
    {
        arma::cx_mat hl(Nt, K, arma::fill::zeros);
        for (arma::uword k = 0; k < K; ++k)
            if (serving(k, l) != 0)
                hl.col(k) = channels(k, l);
        pch.local(l) = hl;
        pch.global.rows(l * Nt, (l + 1) * Nt - 1) = hl;
    }
    return pch;
}

PuncturedChannels build_punctured(const ChannelEstimate& est)
{
    return assemble(est.h_hat, est.model->stats().serving);
}

PuncturedChannels build_punctured(const arma::field<arma::cx_vec>& channels,
                                  const arma::umat& serving)
{
    return assemble(channels, serving);
}

DirectionSet mr_direction(const PuncturedChannels& pch, Mode mode)
{
    DirectionSet d;
    d.mode = mode;
    d.scheme = Scheme::mr;
    if (mode == Mode::centralized)
    {
        d.central = arma::conj(pch.global);
    }
    else
    {
        d.local.set_size(pch.n_aps());
        for (arma::uword l = 0; l < pch.n_aps(); ++l)
            d.local(l) = arma::conj(pch.local(l));
    }
    return d;
}

// Smallest-to-largest eigenvalue ratio used to reject ZF on a singular Gram
static void check_invertible(const arma::cx_mat& gram, const char* what)
{
    arma::vec ev;
    if (!arma::eig_sym(ev, gram))
        throw std::runtime_error(std::string(what) + ": Gram eigendecomposition failed");
    if (ev.min() <= 0.0 || ev.max() / ev.min() > 1e12)
        throw std::runtime_error(std::string(what) +
                                 ": rank-deficient Gram matrix, zero-forcing infeasible");
}

DirectionSet rzf_direction(const PuncturedChannels& pch, Mode mode, double sigma2,
                           bool regularize)
{
    if (!regularize)
        sigma2 = 0.0;

    DirectionSet d;
    d.mode = mode;
    d.scheme = regularize ? Scheme::rzf : Scheme::zf;

    if (mode == Mode::centralized)
    {
        const arma::uword K = pch.n_users();
        // K x K dual of the transmit-side form: H^T H* = conj(H^H H)
        arma::cx_mat gram = arma::conj(pch.global.t() * pch.global);
        gram += sigma2 * arma::eye<arma::cx_mat>(K, K);
        gram = 0.5 * (gram + gram.t());
        if (!regularize)
            check_invertible(gram, "centralized ZF");
        d.central = arma::conj(pch.global) *
                    arma::solve(gram, arma::eye<arma::cx_mat>(K, K), arma::solve_opts::likely_sympd);
    }
    else
    {
        const arma::uword L = pch.n_aps(), Nt = pch.n_antennas;
        d.local.set_size(L);
        for (arma::uword l = 0; l < L; ++l)
        {
            // Transmit-side N_t x N_t form: (H_l* H_l^T + sigma2 I) d = H_l* e_k.
            // ZF additionally requires the served columns to be independent,
            // checked on the served-submatrix Gram (zero columns of the
            // punctured H_l would otherwise always flag singularity).
            arma::cx_mat a = arma::conj(pch.local(l)) * arma::strans(pch.local(l));
            a += sigma2 * arma::eye<arma::cx_mat>(Nt, Nt);
            a = 0.5 * (a + a.t());
            if (!regularize)
            {
                std::vector<arma::uword> served;
                for (arma::uword k = 0; k < pch.n_users(); ++k)
                    if (pch.serving(k, l) != 0)
                        served.push_back(k);
                if (served.empty())
                {
                    d.local(l).zeros(Nt, pch.n_users());
                    continue;
                }
                if (served.size() > Nt)
                    throw std::runtime_error("local ZF: more served users than antennas");
                arma::cx_mat hs(Nt, served.size());
                for (arma::uword j = 0; j < served.size(); ++j)
                    hs.col(j) = pch.local(l).col(served[j]);
                check_invertible(arma::conj(hs.t() * hs), "local ZF");
                arma::cx_mat sub =
                    arma::conj(hs) * arma::inv(arma::strans(hs) * arma::conj(hs));
                d.local(l).zeros(Nt, pch.n_users());
                for (arma::uword j = 0; j < served.size(); ++j)
                    d.local(l).col(served[j]) = sub.col(j);
                continue;
            }
            d.local(l) = arma::solve(a, arma::conj(pch.local(l)), arma::solve_opts::likely_sympd);
        }
    }
    return d;
}

DirectionSet mmse_direction_centralized(const PuncturedChannels& pch,
                                        const arma::field<arma::cx_mat>& error_reg,
                                        const arma::vec& eps, double p_u, double sigma2)
{
    const arma::uword L = pch.n_aps(), K = pch.n_users(), Nt = pch.n_antennas;
    if (eps.n_elem != K)
        throw std::invalid_argument("mmse_direction_centralized: eps must have one entry per user");

    // A = p_u H E H^H + C with C = blkdiag(p_u sum Theta + sigma2 I); the
    // resolvent is applied through C^{-1} and a K x K Woodbury correction:
    //   A^{-1} H = Z (I_K + p_u E H^H Z)^{-1},  Z = C^{-1} H
    arma::cx_mat z(L * Nt, K);
    for (arma::uword l = 0; l < L; ++l)
    {
        arma::cx_mat c = error_reg(l) + sigma2 * arma::eye<arma::cx_mat>(Nt, Nt);
        c = 0.5 * (c + c.t());
        z.rows(l * Nt, (l + 1) * Nt - 1) =
            arma::solve(c, pch.local(l), arma::solve_opts::likely_sympd);
    }

    const arma::cx_vec eps_cx(eps, arma::vec(K, arma::fill::zeros));
    arma::cx_mat s = arma::eye<arma::cx_mat>(K, K) +
                     p_u * arma::diagmat(eps_cx) * (pch.global.t() * z);

    DirectionSet d;
    d.mode = Mode::centralized;
    d.scheme = Scheme::mmse;
    // Z S^{-1} computed as (S^T \ Z^T)^T to keep a single solve
    d.central = arma::conj(arma::strans(arma::solve(arma::strans(s), arma::strans(z))));
    return d;
}

DirectionSet mmse_direction_distributed(const PuncturedChannels& pch,
                                        const arma::field<arma::cx_mat>& error_reg,
                                        const arma::mat& eta, double p_u, double sigma2)
{
    const arma::uword L = pch.n_aps(), K = pch.n_users(), Nt = pch.n_antennas;
    if (eta.n_rows != K || eta.n_cols != L)
        throw std::invalid_argument("mmse_direction_distributed: eta must be K x L");

    DirectionSet d;
    d.mode = Mode::distributed;
    d.scheme = Scheme::mmse;
    d.local.set_size(L);

    for (arma::uword l = 0; l < L; ++l)
    {
        const arma::cx_vec el(eta.col(l), arma::vec(K, arma::fill::zeros));
        arma::cx_mat a = p_u * pch.local(l) * arma::diagmat(el) * pch.local(l).t() +
                         error_reg(l) + sigma2 * arma::eye<arma::cx_mat>(Nt, Nt);
        a = 0.5 * (a + a.t());
        d.local(l) =
            arma::conj(arma::solve(a, pch.local(l), arma::solve_opts::likely_sympd));
    }
    return d;
}

} // namespace cfmimo
