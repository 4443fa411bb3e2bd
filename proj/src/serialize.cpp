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

#include "cfmimo/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace cfmimo
{

using nlohmann::json;

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

static json complex_to_json(const std::complex<double>& z)
{
    return json::array({z.real(), z.imag()});
}

static json cx_mat_to_json(const arma::cx_mat& m)
{
    json rows = json::array();
    for (arma::uword r = 0; r < m.n_rows; ++r)
    {
        json row = json::array();
        for (arma::uword c = 0; c < m.n_cols; ++c)
            row.push_back(complex_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

static json cx_vec_to_json(const arma::cx_vec& v)
{
    json out = json::array();
    for (arma::uword i = 0; i < v.n_elem; ++i)
        out.push_back(complex_to_json(v(i)));
    return out;
}

static json mat_to_json(const arma::mat& m)
{
    json rows = json::array();
    for (arma::uword r = 0; r < m.n_rows; ++r)
    {
        json row = json::array();
        for (arma::uword c = 0; c < m.n_cols; ++c)
            row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

static json config_to_json(const ScenarioConfig& cfg)
{
    json j;
    j["n_aps"] = cfg.n_aps;
    j["n_antennas"] = cfg.n_antennas;
    j["n_users"] = cfg.n_users;
    j["cluster_size"] = cfg.cluster_size;
    j["radius_m"] = cfg.radius_m;
    j["tau_p"] = cfg.tau_p;
    j["tau_c"] = cfg.tau_c;
    j["p_u"] = cfg.p_u;
    j["p_a"] = cfg.p_a;
    j["noise_psd_dbm_hz"] = cfg.noise_psd_dbm_hz;
    j["noise_figure_db"] = cfg.noise_figure_db;
    j["bandwidth_hz"] = cfg.bandwidth_hz;
    j["carrier_mhz"] = cfg.carrier_mhz;
    j["ap_height_m"] = cfg.ap_height_m;
    j["user_height_m"] = cfg.user_height_m;
    j["d0_m"] = cfg.d0_m;
    j["d1_m"] = cfg.d1_m;
    j["shadowing_std_db"] = cfg.shadowing_std_db;
    j["shadowing"] = cfg.shadowing;
    j["min_distance_m"] = cfg.min_distance_m;
    j["angular_spread_deg"] = cfg.angular_spread_deg;
    j["kappa_mean_db"] = cfg.kappa_mean_db;
    j["kappa_std_db"] = cfg.kappa_std_db;
    j["cluster_by_gain"] = cfg.cluster_by_gain;
    j["pilot_scheme"] = cfg.pilot_scheme == PilotScheme::round_robin ? "round_robin" : "random";
    j["seed"] = cfg.seed;
    return j;
}

std::string scenario_to_text(const ScenarioStats& stats)
{
    json j;
    j["config"] = config_to_json(stats.cfg);
    j["ap_pos"] = mat_to_json(stats.ap_pos);
    j["user_pos"] = mat_to_json(stats.user_pos);
    j["beta"] = mat_to_json(stats.beta);
    j["kappa"] = mat_to_json(stats.kappa);
    j["los_angle"] = mat_to_json(stats.los_angle);

    json rj = json::array();
    for (arma::uword k = 0; k < stats.cfg.n_users; ++k)
    {
        json row = json::array();
        for (arma::uword l = 0; l < stats.cfg.n_aps; ++l)
            row.push_back(cx_mat_to_json(stats.R(k, l)));
        rj.push_back(row);
    }
    j["R"] = rj;

    json clusters = json::array();
    for (const auto& aps : stats.serving_aps)
        clusters.push_back(aps);
    j["serving_aps"] = clusters;
    j["pilot_of"] = std::vector<arma::uword>(stats.pilot_of.begin(), stats.pilot_of.end());

    return j.dump(1);
}

void write_scenario_fixture(const std::string& path, const ScenarioStats& stats)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << scenario_to_text(stats) << '\n';
}

std::string block_to_text(const ChannelRealization& real, const ChannelEstimate& est)
{
    const arma::uword K = real.h.n_rows, L = real.h.n_cols;

    json j;
    j["theta"] = mat_to_json(real.theta);
    json h = json::array(), hh = json::array(), th = json::array();
    for (arma::uword k = 0; k < K; ++k)
    {
        json hrow = json::array(), hhrow = json::array(), throw_ = json::array();
        for (arma::uword l = 0; l < L; ++l)
        {
            hrow.push_back(cx_vec_to_json(real.h(k, l)));
            hhrow.push_back(cx_vec_to_json(est.h_hat(k, l)));
            throw_.push_back(cx_mat_to_json(est.error_cov(k, l)));
        }
        h.push_back(hrow);
        hh.push_back(hhrow);
        th.push_back(throw_);
    }
    j["h"] = h;
    j["h_hat"] = hh;
    j["theta_error_cov"] = th;
    return j.dump(1);
}

void write_block_fixture(const std::string& path, const ChannelRealization& real,
                         const ChannelEstimate& est)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << block_to_text(real, est) << '\n';
}

void write_report_csv(const std::string& path, const SEReport& report)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << "scheme,setup,user,sinr,se\n";
    for (arma::uword i = 0; i < report.se.n_elem; ++i)
        out << report.label << ',' << report.setup_of(i) << ',' << report.user_of(i) << ','
            << format_number(report.sinr(i)) << ',' << format_number(report.se(i)) << '\n';
}

std::string report_summary_text(const SEReport& report)
{
    json j;
    j["scheme"] = report.label;
    j["samples"] = report.se.n_elem;
    j["setups_ok"] = report.n_setups_ok;
    j["setups_failed"] = report.n_setups_failed;
    j["se_likely95"] = report.likely95;
    j["se_median"] = report.median;
    j["se_p95"] = report.p95;
    j["se_mean"] = report.mean;
    if (!report.alpha_g_medians.is_empty())
    {
        j["alpha_g_median"] = percentile(report.alpha_g_medians, 0.5);
        j["alpha_g_min"] = report.alpha_g_medians.min();
    }
    if (!report.per_ap_fraction_max.is_empty())
    {
        j["per_ap_fraction_max"] = report.per_ap_fraction_max.max();
        j["per_ap_fraction_max_median"] = percentile(report.per_ap_fraction_max, 0.5);

        // histogram of the per-realization peak per-AP power fractions
        const double top = report.per_ap_fraction_max.max();
        const arma::uword n_bins = 20;
        std::vector<double> edges(n_bins + 1);
        std::vector<arma::uword> counts(n_bins, 0);
        for (arma::uword i = 0; i <= n_bins; ++i)
            edges[i] = top * static_cast<double>(i) / static_cast<double>(n_bins);
        for (double v : report.per_ap_fraction_max)
        {
            arma::uword bin = (top > 0.0)
                                  ? std::min<arma::uword>(
                                        static_cast<arma::uword>(v / top * n_bins), n_bins - 1)
                                  : 0;
            counts[bin]++;
        }
        j["per_ap_power_hist_edges"] = edges;
        j["per_ap_power_hist_counts"] = counts;
    }
    return j.dump(1);
}

} // namespace cfmimo
