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

#include "cfmimo/harness.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cfmimo/serialize.hpp"

namespace cfmimo
{

namespace fs = std::filesystem;

const char* to_string(PowerControl pc)
{
    return pc == PowerControl::epa ? "EPA" : "MM";
}

std::string Combination::label() const
{
    std::string s = std::string(to_string(mode)) + "-" + to_string(scheme);
    if (mode == Mode::centralized)
        s += std::string("-") + to_string(enforcement);
    s += std::string("-") + to_string(power_control);
    return s;
}

std::vector<Combination> ExperimentPlan::combinations() const
{
    std::vector<Combination> out;
    for (Scheme s : schemes)
    {
        for (Mode m : modes)
        {
            for (PowerControl pc : power_controls)
            {
                if (m == Mode::distributed)
                {
                    out.push_back({s, m, pc, Enforcement::none});
                    continue;
                }
                for (Enforcement e : enforcements)
                    out.push_back({s, m, pc, e});
            }
        }
    }
    return out;
}

void ExperimentPlan::validate() const
{
    scenario.validate();
    if (combinations().empty())
        throw std::invalid_argument("no runs requested (empty scheme/mode/power-control sweep)");
    if (n_setups < 1 || n_blocks < 1)
        throw std::invalid_argument("n_setups and n_blocks must be >= 1");
    if (out_dir.empty())
        throw std::invalid_argument("output directory must not be empty");
}

std::uint64_t experiment_seed(std::uint64_t master, const std::string& label, arma::uword setup,
                              arma::uword pass)
{
    return derive_seed(master, label, setup, pass);
}

// ---------------------------------------------------------------------------
// Minimal TOML-subset reader: [sections], key = value with numbers, bools,
// quoted strings and flat arrays thereof. Enough for declarative run
// configs while keeping the file format obvious.
// ---------------------------------------------------------------------------

namespace
{

struct TomlValue
{
    enum class Kind
    {
        number,
        boolean,
        string,
        array
    } kind = Kind::number;
    double num = 0.0;
    bool flag = false;
    std::string str;
    std::vector<std::string> items; // array entries kept as raw strings
};

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

TomlValue parse_scalar(const std::string& raw, int line_no)
{
    TomlValue v;
    if (raw == "true" || raw == "false")
    {
        v.kind = TomlValue::Kind::boolean;
        v.flag = (raw == "true");
        return v;
    }
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    {
        v.kind = TomlValue::Kind::string;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    char* end = nullptr;
    v.num = std::strtod(raw.c_str(), &end);
    if (end == nullptr || *end != '\0' || raw.empty())
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": cannot parse value '" + raw + "'");
    v.kind = TomlValue::Kind::number;
    return v;
}

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text)
{
    TomlTable table;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");

        TomlValue v;
        if (!raw.empty() && raw.front() == '[')
        {
            if (raw.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": malformed array");
            v.kind = TomlValue::Kind::array;
            std::string body = raw.substr(1, raw.size() - 2);
            std::string item;
            std::istringstream items(body);
            while (std::getline(items, item, ','))
            {
                item = trim(item);
                if (item.empty())
                    continue;
                if (item.size() >= 2 && item.front() == '"' && item.back() == '"')
                    item = item.substr(1, item.size() - 2);
                v.items.push_back(item);
            }
        }
        else
        {
            v = parse_scalar(raw, line_no);
        }
        table[section][key] = v;
    }
    return table;
}

double as_number(const TomlValue& v, const std::string& key)
{
    if (v.kind != TomlValue::Kind::number)
        throw std::invalid_argument("config key '" + key + "' must be a number");
    return v.num;
}

bool as_bool(const TomlValue& v, const std::string& key)
{
    if (v.kind == TomlValue::Kind::boolean)
        return v.flag;
    throw std::invalid_argument("config key '" + key + "' must be true or false");
}

std::string as_string(const TomlValue& v, const std::string& key)
{
    if (v.kind != TomlValue::Kind::string)
        throw std::invalid_argument("config key '" + key + "' must be a quoted string");
    return v.str;
}

} // namespace

Scheme scheme_from_string(const std::string& s)
{
    if (s == "MR")
        return Scheme::mr;
    if (s == "ZF")
        return Scheme::zf;
    if (s == "RZF")
        return Scheme::rzf;
    if (s == "MMSE")
        return Scheme::mmse;
    throw std::invalid_argument("unknown scheme '" + s + "' (use MR, ZF, RZF or MMSE)");
}

Mode mode_from_string(const std::string& s)
{
    if (s == "dist")
        return Mode::distributed;
    if (s == "cent")
        return Mode::centralized;
    throw std::invalid_argument("unknown mode '" + s + "' (use dist or cent)");
}

PowerControl power_control_from_string(const std::string& s)
{
    if (s == "EPA")
        return PowerControl::epa;
    if (s == "MM")
        return PowerControl::maxmin;
    throw std::invalid_argument("unknown power control '" + s + "' (use EPA or MM)");
}

Enforcement enforcement_from_string(const std::string& s)
{
    if (s == "none" || s == "sum")
        return Enforcement::none;
    if (s == "PS")
        return Enforcement::power_scaling;
    if (s == "LN")
        return Enforcement::local_norm;
    throw std::invalid_argument("unknown enforcement '" + s + "' (use none, PS or LN)");
}

namespace
{

void apply_scenario_key(ScenarioConfig& cfg, const std::string& key, const TomlValue& v)
{
    if (key == "n_aps")
        cfg.n_aps = static_cast<arma::uword>(as_number(v, key));
    else if (key == "n_antennas")
        cfg.n_antennas = static_cast<arma::uword>(as_number(v, key));
    else if (key == "n_users")
        cfg.n_users = static_cast<arma::uword>(as_number(v, key));
    else if (key == "cluster_size")
        cfg.cluster_size = static_cast<arma::uword>(as_number(v, key));
    else if (key == "radius_m")
        cfg.radius_m = as_number(v, key);
    else if (key == "tau_p")
        cfg.tau_p = static_cast<arma::uword>(as_number(v, key));
    else if (key == "tau_c")
        cfg.tau_c = static_cast<arma::uword>(as_number(v, key));
    else if (key == "p_u")
        cfg.p_u = as_number(v, key);
    else if (key == "p_a")
        cfg.p_a = as_number(v, key);
    else if (key == "noise_psd_dbm_hz")
        cfg.noise_psd_dbm_hz = as_number(v, key);
    else if (key == "noise_figure_db")
        cfg.noise_figure_db = as_number(v, key);
    else if (key == "bandwidth_hz")
        cfg.bandwidth_hz = as_number(v, key);
    else if (key == "carrier_mhz")
        cfg.carrier_mhz = as_number(v, key);
    else if (key == "ap_height_m")
        cfg.ap_height_m = as_number(v, key);
    else if (key == "user_height_m")
        cfg.user_height_m = as_number(v, key);
    else if (key == "d0_m")
        cfg.d0_m = as_number(v, key);
    else if (key == "d1_m")
        cfg.d1_m = as_number(v, key);
    else if (key == "shadowing_std_db")
        cfg.shadowing_std_db = as_number(v, key);
    else if (key == "shadowing")
        cfg.shadowing = as_bool(v, key);
    else if (key == "min_distance_m")
        cfg.min_distance_m = as_number(v, key);
    else if (key == "angular_spread_deg")
        cfg.angular_spread_deg = as_number(v, key);
    else if (key == "kappa_mean_db")
        cfg.kappa_mean_db = as_number(v, key);
    else if (key == "kappa_std_db")
        cfg.kappa_std_db = as_number(v, key);
    else if (key == "cluster_by_gain")
        cfg.cluster_by_gain = as_bool(v, key);
    else if (key == "pilot_scheme")
    {
        const std::string s = as_string(v, key);
        if (s == "round_robin")
            cfg.pilot_scheme = PilotScheme::round_robin;
        else if (s == "random")
            cfg.pilot_scheme = PilotScheme::random;
        else
            throw std::invalid_argument("unknown pilot_scheme '" + s + "'");
    }
    else
        throw std::invalid_argument("unknown [scenario] key '" + key + "'");
}

void apply_run_key(ExperimentPlan& plan, const std::string& key, const TomlValue& v)
{
    if (key == "setups")
        plan.n_setups = static_cast<arma::uword>(as_number(v, key));
    else if (key == "blocks")
        plan.n_blocks = static_cast<arma::uword>(as_number(v, key));
    else if (key == "seed")
        plan.master_seed = static_cast<std::uint64_t>(as_number(v, key));
    else if (key == "out")
        plan.out_dir = as_string(v, key);
    else if (key == "include_overhead")
        plan.include_overhead = as_bool(v, key);
    else if (key == "centralized_full")
        plan.centralized_full = as_bool(v, key);
    else if (key == "mmse_reiterate")
        plan.mmse_reiterate = as_bool(v, key);
    else if (key == "fig1")
        plan.fig1 = as_bool(v, key);
    else if (key == "dump_fixtures")
        plan.dump_fixtures = as_bool(v, key);
    else if (key == "jobs")
        plan.jobs = static_cast<unsigned>(as_number(v, key));
    else if (key == "schemes")
    {
        plan.schemes.clear();
        for (const auto& s : v.items)
            plan.schemes.push_back(scheme_from_string(s));
    }
    else if (key == "modes")
    {
        plan.modes.clear();
        for (const auto& s : v.items)
            plan.modes.push_back(mode_from_string(s));
    }
    else if (key == "power_control")
    {
        plan.power_controls.clear();
        for (const auto& s : v.items)
            plan.power_controls.push_back(power_control_from_string(s));
    }
    else if (key == "enforcement")
    {
        plan.enforcements.clear();
        for (const auto& s : v.items)
            plan.enforcements.push_back(enforcement_from_string(s));
    }
    else
        throw std::invalid_argument("unknown [run] key '" + key + "'");
}

// Index-sharded worker pool; the body must not throw
template <typename F> void parallel_for(arma::uword n, unsigned jobs, F&& body)
{
    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, n > 0 ? static_cast<unsigned>(n) : 1u);
    if (jobs <= 1)
    {
        for (arma::uword i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<arma::uword> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&]() {
            for (arma::uword i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                body(i);
        });
    for (auto& th : pool)
        th.join();
}

} // namespace

ExperimentPlan parse_plan(const std::string& toml_text)
{
    ExperimentPlan plan;
    const TomlTable table = parse_toml(toml_text);
    for (const auto& [section, entries] : table)
    {
        if (section == "scenario")
        {
            for (const auto& [key, value] : entries)
                apply_scenario_key(plan.scenario, key, value);
        }
        else if (section == "run")
        {
            for (const auto& [key, value] : entries)
                apply_run_key(plan, key, value);
        }
        else
        {
            throw std::invalid_argument("unknown config section [" + section + "]");
        }
    }
    return plan;
}

ExperimentPlan load_plan(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_plan(ss.str());
}

SetupResult run_setup(const ExperimentPlan& plan, const Combination& combo, arma::uword setup)
{
    SetupResult out;
    try
    {
        // Scenario streams are shared across combinations so that every
        // scheme sees the same network snapshots (paired comparison);
        // block streams are private per (combination, setup, pass)
        Rng scenario_rng(experiment_seed(plan.master_seed, "scenario", setup));
        ScenarioStats stats = drop_network(plan.scenario, scenario_rng);
        if (combo.mode == Mode::centralized && plan.centralized_full)
            stats = with_full_clusters(std::move(stats));
        const ChannelModel model(stats);
        const std::string label = combo.label();
        const double overhead = plan.include_overhead ? pilot_overhead(stats.cfg) : 1.0;
        const arma::uword K = stats.cfg.n_users;

        arma::vec sinr;
        PowerSamples samples;

        if (combo.mode == Mode::distributed)
        {
            PrecodingPipeline pipe;
            pipe.scheme = combo.scheme;
            pipe.mode = Mode::distributed;
            Rng rng(experiment_seed(plan.master_seed, label, setup, 0));
            HardeningStats hs = estimate_hardening(pipe, model, plan.n_blocks, rng);
            PowerAllocation alloc = combo.power_control == PowerControl::epa
                                        ? epa(Mode::distributed, stats)
                                        : maxmin_distributed(hs, stats, model.estimate_energy());
            if (plan.mmse_reiterate && combo.scheme == Scheme::mmse &&
                combo.power_control == PowerControl::maxmin)
            {
                pipe.mmse_eta = alloc.eta;
                Rng rng1(experiment_seed(plan.master_seed, label, setup, 1));
                hs = estimate_hardening(pipe, model, plan.n_blocks, rng1);
                alloc = maxmin_distributed(hs, stats, model.estimate_energy());
            }
            sinr = sinr_distributed(hs, alloc, stats);
            out.alpha_g_median = 1.0;
            // P_l / p_a = sum_{k in K_l} eta_kl under short-term normalization
            out.per_ap_fraction_max = arma::vec{arma::sum(alloc.eta, 0).max()};
        }
        else
        {
            const arma::vec eps_epa(K, arma::fill::value(1.0 / static_cast<double>(K)));
            PowerAllocation alloc = epa(Mode::centralized, stats);

            if (combo.power_control == PowerControl::maxmin)
            {
                // Pass 0: statistics feeding the solver. PS optimizes under
                // sum power plus mean per-AP budgets (the instantaneous
                // back-off then stays mild); LN optimizes on LN statistics.
                PrecodingPipeline pipe0;
                pipe0.scheme = combo.scheme;
                pipe0.mode = Mode::centralized;
                pipe0.enforcement = combo.enforcement == Enforcement::power_scaling
                                        ? Enforcement::none
                                        : combo.enforcement;
                pipe0.power_eps = eps_epa;
                Rng rng0(experiment_seed(plan.master_seed, label, setup, 0));
                const HardeningStats hs0 = estimate_hardening(pipe0, model, plan.n_blocks, rng0);
                MaxminOptions mopt;
                if (combo.enforcement == Enforcement::power_scaling)
                    mopt.per_ap_budget = stats.cfg.p_a / stats.cfg.system_power();
                alloc = maxmin_centralized(hs0, mopt);
            }

            // Final pass: statistics and power samples under the actual
            // enforcement, reacting to the final coefficients
            PrecodingPipeline pipe;
            pipe.scheme = combo.scheme;
            pipe.mode = Mode::centralized;
            pipe.enforcement = combo.enforcement;
            pipe.power_eps = alloc.eps;
            const bool reiter = plan.mmse_reiterate && combo.scheme == Scheme::mmse &&
                                combo.power_control == PowerControl::maxmin;
            if (reiter)
                pipe.mmse_eps = alloc.eps;
            Rng rng1(experiment_seed(plan.master_seed, label, setup, 1));
            HardeningStats hs = estimate_hardening(pipe, model, plan.n_blocks, rng1, &samples);
            if (reiter && combo.enforcement != Enforcement::power_scaling)
            {
                // re-solve on the re-iterated statistics; PS keeps its
                // allocation since the back-off is already folded in
                alloc = maxmin_centralized(hs);
            }
            sinr = sinr_centralized(hs, alloc);

            out.alpha_g_median = percentile(samples.alpha_g, 0.5);
            out.per_ap_fraction_max = arma::max(samples.per_ap_fraction, 1);
        }

        out.sinr = sinr;
        out.se = spectral_efficiency(sinr, overhead);
        out.ok = true;
    }
    catch (const std::exception& e)
    {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

namespace
{

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

std::string plan_echo(const ExperimentPlan& plan)
{
    std::ostringstream ss;
    ss << "# resolved experiment plan\n";
    ss << "[scenario]\n";
    const ScenarioConfig& c = plan.scenario;
    ss << "n_aps = " << c.n_aps << "\nn_antennas = " << c.n_antennas
       << "\nn_users = " << c.n_users << "\ncluster_size = " << c.cluster_size
       << "\nradius_m = " << format_number(c.radius_m) << "\ntau_p = " << c.tau_p
       << "\ntau_c = " << c.tau_c << "\np_u = " << format_number(c.p_u)
       << "\np_a = " << format_number(c.p_a)
       << "\nnoise_psd_dbm_hz = " << format_number(c.noise_psd_dbm_hz)
       << "\nnoise_figure_db = " << format_number(c.noise_figure_db)
       << "\nbandwidth_hz = " << format_number(c.bandwidth_hz)
       << "\ncarrier_mhz = " << format_number(c.carrier_mhz)
       << "\nap_height_m = " << format_number(c.ap_height_m)
       << "\nuser_height_m = " << format_number(c.user_height_m)
       << "\nd0_m = " << format_number(c.d0_m) << "\nd1_m = " << format_number(c.d1_m)
       << "\nshadowing_std_db = " << format_number(c.shadowing_std_db)
       << "\nshadowing = " << (c.shadowing ? "true" : "false")
       << "\nmin_distance_m = " << format_number(c.min_distance_m)
       << "\nangular_spread_deg = " << format_number(c.angular_spread_deg)
       << "\nkappa_mean_db = " << format_number(c.kappa_mean_db)
       << "\nkappa_std_db = " << format_number(c.kappa_std_db)
       << "\ncluster_by_gain = " << (c.cluster_by_gain ? "true" : "false")
       << "\npilot_scheme = \""
       << (c.pilot_scheme == PilotScheme::round_robin ? "round_robin" : "random") << "\"\n";
    ss << "\n[run]\n";
    ss << "setups = " << plan.n_setups << "\nblocks = " << plan.n_blocks
       << "\nseed = " << plan.master_seed << "\nout = \"" << plan.out_dir << "\""
       << "\ninclude_overhead = " << (plan.include_overhead ? "true" : "false")
       << "\ncentralized_full = " << (plan.centralized_full ? "true" : "false")
       << "\nfig1 = " << (plan.fig1 ? "true" : "false") << "\nschemes = [";
    for (size_t i = 0; i < plan.schemes.size(); ++i)
        ss << (i ? ", " : "") << '"' << to_string(plan.schemes[i]) << '"';
    ss << "]\nmodes = [";
    for (size_t i = 0; i < plan.modes.size(); ++i)
        ss << (i ? ", " : "") << '"' << to_string(plan.modes[i]) << '"';
    ss << "]\npower_control = [";
    for (size_t i = 0; i < plan.power_controls.size(); ++i)
        ss << (i ? ", " : "") << '"' << to_string(plan.power_controls[i]) << '"';
    ss << "]\nenforcement = [";
    for (size_t i = 0; i < plan.enforcements.size(); ++i)
        ss << (i ? ", " : "") << '"' << to_string(plan.enforcements[i]) << '"';
    ss << "]\n";
    return ss.str();
}

} // namespace

int run(const ExperimentPlan& plan)
{
    plan.validate();
    if (plan.fig1)
        return fig1_mode(plan);

    fs::create_directories(plan.out_dir);
    write_text_file(plan.out_dir + "/config.toml", plan_echo(plan));

    const std::vector<Combination> combos = plan.combinations();
    std::ostringstream summary_tsv;
    summary_tsv << "scheme\tsamples\tse_likely95\tse_median\tse_p95\tse_mean\talpha_g_median\t"
                   "setups_failed\n";
    std::string summary_json = "[\n";

    arma::uword total_failed = 0;
    bool any_combo_empty = false;

    for (size_t ci = 0; ci < combos.size(); ++ci)
    {
        const Combination& combo = combos[ci];
        std::vector<SetupResult> results(plan.n_setups);
        parallel_for(plan.n_setups, plan.jobs,
                     [&](arma::uword i) { results[i] = run_setup(plan, combo, i); });

        arma::uword ok = 0;
        for (const auto& r : results)
            ok += r.ok ? 1 : 0;
        if (ok == 0)
        {
            any_combo_empty = true;
            summary_tsv << combo.label() << "\t0\tnan\tnan\tnan\tnan\tnan\t" << plan.n_setups
                        << "\n";
            continue;
        }

        const SEReport rep = aggregate(combo.label(), results);
        total_failed += rep.n_setups_failed;

        write_report_csv(plan.out_dir + "/" + combo.label() + ".csv", rep);

        double alpha_med = 1.0;
        if (!rep.alpha_g_medians.is_empty())
            alpha_med = percentile(rep.alpha_g_medians, 0.5);
        summary_tsv << combo.label() << '\t' << rep.se.n_elem << '\t'
                    << format_number(rep.likely95) << '\t' << format_number(rep.median) << '\t'
                    << format_number(rep.p95) << '\t' << format_number(rep.mean) << '\t'
                    << format_number(alpha_med) << '\t' << rep.n_setups_failed << '\n';
        summary_json += report_summary_text(rep);
        summary_json += (ci + 1 < combos.size()) ? ",\n" : "\n";
    }
    summary_json += "]\n";

    write_text_file(plan.out_dir + "/summary.tsv", summary_tsv.str());
    write_text_file(plan.out_dir + "/summary.json", summary_json);

    if (plan.dump_fixtures)
    {
        Rng scenario_rng(experiment_seed(plan.master_seed, "scenario", 0));
        const ScenarioStats stats = drop_network(plan.scenario, scenario_rng);
        const ChannelModel model(stats);
        write_scenario_fixture(plan.out_dir + "/scenario0.json", stats);
        Rng rng(experiment_seed(plan.master_seed, "fixture", 0));
        const ChannelRealization real = draw_channel(model, rng);
        const PilotObservations obs = uplink_training(real, model, rng);
        const ChannelEstimate est = mmse_estimate(real, obs, model);
        write_block_fixture(plan.out_dir + "/block0.json", real, est);
    }

    (void)total_failed; // recorded in the summary; partial failures are not fatal
    return any_combo_empty ? 2 : 0;
}

int fig1_mode(const ExperimentPlan& plan)
{
    ScenarioConfig cfg = plan.scenario;
    cfg.n_antennas = 1;
    cfg.cluster_size = cfg.n_aps; // full cooperation
    cfg.validate();

    fs::create_directories(plan.out_dir);
    ExperimentPlan resolved = plan;
    resolved.scenario = cfg;
    write_text_file(plan.out_dir + "/config.toml", plan_echo(resolved));

    const arma::uword L = cfg.n_aps;
    const arma::uword n_snapshots = plan.n_setups * plan.n_blocks;
    arma::mat fractions(n_snapshots, L, arma::fill::zeros);
    std::vector<std::string> errors(plan.n_setups);

    parallel_for(plan.n_setups, plan.jobs, [&](arma::uword setup) {
        try
        {
            Rng scenario_rng(experiment_seed(plan.master_seed, "scenario", setup));
            ScenarioStats stats = drop_network(cfg, scenario_rng);
            const ChannelModel model(stats);
            const PowerAllocation alloc = epa(Mode::centralized, stats);
            Rng rng(experiment_seed(plan.master_seed, "fig1", setup, 0));
            for (arma::uword b = 0; b < plan.n_blocks; ++b)
            {
                const ChannelRealization real = draw_channel(model, rng);
                const PilotObservations obs = uplink_training(real, model, rng);
                const ChannelEstimate est = mmse_estimate(real, obs, model);
                const PuncturedChannels pch = build_punctured(est);
                const DirectionSet dirs =
                    rzf_direction(pch, Mode::centralized, cfg.noise_variance(), false);
                const PrecoderSet prec =
                    normalize(dirs, NormalizationKind::short_term, stats.serving);
                const arma::vec pw = per_ap_power(prec, alloc, cfg.system_power());
                fractions.row(setup * plan.n_blocks + b) = (pw / cfg.system_power()).t();
            }
        }
        catch (const std::exception& e)
        {
            errors[setup] = e.what();
        }
    });

    arma::uword failed = 0;
    for (const auto& e : errors)
        failed += e.empty() ? 0 : 1;
    if (failed == plan.n_setups)
        return 2;

    const double ref = 1.0 / static_cast<double>(L);
    std::ostringstream csv;
    csv << "snapshot";
    for (arma::uword l = 0; l < L; ++l)
        csv << ",ap" << l;
    csv << "\n";
    arma::uword exceed = 0, exceed3 = 0, rows = 0;
    for (arma::uword i = 0; i < n_snapshots; ++i)
    {
        const arma::uword setup = i / plan.n_blocks;
        if (!errors[setup].empty())
            continue;
        csv << i;
        for (arma::uword l = 0; l < L; ++l)
            csv << ',' << format_number(fractions(i, l));
        csv << "\n";
        const double mx = fractions.row(i).max();
        exceed += (mx > ref) ? 1 : 0;
        exceed3 += (mx > 3.0 * ref) ? 1 : 0;
        ++rows;
    }
    write_text_file(plan.out_dir + "/per_ap_power.csv", csv.str());

    std::ostringstream meta;
    meta << "{\n \"reference_fraction\": " << format_number(ref)
         << ",\n \"snapshots\": " << rows
         << ",\n \"exceed_cap_fraction\": " << format_number(double(exceed) / double(rows))
         << ",\n \"exceed_3x_cap_fraction\": " << format_number(double(exceed3) / double(rows))
         << ",\n \"setups_failed\": " << failed << "\n}\n";
    write_text_file(plan.out_dir + "/per_ap_power_summary.json", meta.str());
    return 0;
}

} // namespace cfmimo
