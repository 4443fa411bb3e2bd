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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cfmimo/harness.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"cfmimo_sim — cell-free massive MIMO downlink Monte-Carlo runner"};

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> schemes;
    std::int64_t seed = -1, setups = -1, blocks = -1, jobs = -1;
    bool fig1 = false, dump_fixtures = false, no_overhead = false;

    app.add_option("--config", config_path, "declarative run config (TOML)");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--setups", setups, "number of network snapshots");
    app.add_option("--blocks", blocks, "coherence blocks per snapshot");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--schemes", schemes, "precoder schemes (MR, ZF, RZF, MMSE)")
        ->delimiter(',');
    app.add_option("--jobs", jobs, "worker threads (default: hardware)");
    app.add_flag("--fig1", fig1, "power-concentration mode (single-antenna APs, centralized ZF)");
    app.add_flag("--dump-fixtures", dump_fixtures, "write scenario/block regression fixtures");
    app.add_flag("--no-overhead", no_overhead, "report SE without the pilot overhead factor");

    CLI11_PARSE(app, argc, argv);

    try
    {
        cfmimo::ExperimentPlan plan;
        if (!config_path.empty())
            plan = cfmimo::load_plan(config_path);

        if (seed >= 0)
            plan.master_seed = static_cast<std::uint64_t>(seed);
        if (setups > 0)
            plan.n_setups = static_cast<arma::uword>(setups);
        if (blocks > 0)
            plan.n_blocks = static_cast<arma::uword>(blocks);
        if (jobs >= 0)
            plan.jobs = static_cast<unsigned>(jobs);
        if (!out_dir.empty())
            plan.out_dir = out_dir;
        if (fig1)
            plan.fig1 = true;
        if (dump_fixtures)
            plan.dump_fixtures = true;
        if (no_overhead)
            plan.include_overhead = false;
        if (!schemes.empty())
        {
            plan.schemes.clear();
            for (const std::string& s : schemes)
                plan.schemes.push_back(cfmimo::scheme_from_string(s));
        }

        plan.validate();
        const int rc = cfmimo::run(plan);
        if (rc == 0)
            std::cout << "results written to " << plan.out_dir << "\n";
        else
            std::cerr << "numerical failure: one or more combinations produced no results\n";
        return rc;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
