// SPDX-License-Identifier: Apache-2.0
//
// riscf: phase-shift design for RIS-aided cell-free massive MIMO channel estimation
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

#include "riscf/harness.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>

using namespace riscf;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> geometries;
    std::optional<std::string> out;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App *cmd, CommonOptions &o)
{
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--geometries", o.geometries, "number of geometry seeds");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials for the SE evaluation (enables it)");
    cmd->add_option("--threads", o.threads, "worker threads");
}

ExperimentConfig resolve(const CommonOptions &o)
{
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed)
        c.master_seed = *o.seed;
    if (o.geometries)
        c.geometry_seeds = *o.geometries;
    if (o.out)
        c.output_dir = *o.out;
    if (o.trials) {
        c.se.enabled = true;
        c.se.config.trials = *o.trials;
    }
    if (o.threads)
        c.threads = *o.threads;
    c.validate();
    return c;
}

void print_table(const ExperimentOutput &out)
{
    const int w = static_cast<int>(std::max<std::size_t>(8, out.table.scenario.size()));
    std::printf("%-*s %-5s %12s %12s %12s\n", w, "scenario", "algo", "mean_nmse", "std_nmse",
                "mean_se_mbps");
    for (const auto &c : out.table.columns) {
        std::printf("%-*s %-5s %12.6f %12.6f ", w, out.table.scenario.c_str(),
                    to_string(c.algorithm).c_str(), c.mean_nmse, c.std_nmse);
        if (c.mean_se_mbps)
            std::printf("%12.4g\n", *c.mean_se_mbps);
        else
            std::printf("%12s\n", "-");
    }
    if (out.table.ade_over_de)
        std::printf("ade improvement over de: %.2f%%\n", 100.0 * *out.table.ade_over_de);
    if (out.table.se_gain_over_rps)
        std::printf("ade se gain over rps: %.2f%%\n", 100.0 * *out.table.se_gain_over_rps);
    for (const auto &f : out.files)
        std::printf("wrote %s\n", f.string().c_str());
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"RIS-aided cell-free massive MIMO phase-shift design"};
    app.require_subcommand(1);

    CommonOptions nmse_opts, opt_opts, cmp_opts;
    std::string phase_kind = "equal";
    std::size_t seed_index = 0;
    auto *nmse_cmd = app.add_subcommand("nmse", "average NMSE of a fixed phase design");
    add_common(nmse_cmd, nmse_opts);
    nmse_cmd->add_option("--phase", phase_kind, "equal or random")
        ->check(CLI::IsMember({"equal", "random"}));
    nmse_cmd->add_option("--seed-index", seed_index, "geometry realization index");

    std::string algo;
    auto *opt_cmd = app.add_subcommand("optimize", "run one algorithm over the geometry seeds");
    add_common(opt_cmd, opt_opts);
    opt_cmd->add_option("--algo", algo, "ade, de, ga, rps or eps");

    auto *cmp_cmd = app.add_subcommand("compare", "run every configured algorithm on paired seeds");
    add_common(cmp_cmd, cmp_opts);

    OracleSuiteConfig oracle;
    auto *val_cmd = app.add_subcommand("validate", "Monte Carlo check of the closed-form moments");
    val_cmd->add_option("--samples", oracle.samples, "Monte Carlo samples");
    val_cmd->add_option("--seed", oracle.seed, "instance seed");
    val_cmd->add_option("--threads", oracle.threads, "worker threads");
    val_cmd->add_option("--tolerance", oracle.tolerance, "relative tolerance");
    val_cmd->add_option("--pilot-snr", oracle.scenario.pilot_snr, "pilot SNR p");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*nmse_cmd) {
            const ExperimentConfig c = resolve(nmse_opts);
            const std::uint64_t seed = geometry_seed(c.master_seed, seed_index);
            const auto stats = generate_statistics(c.scenario.channel, seed);
            const auto pilots = pilot_assign(stats.num_users, c.scenario.pilot_length);
            const NmseObjective objective(stats, pilots, c.scenario.pilot_snr);
            Rng rng = make_stream(seed, 200);
            const PhaseShiftVector phase = phase_kind == "random"
                                               ? random_phase(stats.ris_elements, rng)
                                               : equal_phase(stats.ris_elements);
            const auto links = objective.per_link(phase);
            for (std::size_t m = 0; m < stats.num_aps; ++m)
                for (std::size_t k = 0; k < stats.num_users; ++k)
                    std::printf("m=%zu k=%zu nmse=%.6f%s\n", m, k, links[stats.link(m, k)].value,
                                stats.blocking[stats.link(m, k)] ? "" : " (direct blocked)");
            std::printf("average nmse %.6f\n", objective(phase));
        } else if (*opt_cmd) {
            ExperimentConfig c = resolve(opt_opts);
            if (!algo.empty())
                c.algorithm = parse_algorithm(algo);
            print_table(run_experiment(c));
        } else if (*cmp_cmd) {
            print_table(run_comparison(resolve(cmp_opts)));
        } else if (*val_cmd) {
            bool ok = true;
            for (const auto &check : run_oracle_suite(oracle)) {
                std::printf("%-18s error %.5f tol %.3f %s\n", check.name.c_str(), check.error,
                            check.tolerance, check.passed() ? "PASS" : "FAIL");
                ok = ok && check.passed();
            }
            return ok ? 0 : 1;
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
