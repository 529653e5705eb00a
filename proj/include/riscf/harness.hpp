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

#ifndef RISCF_HARNESS_HPP
#define RISCF_HARNESS_HPP

#include "riscf/common.hpp"
#include "riscf/estimator.hpp"
#include "riscf/geometry_channel.hpp"
#include "riscf/optimizer.hpp"
#include "riscf/spectral_efficiency.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace riscf {

enum class Algorithm { ade, de, ga, rps, eps };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string &name);

struct ScenarioSettings {
    std::string name; // empty: derived from the dimensions
    ChannelScenario channel;
    std::size_t pilot_length = 1;
    double pilot_snr = 100.0; // p, transmit power in units of the noise power

    std::string id() const;
    void validate() const;
};

struct SeSettings {
    bool enabled = false;
    SeConfig config;
    std::size_t rps_draws = 10; // random phase draws averaged for the RPS SE column
};

struct ExperimentConfig {
    ScenarioSettings scenario;
    Algorithm algorithm = Algorithm::ade;
    std::vector<Algorithm> compare{Algorithm::ade, Algorithm::ga, Algorithm::de, Algorithm::rps,
                                   Algorithm::eps};
    // Shared by ADE, DE and GA; 0 selects ade.population * (1 + ade.generations).
    std::size_t evaluation_budget = 0;
    AdeConfig ade;
    DeConfig de;
    GaConfig ga;
    std::size_t rps_draws = 1000;
    SeSettings se;
    std::uint64_t master_seed = 1;
    std::size_t geometry_seeds = 1;
    std::filesystem::path output_dir = "out";
    bool record_wall_time = false;
    std::size_t threads = 1;

    std::size_t budget() const;
    void validate() const;
};

// Strict JSON reader: unknown keys and wrong types fail with the offending field path.
ExperimentConfig parse_config(const nlohmann::json &document);
ExperimentConfig load_config(const std::filesystem::path &path);

// The u64 seed of geometry realization `index` under `master`.
std::uint64_t geometry_seed(std::uint64_t master, std::size_t index);

struct ResultRow {
    std::string scenario;
    Algorithm algorithm = Algorithm::ade;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    double final_nmse = 0.0;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    double wall_time_s = 0.0;
    std::optional<double> mean_se_mbps;
    std::vector<double> user_se_mbps;
};

struct CellResult {
    ResultRow row;
    ConvergenceTrace trace;
    std::optional<PhaseShiftVector> phase; // optimized or equal phase
};

// One (seed, algorithm) cell: builds the statistics for the seed, runs the algorithm and,
// when enabled, the SE evaluation. Deterministic in (config, seed_index, algorithm).
CellResult run_cell(const ExperimentConfig &config, std::size_t seed_index, Algorithm algorithm);

struct AlgorithmSummary {
    Algorithm algorithm = Algorithm::ade;
    double mean_nmse = 0.0, std_nmse = 0.0;
    std::optional<double> mean_se_mbps;
    std::size_t seeds = 0;
};

struct ComparisonTable {
    std::string scenario;
    std::vector<AlgorithmSummary> columns;
    std::optional<double> ade_over_de; // (DE - ADE) / DE on the mean NMSE
    std::optional<double> se_gain_over_rps; // (ADE - RPS) / RPS on the mean SE

    const AlgorithmSummary *find(Algorithm a) const;
};

// Paired summary; throws ContractError when rows mix scenarios or when two algorithms were
// not run on the same seeds.
ComparisonTable build_comparison(const std::vector<ResultRow> &rows,
                                 const std::vector<Algorithm> &order);

struct ExperimentOutput {
    std::vector<CellResult> cells; // seed-major, algorithm-minor
    ComparisonTable table;
    std::vector<std::filesystem::path> files;
};

// Single algorithm (config.algorithm) over every geometry seed.
ExperimentOutput run_experiment(const ExperimentConfig &config);

// Every algorithm in config.compare over the same geometry seeds.
ExperimentOutput run_comparison(const ExperimentConfig &config);

// ---------- Monte Carlo oracle suite ----------

struct OracleCheck {
    std::string name;
    double error = 0.0; // worst case over the checked links
    double tolerance = 0.0;
    bool passed() const { return error <= tolerance; }
};

struct OracleSuiteConfig {
    ScenarioSettings scenario; // defaults to the L=2, M=2, N=8, K=4, tau_p=2 desk instance
    std::size_t samples = 100000;
    double tolerance = 0.02;
    std::uint64_t seed = 7;
    std::size_t threads = 1;

    OracleSuiteConfig();
};

// Sampling estimates of every closed-form moment against its formula.
std::vector<OracleCheck> run_oracle_suite(const OracleSuiteConfig &config);

} // namespace riscf

#endif
