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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "riscf/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace riscf;
using nlohmann::json;

namespace {

json tiny_document(const std::filesystem::path &out)
{
    return json{
        {"scenario",
         {{"aps", 2},
          {"users", 3},
          {"antennas", 2},
          {"ris_elements", 6},
          {"pilot_length", 2},
          {"unblocked_probability", 0.5}}},
        {"algorithm",
         {{"name", "ade"},
          {"compare", {"ade", "de", "ga", "rps", "eps"}},
          {"ade", {{"population", 10}, {"generations", 6}}},
          {"de", {{"population", 10}}},
          {"ga", {{"population", 10}}},
          {"rps", {{"draws", 20}}}}},
        {"se", {{"enabled", true}, {"trials", 200}, {"rps_draws", 2}}},
        {"seeds", {{"master", 5}, {"geometries", 2}}},
        {"output", {{"directory", out.string()}}},
    };
}

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const json &doc)
{
    try {
        parse_config(doc);
    } catch (const ConfigError &e) {
        return e.what();
    }
    return {};
}

std::filesystem::path scratch(const std::string &name)
{
    auto p = std::filesystem::temp_directory_path() / ("riscf_test_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("algorithm names round-trip")
{
    for (Algorithm a : {Algorithm::ade, Algorithm::de, Algorithm::ga, Algorithm::rps, Algorithm::eps})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_THROWS_AS(parse_algorithm("pso"), ConfigError);
}

TEST_CASE("config parsing fills the fields and derives the budget")
{
    const auto c = parse_config(tiny_document("o"));
    CHECK(c.scenario.channel.geometry.num_aps == 2);
    CHECK(c.scenario.channel.correlation.ris_elements == 6);
    CHECK(c.scenario.pilot_length == 2);
    CHECK(c.ade.population == 10);
    CHECK(c.budget() == 10 * 7);
    CHECK(c.compare.size() == 5);
    CHECK(c.se.enabled);
    CHECK(c.geometry_seeds == 2);
    CHECK(c.scenario.id() == "L2_M2_N6_K3_tau2");

    auto doc = tiny_document("o");
    doc["algorithm"]["evaluation_budget"] = 123;
    CHECK(parse_config(doc).budget() == 123);
}

TEST_CASE("config errors name the offending field")
{
    auto doc = tiny_document("o");
    doc["scenario"]["antenas"] = 4;
    CHECK(error_of(doc).find("scenario.antenas") != std::string::npos);

    doc = tiny_document("o");
    doc["scenario"]["pilot_length"] = "two";
    CHECK(error_of(doc).find("scenario.pilot_length") != std::string::npos);

    doc = tiny_document("o");
    doc["algorithm"]["ade"]["pbest_fraction"] = 1.5;
    CHECK_FALSE(error_of(doc).empty());

    doc = tiny_document("o");
    doc["scenario"]["unblocked_probability"] = -0.1;
    CHECK_FALSE(error_of(doc).empty());

    doc = tiny_document("o");
    doc["scenario"]["correlation"] = {{"model", "kronecker"}};
    CHECK(error_of(doc).find("scenario.correlation.model") != std::string::npos);

    doc = tiny_document("o");
    doc["scenario"]["pilot_length"] = 0;
    CHECK_FALSE(error_of(doc).empty());

    doc = tiny_document("o");
    doc["seeds"]["master"] = -3;
    CHECK(error_of(doc).find("seeds.master") != std::string::npos);
}

TEST_CASE("an infinite Rician factor is accepted as a string")
{
    auto doc = tiny_document("o");
    doc["scenario"]["correlation"] = {{"rician_factor_ap_ris_db", "inf"}};
    const auto c = parse_config(doc);
    CHECK(std::isinf(c.scenario.channel.correlation.rician_factor_ap_ris_db));
}

TEST_CASE("geometry seeds are deterministic and distinct")
{
    CHECK(geometry_seed(1, 0) == geometry_seed(1, 0));
    CHECK(geometry_seed(1, 0) != geometry_seed(1, 1));
    CHECK(geometry_seed(1, 0) != geometry_seed(2, 0));
}

TEST_CASE("comparison pairs seeds and computes relative gains")
{
    std::vector<ResultRow> rows;
    const double nmse[2][2] = {{0.2, 0.3}, {0.4, 0.5}}; // [seed][ade, de]
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a) {
            ResultRow r;
            r.scenario = "x";
            r.algorithm = a == 0 ? Algorithm::ade : Algorithm::de;
            r.seed_index = s;
            r.final_nmse = nmse[s][a];
            rows.push_back(r);
        }
    const auto t = build_comparison(rows, {Algorithm::ade, Algorithm::de});
    REQUIRE(t.find(Algorithm::ade));
    CHECK(t.find(Algorithm::ade)->mean_nmse == doctest::Approx(0.3));
    CHECK(t.find(Algorithm::ade)->std_nmse == doctest::Approx(std::sqrt(0.02)));
    CHECK(t.find(Algorithm::de)->seeds == 2);
    REQUIRE(t.ade_over_de);
    CHECK(*t.ade_over_de == doctest::Approx((0.4 - 0.3) / 0.4));
    CHECK_FALSE(t.se_gain_over_rps);

    auto unpaired = rows;
    unpaired.pop_back();
    CHECK_THROWS_AS(build_comparison(unpaired, {Algorithm::ade, Algorithm::de}), ContractError);
    auto mixed = rows;
    mixed[0].scenario = "y";
    CHECK_THROWS_AS(build_comparison(mixed, {Algorithm::ade, Algorithm::de}), ContractError);
}

TEST_CASE("a comparison run writes consistent CSV files")
{
    const auto dir = scratch("compare");
    const auto config = parse_config(tiny_document(dir));
    const auto out = run_comparison(config);
    CHECK(out.cells.size() == 10);
    for (const char *f : {"results.csv", "convergence.csv", "summary.csv", "user_se.csv"})
        CHECK(std::filesystem::exists(dir / f));

    for (const auto &cell : out.cells) {
        CHECK(cell.row.final_nmse >= 0.0);
        CHECK(cell.row.final_nmse <= 1.0);
        REQUIRE(cell.row.mean_se_mbps);
        CHECK(*cell.row.mean_se_mbps >= 0.0);
        CHECK(cell.row.user_se_mbps.size() == 3);
        if (cell.row.algorithm == Algorithm::ade || cell.row.algorithm == Algorithm::de ||
            cell.row.algorithm == Algorithm::ga) {
            CHECK(cell.row.evaluations <= config.budget());
            CHECK(cell.trace.best_nonincreasing());
            CHECK(cell.trace.rows.back().best == doctest::Approx(cell.row.final_nmse));
        }
    }
    // seed-major, algorithm-minor
    CHECK(out.cells[0].row.seed_index == 0);
    CHECK(out.cells[4].row.seed_index == 0);
    CHECK(out.cells[5].row.seed_index == 1);
    CHECK(out.cells[1].row.algorithm == Algorithm::de);

    const auto results = slurp(dir / "results.csv");
    CHECK(results.rfind("scenario,algorithm,seed_index,seed,final_nmse", 0) == 0);
    CHECK(std::count(results.begin(), results.end(), '\n') == 11);
    CHECK(out.table.ade_over_de.has_value());
    CHECK(out.table.se_gain_over_rps.has_value());
}

TEST_CASE("output is byte-identical across runs and thread counts")
{
    auto doc = tiny_document(scratch("a"));
    doc["se"]["enabled"] = false;
    auto c1 = parse_config(doc);
    run_comparison(c1);

    doc["output"]["directory"] = scratch("b").string();
    doc["threads"] = 3;
    auto c2 = parse_config(doc);
    run_comparison(c2);

    for (const char *f : {"results.csv", "convergence.csv", "summary.csv"})
        CHECK(slurp(c1.output_dir / f) == slurp(c2.output_dir / f));
}

TEST_CASE("a single-algorithm experiment runs every seed")
{
    auto doc = tiny_document(scratch("single"));
    doc["se"]["enabled"] = false;
    doc["algorithm"]["name"] = "ga";
    const auto out = run_experiment(parse_config(doc));
    REQUIRE(out.cells.size() == 2);
    for (const auto &cell : out.cells)
        CHECK(cell.row.algorithm == Algorithm::ga);
    CHECK(out.cells[0].row.seed != out.cells[1].row.seed);
}

TEST_CASE("the oracle suite agrees with the closed forms at reduced sample count")
{
    OracleSuiteConfig c;
    c.samples = 20000;
    c.tolerance = 0.05;
    const auto checks = run_oracle_suite(c);
    CHECK(checks.size() == 8);
    for (const auto &check : checks) {
        INFO(check.name << " " << check.error);
        CHECK(check.passed());
    }
}
