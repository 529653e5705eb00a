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

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace riscf {

using nlohmann::json;

std::string to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::ade: return "ade";
    case Algorithm::de: return "de";
    case Algorithm::ga: return "ga";
    case Algorithm::rps: return "rps";
    case Algorithm::eps: return "eps";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string &name)
{
    for (auto a : {Algorithm::ade, Algorithm::de, Algorithm::ga, Algorithm::rps, Algorithm::eps})
        if (to_string(a) == name)
            return a;
    throw ConfigError("unknown algorithm '" + name + "' (expected ade, de, ga, rps or eps)");
}

// ---------- CONFIG ----------

std::string ScenarioSettings::id() const
{
    if (!name.empty())
        return name;
    return fmt::format("L{}_M{}_N{}_K{}_tau{}", channel.geometry.num_aps,
                       channel.correlation.antennas_per_ap, channel.correlation.ris_elements,
                       channel.geometry.num_users, pilot_length);
}

void ScenarioSettings::validate() const
{
    channel.validate();
    if (pilot_length < 1)
        throw ConfigError("scenario.pilot_length must be at least 1");
    if (!(pilot_snr > 0.0) || !std::isfinite(pilot_snr))
        throw ConfigError("scenario.pilot_snr must be positive");
}

std::size_t ExperimentConfig::budget() const
{
    return evaluation_budget > 0 ? evaluation_budget : ade.population * (1 + ade.generations);
}

void ExperimentConfig::validate() const
{
    scenario.validate();
    ade.validate();
    de.validate();
    ga.validate();
    if (compare.empty())
        throw ConfigError("algorithm.compare must list at least one algorithm");
    if (rps_draws < 1)
        throw ConfigError("algorithm.rps.draws must be at least 1");
    if (geometry_seeds < 1)
        throw ConfigError("seeds.geometries must be at least 1");
    if (threads < 1)
        throw ConfigError("threads must be at least 1");
    const std::size_t b = budget();
    if (b < ade.population || b < de.population || b < ga.population)
        throw ConfigError("algorithm.evaluation_budget is smaller than a population");
    if (se.enabled) {
        se.config.validate(scenario.channel.geometry.num_users, scenario.pilot_length);
        if (se.rps_draws < 1)
            throw ConfigError("se.rps_draws must be at least 1");
    }
}

namespace {

class Section {
public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("", "expected an object");
    }

    [[noreturn]] void fail(const std::string &key, const std::string &what) const
    {
        const std::string where = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        throw ConfigError((where.empty() ? std::string("<root>") : where) + ": " + what);
    }

    const json *find(const std::string &key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void read(const std::string &key, double &out)
    {
        if (const json *v = find(key)) {
            if (!v->is_number())
                fail(key, "expected a number");
            out = v->get<double>();
        }
    }

    // Number or the strings "inf" / "-inf".
    void read_extended(const std::string &key, double &out)
    {
        if (const json *v = find(key)) {
            if (v->is_string()) {
                const auto s = v->get<std::string>();
                if (s == "inf")
                    out = std::numeric_limits<double>::infinity();
                else if (s == "-inf")
                    out = -std::numeric_limits<double>::infinity();
                else
                    fail(key, "expected a number or \"inf\"");
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                fail(key, "expected a number or \"inf\"");
            }
        }
    }

    void read(const std::string &key, std::size_t &out)
    {
        if (const json *v = find(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
                fail(key, "expected a nonnegative integer");
            out = v->get<std::size_t>();
        }
    }

    void read(const std::string &key, std::uint64_t &out, int)
    {
        if (const json *v = find(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
                fail(key, "expected a nonnegative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void read(const std::string &key, bool &out)
    {
        if (const json *v = find(key)) {
            if (!v->is_boolean())
                fail(key, "expected true or false");
            out = v->get<bool>();
        }
    }

    void read(const std::string &key, std::string &out)
    {
        if (const json *v = find(key)) {
            if (!v->is_string())
                fail(key, "expected a string");
            out = v->get<std::string>();
        }
    }

    void read(const std::string &key, std::vector<double> &out)
    {
        if (const json *v = find(key)) {
            if (!v->is_array())
                fail(key, "expected an array of numbers");
            out.clear();
            for (const auto &e : *v) {
                if (!e.is_number())
                    fail(key, "expected an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }

    std::optional<Section> child(const std::string &key)
    {
        if (const json *v = find(key))
            return Section(*v, path_.empty() ? key : path_ + "." + key);
        return std::nullopt;
    }

    const std::string &path() const { return path_; }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                fail(it.key(), "unknown key");
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_log_distance(Section &s, LogDistanceModel &m)
{
    s.read("exponent", m.exponent);
    s.read("reference_distance_m", m.reference_distance_m);
    s.read("reference_gain_db", m.reference_gain_db);
    s.finish();
}

void read_scenario(Section &s, ScenarioSettings &sc)
{
    auto &geo = sc.channel.geometry;
    auto &corr = sc.channel.correlation;
    s.read("name", sc.name);
    s.read("aps", geo.num_aps);
    s.read("users", geo.num_users);
    s.read("antennas", corr.antennas_per_ap);
    s.read("ris_elements", corr.ris_elements);
    s.read("pilot_length", sc.pilot_length);
    s.read("pilot_snr", sc.pilot_snr);
    s.read("unblocked_probability", sc.channel.unblocked_probability);
    if (auto g = s.child("geometry")) {
        g->read("area_side_m", geo.area_side_m);
        g->read("ap_square_side_m", geo.ap_square_side_m);
        g->read("user_square_side_m", geo.user_square_side_m);
        g->read("ap_height_m", geo.ap_height_m);
        g->read("user_height_m", geo.user_height_m);
        g->read("ris_height_m", geo.ris_height_m);
        g->finish();
    }
    if (auto p = s.child("pathloss")) {
        auto &pl = sc.channel.pathloss;
        p->read("noise_power_dbm", pl.noise_power_dbm);
        if (auto d = p->child("direct"))
            read_log_distance(*d, pl.direct);
        if (auto d = p->child("ap_ris"))
            read_log_distance(*d, pl.ap_ris);
        if (auto d = p->child("ris_user"))
            read_log_distance(*d, pl.ris_user);
        p->finish();
    }
    if (auto c = s.child("correlation")) {
        std::string model;
        c->read("model", model);
        if (model == "exponential")
            corr.model = CorrelationModel::exponential;
        else if (model == "local_scattering")
            corr.model = CorrelationModel::local_scattering;
        else if (!model.empty())
            c->fail("model", "expected \"exponential\" or \"local_scattering\"");
        c->read("ap_correlation", corr.ap_correlation);
        c->read("ris_correlation", corr.ris_correlation);
        c->read("angular_spread_deg", corr.angular_spread_deg);
        c->read("element_spacing_wavelengths", corr.element_spacing_wavelengths);
        c->read("ris_columns", corr.ris_columns);
        c->read_extended("rician_factor_ap_ris_db", corr.rician_factor_ap_ris_db);
        c->read_extended("rician_factor_ris_user_db", corr.rician_factor_ris_user_db);
        c->finish();
    }
    s.finish();
}

void read_algorithms(Section &s, ExperimentConfig &cfg)
{
    std::string name;
    s.read("name", name);
    if (!name.empty()) {
        try {
            cfg.algorithm = parse_algorithm(name);
        } catch (const ConfigError &e) {
            s.fail("name", e.what());
        }
    }
    if (const json *list = s.find("compare")) {
        if (!list->is_array())
            s.fail("compare", "expected an array of algorithm names");
        cfg.compare.clear();
        for (const auto &e : *list) {
            if (!e.is_string())
                s.fail("compare", "expected an array of algorithm names");
            try {
                cfg.compare.push_back(parse_algorithm(e.get<std::string>()));
            } catch (const ConfigError &err) {
                s.fail("compare", err.what());
            }
        }
    }
    s.read("evaluation_budget", cfg.evaluation_budget);
    if (auto a = s.child("ade")) {
        a->read("population", cfg.ade.population);
        a->read("generations", cfg.ade.generations);
        a->read("pbest_fraction", cfg.ade.pbest_fraction);
        a->read("augmentation_tolerance", cfg.ade.augmentation_tolerance);
        a->read("augmentation_count", cfg.ade.augmentation_count);
        a->read("augmentation_sigma", cfg.ade.augmentation_sigma);
        a->read("memory_size", cfg.ade.memory_size);
        a->finish();
    }
    if (auto d = s.child("de")) {
        d->read("population", cfg.de.population);
        d->read("scale_factor", cfg.de.scale_factor);
        d->read("crossover_rate", cfg.de.crossover_rate);
        d->finish();
    }
    if (auto g = s.child("ga")) {
        g->read("population", cfg.ga.population);
        g->read("tournament_size", cfg.ga.tournament_size);
        g->read("crossover_rate", cfg.ga.crossover_rate);
        g->read("blend_alpha", cfg.ga.blend_alpha);
        g->read("mutation_rate", cfg.ga.mutation_rate);
        g->read("mutation_sigma", cfg.ga.mutation_sigma);
        g->finish();
    }
    if (auto r = s.child("rps")) {
        r->read("draws", cfg.rps_draws);
        r->finish();
    }
    s.finish();
}

} // namespace

ExperimentConfig parse_config(const json &document)
{
    ExperimentConfig cfg;
    Section root(document, "");
    if (auto s = root.child("scenario"))
        read_scenario(*s, cfg.scenario);
    if (auto a = root.child("algorithm"))
        read_algorithms(*a, cfg);
    if (auto s = root.child("se")) {
        s->read("enabled", cfg.se.enabled);
        s->read("bandwidth_mhz", cfg.se.config.bandwidth_mhz);
        s->read("coherence_block", cfg.se.config.coherence_block);
        s->read("uplink_snr", cfg.se.config.uplink_snr);
        s->read("power_coefficients", cfg.se.config.power_coefficients);
        s->read("trials", cfg.se.config.trials);
        s->read("rps_draws", cfg.se.rps_draws);
        s->finish();
    }
    if (auto s = root.child("seeds")) {
        s->read("master", cfg.master_seed, 0);
        s->read("geometries", cfg.geometry_seeds);
        s->finish();
    }
    if (auto s = root.child("output")) {
        std::string dir;
        s->read("directory", dir);
        if (!dir.empty())
            cfg.output_dir = dir;
        s->read("record_wall_time", cfg.record_wall_time);
        s->finish();
    }
    root.read("threads", cfg.threads);
    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(document);
}

std::uint64_t geometry_seed(std::uint64_t master, std::size_t index)
{
    Rng rng = make_stream(master, 0x5eed, index);
    return rng();
}

// ---------- CELLS ----------

namespace {

constexpr std::uint64_t algorithm_stream(Algorithm a)
{
    return 100 + static_cast<std::uint64_t>(a);
}
constexpr std::uint64_t rps_se_stream = 201;
constexpr std::uint64_t se_trial_stream = 300;

std::vector<double> user_se(const ChannelStatistics &stats, const PhaseShiftVector &phase,
                            const PilotAssignment &pilots, const ExperimentConfig &cfg,
                            std::uint64_t seed)
{
    SeConfig se = cfg.se.config;
    se.threads = 1;
    const auto sinr = uplink_sinr(stats, phase, pilots, cfg.scenario.pilot_snr, se, seed);
    std::vector<double> out;
    out.reserve(sinr.size());
    for (const auto &s : sinr)
        out.push_back(ergodic_se(s.sinr, se, pilots.tau_p));
    return out;
}

double mean_of(const std::vector<double> &v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace

CellResult run_cell(const ExperimentConfig &config, std::size_t seed_index, Algorithm algorithm)
{
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = geometry_seed(config.master_seed, seed_index);
    const ChannelStatistics stats = generate_statistics(config.scenario.channel, seed);
    const PilotAssignment pilots =
        pilot_assign(stats.num_users, config.scenario.pilot_length, PilotPolicy::round_robin);
    const NmseObjective nmse_of(stats, pilots, config.scenario.pilot_snr);
    const Objective objective = [&](std::span<const double> genes) {
        return nmse_of(PhaseShiftVector::from_normalized(genes));
    };
    const std::size_t N = stats.ris_elements;
    const std::size_t budget = config.budget();
    Rng rng = make_stream(seed, algorithm_stream(algorithm));

    CellResult cell;
    ResultRow &row = cell.row;
    row.scenario = config.scenario.id();
    row.algorithm = algorithm;
    row.seed_index = seed_index;
    row.seed = seed;

    auto take = [&](OptimizationResult r) {
        row.final_nmse = r.best_fitness;
        row.evaluations = r.evaluations;
        row.generations = r.trace.rows.empty() ? 0 : r.trace.rows.back().generation;
        cell.trace = std::move(r.trace);
        cell.phase = std::move(r.best_phase);
    };

    switch (algorithm) {
    case Algorithm::ade: {
        AdeConfig c = config.ade;
        c.max_evaluations = budget;
        c.threads = 1;
        take(run_ade(objective, N, c, rng));
        break;
    }
    case Algorithm::de: {
        DeConfig c = config.de;
        c.max_evaluations = budget;
        c.generations = std::max<std::size_t>(1, (budget - c.population) / c.population);
        take(run_canonical_de(objective, N, c, rng));
        break;
    }
    case Algorithm::ga: {
        GaConfig c = config.ga;
        c.max_evaluations = budget;
        c.generations = std::max<std::size_t>(1, (budget - c.population) / (c.population - 1));
        take(run_ga(objective, N, c, rng));
        break;
    }
    case Algorithm::rps: {
        double sum = 0.0;
        for (std::size_t d = 0; d < config.rps_draws; ++d)
            sum += nmse_of(random_phase(N, rng));
        row.final_nmse = sum / static_cast<double>(config.rps_draws);
        row.evaluations = config.rps_draws;
        cell.trace.rows.push_back({0, row.evaluations, row.final_nmse, row.final_nmse, false, 0});
        break;
    }
    case Algorithm::eps: {
        const auto phase = equal_phase(N);
        row.final_nmse = nmse_of(phase);
        row.evaluations = 1;
        cell.trace.rows.push_back({0, 1, row.final_nmse, row.final_nmse, false, 0});
        cell.phase = phase;
        break;
    }
    }

    if (config.se.enabled) {
        const std::uint64_t se_seed = make_stream(seed, se_trial_stream)();
        if (algorithm == Algorithm::rps) {
            Rng phase_rng = make_stream(seed, rps_se_stream);
            std::vector<double> acc(stats.num_users, 0.0);
            for (std::size_t d = 0; d < config.se.rps_draws; ++d) {
                const auto se = user_se(stats, random_phase(N, phase_rng), pilots, config, se_seed);
                for (std::size_t k = 0; k < acc.size(); ++k)
                    acc[k] += se[k];
            }
            for (auto &a : acc)
                a /= static_cast<double>(config.se.rps_draws);
            row.user_se_mbps = std::move(acc);
        } else {
            row.user_se_mbps = user_se(stats, *cell.phase, pilots, config, se_seed);
        }
        row.mean_se_mbps = mean_of(row.user_se_mbps);
    }

    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

// ---------- COMPARISON ----------

const AlgorithmSummary *ComparisonTable::find(Algorithm a) const
{
    for (const auto &c : columns)
        if (c.algorithm == a)
            return &c;
    return nullptr;
}

ComparisonTable build_comparison(const std::vector<ResultRow> &rows,
                                 const std::vector<Algorithm> &order)
{
    ComparisonTable table;
    if (rows.empty())
        return table;
    table.scenario = rows.front().scenario;
    std::map<Algorithm, std::vector<const ResultRow *>> by_algorithm;
    for (const auto &r : rows) {
        if (r.scenario != table.scenario)
            throw ContractError("comparison mixes scenarios '" + table.scenario + "' and '" +
                                r.scenario + "'");
        by_algorithm[r.algorithm].push_back(&r);
    }
    std::optional<std::vector<std::uint64_t>> reference_seeds;
    for (Algorithm a : order) {
        auto it = by_algorithm.find(a);
        if (it == by_algorithm.end())
            continue;
        std::vector<std::uint64_t> seeds;
        for (const auto *r : it->second)
            seeds.push_back(r->seed);
        std::sort(seeds.begin(), seeds.end());
        if (!reference_seeds)
            reference_seeds = seeds;
        else if (*reference_seeds != seeds)
            throw ContractError("algorithm " + to_string(a) +
                                " was not run on the same geometry seeds");
        // identical algorithm listed twice yields identical columns
        if (table.find(a))
            {
                table.columns.push_back(*table.find(a));
                continue;
            }

        AlgorithmSummary s;
        s.algorithm = a;
        s.seeds = it->second.size();
        double sum = 0.0, se_sum = 0.0;
        bool all_se = true;
        for (const auto *r : it->second) {
            sum += r->final_nmse;
            if (r->mean_se_mbps)
                se_sum += *r->mean_se_mbps;
            else
                all_se = false;
        }
        const double n = static_cast<double>(s.seeds);
        s.mean_nmse = sum / n;
        double var = 0.0;
        for (const auto *r : it->second)
            var += (r->final_nmse - s.mean_nmse) * (r->final_nmse - s.mean_nmse);
        s.std_nmse = s.seeds > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        if (all_se)
            s.mean_se_mbps = se_sum / n;
        table.columns.push_back(s);
    }
    const auto *ade = table.find(Algorithm::ade);
    const auto *de = table.find(Algorithm::de);
    const auto *rps = table.find(Algorithm::rps);
    if (ade && de && de->mean_nmse > 0.0)
        table.ade_over_de = (de->mean_nmse - ade->mean_nmse) / de->mean_nmse;
    if (ade && rps && ade->mean_se_mbps && rps->mean_se_mbps && *rps->mean_se_mbps > 0.0)
        table.se_gain_over_rps = (*ade->mean_se_mbps - *rps->mean_se_mbps) / *rps->mean_se_mbps;
    return table;
}

// ---------- OUTPUT ----------

namespace {

std::string num(double x)
{
    return fmt::format("{:.10g}", x);
}

std::filesystem::path write_file(const std::filesystem::path &dir, const std::string &name,
                                 const std::string &content)
{
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
    return path;
}

std::vector<std::filesystem::path> write_outputs(const ExperimentConfig &config,
                                                 const std::vector<const CellResult *> &cells,
                                                 const ComparisonTable *table,
                                                 const std::vector<Algorithm> &order)
{
    std::filesystem::create_directories(config.output_dir);
    std::vector<std::filesystem::path> files;
    const bool se = config.se.enabled;

    std::string results = "scenario,algorithm,seed_index,seed,final_nmse,evaluations,generations";
    if (se)
        results += ",mean_se_mbps";
    if (config.record_wall_time)
        results += ",wall_time_s";
    results += "\n";
    std::string convergence =
        "scenario,algorithm,seed_index,generation,evaluations,best_nmse,mean_nmse,augmented,accepted\n";
    std::string users = "scenario,algorithm,seed_index,user,se_mbps\n";
    for (const CellResult *c : cells) {
        const ResultRow &r = c->row;
        const std::string alg = to_string(r.algorithm);
        results += fmt::format("{},{},{},{},{},{},{}", r.scenario, alg, r.seed_index, r.seed,
                               num(r.final_nmse), r.evaluations, r.generations);
        if (se)
            results += "," + num(r.mean_se_mbps.value_or(0.0));
        if (config.record_wall_time)
            results += "," + num(r.wall_time_s);
        results += "\n";
        for (const auto &t : c->trace.rows)
            convergence += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.scenario, alg,
                                       r.seed_index, t.generation, t.evaluations, num(t.best),
                                       num(t.mean), t.augmented ? 1 : 0, t.accepted);
        for (std::size_t k = 0; k < r.user_se_mbps.size(); ++k)
            users += fmt::format("{},{},{},{},{}\n", r.scenario, alg, r.seed_index, k,
                                 num(r.user_se_mbps[k]));
    }
    files.push_back(write_file(config.output_dir, "results.csv", results));
    files.push_back(write_file(config.output_dir, "convergence.csv", convergence));
    if (se)
        files.push_back(write_file(config.output_dir, "user_se.csv", users));

    if (table) {
        std::string header = "scenario,metric";
        for (Algorithm a : order)
            if (table->find(a))
                header += "," + to_string(a);
        std::string summary = header + "\n";
        auto metric_row = [&](const std::string &metric, auto value) {
            std::string line = table->scenario + "," + metric;
            for (Algorithm a : order)
                if (const auto *s = table->find(a))
                    line += "," + value(*s);
            summary += line + "\n";
        };
        metric_row("mean_nmse", [](const AlgorithmSummary &s) { return num(s.mean_nmse); });
        metric_row("std_nmse", [](const AlgorithmSummary &s) { return num(s.std_nmse); });
        metric_row("seeds", [](const AlgorithmSummary &s) { return std::to_string(s.seeds); });
        if (const auto *de = table->find(Algorithm::de); de && de->mean_nmse > 0.0)
            metric_row("nmse_improvement_over_de", [&](const AlgorithmSummary &s) {
                return num((de->mean_nmse - s.mean_nmse) / de->mean_nmse);
            });
        if (se) {
            metric_row("mean_se_mbps", [](const AlgorithmSummary &s) {
                return s.mean_se_mbps ? num(*s.mean_se_mbps) : std::string();
            });
            const auto *rps = table->find(Algorithm::rps);
            if (rps && rps->mean_se_mbps && *rps->mean_se_mbps > 0.0)
                metric_row("se_gain_over_rps", [&](const AlgorithmSummary &s) {
                    return s.mean_se_mbps
                               ? num((*s.mean_se_mbps - *rps->mean_se_mbps) / *rps->mean_se_mbps)
                               : std::string();
                });
        }
        files.push_back(write_file(config.output_dir, "summary.csv", summary));
    }
    return files;
}

ExperimentOutput run_cells(const ExperimentConfig &config, const std::vector<Algorithm> &order)
{
    config.validate();
    // Distinct algorithms only; duplicates in `order` reuse the same column.
    std::vector<Algorithm> algorithms;
    for (Algorithm a : order)
        if (std::find(algorithms.begin(), algorithms.end(), a) == algorithms.end())
            algorithms.push_back(a);

    const std::size_t tasks = config.geometry_seeds * algorithms.size();
    std::vector<std::optional<CellResult>> slots(tasks);
    std::vector<std::exception_ptr> errors(tasks);
    auto run_task = [&](std::size_t t) {
        try {
            slots[t] = run_cell(config, t / algorithms.size(), algorithms[t % algorithms.size()]);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };
    if (config.threads <= 1) {
        for (std::size_t t = 0; t < tasks; ++t)
            run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(config.threads, tasks); ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < tasks; t = next++)
                    run_task(t);
            });
    }

    ExperimentOutput out;
    std::vector<const CellResult *> done;
    std::vector<ResultRow> rows;
    for (std::size_t t = 0; t < tasks; ++t)
        if (slots[t]) {
            done.push_back(&*slots[t]);
            rows.push_back(slots[t]->row);
        }
    for (std::size_t t = 0; t < tasks; ++t)
        if (errors[t]) {
            // keep what finished before surfacing the failure
            write_outputs(config, done, nullptr, order);
            std::rethrow_exception(errors[t]);
        }

    out.table = build_comparison(rows, order);
    out.files = write_outputs(config, done, &out.table, order);
    for (auto &s : slots)
        out.cells.push_back(std::move(*s));
    return out;
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig &config)
{
    return run_cells(config, {config.algorithm});
}

ExperimentOutput run_comparison(const ExperimentConfig &config)
{
    return run_cells(config, config.compare);
}

} // namespace riscf
