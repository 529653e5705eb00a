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

#include "riscf/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace riscf {

namespace {

double uniform01(Rng &rng)
{
    return std::generate_canonical<double, 53>(rng);
}

std::size_t uniform_index(Rng &rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Genome random_genome(std::size_t dimension, Rng &rng)
{
    Genome g(dimension);
    for (auto &x : g)
        x = -1.0 + 2.0 * uniform01(rng);
    return g;
}

void check_dimension(std::size_t dimension)
{
    if (dimension < 1)
        throw ConfigError("optimizer: dimension must be at least 1");
}

TraceRow make_row(const Population &p, std::size_t generation, std::size_t evaluations,
                  bool augmented, std::size_t accepted)
{
    return {generation, evaluations, p[p.best_index()].f(), p.mean_fitness(), augmented, accepted};
}

OptimizationResult finish(const Population &p, ConvergenceTrace trace, OperationCounters counters,
                          std::size_t evaluations)
{
    OptimizationResult r;
    const auto &best = p[p.best_index()];
    r.best_genome = best.genome;
    r.best_fitness = best.f();
    r.best_phase = PhaseShiftVector::from_normalized(best.genome);
    r.trace = std::move(trace);
    r.counters = counters;
    r.counters.evaluations = evaluations;
    r.evaluations = evaluations;
    return r;
}

} // namespace

// ---------- basic types ----------

double Individual::f() const
{
    if (!fitness)
        throw ContractError("individual has not been evaluated");
    return *fitness;
}

std::vector<std::size_t> Population::ranking(std::uint64_t *comparisons) const
{
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> f(members.size());
    for (std::size_t i = 0; i < members.size(); ++i)
        f[i] = members[i].f();
    std::uint64_t count = 0;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        ++count;
        return f[a] < f[b] || (f[a] == f[b] && a < b);
    });
    if (comparisons)
        *comparisons += count;
    return order;
}

std::size_t Population::best_index() const
{
    if (members.empty())
        throw ContractError("empty population");
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
        if (members[i].f() < members[best].f())
            best = i;
    return best;
}

double Population::mean_fitness() const
{
    double s = 0.0;
    for (const auto &m : members)
        s += m.f();
    return s / static_cast<double>(members.size());
}

ShadeMemory::ShadeMemory(std::size_t size, double initial)
    : scale_factor(size, initial), crossover_rate(size, initial)
{
    if (size < 1)
        throw ConfigError("SHADE memory size must be at least 1");
}

std::size_t AdeConfig::lambda() const
{
    if (augmentation_count > 0)
        return augmentation_count;
    return (population + 9) / 10;
}

std::size_t AdeConfig::pbest_count() const
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(population) * pbest_fraction));
}

void AdeConfig::validate() const
{
    if (population < 4)
        throw ConfigError("ade.population must be at least 4");
    if (generations < 1)
        throw ConfigError("ade.generations must be at least 1");
    if (!(pbest_fraction > 0.0 && pbest_fraction <= 1.0))
        throw ConfigError("ade.pbest_fraction must lie in (0, 1]");
    if (pbest_count() < 1)
        throw ConfigError("ade: floor(population * pbest_fraction) must be at least 1");
    if (!(augmentation_tolerance >= 0.0))
        throw ConfigError("ade.augmentation_tolerance must be nonnegative");
    if (lambda() > population)
        throw ConfigError("ade.augmentation_count must not exceed the population");
    if (!(augmentation_sigma >= 0.0) || !std::isfinite(augmentation_sigma))
        throw ConfigError("ade.augmentation_sigma must be nonnegative");
    if (memory_size < 1)
        throw ConfigError("ade.memory_size must be at least 1");
}

void DeConfig::validate() const
{
    if (population < 4)
        throw ConfigError("de.population must be at least 4");
    if (generations < 1)
        throw ConfigError("de.generations must be at least 1");
    if (!(scale_factor > 0.0 && scale_factor <= 2.0))
        throw ConfigError("de.scale_factor must lie in (0, 2]");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw ConfigError("de.crossover_rate must lie in [0, 1]");
}

void GaConfig::validate() const
{
    if (population < 2)
        throw ConfigError("ga.population must be at least 2");
    if (generations < 1)
        throw ConfigError("ga.generations must be at least 1");
    if (tournament_size < 1)
        throw ConfigError("ga.tournament_size must be at least 1");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw ConfigError("ga.crossover_rate must lie in [0, 1]");
    if (!(blend_alpha >= 0.0))
        throw ConfigError("ga.blend_alpha must be nonnegative");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw ConfigError("ga.mutation_rate must lie in [0, 1]");
    if (!(mutation_sigma >= 0.0))
        throw ConfigError("ga.mutation_sigma must be nonnegative");
}

bool ConvergenceTrace::best_nonincreasing() const
{
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].best > rows[i - 1].best)
            return false;
    return true;
}

double wrap_unit(double x)
{
    double y = std::fmod(x + 1.0, 2.0);
    if (y < 0.0)
        y += 2.0;
    y -= 1.0;
    return y >= 1.0 ? -1.0 : y;
}

std::size_t evaluate_all(std::span<Individual> members, const Objective &objective,
                         std::size_t threads)
{
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < members.size(); ++i)
        if (!members[i].evaluated())
            todo.push_back(i);
    if (threads <= 1 || todo.size() < 2) {
        for (std::size_t i : todo)
            members[i].fitness = objective(members[i].genome);
        return todo.size();
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < todo.size(); j = next++) {
            try {
                auto &m = members[todo[j]];
                m.fitness = objective(m.genome);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    const std::size_t n = std::min(threads, todo.size());
    for (std::size_t t = 0; t < n; ++t)
        pool.emplace_back(worker);
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
    return todo.size();
}

// ---------- ADE OPERATORS ----------

std::pair<Population, Archive> initialize_population(std::size_t population, std::size_t dimension,
                                                     const Objective &objective, Rng &rng,
                                                     std::size_t threads)
{
    if (population < 4)
        throw ConfigError("population must be at least 4");
    check_dimension(dimension);
    Population p;
    p.members.resize(population);
    for (auto &m : p.members)
        m.genome = random_genome(dimension, rng);
    evaluate_all(p.members, objective, threads);
    Archive a = p;
    return {std::move(p), std::move(a)};
}

ControlParameters sample_parameters(const ShadeMemory &memory, Rng &rng)
{
    const std::size_t r = uniform_index(rng, memory.size());
    std::cauchy_distribution<double> cauchy(memory.scale_factor[r], 0.1);
    double f = cauchy(rng);
    while (!(f > 0.0))
        f = cauchy(rng);
    std::normal_distribution<double> normal(memory.crossover_rate[r], 0.1);
    const double cr = normal(rng);
    return {std::min(f, 1.0), std::clamp(cr, 0.0, 1.0)};
}

MutationDonors choose_donors(const std::vector<std::size_t> &ranking, std::size_t parent,
                             std::size_t pbest_count, std::size_t archive_size, Rng &rng)
{
    const std::size_t n = ranking.size();
    if (n < 4 || pbest_count < 1 || pbest_count > n)
        throw ConfigError("mutation needs at least 4 individuals and a nonempty pbest pool");
    MutationDonors d;
    d.pbest = ranking[uniform_index(rng, pbest_count)];
    do {
        d.r1 = uniform_index(rng, n);
    } while (d.r1 == parent || d.r1 == d.pbest);
    do {
        d.r2 = uniform_index(rng, n + archive_size);
    } while (d.r2 == parent || d.r2 == d.pbest || d.r2 == d.r1);
    return d;
}

Genome mutate_pbest1(const Population &population, const Archive &archive,
                     const MutationDonors &donors, double scale_factor)
{
    const std::size_t n = population.size();
    const Genome &base = population[donors.pbest].genome;
    const Genome &a = population[donors.r1].genome;
    const Genome &b = donors.r2 < n ? population[donors.r2].genome : archive[donors.r2 - n].genome;
    Genome u(base.size());
    for (std::size_t t = 0; t < u.size(); ++t)
        u[t] = base[t] + scale_factor * (a[t] - b[t]);
    return u;
}

Genome mutate_pbest1(const Population &population, const Archive &archive, std::size_t parent,
                     double scale_factor, double pbest_fraction, Rng &rng)
{
    const auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(population.size()) * pbest_fraction));
    const auto donors = choose_donors(population.ranking(), parent, count, archive.size(), rng);
    return mutate_pbest1(population, archive, donors, scale_factor);
}

Genome repair_bounds(const Genome &mutant, const Genome &parent)
{
    if (mutant.size() != parent.size())
        throw ContractError("repair_bounds: length mismatch");
    Genome out = mutant;
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (out[t] > 1.0)
            out[t] = (1.0 + parent[t]) / 2.0;
        else if (out[t] < -1.0)
            out[t] = (-1.0 + parent[t]) / 2.0;
    }
    return out;
}

Genome crossover(const Genome &parent, const Genome &mutant, double crossover_rate, Rng &rng)
{
    if (mutant.size() != parent.size() || parent.empty())
        throw ContractError("crossover: length mismatch");
    const std::size_t t_rand = uniform_index(rng, parent.size());
    Genome trial(parent.size());
    for (std::size_t t = 0; t < parent.size(); ++t) {
        const double u = uniform01(rng);
        trial[t] = (u <= crossover_rate || t == t_rand) ? mutant[t] : parent[t];
    }
    return trial;
}

SelectionOutcome select(Individual &slot, const Individual &trial, Individual &archive_slot)
{
    const double f_parent = slot.f();
    const double f_trial = trial.f();
    if (f_trial <= f_parent) {
        archive_slot = std::move(slot);
        slot = trial;
        return {true, f_parent - f_trial};
    }
    return {};
}

AugmentationOutcome augment(Population &next, Archive &archive, double best_before,
                            double best_after, const AdeConfig &config,
                            const Objective &objective, Rng &rng, std::size_t max_evaluations,
                            OperationCounters *counters)
{
    AugmentationOutcome out;
    const double eps = config.augmentation_tolerance;
    const double sigma = config.augmentation_sigma;
    if (eps <= 0.0 || sigma <= 0.0 || !(std::abs(best_after - best_before) < eps))
        return out;
    if (archive.size() != next.size())
        throw ContractError("archive and population sizes differ");
    const std::size_t lambda = std::min({config.lambda(), next.size(), max_evaluations});
    if (lambda == 0)
        return out;
    out.triggered = true;

    const auto order = next.ranking(counters ? &counters->sort_comparisons : nullptr);
    std::normal_distribution<double> beta_law(0.0, sigma);
    std::vector<Individual> shifted(lambda);
    for (std::size_t j = 0; j < lambda; ++j) {
        const double beta = beta_law(rng);
        const Genome &w = next[order[j]].genome;
        shifted[j].genome.resize(w.size());
        for (std::size_t t = 0; t < w.size(); ++t)
            shifted[j].genome[t] = wrap_unit(w[t] + beta);
        if (counters)
            counters->augmentation_genes += w.size();
    }
    out.evaluations = evaluate_all(shifted, objective, config.threads);

    for (std::size_t j = 0; j < lambda; ++j) {
        Individual &member = next[order[j]];
        if (shifted[j].f() < member.f()) {
            member = std::move(shifted[j]);
            ++out.population_replacements;
        } else if (shifted[j].f() < archive[j].f()) {
            archive[j] = std::move(shifted[j]);
            ++out.archive_replacements;
        }
    }
    return out;
}

void update_memory(ShadeMemory &memory, std::span<const double> successful_f,
                   std::span<const double> successful_cr, std::span<const double> improvements)
{
    if (successful_f.size() != successful_cr.size() || successful_f.size() != improvements.size())
        throw ContractError("update_memory: success lists are not aligned");
    if (successful_f.empty())
        return;
    const double total = std::accumulate(improvements.begin(), improvements.end(), 0.0);
    double f_sq = 0.0, f_lin = 0.0, cr = 0.0;
    for (std::size_t s = 0; s < successful_f.size(); ++s) {
        const double w = total > 0.0 ? improvements[s] / total
                                      : 1.0 / static_cast<double>(successful_f.size());
        f_sq += w * successful_f[s] * successful_f[s];
        f_lin += w * successful_f[s];
        cr += w * successful_cr[s];
    }
    if (f_lin > 0.0)
        memory.scale_factor[memory.cursor] = std::clamp(f_sq / f_lin, 1e-12, 1.0);
    memory.crossover_rate[memory.cursor] = std::clamp(cr, 0.0, 1.0);
    memory.cursor = (memory.cursor + 1) % memory.size();
}

// ---------- DRIVERS ----------

OptimizationResult run_ade(const Objective &objective, std::size_t dimension,
                           const AdeConfig &config, Rng &rng)
{
    config.validate();
    check_dimension(dimension);
    const std::size_t I = config.population;
    const std::size_t budget = config.max_evaluations > 0
                                   ? config.max_evaluations
                                   : I + config.generations * (I + config.lambda());
    if (budget < I)
        throw ConfigError("ade.max_evaluations is smaller than the population");

    OperationCounters counters;
    auto [pop, archive] = initialize_population(I, dimension, objective, rng, config.threads);
    std::size_t evaluations = I;
    ConvergenceTrace trace;
    trace.rows.push_back(make_row(pop, 0, evaluations, false, 0));
    ShadeMemory memory(config.memory_size);

    for (std::size_t g = 1; g <= config.generations; ++g) {
        if (evaluations + I > budget)
            break;
        const auto order = pop.ranking(&counters.sort_comparisons);
        const double best_before = pop[order.front()].f();

        std::vector<Individual> trials(I);
        std::vector<ControlParameters> params(I);
        for (std::size_t i = 0; i < I; ++i) {
            params[i] = sample_parameters(memory, rng);
            const auto donors = choose_donors(order, i, config.pbest_count(), archive.size(), rng);
            Genome mutant = mutate_pbest1(pop, archive, donors, params[i].scale_factor);
            mutant = repair_bounds(mutant, pop[i].genome);
            trials[i].genome = crossover(pop[i].genome, mutant, params[i].crossover_rate, rng);
            counters.mutation_genes += dimension;
            counters.crossover_genes += dimension;
        }
        evaluations += evaluate_all(trials, objective, config.threads);

        Population next = pop;
        std::vector<double> s_f, s_cr, s_gain;
        std::size_t accepted = 0;
        for (std::size_t i = 0; i < I; ++i) {
            const auto outcome = select(next[i], trials[i], archive[i]);
            ++counters.selections;
            if (outcome.trial_survived) {
                ++accepted;
                if (outcome.improvement > 0.0) {
                    s_f.push_back(params[i].scale_factor);
                    s_cr.push_back(params[i].crossover_rate);
                    s_gain.push_back(outcome.improvement);
                }
            }
        }

        const double best_after = next[next.best_index()].f();
        const auto aug = augment(next, archive, best_before, best_after, config, objective, rng,
                                 budget - evaluations, &counters);
        evaluations += aug.evaluations;

        update_memory(memory, s_f, s_cr, s_gain);
        ++counters.memory_updates;

        next.generation = pop.generation + 1;
        pop = std::move(next);
        trace.rows.push_back(make_row(pop, g, evaluations, aug.triggered, accepted));
    }
    return finish(pop, std::move(trace), counters, evaluations);
}

OptimizationResult run_canonical_de(const Objective &objective, std::size_t dimension,
                                    const DeConfig &config, Rng &rng)
{
    config.validate();
    check_dimension(dimension);
    const std::size_t I = config.population;
    const std::size_t budget =
        config.max_evaluations > 0 ? config.max_evaluations : I + config.generations * I;
    if (budget < I)
        throw ConfigError("de.max_evaluations is smaller than the population");

    OperationCounters counters;
    auto pop = initialize_population(I, dimension, objective, rng, config.threads).first;
    std::size_t evaluations = I;
    ConvergenceTrace trace;
    trace.rows.push_back(make_row(pop, 0, evaluations, false, 0));

    for (std::size_t g = 1; g <= config.generations; ++g) {
        if (evaluations + I > budget)
            break;
        std::vector<Individual> trials(I);
        for (std::size_t i = 0; i < I; ++i) {
            std::size_t r1, r2, r3;
            do {
                r1 = uniform_index(rng, I);
            } while (r1 == i);
            do {
                r2 = uniform_index(rng, I);
            } while (r2 == i || r2 == r1);
            do {
                r3 = uniform_index(rng, I);
            } while (r3 == i || r3 == r1 || r3 == r2);
            Genome mutant(dimension);
            for (std::size_t t = 0; t < dimension; ++t)
                mutant[t] = pop[r1].genome[t] +
                            config.scale_factor * (pop[r2].genome[t] - pop[r3].genome[t]);
            mutant = repair_bounds(mutant, pop[i].genome);
            trials[i].genome = crossover(pop[i].genome, mutant, config.crossover_rate, rng);
            counters.mutation_genes += dimension;
            counters.crossover_genes += dimension;
        }
        evaluations += evaluate_all(trials, objective, config.threads);

        std::size_t accepted = 0;
        for (std::size_t i = 0; i < I; ++i) {
            ++counters.selections;
            if (trials[i].f() <= pop[i].f()) {
                pop[i] = std::move(trials[i]);
                ++accepted;
            }
        }
        ++pop.generation;
        trace.rows.push_back(make_row(pop, g, evaluations, false, accepted));
    }
    return finish(pop, std::move(trace), counters, evaluations);
}

OptimizationResult run_ga(const Objective &objective, std::size_t dimension,
                          const GaConfig &config, Rng &rng)
{
    config.validate();
    check_dimension(dimension);
    const std::size_t I = config.population;
    const std::size_t budget =
        config.max_evaluations > 0 ? config.max_evaluations : I + config.generations * I;
    if (budget < I)
        throw ConfigError("ga.max_evaluations is smaller than the population");
    const double mutation_rate =
        config.mutation_rate > 0.0 ? config.mutation_rate : 1.0 / static_cast<double>(dimension);

    OperationCounters counters;
    Population pop;
    pop.members.resize(I);
    for (auto &m : pop.members)
        m.genome = random_genome(dimension, rng);
    std::size_t evaluations = evaluate_all(pop.members, objective, config.threads);
    ConvergenceTrace trace;
    trace.rows.push_back(make_row(pop, 0, evaluations, false, 0));

    auto tournament = [&]() -> const Individual & {
        std::size_t winner = uniform_index(rng, I);
        for (std::size_t s = 1; s < config.tournament_size; ++s) {
            const std::size_t c = uniform_index(rng, I);
            if (pop[c].f() < pop[winner].f() || (pop[c].f() == pop[winner].f() && c < winner))
                winner = c;
        }
        return pop[winner];
    };
    std::normal_distribution<double> mutation(0.0, std::max(config.mutation_sigma, 1e-300));

    for (std::size_t g = 1; g <= config.generations; ++g) {
        if (evaluations + (I - 1) > budget)
            break;
        const auto order = pop.ranking(&counters.sort_comparisons);
        Population next;
        next.members.reserve(I);
        next.members.push_back(pop[order.front()]);
        for (std::size_t c = 1; c < I; ++c) {
            const Individual &a = tournament();
            const Individual &b = tournament();
            Individual child;
            child.genome.resize(dimension);
            const bool blend = uniform01(rng) < config.crossover_rate;
            for (std::size_t t = 0; t < dimension; ++t) {
                double x = a.genome[t];
                if (blend) {
                    const double lo = std::min(a.genome[t], b.genome[t]);
                    const double hi = std::max(a.genome[t], b.genome[t]);
                    const double span = hi - lo;
                    x = lo - config.blend_alpha * span +
                        (1.0 + 2.0 * config.blend_alpha) * span * uniform01(rng);
                }
                if (uniform01(rng) < mutation_rate && config.mutation_sigma > 0.0)
                    x += mutation(rng);
                child.genome[t] = wrap_unit(x);
            }
            counters.crossover_genes += dimension;
            counters.mutation_genes += dimension;
            next.members.push_back(std::move(child));
        }
        evaluations += evaluate_all(next.members, objective, config.threads);
        counters.selections += I;
        next.generation = pop.generation + 1;
        pop = std::move(next);
        trace.rows.push_back(make_row(pop, g, evaluations, false, I - 1));
    }
    return finish(pop, std::move(trace), counters, evaluations);
}

// ---------- BASELINES ----------

PhaseShiftVector random_phase(std::size_t n, Rng &rng)
{
    if (n < 1)
        throw ConfigError("random phase: N must be at least 1");
    std::vector<double> theta(n);
    for (auto &t : theta)
        t = -pi + 2.0 * pi * uniform01(rng);
    return PhaseShiftVector(std::move(theta));
}

PhaseShiftVector equal_phase(std::size_t n)
{
    if (n < 1)
        throw ConfigError("equal phase: N must be at least 1");
    return PhaseShiftVector::zeros(n);
}

} // namespace riscf
