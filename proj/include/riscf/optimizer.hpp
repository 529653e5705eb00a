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

#ifndef RISCF_OPTIMIZER_HPP
#define RISCF_OPTIMIZER_HPP

#include "riscf/common.hpp"
#include "riscf/phase.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace riscf {

// Genes live in [-1, 1]; the decoded phase of gene t is pi * gene_t.
using Genome = std::vector<double>;

// Must be a pure function of the genome; it may be called from several threads at once.
using Objective = std::function<double(std::span<const double>)>;

struct Individual {
    Genome genome;
    std::optional<double> fitness;

    bool evaluated() const { return fitness.has_value(); }
    // Throws ContractError when unevaluated.
    double f() const;
};

struct Population {
    std::vector<Individual> members;
    std::size_t generation = 1;

    std::size_t size() const { return members.size(); }
    Individual &operator[](std::size_t i) { return members[i]; }
    const Individual &operator[](std::size_t i) const { return members[i]; }

    // Indices sorted by ascending fitness, ties by lower index. Counts comparisons when
    // a counter is given.
    std::vector<std::size_t> ranking(std::uint64_t *comparisons = nullptr) const;
    std::size_t best_index() const;
    double mean_fitness() const;
};

// Displaced parents, slot-aligned with the population and always of the same size.
using Archive = Population;

// Success-history memory of SHADE.
struct ShadeMemory {
    std::vector<double> scale_factor;   // M_F, entries in (0, 1]
    std::vector<double> crossover_rate; // M_CR, entries in [0, 1]
    std::size_t cursor = 0;

    explicit ShadeMemory(std::size_t size = 6, double initial = 0.5);
    std::size_t size() const { return scale_factor.size(); }
};

struct AdeConfig {
    std::size_t population = 50;            // I
    std::size_t generations = 500;          // G_MAX
    double pbest_fraction = 0.11;           // p
    double augmentation_tolerance = 1e-6;   // epsilon
    std::size_t augmentation_count = 0;     // lambda; 0 selects ceil(I / 10)
    double augmentation_sigma = 0.1;        // standard deviation of beta, normalized units
    std::size_t memory_size = 6;            // H
    std::size_t max_evaluations = 0;        // 0: I + G_MAX (I + lambda)
    std::size_t threads = 1;

    std::size_t lambda() const;
    std::size_t pbest_count() const;
    void validate() const;
};

struct DeConfig {
    std::size_t population = 50;
    std::size_t generations = 500;
    double scale_factor = 0.5;
    double crossover_rate = 0.9;
    std::size_t max_evaluations = 0; // 0: I + G_MAX I
    std::size_t threads = 1;

    void validate() const;
};

struct GaConfig {
    std::size_t population = 50;
    std::size_t generations = 500;
    std::size_t tournament_size = 2;
    double crossover_rate = 0.9;
    double blend_alpha = 0.5;     // BLX-alpha
    double mutation_rate = 0.0;   // per gene; 0 selects 1 / N
    double mutation_sigma = 0.1;
    std::size_t max_evaluations = 0; // 0: I + G_MAX I
    std::size_t threads = 1;

    void validate() const;
};

struct TraceRow {
    std::size_t generation = 0; // 0 is the initial population
    std::size_t evaluations = 0; // cumulative
    double best = 0.0;
    double mean = 0.0;
    bool augmented = false;
    std::size_t accepted = 0; // trials that survived selection
};

struct ConvergenceTrace {
    std::vector<TraceRow> rows;

    bool best_nonincreasing() const;
};

// Work items per operator, for checking the per-generation cost model.
struct OperationCounters {
    std::uint64_t sort_comparisons = 0;
    std::uint64_t mutation_genes = 0;
    std::uint64_t crossover_genes = 0;
    std::uint64_t selections = 0;
    std::uint64_t augmentation_genes = 0;
    std::uint64_t memory_updates = 0;
    std::uint64_t evaluations = 0;
};

struct OptimizationResult {
    Genome best_genome;
    double best_fitness = 0.0;
    PhaseShiftVector best_phase;
    ConvergenceTrace trace;
    OperationCounters counters;
    std::size_t evaluations = 0;
};

// Periodic wrap onto [-1, 1).
double wrap_unit(double x);

// Evaluate every unevaluated member, possibly concurrently; results do not depend on the
// thread count. Returns the number of evaluations performed.
std::size_t evaluate_all(std::span<Individual> members, const Objective &objective,
                         std::size_t threads = 1);

// ---------- ADE OPERATORS ----------

// Uniform genes on [-1, 1], evaluated; the archive starts as a copy of the population.
std::pair<Population, Archive> initialize_population(std::size_t population, std::size_t dimension,
                                                     const Objective &objective, Rng &rng,
                                                     std::size_t threads = 1);

struct ControlParameters {
    double scale_factor = 0.5;
    double crossover_rate = 0.5;
};

// F ~ Cauchy(M_F[r], 0.1) redrawn while <= 0 and clipped to 1; CR ~ N(M_CR[r], 0.1) clipped
// to [0, 1]; r uniform over the memory slots.
ControlParameters sample_parameters(const ShadeMemory &memory, Rng &rng);

struct MutationDonors {
    std::size_t pbest = 0, r1 = 0, r2 = 0; // r2 >= I addresses archive slot r2 - I
};

// Draws pbest among the ranking's first pbest_count entries, r1 from the population and r2
// from population + archive, with r1, r2 distinct from each other, from pbest and from
// the parent.
MutationDonors choose_donors(const std::vector<std::size_t> &ranking, std::size_t parent,
                             std::size_t pbest_count, std::size_t archive_size, Rng &rng);

// DE/pbest/1: x_pbest + F (x_r1 - x_r2).
Genome mutate_pbest1(const Population &population, const Archive &archive,
                     const MutationDonors &donors, double scale_factor);

// Convenience overload drawing the donors itself.
Genome mutate_pbest1(const Population &population, const Archive &archive, std::size_t parent,
                     double scale_factor, double pbest_fraction, Rng &rng);

// Out-of-range genes move halfway from the parent gene to the violated bound.
Genome repair_bounds(const Genome &mutant, const Genome &parent);

// Binomial crossover; gene t_rand always comes from the mutant.
Genome crossover(const Genome &parent, const Genome &mutant, double crossover_rate, Rng &rng);

struct SelectionOutcome {
    bool trial_survived = false;
    double improvement = 0.0; // f(parent) - f(trial) when the trial survives
};

// Keeps the trial iff f(trial) <= f(parent); the displaced parent goes to archive_slot.
SelectionOutcome select(Individual &slot, const Individual &trial, Individual &archive_slot);

struct AugmentationOutcome {
    bool triggered = false;
    std::size_t evaluations = 0;
    std::size_t population_replacements = 0;
    std::size_t archive_replacements = 0;
};

// Shifts the lambda best members by a common N(0, sigma^2) offset when the generation
// improved the best fitness by less than epsilon. Disabled when epsilon, sigma or lambda
// is zero. At most max_evaluations members are tried.
AugmentationOutcome augment(Population &next, Archive &archive, double best_before,
                            double best_after, const AdeConfig &config,
                            const Objective &objective, Rng &rng,
                            std::size_t max_evaluations = static_cast<std::size_t>(-1),
                            OperationCounters *counters = nullptr);

// Weighted Lehmer mean of F and weighted mean of CR into the current slot, then advance.
// No-op without successes.
void update_memory(ShadeMemory &memory, std::span<const double> successful_f,
                   std::span<const double> successful_cr, std::span<const double> improvements);

// ---------- DRIVERS ----------

OptimizationResult run_ade(const Objective &objective, std::size_t dimension,
                           const AdeConfig &config, Rng &rng);

// DE/rand/1/bin with fixed F and CR, no archive and no augmentation.
OptimizationResult run_canonical_de(const Objective &objective, std::size_t dimension,
                                    const DeConfig &config, Rng &rng);

// Tournament selection, BLX-alpha crossover, Gaussian mutation, elitism of one.
OptimizationResult run_ga(const Objective &objective, std::size_t dimension,
                          const GaConfig &config, Rng &rng);

// ---------- NON-OPTIMIZED BASELINES ----------

PhaseShiftVector random_phase(std::size_t n, Rng &rng);
PhaseShiftVector equal_phase(std::size_t n);

} // namespace riscf

#endif
