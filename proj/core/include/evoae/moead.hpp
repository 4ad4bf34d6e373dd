#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "evoae/encoding.hpp"
#include "evoae/rng.hpp"

namespace evoae {

/// Non-negative weights summing to 1, one per objective.
struct WeightVector {
    std::vector<double> lambda;

    std::size_t size() const { return lambda.size(); }
    /// Index of the objective when this is a unit vector, otherwise nullopt.
    std::optional<std::size_t> unit_axis() const;
};

/// Componentwise best objective values seen so far (z*).
struct ReferencePoint {
    std::vector<double> z;

    static ReferencePoint unset(std::size_t n_objectives);
    /// z_j <- min(z_j, f_j).
    void update(std::span<const double> f);
};

ReferencePoint update_reference(ReferencePoint z, std::span<const double> f);

struct Individual {
    std::vector<double> genotype;
    std::vector<double> objectives;
    double violation = 0.0;
    bool evaluated = false;

    bool feasible() const { return violation == 0.0; }
};

struct Evaluation {
    std::vector<double> objectives;
    double violation = 0.0;
};

/// What the engine optimizes: bounded real genotypes, N_f minimized
/// objectives and an aggregate constraint violation (0 when feasible).
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::size_t objective_count() const = 0;
    virtual const Bounds& bounds() const = 0;
    /// Must be safe to call concurrently.
    virtual Evaluation evaluate(std::span<const double> genotype) const = 0;
    /// `count` genotypes; the default samples count-1 uniformly within the
    /// bounds and appends the all-zero genotype.
    virtual std::vector<std::vector<double>> initial_genotypes(std::size_t count, Rng& rng) const;
    /// Oracle queries one evaluation costs; used for budget accounting.
    virtual std::size_t queries_per_evaluation() const { return 1; }
};

struct RunConfig {
    std::size_t population_size = 100;  // N_D
    std::size_t generations = 100;      // N_g
    std::size_t neighborhood_size = 10; // N_n
    double delta = 0.8;
    std::size_t max_replacements = 1;   // n_r
    double cr = 0.9;
    double f = 0.5;
    std::optional<double> mutation_probability;  // defaults to 1 / genotype length
    double eta = 20.0;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> evaluation_budget;  // oracle queries
    std::size_t threads = 1;

    void validate(std::size_t n_objectives) const;
    double mutation_rate(std::size_t genotype_length) const;
};

struct Subproblem {
    std::size_t index = 0;
    WeightVector weight;
    std::vector<std::size_t> neighbors;  // B(i), nearest first, includes index
    Individual incumbent;
    double utility = 1.0;
    std::vector<double> utility_anchor;  // objectives at the last utility update
};

/// Simplex-lattice weights for 2 and 3 objectives (unit vectors always
/// included), random normalized vectors beyond the lattice and for N_f > 3.
std::vector<WeightVector> generate_weights(std::size_t n_objectives, std::size_t count, std::uint64_t seed);

/// N_n nearest weight vectors by Euclidean distance, ties by index.
std::vector<std::vector<std::size_t>> neighborhoods(std::span<const WeightVector> weights, std::size_t size);

/// max_i lambda_i * |f_i - z_i|.
double tchebycheff(std::span<const double> f, const WeightVector& weight, std::span<const double> z);

/// Coordinatewise DE/rand/1 with binomial choice: x1 + F (x2 - x3) with
/// probability CR, else x1; clamped into the bounds.
std::vector<double> de_crossover(std::span<const double> x1, std::span<const double> x2, std::span<const double> x3,
                                 double cr, double f, const Bounds& bounds, Rng& rng);

/// The polynomial-mutation step for a uniform draw u in [0, 1]; lies in [-1, 1].
double polynomial_delta(double u, double eta);

/// Each coordinate mutated with probability p_m by polynomial_delta * (upper - lower); clamped.
std::vector<double> polynomial_mutation(std::span<const double> y, double p_m, double eta, const Bounds& bounds,
                                        Rng& rng);

/// Feasibility-first replacement test of candidate y against incumbent x
/// under subproblem weight lambda and reference z.
bool replaces(const Individual& y, const Individual& x, const WeightVector& weight, const ReferencePoint& z);

/// floor(N_D / 5) - N_f; throws ConfigError when < 1.
std::size_t tournament_count(std::size_t population_size, std::size_t n_objectives);

/// Boundary (unit-weight) subproblems first, then floor(N_D/5) - N_f
/// size-10 utility tournaments over the remaining subproblems. Ties go to
/// the candidate drawn first.
std::vector<std::size_t> select_subproblems(std::span<const Subproblem> subproblems, std::size_t n_objectives,
                                            Rng& rng, std::size_t tournament_size = 10);

/// B(i) with probability delta, otherwise every subproblem index.
std::vector<std::size_t> choose_mating_pool(const Subproblem& subproblem, std::size_t population_size, double delta,
                                            Rng& rng);

/// Visits the pool in random order and replaces incumbents y beats, stopping
/// after max_replacements. Returns the number of replacements.
std::size_t replace_neighbors(std::vector<Subproblem>& subproblems, const Individual& y,
                              std::vector<std::size_t> pool, std::size_t max_replacements, const ReferencePoint& z,
                              Rng& rng);

/// a is no worse than b everywhere and strictly better somewhere (minimization).
bool dominates(std::span<const double> a, std::span<const double> b);

/// Feasible individuals that are mutually non-dominated, in insertion order.
/// A candidate whose objective vector equals a member's is rejected.
class Archive {
public:
    bool add(const Individual& candidate);
    const std::vector<Individual>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    void clear() { members_.clear(); }

private:
    std::vector<Individual> members_;
};

/// Non-dominated subset (by objectives only), insertion order kept.
std::vector<Individual> nondominated(std::span<const Individual> individuals);

struct RunResult {
    std::vector<Individual> population;
    std::vector<Individual> archive;
    std::size_t generations = 0;
    std::uint64_t evaluations = 0;
    bool budget_exhausted = false;
};

/// Constrained MOEA/D with dynamic resource allocation.
///
/// A generation draws offspring for every selected subproblem from the
/// population as it stood at the start of the generation, evaluates them
/// (optionally on several threads), then applies reference-point and
/// neighborhood updates sequentially in selection order. If an evaluation
/// throws, the engine state (including the generator) is rolled back to the
/// start of that generation, so a checkpoint taken afterwards resumes
/// exactly.
class Moead {
public:
    Moead(const Problem& problem, RunConfig config);

    void initialize();
    /// One generation. Returns false when nothing was done (generation limit
    /// reached or evaluation budget exhausted).
    bool step();
    RunResult run(const std::function<void(const Moead&)>& on_generation = {});

    bool initialized() const { return initialized_; }
    bool finished() const;
    std::size_t generation() const { return generation_; }
    std::uint64_t evaluations() const { return evaluations_; }
    bool budget_exhausted() const { return budget_exhausted_; }

    const RunConfig& config() const { return config_; }
    const std::vector<Subproblem>& subproblems() const { return subproblems_; }
    const ReferencePoint& reference() const { return reference_; }
    const Archive& archive() const { return archive_; }
    std::vector<Individual> population() const;
    RunResult result() const;

    void save_checkpoint(const std::filesystem::path& path) const;
    /// Restores state saved by an engine with the same config and problem shape.
    void load_checkpoint(const std::filesystem::path& path);

private:
    std::vector<Individual> evaluate_all(std::vector<std::vector<double>> genotypes);
    void update_utilities();

    const Problem& problem_;
    RunConfig config_;
    std::size_t n_objectives_;
    Rng rng_;
    std::vector<Subproblem> subproblems_;
    ReferencePoint reference_;
    Archive archive_;
    std::size_t generation_ = 0;
    std::uint64_t evaluations_ = 0;
    bool initialized_ = false;
    bool budget_exhausted_ = false;
};

} // namespace evoae
