#include "evoae/moead.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "evoae/error.hpp"

namespace evoae {

std::optional<std::size_t> WeightVector::unit_axis() const {
    std::optional<std::size_t> axis;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] == 1.0 && !axis) axis = i;
        else if (lambda[i] != 0.0) return std::nullopt;
    }
    return axis;
}

ReferencePoint ReferencePoint::unset(std::size_t n_objectives) {
    return {std::vector<double>(n_objectives, std::numeric_limits<double>::infinity())};
}

void ReferencePoint::update(std::span<const double> f) {
    if (f.size() != z.size()) throw ContractError("update_reference: length mismatch");
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = std::min(z[j], f[j]);
}

ReferencePoint update_reference(ReferencePoint z, std::span<const double> f) {
    z.update(f);
    return z;
}

std::vector<std::vector<double>> Problem::initial_genotypes(std::size_t count, Rng& rng) const {
    const auto& b = bounds();
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i + 1 < count; ++i) {
        std::vector<double> g(b.size());
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = b.lower[k] + uniform01(rng) * (b.upper[k] - b.lower[k]);
        out.push_back(std::move(g));
    }
    if (count > 0) {
        std::vector<double> zero(b.size(), 0.0);
        for (std::size_t k = 0; k < zero.size(); ++k) zero[k] = std::clamp(0.0, b.lower[k], b.upper[k]);
        out.push_back(std::move(zero));
    }
    return out;
}

void RunConfig::validate(std::size_t n_objectives) const {
    if (population_size == 0) throw ConfigError("population_size must be > 0");
    if (neighborhood_size < 3) throw ConfigError("neighborhood_size must be >= 3 (DE needs two mates besides the parent)");
    if (neighborhood_size > population_size) throw ConfigError("neighborhood_size must not exceed population_size");
    if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must be a probability");
    if (!(cr >= 0.0 && cr <= 1.0)) throw ConfigError("cr must be a probability");
    if (!std::isfinite(f)) throw ConfigError("f must be finite");
    if (mutation_probability && !(*mutation_probability >= 0.0 && *mutation_probability <= 1.0))
        throw ConfigError("mutation_probability must be a probability");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
    if (max_replacements == 0) throw ConfigError("max_replacements must be >= 1");
    if (population_size < n_objectives) throw ConfigError("population_size must be >= the number of objectives");
    tournament_count(population_size, n_objectives);
}

double RunConfig::mutation_rate(std::size_t genotype_length) const {
    if (mutation_probability) return *mutation_probability;
    return genotype_length == 0 ? 0.0 : 1.0 / static_cast<double>(genotype_length);
}

std::vector<WeightVector> generate_weights(std::size_t n_objectives, std::size_t count, std::uint64_t seed) {
    if (n_objectives < 2) throw ConfigError("generate_weights: at least two objectives required");
    if (count < n_objectives) throw ConfigError("generate_weights: need at least as many weight vectors as objectives");
    std::vector<WeightVector> out;
    out.reserve(count);

    if (n_objectives == 2) {
        const auto h = static_cast<double>(count - 1);
        for (std::size_t k = 0; k < count; ++k)
            out.push_back({{static_cast<double>(k) / h, static_cast<double>(count - 1 - k) / h}});
        return out;
    }

    if (n_objectives == 3) {
        std::size_t h = 1;
        while ((h + 2) * (h + 3) / 2 <= count) ++h;
        const auto hd = static_cast<double>(h);
        for (std::size_t i = 0; i <= h; ++i)
            for (std::size_t j = 0; i + j <= h; ++j) {
                const std::size_t k = h - i - j;
                out.push_back({{static_cast<double>(i) / hd, static_cast<double>(j) / hd, static_cast<double>(k) / hd}});
            }
    } else {
        for (std::size_t a = 0; a < n_objectives; ++a) {
            WeightVector w{std::vector<double>(n_objectives, 0.0)};
            w.lambda[a] = 1.0;
            out.push_back(std::move(w));
        }
    }

    Rng rng(seed);
    while (out.size() < count) {
        WeightVector w{std::vector<double>(n_objectives)};
        double sum = 0.0;
        for (double& v : w.lambda) {
            v = -std::log1p(-uniform01(rng));
            sum += v;
        }
        if (!(sum > 0.0)) continue;
        for (double& v : w.lambda) v /= sum;
        if (std::find_if(out.begin(), out.end(), [&](const WeightVector& o) { return o.lambda == w.lambda; }) != out.end())
            continue;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<std::vector<std::size_t>> neighborhoods(std::span<const WeightVector> weights, std::size_t size) {
    if (size > weights.size()) throw ConfigError("neighborhood larger than the number of weight vectors");
    std::vector<std::vector<std::size_t>> out(weights.size());
    std::vector<std::pair<double, std::size_t>> dist(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (std::size_t j = 0; j < weights.size(); ++j) {
            double d = 0.0;
            for (std::size_t m = 0; m < weights[i].size(); ++m) {
                const double diff = weights[i].lambda[m] - weights[j].lambda[m];
                d += diff * diff;
            }
            dist[j] = {d, j};
        }
        std::sort(dist.begin(), dist.end());
        out[i].reserve(size);
        for (std::size_t k = 0; k < size; ++k) out[i].push_back(dist[k].second);
    }
    return out;
}

double tchebycheff(std::span<const double> f, const WeightVector& weight, std::span<const double> z) {
    if (f.size() != weight.size() || z.size() != f.size()) throw ContractError("tchebycheff: length mismatch");
    double g = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) g = std::max(g, weight.lambda[i] * std::abs(f[i] - z[i]));
    return g;
}

namespace {

void check_layout(std::size_t n, const Bounds& bounds, const char* op) {
    if (n != bounds.size()) throw ContractError(std::string(op) + ": genotype length does not match the bounds");
}

} // namespace

std::vector<double> de_crossover(std::span<const double> x1, std::span<const double> x2, std::span<const double> x3,
                                 double cr, double f, const Bounds& bounds, Rng& rng) {
    if (x1.size() != x2.size() || x1.size() != x3.size()) throw ContractError("de_crossover: genotype layout mismatch");
    check_layout(x1.size(), bounds, "de_crossover");
    std::vector<double> y(x1.begin(), x1.end());
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (bernoulli(rng, cr)) y[k] = std::clamp(x1[k] + f * (x2[k] - x3[k]), bounds.lower[k], bounds.upper[k]);
    }
    return y;
}

double polynomial_delta(double u, double eta) {
    const double e = 1.0 / (eta + 1.0);
    if (u < 0.5) return std::pow(2.0 * u, e) - 1.0;
    return 1.0 - std::pow(2.0 * (1.0 - u), e);
}

std::vector<double> polynomial_mutation(std::span<const double> y, double p_m, double eta, const Bounds& bounds,
                                        Rng& rng) {
    check_layout(y.size(), bounds, "polynomial_mutation");
    std::vector<double> out(y.begin(), y.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!bernoulli(rng, p_m)) continue;
        const double span = bounds.upper[k] - bounds.lower[k];
        if (!std::isfinite(span)) throw ConfigError("polynomial_mutation: coordinate " + std::to_string(k) + " is unbounded");
        out[k] = std::clamp(out[k] + polynomial_delta(uniform01(rng), eta) * span, bounds.lower[k], bounds.upper[k]);
    }
    return out;
}

bool replaces(const Individual& y, const Individual& x, const WeightVector& weight, const ReferencePoint& z) {
    const bool yf = y.feasible();
    const bool xf = x.feasible();
    if (!yf && !xf) return y.violation < x.violation;
    if (yf && !xf) return true;
    if (yf && xf) return tchebycheff(y.objectives, weight, z.z) <= tchebycheff(x.objectives, weight, z.z);
    return false;
}

std::size_t tournament_count(std::size_t population_size, std::size_t n_objectives) {
    const std::size_t per_gen = population_size / 5;
    if (per_gen <= n_objectives)
        throw ConfigError("population_size too small: floor(N_D/5) - N_f must be >= 1 (N_D=" +
                          std::to_string(population_size) + ", N_f=" + std::to_string(n_objectives) + ")");
    return per_gen - n_objectives;
}

std::vector<std::size_t> select_subproblems(std::span<const Subproblem> subproblems, std::size_t n_objectives,
                                            Rng& rng, std::size_t tournament_size) {
    const std::size_t count = tournament_count(subproblems.size(), n_objectives);
    std::vector<std::size_t> selected;
    std::vector<std::size_t> pool;
    std::vector<bool> axis_taken(n_objectives, false);
    for (const auto& sp : subproblems) {
        const auto axis = sp.weight.unit_axis();
        if (axis && *axis < n_objectives && !axis_taken[*axis]) {
            axis_taken[*axis] = true;
            selected.push_back(sp.index);
        } else {
            pool.push_back(sp.index);
        }
    }
    if (pool.empty()) throw ConfigError("select_subproblems: no non-boundary subproblems to select from");
    for (std::size_t t = 0; t < count; ++t) {
        std::size_t best = pool[uniform_index(rng, 0, pool.size() - 1)];
        for (std::size_t k = 1; k < tournament_size; ++k) {
            const std::size_t cand = pool[uniform_index(rng, 0, pool.size() - 1)];
            if (subproblems[cand].utility > subproblems[best].utility) best = cand;
        }
        selected.push_back(best);
    }
    return selected;
}

std::vector<std::size_t> choose_mating_pool(const Subproblem& subproblem, std::size_t population_size, double delta,
                                            Rng& rng) {
    if (bernoulli(rng, delta)) return subproblem.neighbors;
    std::vector<std::size_t> all(population_size);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

std::size_t replace_neighbors(std::vector<Subproblem>& subproblems, const Individual& y,
                              std::vector<std::size_t> pool, std::size_t max_replacements, const ReferencePoint& z,
                              Rng& rng) {
    std::size_t replaced = 0;
    while (replaced < max_replacements && !pool.empty()) {
        const std::size_t pos = uniform_index(rng, 0, pool.size() - 1);
        const std::size_t k = pool[pos];
        pool[pos] = pool.back();
        pool.pop_back();
        auto& sp = subproblems.at(k);
        if (replaces(y, sp.incumbent, sp.weight, z)) {
            sp.incumbent = y;
            ++replaced;
        }
    }
    return replaced;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictly = true;
    }
    return strictly;
}

bool Archive::add(const Individual& candidate) {
    if (!candidate.evaluated || !candidate.feasible()) return false;
    for (const auto& m : members_)
        if (m.objectives == candidate.objectives || dominates(m.objectives, candidate.objectives)) return false;
    std::erase_if(members_, [&](const Individual& m) { return dominates(candidate.objectives, m.objectives); });
    members_.push_back(candidate);
    return true;
}

std::vector<Individual> nondominated(std::span<const Individual> individuals) {
    std::vector<Individual> out;
    for (std::size_t i = 0; i < individuals.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < individuals.size() && keep; ++j) {
            if (i == j) continue;
            if (dominates(individuals[j].objectives, individuals[i].objectives)) keep = false;
            // identical vectors: keep only the first occurrence
            if (j < i && individuals[j].objectives == individuals[i].objectives) keep = false;
        }
        if (keep) out.push_back(individuals[i]);
    }
    return out;
}

Moead::Moead(const Problem& problem, RunConfig config)
    : problem_(problem), config_(std::move(config)), n_objectives_(problem.objective_count()), rng_(config_.seed) {
    config_.validate(n_objectives_);
    problem_.bounds().validate();
}

std::vector<Individual> Moead::evaluate_all(std::vector<std::vector<double>> genotypes) {
    std::vector<Individual> out(genotypes.size());
    auto eval_one = [&](std::size_t k) {
        auto e = problem_.evaluate(genotypes[k]);
        if (e.objectives.size() != n_objectives_) throw ContractError("problem returned the wrong number of objectives");
        for (double v : e.objectives)
            if (!std::isfinite(v)) throw ContractError("problem returned a non-finite objective");
        if (!std::isfinite(e.violation) || e.violation < 0.0) throw ContractError("problem returned an invalid violation");
        out[k] = Individual{std::move(genotypes[k]), std::move(e.objectives), e.violation, true};
    };

    const std::size_t workers = std::min(config_.threads, genotypes.size());
    if (workers <= 1) {
        for (std::size_t k = 0; k < genotypes.size(); ++k) eval_one(k);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(genotypes.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < genotypes.size(); k = next++) {
                    try {
                        eval_one(k);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

void Moead::initialize() {
    const Rng snapshot = rng_;
    try {
        const auto& bounds = problem_.bounds();
        const auto weights = generate_weights(n_objectives_, config_.population_size, config_.seed);
        const auto hoods = neighborhoods(weights, config_.neighborhood_size);
        auto genotypes = problem_.initial_genotypes(config_.population_size, rng_);
        if (genotypes.size() != config_.population_size) throw ContractError("initial population has the wrong size");
        for (const auto& g : genotypes)
            if (g.size() != bounds.size()) throw ContractError("initial genotype length does not match the bounds");
        const auto cost = static_cast<std::uint64_t>(genotypes.size()) * problem_.queries_per_evaluation();
        if (config_.evaluation_budget && *config_.evaluation_budget < cost)
            throw ConfigError("evaluation_budget is smaller than the initial population's cost");

        auto individuals = evaluate_all(std::move(genotypes));
        subproblems_.clear();
        reference_ = ReferencePoint::unset(n_objectives_);
        archive_.clear();
        for (std::size_t i = 0; i < individuals.size(); ++i) {
            reference_.update(individuals[i].objectives);
            archive_.add(individuals[i]);
            Subproblem sp;
            sp.index = i;
            sp.weight = weights[i];
            sp.neighbors = hoods[i];
            sp.utility_anchor = individuals[i].objectives;
            sp.incumbent = std::move(individuals[i]);
            subproblems_.push_back(std::move(sp));
        }
        evaluations_ = cost;
        generation_ = 0;
        budget_exhausted_ = false;
        initialized_ = true;
    } catch (...) {
        rng_ = snapshot;
        subproblems_.clear();
        archive_.clear();
        throw;
    }
}

bool Moead::finished() const {
    return initialized_ && (generation_ >= config_.generations || budget_exhausted_);
}

bool Moead::step() {
    if (!initialized_) initialize();
    if (finished()) return false;

    const Rng snapshot = rng_;
    try {
        auto selected = select_subproblems(subproblems_, n_objectives_, rng_);
        bool exhausting = false;
        const std::uint64_t q = problem_.queries_per_evaluation();
        if (config_.evaluation_budget) {
            const std::uint64_t remaining = *config_.evaluation_budget - evaluations_;
            const std::uint64_t allowed = q == 0 ? selected.size() : remaining / q;
            if (allowed == 0) {
                rng_ = snapshot;
                budget_exhausted_ = true;
                return false;
            }
            if (allowed <= selected.size()) {
                selected.resize(static_cast<std::size_t>(allowed));
                exhausting = true;
            }
        }

        const auto& bounds = problem_.bounds();
        const double p_m = config_.mutation_rate(bounds.size());
        std::vector<std::vector<std::size_t>> pools;
        std::vector<std::vector<double>> offspring;
        pools.reserve(selected.size());
        offspring.reserve(selected.size());
        for (std::size_t i : selected) {
            auto pool = choose_mating_pool(subproblems_[i], config_.population_size, config_.delta, rng_);
            std::vector<std::size_t> mates;
            for (std::size_t k : pool)
                if (k != i) mates.push_back(k);
            if (mates.size() < 2) throw ContractError("mating pool too small for DE crossover");
            const std::size_t a = uniform_index(rng_, 0, mates.size() - 1);
            const std::size_t r2 = mates[a];
            mates[a] = mates.back();
            mates.pop_back();
            const std::size_t r3 = mates[uniform_index(rng_, 0, mates.size() - 1)];
            auto child = de_crossover(subproblems_[i].incumbent.genotype, subproblems_[r2].incumbent.genotype,
                                      subproblems_[r3].incumbent.genotype, config_.cr, config_.f, bounds, rng_);
            offspring.push_back(polynomial_mutation(child, p_m, config_.eta, bounds, rng_));
            pools.push_back(std::move(pool));
        }

        const auto cost = static_cast<std::uint64_t>(offspring.size()) * q;
        auto children = evaluate_all(std::move(offspring));

        for (std::size_t k = 0; k < children.size(); ++k) {
            reference_.update(children[k].objectives);
            replace_neighbors(subproblems_, children[k], std::move(pools[k]), config_.max_replacements, reference_, rng_);
            archive_.add(children[k]);
        }
        update_utilities();
        evaluations_ += cost;
        ++generation_;
        if (exhausting) budget_exhausted_ = true;
        return true;
    } catch (...) {
        rng_ = snapshot;
        throw;
    }
}

void Moead::update_utilities() {
    for (auto& sp : subproblems_) {
        const double old_g = tchebycheff(sp.utility_anchor, sp.weight, reference_.z);
        const double new_g = tchebycheff(sp.incumbent.objectives, sp.weight, reference_.z);
        const double ratio = old_g > 0.0 ? std::max(0.0, (old_g - new_g) / old_g) : 0.0;
        if (ratio > 0.001) {
            sp.utility = 1.0;
        } else {
            sp.utility = std::max((0.95 + 0.05 * ratio / 0.001) * sp.utility, std::numeric_limits<double>::min());
        }
        sp.utility_anchor = sp.incumbent.objectives;
    }
}

RunResult Moead::run(const std::function<void(const Moead&)>& on_generation) {
    if (!initialized_) initialize();
    while (step()) {
        if (on_generation) on_generation(*this);
    }
    return result();
}

std::vector<Individual> Moead::population() const {
    std::vector<Individual> out;
    out.reserve(subproblems_.size());
    for (const auto& sp : subproblems_) out.push_back(sp.incumbent);
    return out;
}

RunResult Moead::result() const {
    return {population(), archive_.members(), generation_, evaluations_, budget_exhausted_};
}

namespace {

using nlohmann::json;

json individual_json(const Individual& ind) {
    return {{"genotype", ind.genotype}, {"objectives", ind.objectives}, {"violation", ind.violation}};
}

Individual individual_from(const json& j) {
    Individual ind;
    ind.genotype = j.at("genotype").get<std::vector<double>>();
    ind.objectives = j.at("objectives").get<std::vector<double>>();
    ind.violation = j.at("violation").get<double>();
    ind.evaluated = true;
    return ind;
}

constexpr const char* kCheckpointFormat = "evoae-moead-checkpoint";

} // namespace

void Moead::save_checkpoint(const std::filesystem::path& path) const {
    if (!initialized_) throw ContractError("save_checkpoint: engine not initialized");
    json subs = json::array();
    for (const auto& sp : subproblems_)
        subs.push_back({{"utility", sp.utility}, {"anchor", sp.utility_anchor}, {"incumbent", individual_json(sp.incumbent)}});
    json archive = json::array();
    for (const auto& m : archive_.members()) archive.push_back(individual_json(m));
    const json doc = {{"format", kCheckpointFormat},
                      {"version", 1},
                      {"population_size", config_.population_size},
                      {"objectives", n_objectives_},
                      {"genotype_length", problem_.bounds().size()},
                      {"seed", config_.seed},
                      {"generation", generation_},
                      {"evaluations", evaluations_},
                      {"budget_exhausted", budget_exhausted_},
                      {"rng", rng_state(rng_)},
                      {"reference", reference_.z},
                      {"subproblems", std::move(subs)},
                      {"archive", std::move(archive)}};
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw FormatError(tmp + ": cannot open for writing");
        out << doc.dump();
        if (!out) throw FormatError(tmp + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

void Moead::load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open checkpoint");
    try {
        const json doc = json::parse(in);
        if (doc.at("format").get<std::string>() != kCheckpointFormat || doc.at("version").get<int>() != 1)
            throw FormatError(path.string() + ": not a checkpoint of this engine");
        if (doc.at("population_size").get<std::size_t>() != config_.population_size ||
            doc.at("objectives").get<std::size_t>() != n_objectives_ ||
            doc.at("genotype_length").get<std::size_t>() != problem_.bounds().size() ||
            doc.at("seed").get<std::uint64_t>() != config_.seed)
            throw FormatError(path.string() + ": checkpoint does not match this run configuration");

        const auto weights = generate_weights(n_objectives_, config_.population_size, config_.seed);
        const auto hoods = neighborhoods(weights, config_.neighborhood_size);
        const auto& subs = doc.at("subproblems");
        if (subs.size() != config_.population_size) throw FormatError(path.string() + ": wrong subproblem count");
        std::vector<Subproblem> restored;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            Subproblem sp;
            sp.index = i;
            sp.weight = weights[i];
            sp.neighbors = hoods[i];
            sp.utility = subs[i].at("utility").get<double>();
            sp.utility_anchor = subs[i].at("anchor").get<std::vector<double>>();
            sp.incumbent = individual_from(subs[i].at("incumbent"));
            restored.push_back(std::move(sp));
        }
        Archive archive;
        for (const auto& m : doc.at("archive")) archive.add(individual_from(m));

        Rng rng;
        restore_rng_state(rng, doc.at("rng").get<std::string>());
        subproblems_ = std::move(restored);
        archive_ = std::move(archive);
        reference_.z = doc.at("reference").get<std::vector<double>>();
        generation_ = doc.at("generation").get<std::size_t>();
        evaluations_ = doc.at("evaluations").get<std::uint64_t>();
        budget_exhausted_ = doc.at("budget_exhausted").get<bool>();
        rng_ = rng;
        initialized_ = true;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": malformed checkpoint (" + e.what() + ")");
    }
}

} // namespace evoae
