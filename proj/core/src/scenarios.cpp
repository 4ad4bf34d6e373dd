#include "evoae/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "evoae/error.hpp"

namespace evoae {

NormOrder parse_norm_order(std::string_view text) {
    if (text == "0" || text == "l0") return NormOrder::l0;
    if (text == "1" || text == "l1") return NormOrder::l1;
    if (text == "2" || text == "l2" || text == "rmse") return NormOrder::l2;
    if (text == "inf" || text == "linf") return NormOrder::linf;
    throw ConfigError("unsupported norm order '" + std::string(text) + "' (use 0, 1, 2 or inf)");
}

std::string to_string(NormOrder order) {
    switch (order) {
    case NormOrder::l0: return "0";
    case NormOrder::l1: return "1";
    case NormOrder::l2: return "2";
    case NormOrder::linf: return "inf";
    }
    return "?";
}

double norm(const Perturbation& rho, NormOrder order, L1Mode l1_mode) {
    const auto n = rho.delta.size();
    if (n == 0) return 0.0;
    switch (order) {
    case NormOrder::l0: {
        std::size_t count = 0;
        const auto pixels = static_cast<std::size_t>(rho.width) * rho.height;
        for (std::size_t p = 0; p < pixels; ++p)
            for (int c = 0; c < rho.channels; ++c)
                if (rho.delta[p * rho.channels + c] != 0.0) {
                    ++count;
                    break;
                }
        return static_cast<double>(count);
    }
    case NormOrder::l1: {
        double s = 0.0;
        for (double d : rho.delta) s += std::abs(d);
        return l1_mode == L1Mode::sum ? s : s / static_cast<double>(n);
    }
    case NormOrder::l2: {
        double s = 0.0;
        for (double d : rho.delta) s += d * d;
        return std::sqrt(s / static_cast<double>(n));
    }
    case NormOrder::linf: {
        double m = 0.0;
        for (double d : rho.delta) m = std::max(m, std::abs(d));
        return m;
    }
    }
    throw ConfigError("unsupported norm order");
}

ScenarioKind parse_scenario_kind(std::string_view text) {
    if (text == "accuracy_vs_amount") return ScenarioKind::accuracy_vs_amount;
    if (text == "l0_vs_l1") return ScenarioKind::l0_vs_l1;
    if (text == "robust") return ScenarioKind::robust;
    throw ConfigError("unknown scenario kind '" + std::string(text) + "'");
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::accuracy_vs_amount: return "accuracy_vs_amount";
    case ScenarioKind::l0_vs_l1: return "l0_vs_l1";
    case ScenarioKind::robust: return "robust";
    }
    return "?";
}

ConstraintMetric parse_constraint_metric(std::string_view text) {
    if (text == "correct_confidence") return ConstraintMetric::correct_confidence;
    if (text == "expected_correct_confidence") return ConstraintMetric::expected_correct_confidence;
    if (text == "norm") return ConstraintMetric::norm;
    throw ConfigError("unknown constraint metric '" + std::string(text) + "'");
}

std::string to_string(ConstraintMetric metric) {
    switch (metric) {
    case ConstraintMetric::correct_confidence: return "correct_confidence";
    case ConstraintMetric::expected_correct_confidence: return "expected_correct_confidence";
    case ConstraintMetric::norm: return "norm";
    }
    return "?";
}

Comparator parse_comparator(std::string_view text) {
    if (text == "<=") return Comparator::le;
    if (text == "<") return Comparator::lt;
    if (text == ">=") return Comparator::ge;
    if (text == ">") return Comparator::gt;
    throw ConfigError("unknown comparator '" + std::string(text) + "'");
}

std::string to_string(Comparator comparator) {
    switch (comparator) {
    case Comparator::le: return "<=";
    case Comparator::lt: return "<";
    case Comparator::ge: return ">=";
    case Comparator::gt: return ">";
    }
    return "?";
}

double Constraint::violation(double value) const {
    constexpr double strict = 1e-12;
    switch (comparator) {
    case Comparator::le: return std::max(0.0, value - threshold);
    case Comparator::lt: return std::max(0.0, value - (threshold - strict));
    case Comparator::ge: return std::max(0.0, threshold - value);
    case Comparator::gt: return std::max(0.0, (threshold + strict) - value);
    }
    return 0.0;
}

std::vector<double> default_rotation_angles() {
    std::vector<double> a;
    for (int deg = -60; deg <= 60; deg += 15) a.push_back(deg);
    return a;
}

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind) {
    ScenarioSpec s;
    s.kind = kind;
    switch (kind) {
    case ScenarioKind::accuracy_vs_amount:
        s.norm_order = NormOrder::l2;
        break;
    case ScenarioKind::l0_vs_l1:
        s.norm_order = NormOrder::l1;
        s.constraints.push_back({ConstraintMetric::correct_confidence, Comparator::lt, 0.2, std::nullopt});
        break;
    case ScenarioKind::robust:
        s.norm_order = NormOrder::l1;
        s.angles = default_rotation_angles();
        s.constraints.push_back({ConstraintMetric::correct_confidence, Comparator::lt, 0.1, std::nullopt});
        s.constraints.push_back({ConstraintMetric::expected_correct_confidence, Comparator::lt, 0.5, std::nullopt});
        break;
    }
    return s;
}

void ScenarioSpec::validate() const {
    for (const auto& c : constraints)
        if (!std::isfinite(c.threshold)) throw ConfigError("constraint threshold must be finite");
    if (kind == ScenarioKind::robust) {
        if (angles.empty()) throw ConfigError("robust scenario needs at least one rotation angle");
        for (double a : angles)
            if (!(std::abs(a) <= 180.0)) throw ConfigError("rotation angles must lie in [-180, 180]");
        const bool has_zero = std::find(angles.begin(), angles.end(), 0.0) != angles.end();
        for (const auto& c : constraints)
            if (c.metric == ConstraintMetric::correct_confidence && !has_zero)
                throw ConfigError("the unrotated correct_confidence constraint requires angle 0 in the rotation set");
    } else if (!angles.empty()) {
        throw ConfigError("rotation angles are only meaningful for the robust scenario");
    }
}

std::vector<InitGroup> default_stratified_groups() {
    return {{0.005, 200, 150}, {0.05, 200, 100}, {0.20, 100, 0}, {0.35, 50, 0},
            {0.50, 33, 0},     {0.65, 25, 0},    {0.80, 20, 0},  {0.95, 16, 0}};
}

std::vector<std::vector<double>> stratified_init(const Bounds& bounds, std::span<const InitGroup> groups,
                                                 std::size_t population_size, Rng& rng) {
    if (groups.empty()) throw ConfigError("stratified init needs at least one group");
    if (population_size < groups.size() + 1)
        throw ConfigError("stratified init: population_size must be at least the group count plus the zero individual");
    for (const auto& g : groups)
        if (!(g.fraction > 0.0 && g.fraction <= 1.0) || !(g.range >= 0.0) || !(g.min_magnitude >= 0.0) ||
            g.min_magnitude > g.range)
            throw ConfigError("stratified init: invalid group definition");

    const std::size_t n = bounds.size();
    const std::size_t members = population_size - 1;
    const std::size_t base = members / groups.size();
    const std::size_t extra = members % groups.size();
    std::vector<std::vector<double>> out;
    out.reserve(population_size);
    std::vector<std::size_t> idx(n);

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const std::size_t cap = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(g.fraction * n - 1e-9)));
        const std::size_t size = base + (gi < extra ? 1 : 0);
        for (std::size_t m = 0; m < size; ++m) {
            std::vector<double> geno(n, 0.0);
            const std::size_t k = uniform_index(rng, 1, std::min(cap, n));
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t t = 0; t < k; ++t) {
                const std::size_t pick = uniform_index(rng, t, n - 1);
                std::swap(idx[t], idx[pick]);
                const std::size_t var = idx[t];
                const double mag = g.min_magnitude + uniform01(rng) * (g.range - g.min_magnitude);
                const double v = bernoulli(rng, 0.5) ? mag : -mag;
                geno[var] = std::clamp(v, bounds.lower[var], bounds.upper[var]);
            }
            out.push_back(std::move(geno));
        }
    }
    std::vector<double> zero(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) zero[k] = std::clamp(0.0, bounds.lower[k], bounds.upper[k]);
    out.push_back(std::move(zero));
    return out;
}

ScenarioProblem::ScenarioProblem(ScenarioSpec spec, Encoding encoding, Image clean, std::shared_ptr<Oracle> oracle,
                                 InitConfig init)
    : spec_(std::move(spec)), encoding_(std::move(encoding)), clean_(std::move(clean)), oracle_(std::move(oracle)),
      init_(std::move(init)) {
    spec_.validate();
    if (!oracle_) throw ConfigError("scenario needs an oracle");
    const InputSpec want{clean_.width, clean_.height, clean_.channels};
    if (!(oracle_->input() == want))
        throw ConfigError("clean image dims do not match the oracle's expected input");
    const bool dims_match = std::visit(
        [&](const auto& layout) {
            return layout.width() == clean_.width && layout.height() == clean_.height &&
                   layout.image_channels() == clean_.channels;
        },
        encoding_);
    if (!dims_match) throw ConfigError("encoding dims do not match the clean image");
    if (init_.kind == InitConfig::Kind::stratified && !std::holds_alternative<DirectLayout>(encoding_))
        throw ConfigError("stratified initialization requires the direct encoding");
    bounds_ = encoding_bounds(encoding_);
    if (spec_.correct_labels.empty()) spec_.correct_labels.push_back(oracle_->classify(clean_).top().label);
}

std::vector<std::vector<double>> ScenarioProblem::initial_genotypes(std::size_t count, Rng& rng) const {
    if (init_.kind == InitConfig::Kind::stratified) return stratified_init(bounds_, init_.groups, count, rng);
    return Problem::initial_genotypes(count, rng);
}

std::size_t ScenarioProblem::queries_per_evaluation() const {
    return spec_.kind == ScenarioKind::robust ? spec_.angles.size() : 1;
}

Perturbation ScenarioProblem::decode(std::span<const double> genotype) const {
    return evoae::decode(encoding_, genotype, clean_);
}

Image ScenarioProblem::perturbed(std::span<const double> genotype) const {
    return apply_perturbation(clean_, decode(genotype));
}

double ScenarioProblem::constraint_violation(const Perturbation& rho, double confidence, double expected) const {
    double vio = 0.0;
    for (const auto& c : spec_.constraints) {
        double value = 0.0;
        switch (c.metric) {
        case ConstraintMetric::correct_confidence: value = confidence; break;
        case ConstraintMetric::expected_correct_confidence: value = expected; break;
        case ConstraintMetric::norm: value = norm(rho, c.order.value_or(spec_.norm_order), spec_.l1_mode); break;
        }
        vio += c.violation(value);
    }
    return vio;
}

ScenarioEvaluation ScenarioProblem::evaluate_detail(std::span<const double> genotype) const {
    switch (spec_.kind) {
    case ScenarioKind::accuracy_vs_amount: return evaluate_accuracy_vs_amount(*this, genotype);
    case ScenarioKind::l0_vs_l1: return evaluate_l0_l1(*this, genotype);
    case ScenarioKind::robust: return evaluate_robust(*this, genotype);
    }
    throw ConfigError("unknown scenario kind");
}

ScenarioEvaluation evaluate_accuracy_vs_amount(const ScenarioProblem& problem, std::span<const double> genotype) {
    const auto rho = problem.decode(genotype);
    const auto result = problem.oracle().classify(apply_perturbation(problem.clean(), rho));
    const double conf = result.confidence_of(problem.correct_labels());
    ScenarioEvaluation out;
    out.confidences = {conf};
    out.evaluation.objectives = {conf, norm(rho, problem.spec().norm_order, problem.spec().l1_mode)};
    out.evaluation.violation = problem.constraint_violation(rho, conf, conf);
    return out;
}

ScenarioEvaluation evaluate_l0_l1(const ScenarioProblem& problem, std::span<const double> genotype) {
    const auto rho = problem.decode(genotype);
    const auto result = problem.oracle().classify(apply_perturbation(problem.clean(), rho));
    const double conf = result.confidence_of(problem.correct_labels());
    ScenarioEvaluation out;
    out.confidences = {conf};
    out.evaluation.objectives = {norm(rho, NormOrder::l0), norm(rho, NormOrder::l1, problem.spec().l1_mode)};
    out.evaluation.violation = problem.constraint_violation(rho, conf, conf);
    return out;
}

ScenarioEvaluation evaluate_robust(const ScenarioProblem& problem, std::span<const double> genotype) {
    const auto& spec = problem.spec();
    if (spec.angles.empty()) throw ConfigError("robust scenario needs rotation angles");
    const auto rho = problem.decode(genotype);
    const Image img = apply_perturbation(problem.clean(), rho);
    std::vector<Image> views;
    views.reserve(spec.angles.size());
    for (double a : spec.angles) views.push_back(rotate(img, a));
    const auto results = problem.oracle().classify_batch(views);

    ScenarioEvaluation out;
    for (const auto& r : results) out.confidences.push_back(r.confidence_of(problem.correct_labels()));
    const double n = static_cast<double>(out.confidences.size());
    const double mean = std::accumulate(out.confidences.begin(), out.confidences.end(), 0.0) / n;
    double var = 0.0;
    for (double c : out.confidences) var += (c - mean) * (c - mean);
    const double sd = std::sqrt(var / n);

    const auto zero = std::find(spec.angles.begin(), spec.angles.end(), 0.0);
    const double unrotated = zero != spec.angles.end() ? out.confidences[static_cast<std::size_t>(zero - spec.angles.begin())] : mean;
    out.evaluation.objectives = {mean, sd, norm(rho, spec.norm_order, spec.l1_mode)};
    out.evaluation.violation = problem.constraint_violation(rho, unrotated, mean);
    return out;
}

std::vector<RobustnessRow> robustness_table(const Image& clean, const Image& perturbed, Oracle& oracle,
                                            std::span<const std::string> correct_labels,
                                            std::span<const double> angles) {
    if (!clean.same_shape(perturbed)) throw ContractError("robustness_table: image dims differ");
    std::vector<Image> views;
    for (double a : angles) views.push_back(rotate(clean, a));
    for (double a : angles) views.push_back(rotate(perturbed, a));
    const auto results = oracle.classify_batch(views);
    std::vector<RobustnessRow> rows;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const auto& c = results[i];
        const auto& p = results[angles.size() + i];
        rows.push_back({angles[i], c.top(), c.confidence_of(correct_labels), p.top(), p.confidence_of(correct_labels)});
    }
    return rows;
}

std::string robustness_csv(std::span<const RobustnessRow> rows) {
    std::ostringstream out;
    out.precision(17);
    out << "angle,clean_top_label,clean_top_confidence,clean_correct_confidence,"
           "perturbed_top_label,perturbed_top_confidence,perturbed_correct_confidence\n";
    for (const auto& r : rows)
        out << r.angle << ',' << r.clean_top.label << ',' << r.clean_top.confidence << ',' << r.clean_correct << ','
            << r.perturbed_top.label << ',' << r.perturbed_top.confidence << ',' << r.perturbed_correct << '\n';
    return out.str();
}

std::string robustness_text(std::span<const RobustnessRow> rows) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%8s | %-24s %9s | %-24s %9s\n", "angle", "clean (top-1)", "correct",
                  "perturbed (top-1)", "correct");
    out << line << std::string(84, '-') << '\n';
    for (const auto& r : rows) {
        char ct[64], pt[64];
        std::snprintf(ct, sizeof ct, "%s: %.1f%%", r.clean_top.label.c_str(), r.clean_top.confidence * 100);
        std::snprintf(pt, sizeof pt, "%s: %.1f%%", r.perturbed_top.label.c_str(), r.perturbed_top.confidence * 100);
        std::snprintf(line, sizeof line, "%4.0f deg | %-24s %8.1f%% | %-24s %8.1f%%\n", r.angle, ct,
                      r.clean_correct * 100, pt, r.perturbed_correct * 100);
        out << line;
    }
    return out.str();
}

} // namespace evoae
