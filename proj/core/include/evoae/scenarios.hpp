#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evoae/encoding.hpp"
#include "evoae/image.hpp"
#include "evoae/moead.hpp"
#include "evoae/oracle.hpp"

namespace evoae {

enum class NormOrder { l0, l1, l2, linf };

NormOrder parse_norm_order(std::string_view text);  // "0", "1", "2", "inf"
std::string to_string(NormOrder order);

/// How the l1 norm is scaled: mean over pixel-channels, or the raw sum.
enum class L1Mode { mean, sum };

/// l0: pixels with any nonzero channel delta; l1: mean (or sum) |delta|;
/// l2: root-mean-square delta; linf: max |delta|.
double norm(const Perturbation& rho, NormOrder order, L1Mode l1_mode = L1Mode::mean);

enum class ScenarioKind { accuracy_vs_amount, l0_vs_l1, robust };

ScenarioKind parse_scenario_kind(std::string_view text);
std::string to_string(ScenarioKind kind);

enum class ConstraintMetric { correct_confidence, expected_correct_confidence, norm };
enum class Comparator { le, lt, ge, gt };

ConstraintMetric parse_constraint_metric(std::string_view text);
std::string to_string(ConstraintMetric metric);
Comparator parse_comparator(std::string_view text);  // "<=", "<", ">=", ">"
std::string to_string(Comparator comparator);

struct Constraint {
    ConstraintMetric metric = ConstraintMetric::correct_confidence;
    Comparator comparator = Comparator::lt;
    double threshold = 0.0;
    std::optional<NormOrder> order;  // norm metric only; defaults to the scenario's order

    /// Amount by which `value` breaks the constraint; 0 when it holds.
    /// Strict comparators are evaluated against threshold -/+ 1e-12.
    double violation(double value) const;
};

/// Rotation angles in degrees: -60 to 60 in steps of 15.
std::vector<double> default_rotation_angles();

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::accuracy_vs_amount;
    NormOrder norm_order = NormOrder::l2;
    L1Mode l1_mode = L1Mode::mean;
    std::vector<Constraint> constraints;
    std::vector<std::string> correct_labels;  // empty: top-1 label of the clean image
    std::vector<double> angles;               // robust only

    /// Kind-specific defaults: accuracy_vs_amount uses RMSE and no
    /// constraints; l0_vs_l1 constrains correct confidence < 0.2; robust uses
    /// l1, the default angle set and correct confidence < 0.1 unrotated plus
    /// expected confidence < 0.5.
    static ScenarioSpec defaults(ScenarioKind kind);

    std::size_t objective_count() const { return kind == ScenarioKind::robust ? 3 : 2; }
    void validate() const;
};

/// One stratum of the initial population: at most ceil(fraction * n)
/// nonzero variables, each with |v| in [min_magnitude, range].
struct InitGroup {
    double fraction = 1.0;
    double range = 255.0;
    double min_magnitude = 0.0;
};

/// Eight groups: caps 0.5%..95%, ranges +-200..+-16, the first two with
/// minimum magnitudes 150 and 100.
std::vector<InitGroup> default_stratified_groups();

struct InitConfig {
    enum class Kind { uniform, stratified } kind = Kind::uniform;
    std::vector<InitGroup> groups = default_stratified_groups();
};

/// population_size - 1 stratified genotypes split as evenly as possible over
/// the groups, followed by the all-zero genotype.
std::vector<std::vector<double>> stratified_init(const Bounds& bounds, std::span<const InitGroup> groups,
                                                 std::size_t population_size, Rng& rng);

/// Objective values plus the raw confidences that produced them.
struct ScenarioEvaluation {
    Evaluation evaluation;
    std::vector<double> confidences;  // one per query, in angle order for robust
};

/// Evaluates genotypes of one encoding against one clean image and oracle.
class ScenarioProblem final : public Problem {
public:
    ScenarioProblem(ScenarioSpec spec, Encoding encoding, Image clean, std::shared_ptr<Oracle> oracle,
                    InitConfig init = {});

    std::size_t objective_count() const override { return spec_.objective_count(); }
    const Bounds& bounds() const override { return bounds_; }
    Evaluation evaluate(std::span<const double> genotype) const override { return evaluate_detail(genotype).evaluation; }
    std::vector<std::vector<double>> initial_genotypes(std::size_t count, Rng& rng) const override;
    std::size_t queries_per_evaluation() const override;

    ScenarioEvaluation evaluate_detail(std::span<const double> genotype) const;

    Perturbation decode(std::span<const double> genotype) const;
    Image perturbed(std::span<const double> genotype) const;

    const ScenarioSpec& spec() const { return spec_; }
    const Encoding& encoding() const { return encoding_; }
    const Image& clean() const { return clean_; }
    Oracle& oracle() const { return *oracle_; }
    std::span<const std::string> correct_labels() const { return spec_.correct_labels; }

    /// Summed violation of the scenario's constraints; `confidence` is the
    /// unrotated correct-label confidence, `expected` its mean over the angles.
    double constraint_violation(const Perturbation& rho, double confidence, double expected) const;

private:

    ScenarioSpec spec_;
    Encoding encoding_;
    Image clean_;
    std::shared_ptr<Oracle> oracle_;
    InitConfig init_;
    Bounds bounds_;
};

ScenarioEvaluation evaluate_accuracy_vs_amount(const ScenarioProblem& problem, std::span<const double> genotype);
ScenarioEvaluation evaluate_l0_l1(const ScenarioProblem& problem, std::span<const double> genotype);
ScenarioEvaluation evaluate_robust(const ScenarioProblem& problem, std::span<const double> genotype);

struct RobustnessRow {
    double angle = 0.0;
    LabelConfidence clean_top;
    double clean_correct = 0.0;
    LabelConfidence perturbed_top;
    double perturbed_correct = 0.0;
};

/// Per-angle top-1 and correct-label confidence for a clean image and its
/// perturbed counterpart.
std::vector<RobustnessRow> robustness_table(const Image& clean, const Image& perturbed, Oracle& oracle,
                                            std::span<const std::string> correct_labels,
                                            std::span<const double> angles);

std::string robustness_csv(std::span<const RobustnessRow> rows);
std::string robustness_text(std::span<const RobustnessRow> rows);

} // namespace evoae
