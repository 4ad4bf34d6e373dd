#include "attack.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "evoae/error.hpp"
#include "evoae/image.hpp"
#include "evoae/scenarios.hpp"
#include "plot.hpp"

namespace evoae::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot write");
    out << text;
}

void write_genotype_csv(const fs::path& path, const std::vector<double>& genotype) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.string() + ": cannot write");
    out << "index,value\n";
    for (std::size_t i = 0; i < genotype.size(); ++i) out << i << ',' << num(genotype[i]) << '\n';
}

std::vector<Individual> front_members(const RunResult& result) {
    std::vector<Individual> members = result.archive;
    if (members.empty()) members = nondominated(result.population);
    std::stable_sort(members.begin(), members.end(),
                     [](const Individual& a, const Individual& b) { return a.objectives < b.objectives; });
    return members;
}

void write_outputs(const AttackConfig& config, const ScenarioProblem& problem, const AttackOutcome& outcome) {
    const fs::path dir = config.io.output_dir;
    fs::create_directories(dir / "genotypes");
    if (config.io.write_images) fs::create_directories(dir / "images");

    const auto members = front_members(outcome.result);
    const std::size_t n_obj = problem.objective_count();

    std::string csv = "index";
    for (std::size_t k = 0; k < n_obj; ++k) csv += ",f" + std::to_string(k + 1);
    csv += ",violation,feasible,genotype\n";
    std::string jsonl;
    std::vector<FrontPoint> points;

    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        const std::string geno_ref = "genotypes/ind_" + std::to_string(i) + ".csv";
        csv += std::to_string(i);
        for (double f : m.objectives) csv += "," + num(f);
        csv += "," + num(m.violation) + "," + (m.feasible() ? "1" : "0") + "," + geno_ref + "\n";

        json line = {{"index", i}, {"objectives", m.objectives}, {"violation", m.violation},
                     {"feasible", m.feasible()}, {"genotype", geno_ref}};
        if (config.io.write_images && (!config.io.max_images || i < *config.io.max_images)) {
            const std::string k = std::to_string(i);
            const auto rho = problem.decode(m.genotype);
            write_image(apply_perturbation(problem.clean(), rho), dir / "images" / ("ae_" + k + ".ppm"));
            write_image(visualize_perturbation(rho), dir / "images" / ("rho_" + k + ".ppm"));
            write_perturbation_csv(rho, dir / "images" / ("rho_" + k + ".csv"));
            line["image"] = "images/ae_" + k + ".ppm";
            line["perturbation"] = "images/rho_" + k + ".ppm";
        }
        jsonl += line.dump() + "\n";
        write_genotype_csv(dir / geno_ref, m.genotype);
        points.push_back({m.objectives, m.feasible()});
    }
    write_text(dir / "front.csv", csv);
    write_text(dir / "individuals.jsonl", jsonl);
    write_front_svg(points, dir / "front.svg", objective_names(config.scenario));

    json labels = json::array();
    for (const auto& l : problem.correct_labels()) labels.push_back(l);
    const json run = {
        {"config", config.resolved()},
        {"seed", config.optimizer.seed},
        {"model_id", problem.oracle().model_id()},
        {"correct_labels", labels},
        {"objectives", objective_names(config.scenario)},
        {"genotype_length", outcome.genotype_length},
        {"generations", outcome.result.generations},
        {"evaluations", outcome.result.evaluations},
        {"budget_exhausted", outcome.result.budget_exhausted},
        {"archive_size", outcome.result.archive.size()},
        {"oracle", {{"queries", outcome.oracle_stats.queries}, {"cache_hits", outcome.oracle_stats.cache_hits}}},
        {"wall_time_seconds", outcome.wall_seconds},
        {"exit_code", outcome.exit_code},
    };
    write_text(dir / "run.json", run.dump(2) + "\n");
    write_text(dir / "config.resolved.json", config.resolved().dump(2) + "\n");
}

} // namespace

std::vector<std::string> objective_names(const ScenarioSpec& spec) {
    const std::string n = "l" + to_string(spec.norm_order);
    switch (spec.kind) {
    case ScenarioKind::accuracy_vs_amount:
        return {"correct confidence", n};
    case ScenarioKind::l0_vs_l1:
        return {"l0", "l1"};
    case ScenarioKind::robust:
        return {"expected confidence", "confidence std", n};
    }
    return {};
}

AttackOutcome run_attack(const AttackConfig& config, const AttackOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    AttackOutcome outcome;

    const Image clean = read_image(config.io.input);
    std::shared_ptr<Oracle> oracle;
    try {
        oracle = make_oracle(config.oracle);
    } catch (const OracleError& e) {
        outcome.exit_code = kExitOracle;
        outcome.message = std::string("oracle unreachable: ") + e.what();
        return outcome;
    }
    if (oracle->input() != InputSpec{clean.width, clean.height, clean.channels})
        throw ConfigError("input image " + std::to_string(clean.width) + "x" + std::to_string(clean.height) + "x" +
                          std::to_string(clean.channels) + " does not match the oracle input");

    std::unique_ptr<ScenarioProblem> problem;
    try {
        problem = std::make_unique<ScenarioProblem>(config.scenario, make_encoding(config.encoding, clean), clean,
                                                    oracle, config.init);
    } catch (const OracleError& e) {
        outcome.exit_code = kExitOracle;
        outcome.message = std::string("oracle failed on the clean image: ") + e.what();
        return outcome;
    }
    outcome.genotype_length = problem->bounds().size();

    fs::create_directories(config.io.output_dir);
    const fs::path checkpoint = config.io.output_dir / "checkpoint.json";
    Moead engine(*problem, config.optimizer);
    if (options.resume && fs::exists(checkpoint)) engine.load_checkpoint(checkpoint);

    try {
        engine.run([&](const Moead& e) {
            if (config.checkpoint_every > 0 && e.generation() % config.checkpoint_every == 0)
                e.save_checkpoint(checkpoint);
            if (options.log && (e.generation() % 10 == 0 || e.finished()))
                *options.log << "generation " << e.generation() << "  evaluations " << e.evaluations()
                             << "  archive " << e.archive().size() << std::endl;
        });
    } catch (const OracleError& e) {
        if (engine.initialized()) engine.save_checkpoint(checkpoint);
        outcome.exit_code = kExitOracle;
        outcome.message = std::string("oracle failed during the run: ") + e.what();
        outcome.result = engine.result();
        outcome.oracle_stats = oracle->stats();
        return outcome;
    }
    if (config.checkpoint_every > 0) engine.save_checkpoint(checkpoint);

    outcome.result = engine.result();
    outcome.oracle_stats = oracle->stats();
    if (outcome.result.archive.empty()) {
        outcome.exit_code = kExitNoFeasible;
        outcome.message = "no feasible solution found";
    }
    outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(config, *problem, outcome);
    return outcome;
}

} // namespace evoae::app
