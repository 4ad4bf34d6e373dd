#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app/attack.hpp"
#include "app/config.hpp"
#include "app/plot.hpp"
#include "evoae/encoding.hpp"
#include "evoae/error.hpp"
#include "evoae/image.hpp"
#include "evoae/remote.hpp"
#include "evoae/scenarios.hpp"

namespace {

using namespace evoae;
using namespace evoae::app;

std::vector<double> parse_angles(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("--angles: not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("--angles: empty list");
    return out;
}

int cmd_attack(const std::string& config_path, bool resume, bool quiet) {
    const auto config = AttackConfig::load(config_path);
    AttackOptions options;
    options.resume = resume;
    options.log = quiet ? nullptr : &std::cerr;
    const auto outcome = run_attack(config, options);
    if (!outcome.message.empty()) std::cerr << "evoae: " << outcome.message << "\n";
    if (outcome.exit_code != kExitOracle)
        std::cout << "archive " << outcome.result.archive.size() << "  generations " << outcome.result.generations
                  << "  evaluations " << outcome.result.evaluations << "  queries " << outcome.oracle_stats.queries
                  << "\nwrote " << config.io.output_dir.string() << "\n";
    return outcome.exit_code;
}

int cmd_eval(const std::string& clean_path, const std::string& ae_path, const std::string& oracle_spec,
             const std::string& angles, const std::vector<std::string>& labels, const std::string& csv_path) {
    const Image clean = read_image(clean_path);
    const Image ae = read_image(ae_path);
    if (!clean.same_shape(ae)) throw ConfigError("clean and adversarial images differ in shape");
    std::shared_ptr<Oracle> oracle;
    try {
        oracle = make_oracle(oracle_from_spec(oracle_spec));
    } catch (const OracleError& e) {
        std::cerr << "evoae: oracle unreachable: " << e.what() << "\n";
        return kExitOracle;
    }
    std::vector<std::string> correct = labels;
    if (correct.empty()) correct.push_back(oracle->classify(clean).top().label);
    const auto angle_list = angles.empty() ? default_rotation_angles() : parse_angles(angles);
    const auto rows = robustness_table(clean, ae, *oracle, correct, angle_list);
    std::cout << robustness_text(rows);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw FormatError(csv_path + ": cannot write");
        out << robustness_csv(rows);
    }
    return kExitOk;
}

int cmd_dct_dims(long long w, long long h, long long patterns, long long block) {
    if (w <= 0 || h <= 0 || patterns <= 0 || block <= 0) {
        std::cerr << "evoae: dct-dims arguments must be positive\n";
        return kExitConfig;
    }
    std::cout << dct_dims(static_cast<int>(w), static_cast<int>(h), static_cast<int>(patterns),
                          static_cast<int>(block))
              << "\n";
    return kExitOk;
}

int cmd_plot(const std::string& front_path, const std::string& out_path) {
    write_front_svg(read_front_csv(front_path), out_path);
    return kExitOk;
}

int cmd_conformance(const std::string& endpoint, int samples, std::uint64_t seed) {
    ConformanceReport report;
    try {
        report = run_conformance(endpoint, samples, seed);
    } catch (const OracleError& e) {
        std::cerr << "evoae: oracle unreachable: " << e.what() << "\n";
        return kExitOracle;
    }
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    return report.passed() ? kExitOk : kExitNoFeasible;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Black-box adversarial examples by constrained multi-objective evolution"};
    app.require_subcommand(1);

    std::string config_path;
    bool resume = false, quiet = false;
    auto* attack = app.add_subcommand("attack", "Run an attack described by a JSON config");
    attack->add_option("config", config_path, "Config file")->required();
    attack->add_flag("--resume", resume, "Continue from the output directory's checkpoint");
    attack->add_flag("-q,--quiet", quiet, "No progress output");

    std::string clean_path, ae_path, oracle_spec, angles, csv_path;
    std::vector<std::string> labels;
    auto* eval = app.add_subcommand("eval", "Robustness table of an adversarial image under rotation");
    eval->add_option("clean", clean_path, "Clean image (PPM/PGM)")->required();
    eval->add_option("adversarial", ae_path, "Adversarial image (PPM/PGM)")->required();
    eval->add_option("--oracle", oracle_spec, "Weight file or http:// endpoint (default $EVOAE_ORACLE_ENDPOINT)");
    eval->add_option("--angles", angles, "Comma-separated degrees (default -60..60 step 15)");
    eval->add_option("--labels", labels, "Correct label set (default: clean top-1)")->delimiter(',');
    eval->add_option("--csv", csv_path, "Also write the table as CSV");

    long long w = 0, h = 0, patterns = 0, block = 0;
    auto* dims = app.add_subcommand("dct-dims", "Genotype length of the DCT encoding");
    dims->add_option("width", w)->required();
    dims->add_option("height", h)->required();
    dims->add_option("patterns", patterns)->required();
    dims->add_option("block", block)->required();

    std::string front_path, svg_path;
    auto* plot = app.add_subcommand("plot", "Render a front.csv as SVG");
    plot->add_option("front", front_path, "front.csv")->required();
    plot->add_option("output", svg_path, "Output SVG")->required();

    std::string endpoint;
    int samples = 8;
    std::uint64_t seed = 7;
    auto* conf = app.add_subcommand("conformance", "Check a remote oracle against the wire protocol");
    conf->add_option("endpoint", endpoint, "http://host:port")->required();
    conf->add_option("--samples", samples, "Random probe images")->check(CLI::PositiveNumber);
    conf->add_option("--seed", seed, "Probe seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*attack) return cmd_attack(config_path, resume, quiet);
        if (*eval) return cmd_eval(clean_path, ae_path, oracle_spec, angles, labels, csv_path);
        if (*dims) return cmd_dct_dims(w, h, patterns, block);
        if (*plot) return cmd_plot(front_path, svg_path);
        if (*conf) return cmd_conformance(endpoint, samples, seed);
    } catch (const ConfigError& e) {
        std::cerr << "evoae: " << e.what() << "\n";
        return kExitConfig;
    } catch (const OracleError& e) {
        std::cerr << "evoae: oracle failure: " << e.what() << "\n";
        return kExitOracle;
    } catch (const std::exception& e) {
        std::cerr << "evoae: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
