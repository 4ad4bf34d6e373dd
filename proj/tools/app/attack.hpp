#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "evoae/moead.hpp"

namespace evoae::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitNoFeasible = 1,
    kExitConfig = 2,
    kExitOracle = 3,
};

struct AttackOptions {
    bool resume = false;          // continue from <output_dir>/checkpoint.json when present
    std::ostream* log = nullptr;  // progress lines
};

struct AttackOutcome {
    int exit_code = kExitOk;
    std::string message;
    RunResult result;
    OracleStats oracle_stats;
    std::size_t genotype_length = 0;
    double wall_seconds = 0.0;
};

/// Objective labels for front.csv consumers and plots.
std::vector<std::string> objective_names(const ScenarioSpec& spec);

/// Runs one attack and writes the result directory:
///   front.csv, individuals.jsonl, genotypes/ind_<k>.csv, images/ae_<k>.ppm,
///   images/rho_<k>.ppm, images/rho_<k>.csv, front.svg, run.json,
///   config.resolved.json and (when enabled) checkpoint.json.
/// Oracle failures are reported through the exit code after the engine
/// state has been checkpointed; configuration problems throw ConfigError.
AttackOutcome run_attack(const AttackConfig& config, const AttackOptions& options = {});

} // namespace evoae::app
