#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evoae/encoding.hpp"
#include "evoae/moead.hpp"
#include "evoae/oracle.hpp"
#include "evoae/scenarios.hpp"

namespace evoae::app {

/// Environment variable naming the default remote oracle endpoint.
inline constexpr const char* kOracleEndpointEnv = "EVOAE_ORACLE_ENDPOINT";

struct OracleConfig {
    enum class Kind { builtin, remote } kind = Kind::builtin;
    std::filesystem::path weights;
    std::string endpoint;
    int timeout_ms = 10000;
    int retries = 2;
    bool cache = true;
};

struct EncodingConfig {
    enum class Kind { direct, dct } kind = Kind::direct;
    // direct
    int block_size = 1;
    double lower = -255.0;
    double upper = 255.0;
    bool luma_only = false;
    // dct
    int patterns = 1;
    int dct_block = 8;
    double coefficient_bound = 30.0;
};

struct IoConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    bool write_images = true;
    std::optional<std::size_t> max_images;
};

/// Everything one attack run needs. Parsing is strict: unknown keys, wrong
/// types and missing referenced files are ConfigErrors.
struct AttackConfig {
    ScenarioSpec scenario;
    EncodingConfig encoding;
    RunConfig optimizer;
    std::size_t checkpoint_every = 0;
    OracleConfig oracle;
    IoConfig io;
    InitConfig init;

    /// Relative paths resolve against the config file's directory.
    static AttackConfig load(const std::filesystem::path& path);
    static AttackConfig parse(const nlohmann::json& doc, const std::filesystem::path& base_dir);

    /// Fully resolved config (all defaults explicit, absolute paths); parses
    /// back to an identical configuration.
    nlohmann::json resolved() const;
};

std::shared_ptr<Oracle> make_oracle(const OracleConfig& config);
Encoding make_encoding(const EncodingConfig& config, const Image& clean);

/// "path/to/weights.aemlp" or "http://..."; empty falls back to $EVOAE_ORACLE_ENDPOINT.
OracleConfig oracle_from_spec(const std::string& spec);

} // namespace evoae::app
