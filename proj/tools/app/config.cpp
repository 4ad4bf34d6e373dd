#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "evoae/error.hpp"
#include "evoae/mlp.hpp"
#include "evoae/remote.hpp"

namespace evoae::app {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal();
}

std::string norm_text(const json& j, const std::string& where) {
    if (j.is_number_integer()) return std::to_string(j.get<int>());
    if (j.is_string()) return j.get<std::string>();
    throw ConfigError(where + ": norm must be 0, 1, 2 or \"inf\"");
}

json norm_json(NormOrder order) {
    if (order == NormOrder::linf) return "inf";
    return std::stoi(to_string(order));
}

ScenarioSpec parse_scenario(const json& j) {
    const std::string where = "scenario";
    check_keys(j, {"kind", "norm", "l1_mode", "correct_labels", "constraints", "angles"}, where);
    auto spec = ScenarioSpec::defaults(parse_scenario_kind(require<std::string>(j, "kind", where)));
    if (j.contains("norm")) spec.norm_order = parse_norm_order(norm_text(j["norm"], where + ".norm"));
    if (j.contains("l1_mode")) {
        const auto mode = require<std::string>(j, "l1_mode", where);
        if (mode == "mean") spec.l1_mode = L1Mode::mean;
        else if (mode == "sum") spec.l1_mode = L1Mode::sum;
        else throw ConfigError(where + ".l1_mode: expected \"mean\" or \"sum\"");
    }
    spec.correct_labels = get<std::vector<std::string>>(j, "correct_labels", where, {});
    if (j.contains("constraints")) {
        if (!j["constraints"].is_array()) throw ConfigError(where + ".constraints: expected an array");
        spec.constraints.clear();
        for (std::size_t i = 0; i < j["constraints"].size(); ++i) {
            const auto& c = j["constraints"][i];
            const std::string w = where + ".constraints[" + std::to_string(i) + "]";
            check_keys(c, {"metric", "comparator", "threshold", "norm"}, w);
            Constraint con;
            con.metric = parse_constraint_metric(require<std::string>(c, "metric", w));
            con.comparator = parse_comparator(get<std::string>(c, "comparator", w, "<"));
            con.threshold = require<double>(c, "threshold", w);
            if (c.contains("norm")) con.order = parse_norm_order(norm_text(c["norm"], w + ".norm"));
            spec.constraints.push_back(con);
        }
    }
    if (j.contains("angles")) spec.angles = require<std::vector<double>>(j, "angles", where);
    spec.validate();
    return spec;
}

EncodingConfig parse_encoding(const json& j) {
    const std::string where = "encoding";
    EncodingConfig e;
    const auto type = require<std::string>(j, "type", where);
    if (type == "direct") {
        check_keys(j, {"type", "block_size", "lower", "upper", "luma_only"}, where);
        e.kind = EncodingConfig::Kind::direct;
        e.block_size = get<int>(j, "block_size", where, e.block_size);
        e.lower = get<double>(j, "lower", where, e.lower);
        e.upper = get<double>(j, "upper", where, e.upper);
        e.luma_only = get<bool>(j, "luma_only", where, e.luma_only);
        if (e.block_size < 1) throw ConfigError(where + ".block_size must be >= 1");
        if (!(e.lower <= e.upper)) throw ConfigError(where + ": lower must not exceed upper");
    } else if (type == "dct") {
        check_keys(j, {"type", "patterns", "block", "coefficient_bound"}, where);
        e.kind = EncodingConfig::Kind::dct;
        e.patterns = get<int>(j, "patterns", where, e.patterns);
        e.dct_block = get<int>(j, "block", where, e.dct_block);
        e.coefficient_bound = get<double>(j, "coefficient_bound", where, e.coefficient_bound);
        if (e.patterns < 1) throw ConfigError(where + ".patterns must be >= 1");
        if (e.dct_block < 2) throw ConfigError(where + ".block must be >= 2");
        if (!(e.coefficient_bound > 0)) throw ConfigError(where + ".coefficient_bound must be positive");
    } else {
        throw ConfigError(where + ".type: expected \"direct\" or \"dct\"");
    }
    return e;
}

void parse_optimizer(const json& j, AttackConfig& cfg) {
    const std::string where = "optimizer";
    check_keys(j,
               {"population_size", "generations", "neighborhood_size", "delta", "max_replacements", "cr", "f",
                "mutation_probability", "eta", "seed", "evaluation_budget", "threads", "checkpoint_every"},
               where);
    auto& o = cfg.optimizer;
    o.population_size = get<std::size_t>(j, "population_size", where, o.population_size);
    o.generations = get<std::size_t>(j, "generations", where, o.generations);
    o.neighborhood_size = get<std::size_t>(j, "neighborhood_size", where, o.neighborhood_size);
    o.delta = get<double>(j, "delta", where, o.delta);
    o.max_replacements = get<std::size_t>(j, "max_replacements", where, o.max_replacements);
    o.cr = get<double>(j, "cr", where, o.cr);
    o.f = get<double>(j, "f", where, o.f);
    if (j.contains("mutation_probability") && !j["mutation_probability"].is_null())
        o.mutation_probability = require<double>(j, "mutation_probability", where);
    o.eta = get<double>(j, "eta", where, o.eta);
    o.seed = get<std::uint64_t>(j, "seed", where, o.seed);
    if (j.contains("evaluation_budget") && !j["evaluation_budget"].is_null())
        o.evaluation_budget = require<std::uint64_t>(j, "evaluation_budget", where);
    o.threads = get<std::size_t>(j, "threads", where, o.threads);
    cfg.checkpoint_every = get<std::size_t>(j, "checkpoint_every", where, 0);
}

OracleConfig parse_oracle(const json& j, const std::filesystem::path& base) {
    const std::string where = "oracle";
    check_keys(j, {"builtin", "remote"}, where);
    if (j.contains("builtin") == j.contains("remote")) throw ConfigError(where + ": exactly one of builtin/remote required");
    OracleConfig o;
    if (j.contains("builtin")) {
        const auto& b = j["builtin"];
        check_keys(b, {"weights", "cache"}, where + ".builtin");
        o.kind = OracleConfig::Kind::builtin;
        o.weights = resolve(base, require<std::string>(b, "weights", where + ".builtin"));
        o.cache = get<bool>(b, "cache", where, true);
        if (!std::filesystem::is_regular_file(o.weights))
            throw ConfigError(where + ".builtin.weights: file not found: " + o.weights.string());
    } else {
        const auto& r = j["remote"];
        check_keys(r, {"endpoint", "timeout_ms", "retries", "cache"}, where + ".remote");
        o.kind = OracleConfig::Kind::remote;
        o.endpoint = get<std::string>(r, "endpoint", where, "");
        if (o.endpoint.empty()) {
            const char* env = std::getenv(kOracleEndpointEnv);
            if (!env || !*env) throw ConfigError(where + ".remote.endpoint missing and $" + kOracleEndpointEnv + " unset");
            o.endpoint = env;
        }
        o.timeout_ms = get<int>(r, "timeout_ms", where, o.timeout_ms);
        o.retries = get<int>(r, "retries", where, o.retries);
        o.cache = get<bool>(r, "cache", where, true);
        if (o.timeout_ms <= 0 || o.retries < 0) throw ConfigError(where + ".remote: invalid timeout/retries");
    }
    return o;
}

InitConfig parse_init(const json& j) {
    const std::string where = "init";
    check_keys(j, {"kind", "groups"}, where);
    InitConfig init;
    const auto kind = get<std::string>(j, "kind", where, "uniform");
    if (kind == "uniform") {
        init.kind = InitConfig::Kind::uniform;
        if (j.contains("groups")) throw ConfigError(where + ".groups only applies to stratified init");
    } else if (kind == "stratified") {
        init.kind = InitConfig::Kind::stratified;
        if (j.contains("groups")) {
            init.groups.clear();
            for (std::size_t i = 0; i < j["groups"].size(); ++i) {
                const auto& g = j["groups"][i];
                const std::string w = where + ".groups[" + std::to_string(i) + "]";
                check_keys(g, {"fraction", "range", "min_magnitude"}, w);
                init.groups.push_back({require<double>(g, "fraction", w), require<double>(g, "range", w),
                                       get<double>(g, "min_magnitude", w, 0.0)});
            }
        }
    } else {
        throw ConfigError(where + ".kind: expected \"uniform\" or \"stratified\"");
    }
    return init;
}

} // namespace

AttackConfig AttackConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
    auto base = std::filesystem::absolute(path).parent_path();
    return parse(doc, base);
}

AttackConfig AttackConfig::parse(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, {"scenario", "encoding", "optimizer", "oracle", "io", "init"}, "config");
    AttackConfig cfg;
    if (!doc.contains("scenario")) throw ConfigError("config: missing 'scenario'");
    cfg.scenario = parse_scenario(doc["scenario"]);
    if (!doc.contains("encoding")) throw ConfigError("config: missing 'encoding'");
    cfg.encoding = parse_encoding(doc["encoding"]);
    if (doc.contains("optimizer")) parse_optimizer(doc["optimizer"], cfg);
    cfg.optimizer.validate(cfg.scenario.objective_count());

    if (doc.contains("oracle")) {
        cfg.oracle = parse_oracle(doc["oracle"], base_dir);
    } else {
        cfg.oracle = parse_oracle(json{{"remote", json::object()}}, base_dir);
    }

    if (!doc.contains("io")) throw ConfigError("config: missing 'io'");
    const auto& io = doc["io"];
    check_keys(io, {"input", "output_dir", "write_images", "max_images"}, "io");
    cfg.io.input = resolve(base_dir, require<std::string>(io, "input", "io"));
    cfg.io.output_dir = resolve(base_dir, require<std::string>(io, "output_dir", "io"));
    cfg.io.write_images = get<bool>(io, "write_images", "io", true);
    if (io.contains("max_images") && !io["max_images"].is_null())
        cfg.io.max_images = require<std::size_t>(io, "max_images", "io");
    if (!std::filesystem::is_regular_file(cfg.io.input))
        throw ConfigError("io.input: file not found: " + cfg.io.input.string());

    if (doc.contains("init")) cfg.init = parse_init(doc["init"]);
    if (cfg.init.kind == InitConfig::Kind::stratified && cfg.encoding.kind != EncodingConfig::Kind::direct)
        throw ConfigError("init: stratified initialization requires the direct encoding");
    return cfg;
}

json AttackConfig::resolved() const {
    json scenario = {{"kind", to_string(this->scenario.kind)},
                     {"norm", norm_json(this->scenario.norm_order)},
                     {"l1_mode", this->scenario.l1_mode == L1Mode::mean ? "mean" : "sum"},
                     {"correct_labels", this->scenario.correct_labels},
                     {"constraints", json::array()}};
    for (const auto& c : this->scenario.constraints) {
        json cj = {{"metric", to_string(c.metric)}, {"comparator", to_string(c.comparator)}, {"threshold", c.threshold}};
        if (c.order) cj["norm"] = norm_json(*c.order);
        scenario["constraints"].push_back(std::move(cj));
    }
    if (this->scenario.kind == ScenarioKind::robust) scenario["angles"] = this->scenario.angles;

    json enc;
    if (encoding.kind == EncodingConfig::Kind::direct)
        enc = {{"type", "direct"}, {"block_size", encoding.block_size}, {"lower", encoding.lower},
               {"upper", encoding.upper}, {"luma_only", encoding.luma_only}};
    else
        enc = {{"type", "dct"}, {"patterns", encoding.patterns}, {"block", encoding.dct_block},
               {"coefficient_bound", encoding.coefficient_bound}};

    const auto& o = optimizer;
    json opt = {{"population_size", o.population_size}, {"generations", o.generations},
                {"neighborhood_size", o.neighborhood_size}, {"delta", o.delta},
                {"max_replacements", o.max_replacements}, {"cr", o.cr}, {"f", o.f},
                {"mutation_probability", o.mutation_probability ? json(*o.mutation_probability) : json(nullptr)},
                {"eta", o.eta}, {"seed", o.seed},
                {"evaluation_budget", o.evaluation_budget ? json(*o.evaluation_budget) : json(nullptr)},
                {"threads", o.threads}, {"checkpoint_every", checkpoint_every}};

    json orc;
    if (oracle.kind == OracleConfig::Kind::builtin)
        orc = {{"builtin", {{"weights", oracle.weights.string()}, {"cache", oracle.cache}}}};
    else
        orc = {{"remote", {{"endpoint", oracle.endpoint}, {"timeout_ms", oracle.timeout_ms}, {"retries", oracle.retries},
                           {"cache", oracle.cache}}}};

    json io_j = {{"input", io.input.string()}, {"output_dir", io.output_dir.string()}, {"write_images", io.write_images},
                 {"max_images", io.max_images ? json(*io.max_images) : json(nullptr)}};

    json init_j = {{"kind", init.kind == InitConfig::Kind::uniform ? "uniform" : "stratified"}};
    if (init.kind == InitConfig::Kind::stratified) {
        init_j["groups"] = json::array();
        for (const auto& g : init.groups)
            init_j["groups"].push_back({{"fraction", g.fraction}, {"range", g.range}, {"min_magnitude", g.min_magnitude}});
    }
    return {{"scenario", scenario}, {"encoding", enc}, {"optimizer", opt},
            {"oracle", orc},        {"io", io_j},      {"init", init_j}};
}

std::shared_ptr<Oracle> make_oracle(const OracleConfig& config) {
    if (config.kind == OracleConfig::Kind::builtin) return load_builtin(config.weights, config.cache);
    RemoteOptions opts;
    opts.endpoint = config.endpoint;
    opts.timeout = std::chrono::milliseconds(config.timeout_ms);
    opts.retries = config.retries;
    opts.caching = config.cache;
    return RemoteOracle::connect(opts);
}

Encoding make_encoding(const EncodingConfig& c, const Image& clean) {
    if (c.kind == EncodingConfig::Kind::direct)
        return DirectLayout(clean.width, clean.height, clean.channels, c.block_size, c.lower, c.upper, c.luma_only);
    return DctLayout(clean.width, clean.height, clean.channels, c.patterns, c.dct_block, c.coefficient_bound);
}

OracleConfig oracle_from_spec(const std::string& spec) {
    std::string s = spec;
    if (s.empty()) {
        const char* env = std::getenv(kOracleEndpointEnv);
        if (!env || !*env) throw ConfigError(std::string("no oracle given and $") + kOracleEndpointEnv + " unset");
        s = env;
    }
    OracleConfig o;
    if (s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0) {
        o.kind = OracleConfig::Kind::remote;
        o.endpoint = s;
    } else {
        o.kind = OracleConfig::Kind::builtin;
        o.weights = s;
        if (!std::filesystem::is_regular_file(o.weights)) throw ConfigError("oracle weight file not found: " + s);
    }
    return o;
}

} // namespace evoae::app
