#include "evoae/remote.hpp"

#include <httplib.h>

#include <cmath>
#include <random>

#include "evoae/error.hpp"
#include "evoae/rng.hpp"
#include "evoae/wire.hpp"

namespace evoae {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string scheme_host_port;
    std::string base_path;
};

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("oracle endpoint must be an http:// URL: " + url);
    if (url.compare(0, scheme_end, "http") != 0) throw ConfigError("only http:// oracle endpoints are supported: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = url.substr(0, path_start);
    if (path_start != std::string::npos) ep.base_path = url.substr(path_start);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    if (ep.scheme_host_port.size() <= scheme_end + 3) throw ConfigError("oracle endpoint has no host: " + url);
    return ep;
}

json parse_body(const std::string& body, const std::string& what) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw OracleMalformedResponse(what + ": response is not JSON (" + e.what() + ")");
    }
}

} // namespace

RemoteOracle::RemoteOracle(const RemoteOptions& options) : Oracle({}, "", options.caching), options_(options) {
    if (options.retries < 0) throw ConfigError("oracle retries must be >= 0");
    if (options.timeout.count() <= 0) throw ConfigError("oracle timeout must be positive");
    auto ep = parse_endpoint(options.endpoint);
    base_path_ = ep.base_path;
    client_ = std::make_unique<httplib::Client>(ep.scheme_host_port);
    client_->set_connection_timeout(options.timeout);
    client_->set_read_timeout(options.timeout);
    client_->set_write_timeout(options.timeout);
    client_->set_keep_alive(true);
}

RemoteOracle::~RemoteOracle() = default;

std::shared_ptr<RemoteOracle> RemoteOracle::connect(const RemoteOptions& options) {
    std::shared_ptr<RemoteOracle> oracle(new RemoteOracle(options));
    const auto info = wire::info_from_json(parse_body(oracle->get("/v1/info"), "/v1/info"));
    oracle->set_identity(info.input, info.model_id);
    oracle->batch_ = info.batch;
    return oracle;
}

std::uint64_t RemoteOracle::requests_sent() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

template <typename Fn>
std::string RemoteOracle::with_retries(const std::string& what, Fn&& send) {
    const int max_attempts = options_.retries + 1;
    for (int attempt = 1;; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        httplib::Result res = send();
        ++requests_;
        try {
            if (!res) {
                const auto err = res.error();
                const auto elapsed = std::chrono::steady_clock::now() - started;
                const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                       (err == httplib::Error::Read && elapsed >= options_.timeout * 9 / 10);
                if (timed_out) throw OracleTimeout(what + ": timed out after " + std::to_string(attempt) + " attempt(s)", attempt);
                throw OracleTransportError(what + ": " + httplib::to_string(err) + " after " + std::to_string(attempt) +
                                               " attempt(s)",
                                           attempt);
            }
            if (res->status < 200 || res->status >= 300)
                throw OracleHttpStatus(what + ": HTTP " + std::to_string(res->status) + " after " +
                                           std::to_string(attempt) + " attempt(s)",
                                       res->status, attempt);
            return res->body;
        } catch (const OracleError& e) {
            if (!e.retryable() || attempt >= max_attempts) throw;
        }
    }
}

std::string RemoteOracle::get(const std::string& path) {
    std::lock_guard lock(mutex_);
    const std::string full = base_path_ + path;
    return with_retries("GET " + path, [&] { return client_->Get(full); });
}

std::string RemoteOracle::post(const std::string& path, const std::string& body) {
    std::lock_guard lock(mutex_);
    const std::string full = base_path_ + path;
    return with_retries("POST " + path, [&] { return client_->Post(full, body, "application/json"); });
}

std::vector<ClassificationResult> RemoteOracle::query(std::span<const std::vector<unsigned char>> batch) {
    const auto& in = input();
    auto image_json = [&](const std::vector<unsigned char>& bytes) {
        json data = json::array();
        for (unsigned char b : bytes) data.push_back(static_cast<int>(b));
        return json{{"width", in.width}, {"height", in.height}, {"channels", in.channels}, {"data", std::move(data)}};
    };

    std::vector<ClassificationResult> out;
    out.reserve(batch.size());
    if (batch_ && batch.size() > 1) {
        json images = json::array();
        for (const auto& b : batch) images.push_back(image_json(b));
        const auto body = parse_body(post("/v1/classify_batch", json{{"images", std::move(images)}}.dump()),
                                     "/v1/classify_batch");
        if (!body.contains("results") || !body["results"].is_array() || body["results"].size() != batch.size())
            throw OracleMalformedResponse("/v1/classify_batch: results missing or of the wrong length");
        for (const auto& r : body["results"]) out.push_back(wire::result_from_json(r));
        return out;
    }
    for (const auto& b : batch) {
        const auto body = parse_body(post("/v1/classify", json{{"image", image_json(b)}}.dump()), "/v1/classify");
        out.push_back(wire::result_from_json(body));
    }
    return out;
}

std::shared_ptr<RemoteOracle> connect_remote(const std::string& endpoint, std::chrono::milliseconds timeout,
                                             int retries) {
    return RemoteOracle::connect({endpoint, timeout, retries, true});
}

bool ConformanceReport::passed() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

ConformanceReport run_conformance(const std::string& endpoint, int samples, std::uint64_t seed) {
    ConformanceReport report;
    auto record = [&](std::string name, auto&& fn) {
        ConformanceCheck check{std::move(name), false, {}};
        try {
            check.detail = fn();
            check.passed = true;
        } catch (const std::exception& e) {
            check.detail = e.what();
        }
        report.checks.push_back(std::move(check));
        return report.checks.back().passed;
    };

    const auto ep = parse_endpoint(endpoint);
    httplib::Client cli(ep.scheme_host_port);
    cli.set_read_timeout(std::chrono::seconds(30));
    auto fetch = [&](const std::string& path, const std::string* body) {
        auto res = body ? cli.Post(ep.base_path + path, *body, "application/json") : cli.Get(ep.base_path + path);
        if (!res) throw OracleTransportError(path + ": " + httplib::to_string(res.error()), 1);
        return std::make_pair(res->status, res->body);
    };

    wire::Info info;
    if (!record("info", [&] {
            auto [status, body] = fetch("/v1/info", nullptr);
            if (status != 200) throw OracleHttpStatus("/v1/info returned " + std::to_string(status), status, 1);
            info = wire::info_from_json(parse_body(body, "/v1/info"));
            return "model " + info.model_id + ", input " + std::to_string(info.input.width) + "x" +
                   std::to_string(info.input.height) + "x" + std::to_string(info.input.channels) +
                   (info.batch ? ", batch" : ", no batch");
        }))
        return report;

    Rng rng(seed);
    std::vector<Image> images;
    for (int s = 0; s < samples; ++s) {
        Image img(info.input.width, info.input.height, info.input.channels);
        for (double& v : img.data) v = static_cast<double>(uniform_index(rng, 0, 255));
        images.push_back(std::move(img));
    }

    std::vector<ClassificationResult> singles;
    record("classify", [&] {
        for (const auto& img : images) {
            const auto body = json{{"image", wire::to_json(img)}}.dump();
            auto [status, text] = fetch("/v1/classify", &body);
            if (status != 200) throw OracleHttpStatus("/v1/classify returned " + std::to_string(status), status, 1);
            auto r = wire::result_from_json(parse_body(text, "/v1/classify"));
            if (r.model_id != info.model_id) throw OracleMalformedResponse("model_id differs from /v1/info");
            singles.push_back(std::move(r));
        }
        return std::to_string(singles.size()) + " results satisfy the distribution invariants";
    });

    record("determinism", [&] {
        if (singles.empty()) throw OracleError("no single results to compare");
        const auto body = json{{"image", wire::to_json(images.front())}}.dump();
        auto [status, text] = fetch("/v1/classify", &body);
        if (status != 200) throw OracleHttpStatus("/v1/classify returned " + std::to_string(status), status, 1);
        if (wire::result_from_json(parse_body(text, "/v1/classify")) != singles.front())
            throw OracleError("repeated request returned a different result");
        return std::string("identical responses for identical requests");
    });

    if (info.batch) {
        record("batch_equivalence", [&] {
            json arr = json::array();
            for (const auto& img : images) arr.push_back(wire::to_json(img));
            const auto body = json{{"images", std::move(arr)}}.dump();
            auto [status, text] = fetch("/v1/classify_batch", &body);
            if (status != 200) throw OracleHttpStatus("/v1/classify_batch returned " + std::to_string(status), status, 1);
            const auto parsed = parse_body(text, "/v1/classify_batch");
            if (!parsed.contains("results") || parsed["results"].size() != images.size())
                throw OracleMalformedResponse("batch result count differs from request");
            for (std::size_t i = 0; i < images.size(); ++i) {
                const auto r = wire::result_from_json(parsed["results"][i]);
                if (i >= singles.size() || r.ranked.size() != singles[i].ranked.size())
                    throw OracleError("batch result " + std::to_string(i) + " differs from single classify");
                for (std::size_t k = 0; k < r.ranked.size(); ++k)
                    if (r.ranked[k].label != singles[i].ranked[k].label ||
                        std::abs(r.ranked[k].confidence - singles[i].ranked[k].confidence) > 1e-9)
                        throw OracleError("batch result " + std::to_string(i) + " differs from single classify");
            }
            return std::to_string(images.size()) + " batch results match single requests";
        });
    }

    record("rejects_malformed", [&] {
        const std::string body = R"({"image": {"width": 1}})";
        auto [status, text] = fetch("/v1/classify", &body);
        if (status < 400 || status >= 500)
            throw OracleHttpStatus("malformed body answered with " + std::to_string(status), status, 1);
        return "malformed body rejected with " + std::to_string(status);
    });
    return report;
}

} // namespace evoae
