#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "evoae/oracle.hpp"

namespace httplib {
class Client;
}

namespace evoae {

struct RemoteOptions {
    std::string endpoint;  // http://host:port[/base]
    std::chrono::milliseconds timeout{10000};
    int retries = 2;       // extra attempts after the first for retryable failures
    bool caching = true;
};

/// HTTP client for the classification wire protocol (see wire.hpp).
/// Requests are serialized over one connection.
class RemoteOracle final : public Oracle {
public:
    /// Probes GET /v1/info; throws OracleError subclasses when unreachable.
    static std::shared_ptr<RemoteOracle> connect(const RemoteOptions& options);
    ~RemoteOracle() override;

    bool supports_batch() const { return batch_; }
    std::uint64_t requests_sent() const;

protected:
    std::vector<ClassificationResult> query(std::span<const std::vector<unsigned char>> batch) override;

private:
    explicit RemoteOracle(const RemoteOptions& options);
    std::string post(const std::string& path, const std::string& body);
    std::string get(const std::string& path);

    template <typename Fn>
    std::string with_retries(const std::string& what, Fn&& send);

    RemoteOptions options_;
    std::string base_path_;
    std::unique_ptr<httplib::Client> client_;
    bool batch_ = false;
    mutable std::mutex mutex_;
    std::uint64_t requests_ = 0;
};

std::shared_ptr<RemoteOracle> connect_remote(const std::string& endpoint,
                                             std::chrono::milliseconds timeout = std::chrono::milliseconds(10000),
                                             int retries = 2);

/// Protocol conformance checks runnable against any endpoint.
struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ConformanceReport {
    std::vector<ConformanceCheck> checks;
    bool passed() const;
};

/// Exercises /v1/info, /v1/classify and /v1/classify_batch: result
/// invariants, determinism, and batch/single equivalence on `samples`
/// seeded random images.
ConformanceReport run_conformance(const std::string& endpoint, int samples = 8, std::uint64_t seed = 7);

} // namespace evoae
