#pragma once

#include <atomic>
#include <cstdint>
#include <future>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evoae/image.hpp"

namespace evoae {

struct LabelConfidence {
    std::string label;
    double confidence = 0.0;

    friend bool operator==(const LabelConfidence&, const LabelConfidence&) = default;
};

/// Ranked label distribution, descending by confidence. May be truncated
/// (top-k); labels not listed have confidence 0.
struct ClassificationResult {
    std::vector<LabelConfidence> ranked;
    std::string model_id;

    const LabelConfidence& top() const { return ranked.front(); }
    double confidence_of(std::string_view label) const;
    /// Summed confidence over a label set, capped at 1.
    double confidence_of(std::span<const std::string> labels) const;

    friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

/// Throws OracleMalformedResponse unless the result is non-empty, descending,
/// every confidence is finite and in [0, 1], and the total is <= 1 + 1e-6.
void validate_result(const ClassificationResult& result);

struct InputSpec {
    int width = 0;
    int height = 0;
    int channels = 0;

    friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

struct OracleStats {
    std::uint64_t queries = 0;
    std::uint64_t cache_hits = 0;
};

/// 64-bit FNV-1a over the dims and the quantized intensity buffer.
std::uint64_t image_hash(const Image& image);

/// The only channel between the optimizer and a model.
///
/// Images are quantized to 8 bits (nearest, ties to even) before they reach
/// the backend, which is what a real pipeline feeds a model and what makes the
/// content-hash cache transparent. `queries` counts backend classifications:
/// distinct images when caching is on, every image otherwise. Safe to call
/// from several threads.
class Oracle {
public:
    virtual ~Oracle() = default;
    Oracle(const Oracle&) = delete;
    Oracle& operator=(const Oracle&) = delete;

    const InputSpec& input() const { return input_; }
    const std::string& model_id() const { return model_id_; }

    ClassificationResult classify(const Image& image);
    /// Order-preserving; any failure fails the whole batch.
    std::vector<ClassificationResult> classify_batch(std::span<const Image> images);

    OracleStats stats() const { return {queries_.load(), cache_hits_.load()}; }
    bool caching() const { return caching_; }
    void set_caching(bool on);

protected:
    Oracle(InputSpec input, std::string model_id, bool caching = true);

    void set_identity(InputSpec input, std::string model_id);

    /// Classifies already-quantized images (same layout as Image::data).
    virtual std::vector<ClassificationResult> query(std::span<const std::vector<unsigned char>> batch) = 0;

private:
    void check_dims(const Image& image) const;

    InputSpec input_;
    std::string model_id_;
    bool caching_;
    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::mutex cache_mutex_;
    std::unordered_map<std::uint64_t, std::shared_future<ClassificationResult>> cache_;
};

} // namespace evoae
