#include "evoae/oracle.hpp"

#include <cmath>
#include <exception>

#include "evoae/error.hpp"

namespace evoae {

double ClassificationResult::confidence_of(std::string_view label) const {
    for (const auto& lc : ranked)
        if (lc.label == label) return lc.confidence;
    return 0.0;
}

double ClassificationResult::confidence_of(std::span<const std::string> labels) const {
    double sum = 0.0;
    for (const auto& lc : ranked)
        for (const auto& l : labels)
            if (lc.label == l) {
                sum += lc.confidence;
                break;
            }
    return std::min(sum, 1.0);
}

void validate_result(const ClassificationResult& result) {
    if (result.ranked.empty()) throw OracleMalformedResponse("classification result is empty");
    double total = 0.0;
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
        const double c = result.ranked[i].confidence;
        if (!std::isfinite(c) || c < 0.0 || c > 1.0)
            throw OracleMalformedResponse("confidence out of [0, 1] for label '" + result.ranked[i].label + "'");
        if (i > 0 && c > result.ranked[i - 1].confidence)
            throw OracleMalformedResponse("classification result is not in descending order");
        total += c;
    }
    if (total > 1.0 + 1e-6) throw OracleMalformedResponse("confidences sum to more than 1");
}

std::uint64_t image_hash(const Image& image) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (int dim : {image.width, image.height, image.channels})
        for (int s = 0; s < 32; s += 8) mix(static_cast<unsigned char>((static_cast<unsigned>(dim) >> s) & 0xff));
    for (unsigned char b : quantize(image)) mix(b);
    return h;
}

Oracle::Oracle(InputSpec input, std::string model_id, bool caching)
    : input_(input), model_id_(std::move(model_id)), caching_(caching) {}

void Oracle::set_identity(InputSpec input, std::string model_id) {
    input_ = input;
    model_id_ = std::move(model_id);
}

void Oracle::set_caching(bool on) {
    std::lock_guard lock(cache_mutex_);
    caching_ = on;
}

void Oracle::check_dims(const Image& image) const {
    if (image.width != input_.width || image.height != input_.height || image.channels != input_.channels)
        throw ContractError("oracle '" + model_id_ + "' expects " + std::to_string(input_.width) + "x" +
                            std::to_string(input_.height) + "x" + std::to_string(input_.channels) + " input, got " +
                            std::to_string(image.width) + "x" + std::to_string(image.height) + "x" +
                            std::to_string(image.channels));
}

ClassificationResult Oracle::classify(const Image& image) {
    return std::move(classify_batch(std::span<const Image>(&image, 1)).front());
}

std::vector<ClassificationResult> Oracle::classify_batch(std::span<const Image> images) {
    for (const auto& img : images) check_dims(img);
    if (images.empty()) return {};

    if (!caching_) {
        std::vector<std::vector<unsigned char>> bytes;
        bytes.reserve(images.size());
        for (const auto& img : images) bytes.push_back(quantize(img));
        auto results = query(bytes);
        if (results.size() != images.size()) throw OracleMalformedResponse("backend returned a short batch");
        for (const auto& r : results) validate_result(r);
        queries_ += images.size();
        return results;
    }

    std::vector<std::shared_future<ClassificationResult>> futures(images.size());
    std::vector<std::vector<unsigned char>> miss_bytes;
    std::vector<std::promise<ClassificationResult>> promises;
    std::vector<std::uint64_t> miss_keys;
    {
        std::lock_guard lock(cache_mutex_);
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto key = image_hash(images[i]);
            if (auto it = cache_.find(key); it != cache_.end()) {
                futures[i] = it->second;
                ++cache_hits_;
                continue;
            }
            auto& p = promises.emplace_back();
            futures[i] = p.get_future().share();
            cache_.emplace(key, futures[i]);
            miss_keys.push_back(key);
            miss_bytes.push_back(quantize(images[i]));
        }
    }

    if (!miss_bytes.empty()) {
        try {
            auto results = query(miss_bytes);
            if (results.size() != miss_bytes.size()) throw OracleMalformedResponse("backend returned a short batch");
            for (const auto& r : results) validate_result(r);
            queries_ += miss_bytes.size();
            for (std::size_t m = 0; m < results.size(); ++m) promises[m].set_value(std::move(results[m]));
        } catch (...) {
            {
                std::lock_guard lock(cache_mutex_);
                for (auto key : miss_keys) cache_.erase(key);
            }
            for (auto& p : promises) p.set_exception(std::current_exception());
            throw;
        }
    }

    std::vector<ClassificationResult> out;
    out.reserve(images.size());
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

} // namespace evoae
