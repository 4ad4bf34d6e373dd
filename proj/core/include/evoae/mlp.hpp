#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evoae/oracle.hpp"

namespace evoae {

enum class Activation : std::uint8_t { none = 0, relu = 1 };

struct DenseLayer {
    std::uint32_t rows = 0;  // outputs
    std::uint32_t cols = 0;  // inputs
    Activation activation = Activation::none;
    std::vector<float> weights;  // rows * cols, row-major
    std::vector<float> bias;     // rows
};

/// Forward-only stack of dense layers followed by a softmax.
///
/// Weight file ("AEMLP01\0", little-endian):
///   u32 input_w, u32 input_h, u32 channels,
///   u32 label_count, label_count x (u32 byte_length, UTF-8 bytes),
///   u32 layer_count, per layer: u32 rows, u32 cols, u8 activation,
///   rows*cols f32 weights (row-major), rows f32 biases.
/// The network input is the image buffer (row-major, channel-interleaved)
/// divided by 255.
struct MlpModel {
    InputSpec input;
    std::vector<std::string> labels;
    std::vector<DenseLayer> layers;

    static MlpModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    /// Throws FormatError on dimension inconsistencies or non-finite weights.
    void validate() const;

    std::size_t input_size() const {
        return static_cast<std::size_t>(input.width) * input.height * input.channels;
    }
    /// Softmax output for an input already scaled to [0, 1].
    std::vector<double> probabilities(std::span<const double> input01) const;
};

/// Evaluates the model with zero weights skipped; the remaining terms are
/// summed in the same order, so results equal MlpModel::probabilities.
class MlpOracle final : public Oracle {
public:
    MlpOracle(MlpModel model, std::string model_id, bool caching = true);

    const MlpModel& model() const { return model_; }
    std::vector<double> probabilities(std::span<const double> input01) const;

protected:
    std::vector<ClassificationResult> query(std::span<const std::vector<unsigned char>> batch) override;

private:
    struct SparseLayer {
        std::vector<std::uint32_t> row_start;  // rows + 1 offsets into cols/weights
        std::vector<std::uint32_t> cols;
        std::vector<double> weights;
    };

    MlpModel model_;
    std::vector<SparseLayer> sparse_;
};

/// Loads the built-in backend from a weight file.
std::shared_ptr<MlpOracle> load_builtin(const std::filesystem::path& model_file, bool caching = true);

} // namespace evoae
