#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "evoae/dct.hpp"
#include "evoae/image.hpp"

namespace evoae {

/// Per-coordinate box bounds of a genotype. Both ends are finite.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }
    static Bounds uniform(std::size_t n, double lo, double hi);
    void validate() const;
};

/// Number of variables of the DCT genotype: N_DCT^2 * N_AP + ceil(W/N_DCT) * ceil(H/N_DCT).
std::size_t dct_dims(int width, int height, int patterns, int block);

/// One real per N_w x N_w block and gene channel; every pixel of a block takes
/// the block's value. With luma_only set on a colour image the genotype has a
/// single channel and the delta is added equally to R, G and B.
class DirectLayout {
public:
    DirectLayout(int width, int height, int image_channels, int block_size = 1, double lower = -255.0,
                 double upper = 255.0, bool luma_only = false);

    int width() const { return width_; }
    int height() const { return height_; }
    int image_channels() const { return image_channels_; }
    int block_size() const { return block_; }
    bool luma_only() const { return luma_only_; }
    int blocks_x() const { return (width_ + block_ - 1) / block_; }
    int blocks_y() const { return (height_ + block_ - 1) / block_; }
    int gene_channels() const { return luma_only_ ? 1 : image_channels_; }
    double lower() const { return lower_; }
    double upper() const { return upper_; }

    std::size_t genotype_length() const {
        return static_cast<std::size_t>(blocks_x()) * blocks_y() * gene_channels();
    }
    std::size_t index(int block_u, int block_v, int channel) const {
        return (static_cast<std::size_t>(block_v) * blocks_x() + block_u) * gene_channels() + channel;
    }
    Bounds bounds() const { return Bounds::uniform(genotype_length(), lower_, upper_); }

    Perturbation decode(std::span<const double> values) const;

private:
    int width_, height_, image_channels_, block_;
    double lower_, upper_;
    bool luma_only_;
};

/// Selector reals (one per N_DCT block, in [0, N_AP + 1)) followed by N_AP
/// coefficient-alteration patterns of N_DCT x N_DCT reals each.
class DctLayout {
public:
    DctLayout(int width, int height, int image_channels, int patterns = 1, int block = 8,
              double coefficient_bound = 30.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int image_channels() const { return image_channels_; }
    int patterns() const { return patterns_; }
    int block() const { return dct_->size(); }
    double coefficient_bound() const { return coefficient_bound_; }
    int blocks_x() const { return (width_ + block() - 1) / block(); }
    int blocks_y() const { return (height_ + block() - 1) / block(); }

    std::size_t selector_count() const { return static_cast<std::size_t>(blocks_x()) * blocks_y(); }
    std::size_t pattern_offset() const { return selector_count(); }
    std::size_t genotype_length() const {
        return selector_count() + static_cast<std::size_t>(patterns_) * block() * block();
    }
    Bounds bounds() const;

    /// floor(selector) clamped to {0, ..., N_AP}; 0 leaves the block's coefficients untouched.
    int selected_pattern(double selector) const;

    /// Perturbs the luma DCT coefficients block by block and returns the
    /// reconstructed luma minus the clean luma, replicated over all channels.
    /// Every block goes through the forward/inverse round trip.
    Perturbation decode(std::span<const double> values, const Image& clean) const;

private:
    int width_, height_, image_channels_, patterns_;
    double coefficient_bound_;
    std::shared_ptr<const BlockDct> dct_;
};

using Encoding = std::variant<DirectLayout, DctLayout>;

std::size_t genotype_length(const Encoding& encoding);
Bounds encoding_bounds(const Encoding& encoding);
Perturbation decode(const Encoding& encoding, std::span<const double> values, const Image& clean);

/// Grayscale rendering of rho: mid-gray is 0, brighter is positive. Channel
/// deltas are averaged per pixel and scaled by the pattern's largest magnitude.
Image visualize_perturbation(const Perturbation& rho);

/// Raw dump: header "x,y,channel,delta", one row per pixel-channel.
void write_perturbation_csv(const Perturbation& rho, const std::filesystem::path& path);

} // namespace evoae
