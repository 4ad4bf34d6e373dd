#include "evoae/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "evoae/error.hpp"

namespace evoae {

Bounds Bounds::uniform(std::size_t n, double lo, double hi) {
    Bounds b{std::vector<double>(n, lo), std::vector<double>(n, hi)};
    b.validate();
    return b;
}

void Bounds::validate() const {
    if (lower.size() != upper.size()) throw ConfigError("bounds: lower/upper length mismatch");
    for (std::size_t k = 0; k < lower.size(); ++k)
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || lower[k] > upper[k])
            throw ConfigError("bounds: coordinate " + std::to_string(k) + " is unbounded or empty");
}

std::size_t dct_dims(int width, int height, int patterns, int block) {
    if (width <= 0 || height <= 0 || patterns <= 0 || block <= 0) throw ConfigError("dct_dims: arguments must be positive");
    const auto bx = static_cast<std::size_t>((width + block - 1) / block);
    const auto by = static_cast<std::size_t>((height + block - 1) / block);
    return static_cast<std::size_t>(block) * block * patterns + bx * by;
}

DirectLayout::DirectLayout(int width, int height, int image_channels, int block_size, double lower, double upper,
                           bool luma_only)
    : width_(width), height_(height), image_channels_(image_channels), block_(block_size), lower_(lower),
      upper_(upper), luma_only_(luma_only) {
    if (width <= 0 || height <= 0) throw ConfigError("direct encoding: image dims must be positive");
    if (image_channels != 1 && image_channels != 3) throw ConfigError("direct encoding: 1 or 3 channels");
    if (block_size < 1) throw ConfigError("direct encoding: block size must be >= 1");
    if (!std::isfinite(lower) || !std::isfinite(upper) || lower > upper)
        throw ConfigError("direct encoding: invalid bounds");
}

Perturbation DirectLayout::decode(std::span<const double> values) const {
    if (values.size() != genotype_length()) throw ContractError("decode_direct: genotype length mismatch");
    Perturbation rho(width_, height_, image_channels_);
    for (int y = 0; y < height_; ++y) {
        const int v = y / block_;
        for (int x = 0; x < width_; ++x) {
            const int u = x / block_;
            for (int c = 0; c < image_channels_; ++c)
                rho.at(x, y, c) = values[index(u, v, luma_only_ ? 0 : c)];
        }
    }
    return rho;
}

DctLayout::DctLayout(int width, int height, int image_channels, int patterns, int block, double coefficient_bound)
    : width_(width), height_(height), image_channels_(image_channels), patterns_(patterns),
      coefficient_bound_(coefficient_bound) {
    if (width <= 0 || height <= 0) throw ConfigError("dct encoding: image dims must be positive");
    if (image_channels != 1 && image_channels != 3) throw ConfigError("dct encoding: 1 or 3 channels");
    if (patterns < 1) throw ConfigError("dct encoding: at least one alteration pattern required");
    if (!(coefficient_bound > 0.0) || !std::isfinite(coefficient_bound))
        throw ConfigError("dct encoding: coefficient bound must be positive and finite");
    dct_ = std::make_shared<const BlockDct>(block);
}

Bounds DctLayout::bounds() const {
    Bounds b;
    b.lower.assign(genotype_length(), -coefficient_bound_);
    b.upper.assign(genotype_length(), coefficient_bound_);
    std::fill_n(b.lower.begin(), selector_count(), 0.0);
    std::fill_n(b.upper.begin(), selector_count(), static_cast<double>(patterns_ + 1));
    return b;
}

int DctLayout::selected_pattern(double selector) const {
    if (!(selector >= 0.0)) return 0;
    const double f = std::floor(selector);
    return f >= patterns_ ? patterns_ : static_cast<int>(f);
}

Perturbation DctLayout::decode(std::span<const double> values, const Image& clean) const {
    if (values.size() != genotype_length()) throw ContractError("decode_dct: genotype length mismatch");
    if (clean.width != width_ || clean.height != height_ || clean.channels != image_channels_)
        throw ContractError("decode_dct: image dims do not match the encoding");
    const int n = block();
    const auto nn = static_cast<std::size_t>(n) * n;
    const Image luma = rgb_to_luma(clean);
    std::vector<double> block_px(nn), coeffs(nn), recon(nn);
    std::vector<double> delta(clean.pixel_count(), 0.0);

    for (int v = 0; v < blocks_y(); ++v) {
        for (int u = 0; u < blocks_x(); ++u) {
            // Trailing partial blocks are padded by edge replication.
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const int x = std::min(u * n + i, width_ - 1);
                    const int y = std::min(v * n + j, height_ - 1);
                    block_px[j * n + i] = luma.data[static_cast<std::size_t>(y) * width_ + x];
                }
            dct_->forward(block_px, coeffs);
            const int r = selected_pattern(values[static_cast<std::size_t>(v) * blocks_x() + u]);
            if (r >= 1) {
                const std::size_t off = pattern_offset() + static_cast<std::size_t>(r - 1) * nn;
                for (std::size_t k = 0; k < nn; ++k) coeffs[k] += values[off + k];
            }
            dct_->inverse(coeffs, recon);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const int x = u * n + i;
                    const int y = v * n + j;
                    if (x >= width_ || y >= height_) continue;
                    const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
                    delta[p] = recon[j * n + i] - luma.data[p];
                }
        }
    }

    Perturbation rho(width_, height_, image_channels_);
    for (std::size_t p = 0; p < delta.size(); ++p)
        for (int c = 0; c < image_channels_; ++c) rho.delta[p * image_channels_ + c] = delta[p];
    return rho;
}

std::size_t genotype_length(const Encoding& encoding) {
    return std::visit([](const auto& layout) { return layout.genotype_length(); }, encoding);
}

Bounds encoding_bounds(const Encoding& encoding) {
    return std::visit([](const auto& layout) { return layout.bounds(); }, encoding);
}

Perturbation decode(const Encoding& encoding, std::span<const double> values, const Image& clean) {
    if (const auto* direct = std::get_if<DirectLayout>(&encoding)) {
        if (clean.width != direct->width() || clean.height != direct->height() ||
            clean.channels != direct->image_channels())
            throw ContractError("decode_direct: image dims do not match the encoding");
        return direct->decode(values);
    }
    return std::get<DctLayout>(encoding).decode(values, clean);
}

Image visualize_perturbation(const Perturbation& rho) {
    Image out(rho.width, rho.height, 3, 127.5);
    double scale = 0.0;
    for (double d : rho.delta) scale = std::max(scale, std::abs(d));
    if (scale == 0.0) return out;
    for (int y = 0; y < rho.height; ++y)
        for (int x = 0; x < rho.width; ++x) {
            double mean = 0.0;
            for (int c = 0; c < rho.channels; ++c) mean += rho.at(x, y, c);
            mean /= rho.channels;
            const double g = 127.5 + 127.5 * mean / scale;
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = g;
        }
    return out;
}

void write_perturbation_csv(const Perturbation& rho, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out.precision(17);
    out << "x,y,channel,delta\n";
    for (int y = 0; y < rho.height; ++y)
        for (int x = 0; x < rho.width; ++x)
            for (int c = 0; c < rho.channels; ++c) out << x << ',' << y << ',' << c << ',' << rho.at(x, y, c) << '\n';
}

} // namespace evoae
