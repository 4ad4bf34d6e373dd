#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace evoae {

/// Row-major, channel-interleaved intensities on the continuous [0, 255] scale.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t size() const { return data.size(); }

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c) { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data[index(x, y, c)]; }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Signed per-pixel, per-channel intensity delta (rho). Same layout as Image.
struct Perturbation {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> delta;

    Perturbation() = default;
    Perturbation(int w, int h, int c) : width(w), height(h), channels(c), delta(static_cast<std::size_t>(w) * h * c, 0.0) {}

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c) { return delta[index(x, y, c)]; }
    double at(int x, int y, int c) const { return delta[index(x, y, c)]; }
};

/// Reads binary PPM (P6) or PGM (P5) with maxval 255.
Image read_image(const std::filesystem::path& path);

/// Writes P6 for 3-channel images and P5 for single-channel ones. Values are
/// clamped to [0, 255] and rounded to nearest, ties to even.
void write_image(const Image& image, const std::filesystem::path& path);

/// Nearest-integer quantization (ties to even) clamped to [0, 255].
std::vector<unsigned char> quantize(const Image& image);

/// Rotation about the image center with bilinear sampling; samples outside the
/// frame contribute 0. Output keeps the input dimensions.
Image rotate(const Image& image, double degrees);

/// clean + rho, clamped to [0, 255].
Image apply_perturbation(const Image& clean, const Perturbation& rho);

/// BT.601 luma; single-channel input is returned unchanged.
Image rgb_to_luma(const Image& image);

/// Adds the same delta plane to every channel and clamps.
Image add_luma_delta(const Image& image, std::span<const double> delta_plane);

} // namespace evoae
