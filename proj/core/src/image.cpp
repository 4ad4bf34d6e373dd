#include "evoae/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "evoae/error.hpp"

namespace evoae {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3)) throw ContractError("image dims must be positive with 1 or 3 channels");
}

namespace {

// Parses one header integer, skipping whitespace and '#' comments.
int read_header_int(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
    for (;;) {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (pos < buf.size() && buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::size_t start = pos;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (start == pos) throw FormatError(path.string() + ": malformed header");
    if (pos - start > 9) throw FormatError(path.string() + ": header value out of range");
    return std::stoi(buf.substr(start, pos - start));
}

double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

} // namespace

Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '6' && buf[1] != '5'))
        throw FormatError(path.string() + ": not a binary PPM/PGM (P6/P5)");
    const int channels = buf[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    const int w = read_header_int(buf, pos, path);
    const int h = read_header_int(buf, pos, path);
    const int maxval = read_header_int(buf, pos, path);
    if (w <= 0 || h <= 0) throw FormatError(path.string() + ": non-positive dimensions");
    if (maxval != 255) throw FormatError(path.string() + ": unsupported maxval " + std::to_string(maxval) + " (only 8-bit is supported)");
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
        throw FormatError(path.string() + ": malformed header");
    ++pos;
    Image img(w, h, channels);
    if (buf.size() - pos < img.size()) throw FormatError(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<unsigned char>(buf[pos + i]);
    return img;
}

std::vector<unsigned char> quantize(const Image& image) {
    std::vector<unsigned char> out(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = static_cast<unsigned char>(std::nearbyint(clamp255(image.data[i])));
    return out;
}

void write_image(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3) throw ContractError("write_image: 1 or 3 channels required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << (image.channels == 3 ? "P6" : "P5") << '\n' << image.width << ' ' << image.height << "\n255\n";
    const auto bytes = quantize(image);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(path.string() + ": write failed");
}

Image rotate(const Image& image, double degrees) {
    if (!(std::abs(degrees) <= 180.0)) throw ContractError("rotate: |angle| must be <= 180");
    // Exact trig on the quarter turns keeps them lossless.
    double c = 0.0, s = 0.0;
    const double quarter = degrees / 90.0;
    if (quarter == std::round(quarter)) {
        static constexpr double cs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        const int q = ((static_cast<int>(quarter) % 4) + 4) % 4;
        c = cs[q][0];
        s = cs[q][1];
    } else {
        const double rad = degrees * std::acos(-1.0) / 180.0;
        c = std::cos(rad);
        s = std::sin(rad);
    }
    const double cx = (image.width - 1) / 2.0;
    const double cy = (image.height - 1) / 2.0;
    Image out(image.width, image.height, image.channels, 0.0);

    auto sample = [&](int x, int y, int ch) -> double {
        if (x < 0 || y < 0 || x >= image.width || y >= image.height) return 0.0;
        return image.at(x, y, ch);
    };

    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            // Inverse map: output pixel -> source position (counter-clockwise rotation in image space).
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = c * dx + s * dy + cx;
            const double sy = -s * dx + c * dy + cy;
            const double fx = std::floor(sx);
            const double fy = std::floor(sy);
            if (fx < -1.0 || fy < -1.0 || fx > image.width || fy > image.height) continue;
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const double ax = sx - fx;
            const double ay = sy - fy;
            for (int ch = 0; ch < image.channels; ++ch) {
                double v = (1 - ax) * (1 - ay) * sample(x0, y0, ch);
                if (ax != 0.0) v += ax * (1 - ay) * sample(x0 + 1, y0, ch);
                if (ay != 0.0) v += (1 - ax) * ay * sample(x0, y0 + 1, ch);
                if (ax != 0.0 && ay != 0.0) v += ax * ay * sample(x0 + 1, y0 + 1, ch);
                out.at(x, y, ch) = v;
            }
        }
    }
    return out;
}

Image apply_perturbation(const Image& clean, const Perturbation& rho) {
    if (clean.width != rho.width || clean.height != rho.height || clean.channels != rho.channels)
        throw ContractError("apply_perturbation: dimension mismatch");
    Image out = clean;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = clamp255(clean.data[i] + rho.delta[i]);
    return out;
}

Image rgb_to_luma(const Image& image) {
    if (image.channels == 1) return image;
    if (image.channels != 3) throw ContractError("rgb_to_luma: 3-channel image required");
    Image y(image.width, image.height, 1);
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        const double* px = &image.data[p * 3];
        y.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return y;
}

Image add_luma_delta(const Image& image, std::span<const double> delta_plane) {
    if (delta_plane.size() != image.pixel_count()) throw ContractError("add_luma_delta: delta plane size mismatch");
    Image out = image;
    for (std::size_t p = 0; p < image.pixel_count(); ++p)
        for (int ch = 0; ch < image.channels; ++ch) {
            double& v = out.data[p * image.channels + ch];
            v = clamp255(v + delta_plane[p]);
        }
    return out;
}

} // namespace evoae
