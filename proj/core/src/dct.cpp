#include "evoae/dct.hpp"

#include <cmath>

#include "evoae/error.hpp"

namespace evoae {

BlockDct::BlockDct(int n) : n_(n), basis_(static_cast<std::size_t>(n) * n) {
    if (n < 2) throw ConfigError("DCT block size must be >= 2");
    const double pi = std::acos(-1.0);
    for (int k = 0; k < n; ++k) {
        const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) basis_[k * n + i] = alpha * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
    }
}

void BlockDct::check(std::size_t a, std::size_t b) const {
    const auto want = static_cast<std::size_t>(n_) * n_;
    if (a != want || b != want) throw ContractError("DCT block size mismatch");
}

void BlockDct::forward(std::span<const double> block, std::span<double> coeffs) const {
    check(block.size(), coeffs.size());
    const int n = n_;
    std::vector<double> tmp(block.size(), 0.0);
    // rows: tmp[y][q] = sum_x block[y][x] * C[q][x]
    for (int y = 0; y < n; ++y)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int x = 0; x < n; ++x) acc += block[y * n + x] * basis_[q * n + x];
            tmp[y * n + q] = acc;
        }
    // columns: coeffs[p][q] = sum_y C[p][y] * tmp[y][q]
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int y = 0; y < n; ++y) acc += basis_[p * n + y] * tmp[y * n + q];
            coeffs[p * n + q] = acc;
        }
}

void BlockDct::inverse(std::span<const double> coeffs, std::span<double> block) const {
    check(coeffs.size(), block.size());
    const int n = n_;
    std::vector<double> tmp(coeffs.size(), 0.0);
    // tmp[y][q] = sum_p C[p][y] * coeffs[p][q]
    for (int y = 0; y < n; ++y)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) acc += basis_[p * n + y] * coeffs[p * n + q];
            tmp[y * n + q] = acc;
        }
    // block[y][x] = sum_q tmp[y][q] * C[q][x]
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q) acc += tmp[y * n + q] * basis_[q * n + x];
            block[y * n + x] = acc;
        }
}

std::vector<double> BlockDct::forward(std::span<const double> block) const {
    std::vector<double> out(block.size());
    forward(block, out);
    return out;
}

std::vector<double> BlockDct::inverse(std::span<const double> coeffs) const {
    std::vector<double> out(coeffs.size());
    inverse(coeffs, out);
    return out;
}

} // namespace evoae
