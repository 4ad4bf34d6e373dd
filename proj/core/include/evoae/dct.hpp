#pragma once

#include <span>
#include <vector>

namespace evoae {

/// Orthonormal type-II 2D DCT on square N x N blocks (row-major).
///
/// The basis table is built once per block size; forward and inverse are the
/// separable row/column products with it, so inverse(forward(b)) == b up to
/// floating-point round-off.
class BlockDct {
public:
    explicit BlockDct(int n = 8);

    int size() const { return n_; }

    void forward(std::span<const double> block, std::span<double> coeffs) const;
    void inverse(std::span<const double> coeffs, std::span<double> block) const;

    std::vector<double> forward(std::span<const double> block) const;
    std::vector<double> inverse(std::span<const double> coeffs) const;

private:
    void check(std::size_t a, std::size_t b) const;

    int n_;
    std::vector<double> basis_;  // basis_[k * n + i] = alpha(k) cos(pi (2i + 1) k / 2n)
};

} // namespace evoae
