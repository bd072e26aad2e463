#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ladre/common.hpp"

namespace ladre {

// Orthonormal 2-D type-II DCT of a BxB block, computed as two 1-D passes
// against a precomputed basis matrix. O(B^3) per block.
class Dct2d {
public:
    explicit Dct2d(int size) : size_(size), basis_(static_cast<std::size_t>(size) * size) {
        require(size >= 1, ErrorKind::validation, "DCT size must be positive");
        const double pi = std::acos(-1.0);
        for (int k = 0; k < size; ++k) {
            const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / size);
            for (int n = 0; n < size; ++n)
                basis_[static_cast<std::size_t>(k) * size + n] =
                    alpha * std::cos(pi * (2.0 * n + 1.0) * k / (2.0 * size));
        }
    }

    int size() const { return size_; }

    // in and out are BxB row-major; out[i*B+j] is coefficient (i, j).
    // Not reentrant; concurrent callers use one instance per thread.
    void forward(const double* in, double* out) {
        const int b = size_;
        scratch_.resize(static_cast<std::size_t>(b) * b);
        // rows
        for (int m = 0; m < b; ++m) {
            const double* row = in + static_cast<std::size_t>(m) * b;
            for (int j = 0; j < b; ++j) {
                const double* basis = &basis_[static_cast<std::size_t>(j) * b];
                double acc = 0.0;
                for (int n = 0; n < b; ++n)
                    acc += row[n] * basis[n];
                scratch_[static_cast<std::size_t>(m) * b + j] = acc;
            }
        }
        // columns
        for (int i = 0; i < b; ++i) {
            const double* basis = &basis_[static_cast<std::size_t>(i) * b];
            for (int j = 0; j < b; ++j) {
                double acc = 0.0;
                for (int m = 0; m < b; ++m)
                    acc += scratch_[static_cast<std::size_t>(m) * b + j] * basis[m];
                out[static_cast<std::size_t>(i) * b + j] = acc;
            }
        }
    }

private:
    int size_;
    std::vector<double> basis_;
    std::vector<double> scratch_;
};

}  // namespace ladre
