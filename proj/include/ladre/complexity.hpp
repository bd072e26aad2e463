#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/dct.hpp"
#include "ladre/video.hpp"

namespace ladre {

// The seven DCT-energy features of one segment. Averages over all frames and
// blocks; h is the mean absolute frame-to-frame change of per-block luma
// energy and is 0 for single-frame segments.
struct SegmentFeatures {
    double e_y = 0.0;  // average luma texture energy
    double h = 0.0;    // average temporal gradient of luma texture energy
    double l_y = 0.0;  // average luminescence
    double e_u = 0.0;
    double l_u = 0.0;
    double e_v = 0.0;
    double l_v = 0.0;

    std::array<double, 7> as_array() const { return {e_y, h, l_y, e_u, l_u, e_v, l_v}; }

    bool operator==(const SegmentFeatures& o) const {
        return e_y == o.e_y && h == o.h && l_y == o.l_y && e_u == o.e_u && l_u == o.l_u &&
               e_v == o.e_v && l_v == o.l_v;
    }
};

constexpr int kDefaultFeatureBlockSize = 32;

namespace detail {

// Frequency weight for AC coefficient (i, j): exp(i*j/B^2 - 1). Grows from
// 1/e at the lowest frequencies toward 1 at the highest, so busy blocks score
// above smooth ones.
inline double energy_weight(int i, int j, int block_size) {
    const double b2 = static_cast<double>(block_size) * block_size;
    return std::exp(static_cast<double>(i) * j / b2 - 1.0);
}

// Copies a block with clamp-to-edge padding for blocks that overhang the
// right/bottom plane borders.
inline void fill_block(const std::uint8_t* plane, int w, int h, int x0, int y0, int block_size,
                       double* out) {
    for (int dy = 0; dy < block_size; ++dy) {
        const int sy = std::min(y0 + dy, h - 1);
        const std::uint8_t* row = plane + static_cast<std::size_t>(sy) * w;
        for (int dx = 0; dx < block_size; ++dx)
            out[static_cast<std::size_t>(dy) * block_size + dx] = row[std::min(x0 + dx, w - 1)];
    }
}

// Weighted absolute sum of AC coefficients, normalised by B^2 * sqrt(B^2).
inline double weighted_ac_energy(const double* coeffs, int block_size) {
    double sum = 0.0;
    for (int i = 0; i < block_size; ++i)
        for (int j = 0; j < block_size; ++j) {
            if (i == 0 && j == 0)
                continue;
            sum += energy_weight(i, j, block_size) *
                   std::fabs(coeffs[static_cast<std::size_t>(i) * block_size + j]);
        }
    const double b2 = static_cast<double>(block_size) * block_size;
    return sum / (b2 * std::sqrt(b2));
}

struct PlaneStats {
    std::vector<double> block_energy;  // row-major block grid
    double energy_sum = 0.0;           // sum of block energies
    double brightness_sum = 0.0;       // sum of sqrt(|DC|)
    std::size_t blocks = 0;
};

inline bool is_constant(const double* block, std::size_t n) {
    for (std::size_t i = 1; i < n; ++i)
        if (block[i] != block[0])
            return false;
    return true;
}

inline PlaneStats analyze_plane(const std::uint8_t* plane, int w, int h, int block_size,
                                Dct2d& dct, std::vector<double>& pixel_buf,
                                std::vector<double>& coeff_buf) {
    const int bx = (w + block_size - 1) / block_size;
    const int by = (h + block_size - 1) / block_size;
    PlaneStats stats;
    stats.blocks = static_cast<std::size_t>(bx) * by;
    stats.block_energy.resize(stats.blocks);
    pixel_buf.resize(static_cast<std::size_t>(block_size) * block_size);
    coeff_buf.resize(pixel_buf.size());
    std::size_t idx = 0;
    for (int yb = 0; yb < by; ++yb)
        for (int xb = 0; xb < bx; ++xb, ++idx) {
            fill_block(plane, w, h, xb * block_size, yb * block_size, block_size,
                       pixel_buf.data());
            double energy = 0.0;
            double dc = 0.0;
            if (is_constant(pixel_buf.data(), pixel_buf.size())) {
                // all AC coefficients of a constant block are exactly zero
                dc = pixel_buf[0] * block_size;
            } else {
                dct.forward(pixel_buf.data(), coeff_buf.data());
                energy = weighted_ac_energy(coeff_buf.data(), block_size);
                dc = coeff_buf[0];
            }
            stats.block_energy[idx] = energy;
            stats.energy_sum += energy;
            stats.brightness_sum += std::sqrt(std::fabs(dc));
        }
    return stats;
}

}  // namespace detail

// Texture energy of one fully populated BxB block.
inline double block_texture_energy(const std::vector<double>& block, int block_size) {
    require(block.size() == static_cast<std::size_t>(block_size) * block_size,
            ErrorKind::validation, "block buffer size does not match block size");
    if (detail::is_constant(block.data(), block.size()))
        return 0.0;
    Dct2d dct(block_size);
    std::vector<double> coeffs(block.size());
    dct.forward(block.data(), coeffs.data());
    return detail::weighted_ac_energy(coeffs.data(), block_size);
}

// Extracts the seven features. Chroma planes use half the luma block size.
// Frames are processed in parallel; all reductions run in frame order, so the
// result does not depend on the schedule.
inline SegmentFeatures extract_features(const Segment& segment,
                                        int block_size = kDefaultFeatureBlockSize,
                                        int workers = 1) {
    require(!segment.frames.empty(), ErrorKind::validation,
            "cannot extract features from an empty segment");
    require(block_size >= 2 && block_size % 2 == 0, ErrorKind::validation,
            "feature block size must be even and at least 2");

    const int w = segment.width();
    const int h = segment.height();
    const int cw = w / 2;
    const int ch = h / 2;
    const int chroma_block = block_size / 2;
    const std::size_t n = segment.frames.size();

    struct FrameStats {
        detail::PlaneStats luma, u, v;
    };
    std::vector<FrameStats> per_frame(n);

    parallel_for(n, workers, [&](std::size_t i) {
        Dct2d luma_dct(block_size);
        Dct2d chroma_dct(chroma_block);
        std::vector<double> pix, coef;
        const Frame& f = segment.frames[i];
        per_frame[i].luma = detail::analyze_plane(f.y.data(), w, h, block_size, luma_dct, pix, coef);
        per_frame[i].u = detail::analyze_plane(f.u.data(), cw, ch, chroma_block, chroma_dct, pix, coef);
        per_frame[i].v = detail::analyze_plane(f.v.data(), cw, ch, chroma_block, chroma_dct, pix, coef);
    });

    SegmentFeatures out;
    double e_y = 0, l_y = 0, e_u = 0, l_u = 0, e_v = 0, l_v = 0;
    for (const FrameStats& fs : per_frame) {
        e_y += fs.luma.energy_sum;
        l_y += fs.luma.brightness_sum;
        e_u += fs.u.energy_sum;
        l_u += fs.u.brightness_sum;
        e_v += fs.v.energy_sum;
        l_v += fs.v.brightness_sum;
    }
    const double luma_blocks = static_cast<double>(per_frame.front().luma.blocks) * n;
    const double chroma_blocks = static_cast<double>(per_frame.front().u.blocks) * n;
    out.e_y = e_y / luma_blocks;
    out.l_y = l_y / luma_blocks;
    out.e_u = e_u / chroma_blocks;
    out.l_u = l_u / chroma_blocks;
    out.e_v = e_v / chroma_blocks;
    out.l_v = l_v / chroma_blocks;

    if (n >= 2) {
        double sad = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const auto& cur = per_frame[i].luma.block_energy;
            const auto& prev = per_frame[i - 1].luma.block_energy;
            for (std::size_t k = 0; k < cur.size(); ++k)
                sad += std::fabs(cur[k] - prev[k]);
        }
        out.h = sad / (static_cast<double>(n - 1) * per_frame.front().luma.blocks);
    }
    return out;
}

// Wall-clock throughput of extract_features in frames per second. Reported,
// never asserted; feeds the pre-processing latency statistic.
inline double measure_extraction_throughput(const Segment& segment,
                                            int block_size = kDefaultFeatureBlockSize,
                                            int workers = 1) {
    require(segment.frames.size() >= 8, ErrorKind::validation,
            "throughput measurement needs at least 8 frames");
    const auto start = std::chrono::steady_clock::now();
    (void)extract_features(segment, block_size, workers);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    return segment.frames.size() / std::max(elapsed.count(), 1e-9);
}

}  // namespace ladre
