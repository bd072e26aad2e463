#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/resample.hpp"
#include "ladre/video.hpp"

namespace ladre {

// Quality cap returned for zero-distortion inputs; keeps BD integration finite.
constexpr double kQualityCapDb = 100.0;

// Floor for XPSNR block activity; flat blocks never divide by zero.
constexpr double kMinBlockActivity = 2.0;

constexpr int kDefaultXpsnrBlockSize = 32;

struct QualityScore {
    double psnr = 0.0;
    double xpsnr = 0.0;
    std::vector<double> per_frame_wsse;  // diagnostic
};

namespace detail {

inline void check_comparable(const Segment& a, const Segment& b) {
    if (a.width() != b.width() || a.height() != b.height())
        fail(ErrorKind::validation,
             "segment resolution mismatch: " + std::to_string(a.width()) + "x" +
                 std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                 std::to_string(b.height()));
    if (a.frame_count() != b.frame_count())
        fail(ErrorKind::validation,
             "segment frame count mismatch: " + std::to_string(a.frame_count()) + " vs " +
                 std::to_string(b.frame_count()));
}

inline std::uint64_t luma_sse(const Frame& a, const Frame& b) {
    std::uint64_t sse = 0;
    for (std::size_t i = 0; i < a.y.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a.y[i]) - b.y[i];
        sse += static_cast<std::uint64_t>(d * d);
    }
    return sse;
}

}  // namespace detail

// Luma PSNR: per-frame MSE averaged over frames, then 10*log10(255^2 / mean).
inline double psnr(const Segment& reference, const Segment& distorted) {
    detail::check_comparable(reference, distorted);
    const double samples = static_cast<double>(reference.width()) * reference.height();
    double mse_sum = 0.0;
    for (std::size_t i = 0; i < reference.frames.size(); ++i)
        mse_sum += detail::luma_sse(reference.frames[i], distorted.frames[i]) / samples;
    const double mean_mse = mse_sum / reference.frames.size();
    if (mean_mse <= 0.0)
        return kQualityCapDb;
    return 10.0 * std::log10(255.0 * 255.0 / mean_mse);
}

// Weighted PSNR. Block activity comes from the reference only: the mean
// absolute 4-neighbour Laplacian plus the mean absolute temporal difference
// against the previous reference frame (0 for frame 0). Block weight is
// picture activity over block activity, so spatially or temporally busy
// regions count for less. Uniform-activity references make this identical to
// PSNR.
inline double xpsnr(const Segment& reference, const Segment& distorted,
                    int block_size = kDefaultXpsnrBlockSize,
                    std::vector<double>* per_frame_wsse = nullptr) {
    detail::check_comparable(reference, distorted);
    require(block_size >= 1, ErrorKind::validation, "XPSNR block size must be positive");

    const int w = reference.width();
    const int h = reference.height();
    const int bx = (w + block_size - 1) / block_size;
    const int by = (h + block_size - 1) / block_size;
    const std::size_t nblocks = static_cast<std::size_t>(bx) * by;

    std::vector<double> activity(nblocks);
    std::vector<double> sse(nblocks);
    if (per_frame_wsse)
        per_frame_wsse->clear();

    double total_wsse = 0.0;
    for (std::size_t fi = 0; fi < reference.frames.size(); ++fi) {
        const Frame& ref = reference.frames[fi];
        const Frame& dis = distorted.frames[fi];
        const Frame* prev = fi > 0 ? &reference.frames[fi - 1] : nullptr;

        std::size_t bi = 0;
        double activity_sum = 0.0;
        for (int yb = 0; yb < by; ++yb)
            for (int xb = 0; xb < bx; ++xb, ++bi) {
                const int x0 = xb * block_size;
                const int y0 = yb * block_size;
                const int x1 = std::min(x0 + block_size, w);
                const int y1 = std::min(y0 + block_size, h);
                const double count = static_cast<double>(x1 - x0) * (y1 - y0);

                double lap_sum = 0.0;
                double temp_sum = 0.0;
                double block_sse = 0.0;
                for (int y = y0; y < y1; ++y) {
                    const std::size_t row = static_cast<std::size_t>(y) * w;
                    const std::size_t up = static_cast<std::size_t>(std::max(y - 1, 0)) * w;
                    const std::size_t down = static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
                    for (int x = x0; x < x1; ++x) {
                        const int left = std::max(x - 1, 0);
                        const int right = std::min(x + 1, w - 1);
                        const double lap = static_cast<double>(ref.y[row + left]) +
                                           ref.y[row + right] + ref.y[up + x] + ref.y[down + x] -
                                           4.0 * ref.y[row + x];
                        lap_sum += std::fabs(lap);
                        if (prev)
                            temp_sum += std::fabs(static_cast<double>(ref.y[row + x]) -
                                                  prev->y[row + x]);
                        const double d = static_cast<double>(ref.y[row + x]) - dis.y[row + x];
                        block_sse += d * d;
                    }
                }
                const double a = lap_sum / count + temp_sum / count;
                activity[bi] = std::max(kMinBlockActivity, a);
                sse[bi] = block_sse;
                activity_sum += activity[bi];
            }

        const double picture_activity = activity_sum / static_cast<double>(nblocks);
        double frame_wsse = 0.0;
        for (std::size_t k = 0; k < nblocks; ++k)
            frame_wsse += picture_activity / activity[k] * sse[k];
        total_wsse += frame_wsse;
        if (per_frame_wsse)
            per_frame_wsse->push_back(frame_wsse);
    }

    if (total_wsse <= 0.0)
        return kQualityCapDb;
    const double num = 255.0 * 255.0 * static_cast<double>(w) * h * reference.frames.size();
    return 10.0 * std::log10(num / total_wsse);
}

// Quality of a decoded segment against the full-resolution source. The
// decoded segment is upsampled to the source resolution first.
inline QualityScore quality_vs_source(const Segment& source, const Segment& decoded,
                                      int block_size = kDefaultXpsnrBlockSize) {
    require(decoded.width() <= source.width() && decoded.height() <= source.height(),
            ErrorKind::validation, "decoded resolution exceeds source resolution");
    const Segment upsampled = resample(decoded, source.resolution());
    QualityScore score;
    score.psnr = psnr(source, upsampled);
    score.xpsnr = xpsnr(source, upsampled, block_size, &score.per_frame_wsse);
    return score;
}

}  // namespace ladre
