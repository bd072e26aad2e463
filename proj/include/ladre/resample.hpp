#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/video.hpp"

namespace ladre {
namespace detail {

// Catmull-Rom kernel (bicubic, a = -0.5), support [-2, 2].
inline double catmull_rom(double t) {
    t = std::fabs(t);
    if (t < 1.0)
        return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0)
        return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

// Tap positions and weights for one axis, reused across all rows/columns.
struct AxisPlan {
    std::vector<int> base;       // leftmost tap index per output coordinate
    std::vector<double> weight;  // 4 weights per output coordinate
};

inline AxisPlan plan_axis(int src, int dst) {
    AxisPlan plan;
    plan.base.resize(dst);
    plan.weight.resize(static_cast<std::size_t>(dst) * 4);
    const double scale = static_cast<double>(src) / dst;
    for (int x = 0; x < dst; ++x) {
        const double sx = (x + 0.5) * scale - 0.5;
        const int i0 = static_cast<int>(std::floor(sx));
        const double f = sx - i0;
        plan.base[x] = i0 - 1;
        double* w = &plan.weight[static_cast<std::size_t>(x) * 4];
        w[0] = catmull_rom(f + 1.0);
        w[1] = catmull_rom(f);
        w[2] = catmull_rom(f - 1.0);
        w[3] = catmull_rom(f - 2.0);
    }
    return plan;
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Separable resample of one plane; horizontal pass into doubles, then
// vertical pass with round-and-clamp. Fixed accumulation order keeps the
// result identical across runs and thread counts.
inline std::vector<std::uint8_t> resample_plane(const std::uint8_t* src, int src_w, int src_h,
                                                int dst_w, int dst_h) {
    const AxisPlan hplan = plan_axis(src_w, dst_w);
    const AxisPlan vplan = plan_axis(src_h, dst_h);

    std::vector<double> mid(static_cast<std::size_t>(dst_w) * src_h);
    for (int y = 0; y < src_h; ++y) {
        const std::uint8_t* row = src + static_cast<std::size_t>(y) * src_w;
        double* out = mid.data() + static_cast<std::size_t>(y) * dst_w;
        for (int x = 0; x < dst_w; ++x) {
            const int b = hplan.base[x];
            const double* w = &hplan.weight[static_cast<std::size_t>(x) * 4];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += w[k] * row[clamp_index(b + k, src_w)];
            out[x] = acc;
        }
    }

    std::vector<std::uint8_t> dst(static_cast<std::size_t>(dst_w) * dst_h);
    for (int y = 0; y < dst_h; ++y) {
        const int b = vplan.base[y];
        const double* w = &vplan.weight[static_cast<std::size_t>(y) * 4];
        std::uint8_t* out = dst.data() + static_cast<std::size_t>(y) * dst_w;
        for (int x = 0; x < dst_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += w[k] * mid[static_cast<std::size_t>(clamp_index(b + k, src_h)) * dst_w + x];
            const long v = std::lround(acc);
            out[x] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
        }
    }
    return dst;
}

}  // namespace detail

inline Frame resample_frame(const Frame& src, const Resolution& target) {
    if (src.width == target.width && src.height == target.height)
        return src;
    Frame out;
    out.width = target.width;
    out.height = target.height;
    out.index = src.index;
    out.y = detail::resample_plane(src.y.data(), src.width, src.height, target.width, target.height);
    out.u = detail::resample_plane(src.u.data(), src.width / 2, src.height / 2, target.width / 2,
                                   target.height / 2);
    out.v = detail::resample_plane(src.v.data(), src.width / 2, src.height / 2, target.width / 2,
                                   target.height / 2);
    return out;
}

// Identity when target matches the source (bit-exact copy).
inline Segment resample(const Segment& seg, const Resolution& target) {
    require(target.width >= 2 && target.height >= 2 && target.width % 2 == 0 &&
                target.height % 2 == 0,
            ErrorKind::validation, "resample target dimensions must be even and at least 2x2");
    if (seg.width() == target.width && seg.height() == target.height)
        return seg;
    Segment out;
    out.source_id = seg.source_id;
    out.fps = seg.fps;
    out.frames.reserve(seg.frames.size());
    for (const Frame& f : seg.frames)
        out.frames.push_back(resample_frame(f, target));
    return out;
}

}  // namespace ladre
