#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ladre/common.hpp"

namespace ladre {

struct RdPoint {
    double bitrate_mbps = 0.0;
    double quality_db = 0.0;
};

struct RdCurve {
    std::string metric;  // "psnr" or "xpsnr"
    std::vector<RdPoint> points;
};

constexpr int kBdMinPoints = 4;
constexpr int kBdSamples = 2000;  // trapezoid intervals for the delta integral

// Drops points dominated in both axes (another point with <= bitrate and
// >= quality), leaving a strictly increasing rate-quality frontier.
inline RdCurve pareto_clean(const RdCurve& curve, int* dropped = nullptr) {
    RdCurve out;
    out.metric = curve.metric;
    std::vector<RdPoint> pts = curve.points;
    // bitrate ascending; equal bitrates keep the better quality first
    std::sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) {
        if (a.bitrate_mbps != b.bitrate_mbps)
            return a.bitrate_mbps < b.bitrate_mbps;
        return a.quality_db > b.quality_db;
    });
    for (const RdPoint& p : pts) {
        if (!out.points.empty()) {
            if (p.bitrate_mbps == out.points.back().bitrate_mbps ||
                p.quality_db <= out.points.back().quality_db)
                continue;  // dominated
        }
        out.points.push_back(p);
    }
    if (dropped)
        *dropped = static_cast<int>(pts.size() - out.points.size());
    return out;
}

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class PchipInterpolant {
public:
    PchipInterpolant(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        require(x_.size() == y_.size() && x_.size() >= 2, ErrorKind::validation,
                "PCHIP needs at least two points");
        for (std::size_t i = 1; i < x_.size(); ++i)
            require(x_[i] > x_[i - 1], ErrorKind::validation,
                    "PCHIP abscissae must be strictly increasing");
        const std::size_t n = x_.size();
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        if (n == 2) {
            d_[0] = d_[1] = delta[0];
        } else {
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (delta[i - 1] * delta[i] <= 0.0) {
                    d_[i] = 0.0;
                } else {
                    const double w1 = 2.0 * h[i] + h[i - 1];
                    const double w2 = h[i] + 2.0 * h[i - 1];
                    d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d_[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            d_[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
    }

    double operator()(double x) const {
        // clamp to the fitted range; BD evaluation stays inside the overlap
        if (x <= x_.front())
            x = x_.front();
        if (x >= x_.back())
            x = x_.back();
        std::size_t i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
        i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    static double edge_slope(double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0)
            return 0.0;
        if (d0 * d1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(d0))
            return 3.0 * d0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

namespace detail {

inline RdCurve prepare_curve(const RdCurve& curve, const char* role) {
    for (const RdPoint& p : curve.points) {
        require(p.bitrate_mbps > 0.0, ErrorKind::validation,
                std::string(role) + " curve has a non-positive bitrate");
        require(std::isfinite(p.quality_db), ErrorKind::validation,
                std::string(role) + " curve has a non-finite quality");
    }
    RdCurve clean = pareto_clean(curve);
    require(static_cast<int>(clean.points.size()) >= kBdMinPoints, ErrorKind::validation,
            std::string(role) + " curve has only " + std::to_string(clean.points.size()) +
                " usable points; BD needs at least " + std::to_string(kBdMinPoints));
    return clean;
}

// Mean of (f_test - f_ref) over [lo, hi] by trapezoid rule.
template <typename F, typename G>
double mean_difference(const F& ref, const G& test, double lo, double hi) {
    double acc = 0.0;
    const double step = (hi - lo) / kBdSamples;
    double prev = test(lo) - ref(lo);
    for (int i = 1; i <= kBdSamples; ++i) {
        const double x = lo + step * i;
        const double cur = test(x) - ref(x);
        acc += 0.5 * (prev + cur) * step;
        prev = cur;
    }
    return acc / (hi - lo);
}

}  // namespace detail

// Average quality gain of `test` over `reference` at equal bitrate (dB),
// integrated over the overlapping log-bitrate interval. Positive means the
// test curve is better.
inline double bd_quality(const RdCurve& reference, const RdCurve& test) {
    const RdCurve ref = detail::prepare_curve(reference, "reference");
    const RdCurve tst = detail::prepare_curve(test, "test");

    const auto to_interp = [](const RdCurve& c) {
        std::vector<double> x, y;
        for (const RdPoint& p : c.points) {
            x.push_back(std::log10(p.bitrate_mbps));
            y.push_back(p.quality_db);
        }
        return PchipInterpolant(std::move(x), std::move(y));
    };
    const PchipInterpolant fr = to_interp(ref);
    const PchipInterpolant ft = to_interp(tst);
    const double lo = std::max(fr.x_min(), ft.x_min());
    const double hi = std::min(fr.x_max(), ft.x_max());
    if (!(hi > lo))
        fail(ErrorKind::validation, "RD curves have no overlapping bitrate interval");
    return detail::mean_difference(fr, ft, lo, hi);
}

// Average bitrate change of `test` at equal quality, in percent. Negative
// means the test curve needs less bitrate.
inline double bd_rate(const RdCurve& reference, const RdCurve& test) {
    const RdCurve ref = detail::prepare_curve(reference, "reference");
    const RdCurve tst = detail::prepare_curve(test, "test");

    const auto to_interp = [](const RdCurve& c) {
        std::vector<double> x, y;
        for (const RdPoint& p : c.points) {
            x.push_back(p.quality_db);
            y.push_back(std::log10(p.bitrate_mbps));
        }
        return PchipInterpolant(std::move(x), std::move(y));
    };
    const PchipInterpolant fr = to_interp(ref);
    const PchipInterpolant ft = to_interp(tst);
    const double lo = std::max(fr.x_min(), ft.x_min());
    const double hi = std::min(fr.x_max(), ft.x_max());
    if (!(hi > lo))
        fail(ErrorKind::validation, "RD curves have no overlapping quality interval");
    const double mean_dlog = detail::mean_difference(fr, ft, lo, hi);
    return 100.0 * (std::pow(10.0, mean_dlog) - 1.0);
}

}  // namespace ladre
