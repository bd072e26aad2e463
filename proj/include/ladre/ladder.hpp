#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/resolution.hpp"

namespace ladre {

// Maximum acceptable encoding latency per representation. "inf" in config
// files maps to the unbounded state, which is distinct from any finite value.
struct LatencyBudget {
    double seconds = 0.0;
    bool unbounded = false;

    static LatencyBudget infinite() { return LatencyBudget{0.0, true}; }
    static LatencyBudget finite(double s) {
        require(s > 0.0, ErrorKind::validation, "latency budget must be positive");
        return LatencyBudget{s, false};
    }

    bool allows(double predicted_seconds) const {
        return unbounded || predicted_seconds <= seconds;
    }

    std::string to_string() const {
        return unbounded ? std::string("inf") : std::to_string(seconds);
    }

    bool operator==(const LatencyBudget& o) const {
        return unbounded == o.unbounded && (unbounded || seconds == o.seconds);
    }
};

enum class Scheme { default_hls, opte, ladre };

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::default_hls: return "default";
        case Scheme::opte: return "opte";
        case Scheme::ladre: return "ladre";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "default" || name == "default_hls")
        return Scheme::default_hls;
    if (name == "opte")
        return Scheme::opte;
    if (name == "ladre")
        return Scheme::ladre;
    fail(ErrorKind::validation, "unknown scheme '" + name + "' (expected default|opte|ladre)");
}

// One row of the fixed bitrate->resolution ladder used by the default scheme.
struct HlsRung {
    double bitrate_mbps = 0.0;
    int height = 0;
};

struct LadderConfig {
    std::vector<Resolution> resolutions;  // strictly increasing pixel count
    std::vector<double> bitrates_mbps;    // strictly increasing
    LatencyBudget latency_budget = LatencyBudget::infinite();
    int rate_factor_min = 17;
    int rate_factor_max = 51;
    Scheme scheme = Scheme::ladre;
    std::vector<HlsRung> hls_ladder;
    int calibration_step = 2;  // rate-factor grid spacing for training tables
    bool substitute_infeasible = false;

    void validate() const {
        require(!resolutions.empty(), ErrorKind::validation, "config needs at least one resolution");
        require(!bitrates_mbps.empty(), ErrorKind::validation, "config needs at least one bitrate");
        for (std::size_t i = 1; i < resolutions.size(); ++i)
            require(resolutions[i].pixels() > resolutions[i - 1].pixels(), ErrorKind::validation,
                    "resolutions must be strictly increasing in pixel count");
        for (std::size_t i = 1; i < bitrates_mbps.size(); ++i)
            require(bitrates_mbps[i] > bitrates_mbps[i - 1], ErrorKind::validation,
                    "bitrates must be strictly increasing");
        for (double b : bitrates_mbps)
            require(b > 0.0, ErrorKind::validation, "bitrates must be positive");
        require(rate_factor_min < rate_factor_max, ErrorKind::validation,
                "rate factor bounds must satisfy min < max");
        require(calibration_step >= 1, ErrorKind::validation, "calibration step must be >= 1");
        if (scheme == Scheme::default_hls)
            require(!hls_ladder.empty(), ErrorKind::validation,
                    "default scheme requires an hls_ladder map in the config");
    }

    // Rate factors probed when building training tables.
    std::vector<int> calibration_grid() const {
        std::vector<int> grid;
        for (int c = rate_factor_min; c <= rate_factor_max; c += calibration_step)
            grid.push_back(c);
        return grid;
    }

    // Nearest supported resolution by height; ties go to the smaller one.
    const Resolution& snap_height(int height) const {
        const Resolution* best = &resolutions.front();
        int best_d = std::abs(best->height - height);
        for (const Resolution& r : resolutions) {
            const int d = std::abs(r.height - height);
            if (d < best_d) {
                best = &r;
                best_d = d;
            }
        }
        return *best;
    }
};

// One planned ladder rung.
struct Representation {
    double bitrate_mbps = 0.0;       // target bitrate, the cVBR maxrate cap
    Resolution resolution;
    int rate_factor = 0;             // encoder qp
    double predicted_quality_db = 0.0;
    double predicted_seconds = 0.0;
};

struct OmittedRung {
    double bitrate_mbps = 0.0;
    std::string reason;
    std::vector<std::pair<Resolution, double>> predicted_seconds;  // per candidate resolution
};

struct LadderPlan {
    std::string segment_id;
    Scheme scheme = Scheme::ladre;
    LatencyBudget budget = LatencyBudget::infinite();
    std::vector<Representation> rungs;
    std::vector<OmittedRung> omitted;

    bool operator==(const LadderPlan& o) const {
        if (segment_id != o.segment_id || rungs.size() != o.rungs.size() ||
            omitted.size() != o.omitted.size())
            return false;
        for (std::size_t i = 0; i < rungs.size(); ++i) {
            const auto& a = rungs[i];
            const auto& b = o.rungs[i];
            if (a.bitrate_mbps != b.bitrate_mbps || !(a.resolution == b.resolution) ||
                a.rate_factor != b.rate_factor)
                return false;
        }
        for (std::size_t i = 0; i < omitted.size(); ++i)
            if (omitted[i].bitrate_mbps != o.omitted[i].bitrate_mbps)
                return false;
        return true;
    }
};

}  // namespace ladre
