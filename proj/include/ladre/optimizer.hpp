#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/complexity.hpp"
#include "ladre/ladder.hpp"
#include "ladre/models.hpp"

namespace ladre {

struct ResolutionChoice {
    std::optional<Resolution> resolution;  // empty when no resolution fits the budget
    double predicted_quality_db = 0.0;
    double predicted_seconds = 0.0;
    std::vector<std::pair<Resolution, double>> predicted_seconds_all;  // every candidate
};

// Picks the resolution with the highest predicted quality among those whose
// predicted encode time fits the latency budget. Ties go to the smaller
// resolution: equal predicted quality for less work. An empty feasible set
// returns no resolution and carries the per-resolution predictions for the
// omission record.
inline ResolutionChoice select_resolution(const SegmentFeatures& features, double bitrate_mbps,
                                          const ModelSet& models, const LadderConfig& config) {
    models.validate_against(config);
    ResolutionChoice choice;
    double best_quality = -std::numeric_limits<double>::infinity();
    for (const Resolution& r : config.resolutions) {  // ascending pixels
        const double t = models.predict_time_seconds(r, features, bitrate_mbps);
        choice.predicted_seconds_all.emplace_back(r, t);
        if (!config.latency_budget.allows(t))
            continue;
        const double v = models.predict_quality_db(r, features, bitrate_mbps);
        if (v > best_quality) {
            best_quality = v;
            choice.resolution = r;
            choice.predicted_quality_db = v;
            choice.predicted_seconds = t;
        }
    }
    return choice;
}

// Predicted rate factor, rounded half-to-even (encoder qp is integral) and
// clamped to the configured bounds.
inline int select_rate_factor(const SegmentFeatures& features, const Resolution& r,
                              double bitrate_mbps, const ModelSet& models,
                              const LadderConfig& config) {
    const double raw = models.predict_rate_factor(r, features, bitrate_mbps);
    const double rounded = std::nearbyint(raw);  // FE_TONEAREST: ties to even
    const double clamped = std::clamp(rounded, static_cast<double>(config.rate_factor_min),
                                      static_cast<double>(config.rate_factor_max));
    return static_cast<int>(clamped);
}

namespace detail {

// Fixed-ladder lookup: nearest map row in log-bitrate, then snapped to a
// supported resolution.
inline const Resolution& default_ladder_resolution(const LadderConfig& config, double bitrate) {
    require(!config.hls_ladder.empty(), ErrorKind::validation,
            "default scheme requires an hls_ladder map");
    const HlsRung* best = &config.hls_ladder.front();
    double best_d = std::fabs(std::log(best->bitrate_mbps) - std::log(bitrate));
    for (const HlsRung& rung : config.hls_ladder) {
        const double d = std::fabs(std::log(rung.bitrate_mbps) - std::log(bitrate));
        if (d < best_d) {
            best = &rung;
            best_d = d;
        }
    }
    return config.snap_height(best->height);
}

inline const Resolution& fastest_resolution(const LadderConfig& config,
                                            const ResolutionChoice& choice) {
    const Resolution* best = &config.resolutions.front();
    double best_t = std::numeric_limits<double>::infinity();
    for (const auto& [r, t] : choice.predicted_seconds_all) {
        if (t < best_t) {
            best_t = t;
            for (const Resolution& cr : config.resolutions)
                if (cr == r)
                    best = &cr;
        }
    }
    return *best;
}

}  // namespace detail

// Builds the per-segment ladder for the configured scheme:
//   ladre   - budget-constrained quality argmax per target bitrate
//   opte    - the same with the budget treated as unbounded
//   default - fixed bitrate->resolution map, no budget
// Infeasible rungs are omitted (or substituted with the fastest resolution
// when the config asks for that), and the omission records the predicted
// time of every candidate.
inline LadderPlan build_ladder(const std::string& segment_id, const SegmentFeatures& features,
                               const ModelSet& models, const LadderConfig& config) {
    config.validate();
    models.validate_against(config);

    LadderConfig effective = config;
    if (config.scheme != Scheme::ladre)
        effective.latency_budget = LatencyBudget::infinite();

    LadderPlan plan;
    plan.segment_id = segment_id;
    plan.scheme = config.scheme;
    plan.budget = effective.latency_budget;

    for (double b_t : config.bitrates_mbps) {
        std::optional<Resolution> picked;
        double quality = 0.0;
        double seconds = 0.0;
        if (config.scheme == Scheme::default_hls) {
            const Resolution& r = detail::default_ladder_resolution(config, b_t);
            picked = r;
            quality = models.predict_quality_db(r, features, b_t);
            seconds = models.predict_time_seconds(r, features, b_t);
        } else {
            ResolutionChoice choice = select_resolution(features, b_t, models, effective);
            if (!choice.resolution && config.substitute_infeasible) {
                const Resolution& fastest = detail::fastest_resolution(config, choice);
                choice.resolution = fastest;
                choice.predicted_quality_db = models.predict_quality_db(fastest, features, b_t);
                choice.predicted_seconds = models.predict_time_seconds(fastest, features, b_t);
            }
            if (!choice.resolution) {
                OmittedRung omitted;
                omitted.bitrate_mbps = b_t;
                omitted.reason = "no resolution fits the latency budget of " +
                                 effective.latency_budget.to_string() + " s";
                omitted.predicted_seconds = std::move(choice.predicted_seconds_all);
                plan.omitted.push_back(std::move(omitted));
                continue;
            }
            picked = choice.resolution;
            quality = choice.predicted_quality_db;
            seconds = choice.predicted_seconds;
        }

        Representation rep;
        rep.bitrate_mbps = b_t;
        rep.resolution = *picked;
        rep.rate_factor = select_rate_factor(features, *picked, b_t, models, config);
        rep.predicted_quality_db = quality;
        rep.predicted_seconds = seconds;
        plan.rungs.push_back(std::move(rep));
    }
    return plan;
}

}  // namespace ladre
