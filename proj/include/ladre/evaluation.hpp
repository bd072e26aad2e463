#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladre/bd.hpp"
#include "ladre/common.hpp"

namespace ladre {

// One measured rung of one segment under one scheme.
struct MeasuredRung {
    double bitrate_mbps = 0.0;
    std::uint64_t bytes = 0;
    double seconds = 0.0;
    double psnr_db = 0.0;
    double xpsnr_db = 0.0;
};

struct SegmentRun {
    std::string segment_id;
    std::vector<MeasuredRung> rungs;
    double latency_seconds = 0.0;  // max rung encode time
    double total_seconds = 0.0;    // sum of rung encode times
};

struct SchemeRun {
    std::string label;          // e.g. "default", "opte", "ladre(200)"
    std::string budget_label;   // "-", "inf" or the finite budget in seconds
    std::vector<SegmentRun> segments;
};

struct SchemeDeltas {
    std::string label;
    std::string budget_label;
    double bdr_psnr_pct = 0.0;    // bitrate delta at equal PSNR
    double bdr_xpsnr_pct = 0.0;   // bitrate delta at equal XPSNR
    double bd_psnr_db = 0.0;
    double bd_xpsnr_db = 0.0;
    double storage_delta_pct = 0.0;
    double time_delta_pct = 0.0;  // the energy proxy
    double mean_latency_seconds = 0.0;
    int bd_segments = 0;          // segments contributing to the BD averages
    std::vector<std::string> bd_skipped;
};

struct EvaluationReport {
    std::string baseline;
    std::vector<SchemeDeltas> schemes;
    double preprocessing_seconds = 0.0;  // mean per-segment feature-extraction latency
};

namespace detail {

inline RdCurve curve_of(const SegmentRun& run, bool use_xpsnr) {
    RdCurve c;
    c.metric = use_xpsnr ? "xpsnr" : "psnr";
    for (const MeasuredRung& r : run.rungs)
        c.points.push_back({r.bitrate_mbps, use_xpsnr ? r.xpsnr_db : r.psnr_db});
    return c;
}

inline const SegmentRun* find_segment(const SchemeRun& run, const std::string& id) {
    for (const SegmentRun& s : run.segments)
        if (s.segment_id == id)
            return &s;
    return nullptr;
}

}  // namespace detail

// Compares every scheme against the baseline on identical segment sets.
// BD values are computed per segment and then averaged; segments whose
// (possibly truncated) curves cannot support a BD computation are skipped
// from the BD averages and listed, but still count toward storage, time and
// latency. Aggregation runs in sorted segment order.
inline EvaluationReport compare_schemes(const std::vector<SchemeRun>& runs,
                                        const std::string& baseline_label,
                                        double preprocessing_seconds = 0.0) {
    const SchemeRun* baseline = nullptr;
    for (const SchemeRun& run : runs)
        if (run.label == baseline_label)
            baseline = &run;
    require(baseline != nullptr, ErrorKind::validation,
            "baseline scheme '" + baseline_label + "' not found among runs");

    std::set<std::string> base_ids;
    for (const SegmentRun& s : baseline->segments)
        base_ids.insert(s.segment_id);

    EvaluationReport report;
    report.baseline = baseline_label;
    report.preprocessing_seconds = preprocessing_seconds;

    for (const SchemeRun& run : runs) {
        std::set<std::string> ids;
        for (const SegmentRun& s : run.segments)
            ids.insert(s.segment_id);
        if (ids != base_ids) {
            std::string diff;
            for (const auto& id : ids)
                if (!base_ids.count(id))
                    diff += " +" + id;
            for (const auto& id : base_ids)
                if (!ids.count(id))
                    diff += " -" + id;
            fail(ErrorKind::validation,
                 "scheme '" + run.label + "' was evaluated on a different segment set than '" +
                     baseline_label + "':" + diff);
        }

        SchemeDeltas d;
        d.label = run.label;
        d.budget_label = run.budget_label;

        double bd_p = 0.0, bd_v = 0.0, bdr_p = 0.0, bdr_v = 0.0;
        double base_bytes = 0.0, test_bytes = 0.0;
        double base_time = 0.0, test_time = 0.0;
        double latency_sum = 0.0;

        for (const std::string& id : base_ids) {
            const SegmentRun* test_seg = detail::find_segment(run, id);
            const SegmentRun* base_seg = detail::find_segment(*baseline, id);
            for (const MeasuredRung& r : base_seg->rungs) {
                base_bytes += static_cast<double>(r.bytes);
                base_time += r.seconds;
            }
            for (const MeasuredRung& r : test_seg->rungs) {
                test_bytes += static_cast<double>(r.bytes);
                test_time += r.seconds;
            }
            latency_sum += test_seg->latency_seconds;

            try {
                const RdCurve bp = detail::curve_of(*base_seg, false);
                const RdCurve bv = detail::curve_of(*base_seg, true);
                const RdCurve tp = detail::curve_of(*test_seg, false);
                const RdCurve tv = detail::curve_of(*test_seg, true);
                const double seg_bd_p = bd_quality(bp, tp);
                const double seg_bd_v = bd_quality(bv, tv);
                const double seg_bdr_p = bd_rate(bp, tp);
                const double seg_bdr_v = bd_rate(bv, tv);
                bd_p += seg_bd_p;
                bd_v += seg_bd_v;
                bdr_p += seg_bdr_p;
                bdr_v += seg_bdr_v;
                ++d.bd_segments;
            } catch (const Error& e) {
                d.bd_skipped.push_back(id + ": " + e.what());
            }
        }

        const double nseg = static_cast<double>(base_ids.size());
        if (d.bd_segments > 0) {
            bd_p /= d.bd_segments;
            bd_v /= d.bd_segments;
            bdr_p /= d.bd_segments;
            bdr_v /= d.bd_segments;
        }
        d.bd_psnr_db = bd_p;
        d.bd_xpsnr_db = bd_v;
        d.bdr_psnr_pct = bdr_p;
        d.bdr_xpsnr_pct = bdr_v;
        d.storage_delta_pct = base_bytes > 0 ? 100.0 * (test_bytes - base_bytes) / base_bytes : 0.0;
        d.time_delta_pct = base_time > 0 ? 100.0 * (test_time - base_time) / base_time : 0.0;
        d.mean_latency_seconds = nseg > 0 ? latency_sum / nseg : 0.0;
        report.schemes.push_back(std::move(d));
    }
    return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SchemeDeltas& d : report.schemes) {
        rows.push_back({{"scheme", d.label},
                        {"tau_l", d.budget_label},
                        {"bdr_psnr_pct", d.bdr_psnr_pct},
                        {"bdr_xpsnr_pct", d.bdr_xpsnr_pct},
                        {"bd_psnr_db", d.bd_psnr_db},
                        {"bd_xpsnr_db", d.bd_xpsnr_db},
                        {"storage_delta_pct", d.storage_delta_pct},
                        {"time_delta_pct", d.time_delta_pct},
                        {"mean_latency_seconds", d.mean_latency_seconds},
                        {"bd_segments", d.bd_segments},
                        {"bd_skipped", d.bd_skipped}});
    }
    return nlohmann::json{{"schema_version", 1},
                          {"baseline", report.baseline},
                          {"schemes", std::move(rows)}};
}

// Aligned plain-text table in the usual column order: bitrate deltas at equal
// PSNR/XPSNR, quality deltas at equal bitrate, storage and encode-time deltas
// and the mean segment latency.
inline std::string render_report_table(const EvaluationReport& report) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-14s %8s %9s %9s %9s %10s %9s %9s %10s\n", "Method",
                  "tau_L[s]", "BDR_P[%]", "BDR_V[%]", "BD-PSNR", "BD-XPSNR", "dS[%]", "dT~dE[%]",
                  "mean_tau_L");
    out += line;
    out += std::string(93, '-') + "\n";
    for (const SchemeDeltas& d : report.schemes) {
        std::snprintf(line, sizeof(line), "%-14s %8s %9.2f %9.2f %9.2f %10.2f %9.2f %9.2f %10.2f\n",
                      d.label.c_str(), d.budget_label.c_str(), d.bdr_psnr_pct, d.bdr_xpsnr_pct,
                      d.bd_psnr_db, d.bd_xpsnr_db, d.storage_delta_pct, d.time_delta_pct,
                      d.mean_latency_seconds);
        out += line;
    }
    std::snprintf(line, sizeof(line), "baseline: %s, preprocessing latency tau_p: %.3f s/segment\n",
                  report.baseline.c_str(), report.preprocessing_seconds);
    out += line;
    return out;
}

}  // namespace ladre
