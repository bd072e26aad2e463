#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladre/common.hpp"
#include "ladre/complexity.hpp"
#include "ladre/csv.hpp"
#include "ladre/evaluation.hpp"
#include "ladre/ladder.hpp"
#include "ladre/orchestrator.hpp"

namespace ladre {

constexpr int kArtifactSchemaVersion = 1;

// ---- generic JSON file I/O -------------------------------------------------

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << j.dump(1, '\t') << '\n';
    if (!out)
        fail(ErrorKind::io, "short write to '" + path + "'");
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open '" + path + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void check_schema_version(const nlohmann::json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("schema_version"))
        fail(ErrorKind::validation, what + " has no schema_version field");
    const int v = j.at("schema_version").get<int>();
    if (v != kArtifactSchemaVersion)
        fail(ErrorKind::validation, what + " schema version mismatch: file has " +
                                        std::to_string(v) + ", this build expects " +
                                        std::to_string(kArtifactSchemaVersion));
}

// ---- features CSV ------------------------------------------------------------

struct FeatureRecord {
    std::string id;
    double fps = 0.0;
    int width = 0;
    int height = 0;
    SegmentFeatures features;
};

inline void write_features_csv(const std::vector<FeatureRecord>& records,
                               const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << "id,fps,width,height,e_y,h,l_y,e_u,l_u,e_v,l_v\n";
    for (const FeatureRecord& r : records) {
        const auto f = r.features.as_array();
        out << csv_field(r.id) << ',' << format_double(r.fps) << ',' << r.width << ','
            << r.height;
        for (double v : f)
            out << ',' << format_double(v);
        out << '\n';
    }
}

inline std::vector<FeatureRecord> read_features_csv(const std::string& path) {
    std::vector<FeatureRecord> records;
    for (const auto& row : read_csv(path)) {
        require(row.size() == 11, ErrorKind::validation,
                "features CSV row in '" + path + "' has " + std::to_string(row.size()) +
                    " fields, expected 11");
        FeatureRecord r;
        r.id = row[0];
        r.fps = std::stod(row[1]);
        r.width = std::stoi(row[2]);
        r.height = std::stoi(row[3]);
        r.features.e_y = std::stod(row[4]);
        r.features.h = std::stod(row[5]);
        r.features.l_y = std::stod(row[6]);
        r.features.e_u = std::stod(row[7]);
        r.features.l_u = std::stod(row[8]);
        r.features.e_v = std::stod(row[9]);
        r.features.l_v = std::stod(row[10]);
        records.push_back(std::move(r));
    }
    return records;
}

// ---- ladder plans --------------------------------------------------------------

inline nlohmann::json representation_to_json(const Representation& rep) {
    return {{"bitrate_mbps", rep.bitrate_mbps},
            {"width", rep.resolution.width},
            {"height", rep.resolution.height},
            {"label", rep.resolution.label},
            {"rate_factor", rep.rate_factor},
            {"predicted_quality_db", rep.predicted_quality_db},
            {"predicted_seconds", rep.predicted_seconds}};
}

inline Representation representation_from_json(const nlohmann::json& j) {
    Representation rep;
    rep.bitrate_mbps = j.at("bitrate_mbps").get<double>();
    rep.resolution = make_resolution(j.at("width").get<int>(), j.at("height").get<int>(),
                                     j.value("label", ""));
    rep.rate_factor = j.at("rate_factor").get<int>();
    rep.predicted_quality_db = j.value("predicted_quality_db", 0.0);
    rep.predicted_seconds = j.value("predicted_seconds", 0.0);
    return rep;
}

inline nlohmann::json plan_to_json(const LadderPlan& plan) {
    nlohmann::json rungs = nlohmann::json::array();
    for (const Representation& rep : plan.rungs)
        rungs.push_back(representation_to_json(rep));
    nlohmann::json omitted = nlohmann::json::array();
    for (const OmittedRung& o : plan.omitted) {
        nlohmann::json times = nlohmann::json::object();
        for (const auto& [r, t] : o.predicted_seconds)
            times[r.label] = t;
        omitted.push_back({{"bitrate_mbps", o.bitrate_mbps},
                           {"reason", o.reason},
                           {"predicted_seconds", std::move(times)}});
    }
    return {{"schema_version", kArtifactSchemaVersion},
            {"segment", plan.segment_id},
            {"scheme", scheme_name(plan.scheme)},
            {"tau_l", plan.budget.unbounded ? nlohmann::json("inf")
                                            : nlohmann::json(plan.budget.seconds)},
            {"rungs", std::move(rungs)},
            {"omitted", std::move(omitted)}};
}

inline LadderPlan plan_from_json(const nlohmann::json& j) {
    check_schema_version(j, "ladder plan");
    try {
        LadderPlan plan;
        plan.segment_id = j.at("segment").get<std::string>();
        plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
        if (j.at("tau_l").is_string())
            plan.budget = LatencyBudget::infinite();
        else
            plan.budget = LatencyBudget::finite(j.at("tau_l").get<double>());
        for (const auto& rj : j.at("rungs"))
            plan.rungs.push_back(representation_from_json(rj));
        for (const auto& oj : j.at("omitted")) {
            OmittedRung o;
            o.bitrate_mbps = oj.at("bitrate_mbps").get<double>();
            o.reason = oj.value("reason", "");
            plan.omitted.push_back(std::move(o));
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed ladder plan: ") + e.what());
    }
}

// ---- run manifest ---------------------------------------------------------------

inline nlohmann::json encode_result_to_json(const EncodeResult& r) {
    return {{"representation", representation_to_json(r.representation)},
            {"bitrate_mbps", r.bitrate_mbps},
            {"bytes", r.output_bytes},
            {"seconds", r.wall_seconds},
            {"exit_status", r.exit_status},
            {"output", r.output_path},
            {"ok", r.ok},
            {"diagnostics", r.diagnostics}};
}

inline EncodeResult encode_result_from_json(const nlohmann::json& j) {
    EncodeResult r;
    r.representation = representation_from_json(j.at("representation"));
    r.bitrate_mbps = j.at("bitrate_mbps").get<double>();
    r.output_bytes = j.at("bytes").get<std::uint64_t>();
    r.wall_seconds = j.at("seconds").get<double>();
    r.exit_status = j.value("exit_status", 0);
    r.output_path = j.value("output", "");
    r.ok = j.value("ok", true);
    r.diagnostics = j.value("diagnostics", "");
    return r;
}

struct RunManifest {
    std::string scheme_label;
    std::string budget_label;
    struct SegmentEntry {
        std::string segment_id;
        std::vector<EncodeResult> results;
        double latency_seconds = 0.0;
        double total_seconds = 0.0;
    };
    std::vector<SegmentEntry> segments;
};

inline nlohmann::json run_manifest_to_json(const RunManifest& m) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : m.segments) {
        nlohmann::json results = nlohmann::json::array();
        for (const EncodeResult& r : s.results)
            results.push_back(encode_result_to_json(r));
        segments.push_back({{"id", s.segment_id},
                            {"results", std::move(results)},
                            {"latency_seconds", s.latency_seconds},
                            {"total_seconds", s.total_seconds}});
    }
    return {{"schema_version", kArtifactSchemaVersion},
            {"scheme", m.scheme_label},
            {"tau_l", m.budget_label},
            {"segments", std::move(segments)}};
}

inline RunManifest run_manifest_from_json(const nlohmann::json& j) {
    check_schema_version(j, "run manifest");
    try {
        RunManifest m;
        m.scheme_label = j.at("scheme").get<std::string>();
        m.budget_label = j.value("tau_l", "inf");
        for (const auto& sj : j.at("segments")) {
            RunManifest::SegmentEntry s;
            s.segment_id = sj.at("id").get<std::string>();
            for (const auto& rj : sj.at("results"))
                s.results.push_back(encode_result_from_json(rj));
            s.latency_seconds = sj.at("latency_seconds").get<double>();
            s.total_seconds = sj.at("total_seconds").get<double>();
            m.segments.push_back(std::move(s));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed run manifest: ") + e.what());
    }
}

// ---- per-scheme quality (run manifest + measured scores) ------------------------

inline nlohmann::json scheme_run_to_json(const SchemeRun& run) {
    nlohmann::json segments = nlohmann::json::array();
    for (const SegmentRun& s : run.segments) {
        nlohmann::json rungs = nlohmann::json::array();
        for (const MeasuredRung& r : s.rungs)
            rungs.push_back({{"bitrate_mbps", r.bitrate_mbps},
                             {"bytes", r.bytes},
                             {"seconds", r.seconds},
                             {"psnr_db", r.psnr_db},
                             {"xpsnr_db", r.xpsnr_db}});
        segments.push_back({{"id", s.segment_id},
                            {"rungs", std::move(rungs)},
                            {"latency_seconds", s.latency_seconds},
                            {"total_seconds", s.total_seconds}});
    }
    return {{"schema_version", kArtifactSchemaVersion},
            {"scheme", run.label},
            {"tau_l", run.budget_label},
            {"segments", std::move(segments)}};
}

inline SchemeRun scheme_run_from_json(const nlohmann::json& j) {
    check_schema_version(j, "quality file");
    try {
        SchemeRun run;
        run.label = j.at("scheme").get<std::string>();
        run.budget_label = j.value("tau_l", "-");
        for (const auto& sj : j.at("segments")) {
            SegmentRun s;
            s.segment_id = sj.at("id").get<std::string>();
            for (const auto& rj : sj.at("rungs")) {
                MeasuredRung r;
                r.bitrate_mbps = rj.at("bitrate_mbps").get<double>();
                r.bytes = rj.at("bytes").get<std::uint64_t>();
                r.seconds = rj.at("seconds").get<double>();
                r.psnr_db = rj.at("psnr_db").get<double>();
                r.xpsnr_db = rj.at("xpsnr_db").get<double>();
                s.rungs.push_back(r);
            }
            s.latency_seconds = sj.at("latency_seconds").get<double>();
            s.total_seconds = sj.at("total_seconds").get<double>();
            run.segments.push_back(std::move(s));
        }
        return run;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed quality file: ") + e.what());
    }
}

}  // namespace ladre
