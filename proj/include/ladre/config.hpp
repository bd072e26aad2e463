#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladre/artifacts.hpp"
#include "ladre/common.hpp"
#include "ladre/csv.hpp"
#include "ladre/forest.hpp"
#include "ladre/ladder.hpp"
#include "ladre/orchestrator.hpp"

namespace ladre {

struct CorpusEntry {
    std::string path;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    std::string id;
};

struct RunConfig {
    LadderConfig ladder;
    std::vector<LatencyBudget> tau_sweep;  // pipeline runs one ladre pass per entry
    std::string corpus_manifest;
    EncoderAdapter encoder;
    std::string model_path;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int workers = 2;
    ForestHyper forest;
    double holdout_fraction = 0.2;
    int feature_block_size = 32;
};

namespace detail {

inline LatencyBudget budget_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        require(s == "inf", ErrorKind::validation,
                "latency budget must be a positive number or \"inf\", got '" + s + "'");
        return LatencyBudget::infinite();
    }
    require(j.is_number(), ErrorKind::validation, "latency budget must be a number or \"inf\"");
    return LatencyBudget::finite(j.get<double>());
}

inline Resolution resolution_from_json(const nlohmann::json& j) {
    if (j.is_string())
        return parse_resolution(j.get<std::string>());
    return make_resolution(j.at("width").get<int>(), j.at("height").get<int>(),
                           j.value("label", ""));
}

}  // namespace detail

inline LadderConfig ladder_config_from_json(const nlohmann::json& j) {
    LadderConfig cfg;
    for (const auto& rj : j.at("resolutions"))
        cfg.resolutions.push_back(detail::resolution_from_json(rj));
    cfg.bitrates_mbps = j.at("bitrates_mbps").get<std::vector<double>>();
    if (j.contains("tau_l"))
        cfg.latency_budget = detail::budget_from_json(j.at("tau_l"));
    cfg.rate_factor_min = j.value("rate_factor_min", 17);
    cfg.rate_factor_max = j.value("rate_factor_max", 51);
    if (j.contains("scheme"))
        cfg.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (j.contains("hls_ladder"))
        for (const auto& hj : j.at("hls_ladder"))
            cfg.hls_ladder.push_back(
                {hj.at("bitrate_mbps").get<double>(), hj.at("height").get<int>()});
    cfg.calibration_step = j.value("calibration_step", 2);
    cfg.substitute_infeasible = j.value("substitute_infeasible", false);
    cfg.validate();
    return cfg;
}

inline RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "") {
    try {
        check_schema_version(j, "config");
        RunConfig cfg;
        cfg.ladder = ladder_config_from_json(j.at("ladder"));
        if (j.contains("tau_l_sweep"))
            for (const auto& tj : j.at("tau_l_sweep"))
                cfg.tau_sweep.push_back(detail::budget_from_json(tj));
        const auto resolve = [&base_dir](const std::string& p) {
            if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute())
                return p;
            return (std::filesystem::path(base_dir) / p).string();
        };
        cfg.corpus_manifest = resolve(j.value("corpus_manifest", ""));
        if (j.contains("encoder")) {
            const auto& ej = j.at("encoder");
            const std::string kind = ej.value("kind", "mock");
            if (kind == "mock")
                cfg.encoder.kind = EncoderAdapter::Kind::mock;
            else if (kind == "external")
                cfg.encoder.kind = EncoderAdapter::Kind::external;
            else
                fail(ErrorKind::validation, "encoder kind must be mock or external, got '" + kind + "'");
            cfg.encoder.command_template = ej.value("command_template", "");
            cfg.encoder.decode_template = ej.value("decode_template", "");
            cfg.encoder.threads = ej.value("threads", 4);
            cfg.encoder.timeout_factor = ej.value("timeout_factor", 2.0);
            cfg.encoder.validate();
        }
        cfg.model_path = resolve(j.value("model_path", ""));
        cfg.output_dir = resolve(j.value("output_dir", "out"));
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.workers = j.value("workers", 2);
        require(cfg.workers >= 1, ErrorKind::validation, "workers must be >= 1");
        if (j.contains("forest")) {
            const auto& fj = j.at("forest");
            cfg.forest.tree_count = fj.value("tree_count", 100);
            cfg.forest.max_depth = fj.value("max_depth", 14);
            cfg.forest.min_leaf = fj.value("min_leaf", 2);
            cfg.forest.feature_subsample = fj.value("feature_subsample", 0);
            cfg.forest.bootstrap = fj.value("bootstrap", true);
        }
        cfg.forest.seed = cfg.seed;
        cfg.holdout_fraction = j.value("holdout_fraction", 0.2);
        require(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0, ErrorKind::validation,
                "holdout_fraction must be in [0, 1)");
        cfg.feature_block_size = j.value("feature_block_size", 32);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed config: ") + e.what());
    }
}

// Loads a config file; relative paths inside it resolve against its directory.
inline RunConfig load_config(const std::string& path) {
    const nlohmann::json j = read_json(path);
    return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

inline std::vector<CorpusEntry> load_manifest(const std::string& path) {
    std::vector<CorpusEntry> entries;
    const auto base = std::filesystem::path(path).parent_path();
    for (const auto& row : read_csv(path)) {
        require(row.size() == 5, ErrorKind::validation,
                "corpus manifest row must be path,width,height,fps,id; got " +
                    std::to_string(row.size()) + " fields");
        CorpusEntry e;
        e.path = std::filesystem::path(row[0]).is_absolute() ? row[0] : (base / row[0]).string();
        e.width = std::stoi(row[1]);
        e.height = std::stoi(row[2]);
        e.fps = std::stod(row[3]);
        e.id = row[4];
        require(std::filesystem::exists(e.path), ErrorKind::validation,
                "corpus file does not exist: " + e.path);
        entries.push_back(std::move(e));
    }
    require(!entries.empty(), ErrorKind::validation, "corpus manifest '" + path + "' lists no segments");
    return entries;
}

inline Segment load_corpus_segment(const CorpusEntry& entry) {
    Segment seg = read_yuv420(entry.path, make_resolution(entry.width, entry.height), entry.fps);
    seg.source_id = entry.id;
    return seg;
}

}  // namespace ladre
