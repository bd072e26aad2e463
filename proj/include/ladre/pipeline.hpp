#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ladre/artifacts.hpp"
#include "ladre/config.hpp"
#include "ladre/evaluation.hpp"
#include "ladre/metrics.hpp"
#include "ladre/models.hpp"
#include "ladre/optimizer.hpp"
#include "ladre/orchestrator.hpp"
#include "ladre/synth.hpp"

namespace ladre {

// Wall-clock timings and other non-reproducible details go here, never into
// the stage artifacts.
class RunLog {
public:
    explicit RunLog(std::string path = "") : path_(std::move(path)) {}

    void note(const std::string& line) {
        if (path_.empty())
            return;
        std::filesystem::create_directories(std::filesystem::path(path_).parent_path());
        std::ofstream out(path_, std::ios::app);
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        out << std::chrono::duration_cast<std::chrono::milliseconds>(now).count() << " " << line
            << "\n";
    }

private:
    std::string path_;
};

inline std::string run_label(Scheme scheme, const LatencyBudget& budget) {
    if (scheme == Scheme::default_hls)
        return "default";
    if (scheme == Scheme::opte)
        return "opte";
    return "ladre_tau" + (budget.unbounded ? std::string("inf")
                                           : detail::format_bitrate(budget.seconds));
}

inline std::string budget_label(Scheme scheme, const LatencyBudget& budget) {
    if (scheme != Scheme::ladre)
        return "-";
    return budget.unbounded ? "inf" : detail::format_bitrate(budget.seconds);
}

struct FeatureStage {
    std::vector<FeatureRecord> records;
    double mean_extract_seconds = 0.0;  // tau_p component
    double mean_fps = 0.0;
};

// Feature extraction over loaded corpus segments, with per-segment wall-time
// accounting.
inline FeatureStage run_feature_stage(const std::vector<Segment>& corpus, int block_size,
                                      int workers) {
    FeatureStage stage;
    stage.records.resize(corpus.size());
    std::vector<double> seconds(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        const SegmentFeatures f = extract_features(corpus[i], block_size);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        seconds[i] = elapsed.count();
        stage.records[i] = FeatureRecord{corpus[i].source_id, corpus[i].fps, corpus[i].width(),
                                         corpus[i].height(), f};
    });
    double total_s = 0.0, total_frames = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        total_s += seconds[i];
        total_frames += static_cast<double>(corpus[i].frame_count());
    }
    stage.mean_extract_seconds = corpus.empty() ? 0.0 : total_s / corpus.size();
    stage.mean_fps = total_s > 0 ? total_frames / total_s : 0.0;
    return stage;
}

// Table build, holdout MAE and final training. The MAE is estimated on held
// out segments with interim models, then the shipped models are retrained on
// the full table.
inline ModelSet run_train_stage(const std::vector<Segment>& corpus, const RunConfig& config,
                                TrainingTables* tables_out = nullptr, RunLog* log = nullptr) {
    TrainingTables tables = build_training_table(corpus, config.ladder, config.encoder,
                                                 config.workers, config.feature_block_size);
    if (log)
        for (const std::string& w : tables.warnings)
            log->note("train: skipped " + w);

    ModelMae mae;
    if (config.holdout_fraction > 0.0 && corpus.size() >= 2) {
        const auto [train_part, holdout_part] =
            split_tables_by_segment(tables, config.holdout_fraction, config.seed);
        if (!holdout_part.quality.rows.empty() && !train_part.quality.rows.empty()) {
            const ModelSet interim =
                train_models(train_part, config.ladder, config.forest, config.workers);
            mae = evaluate_mae(interim, holdout_part);
        }
    }
    ModelSet models = train_models(tables, config.ladder, config.forest, config.workers);
    models.mae = mae;
    models.corpus_id = config.corpus_manifest.empty()
                           ? "in-memory corpus (" + std::to_string(corpus.size()) + " segments)"
                           : config.corpus_manifest;
    if (tables_out)
        *tables_out = std::move(tables);
    return models;
}

inline std::vector<LadderPlan> run_plan_stage(const std::vector<FeatureRecord>& features,
                                              const ModelSet& models, const LadderConfig& ladder) {
    std::vector<LadderPlan> plans;
    plans.reserve(features.size());
    for (const FeatureRecord& r : features)
        plans.push_back(build_ladder(r.id, r.features, models, ladder));
    return plans;
}

// Caches the noiseless mock round trip per (segment, resolution); the noise
// is applied per rate factor on top.
class MockDecodeCache {
public:
    const Segment& base(const Segment& source, const Resolution& r) {
        const std::string key = source.source_id + "|" + std::to_string(r.width) + "x" +
                                std::to_string(r.height);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto it = cache_.find(key);
            if (it != cache_.end())
                return it->second;
        }
        Segment computed = mock_round_trip(source, r);
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.emplace(key, std::move(computed)).first->second;
    }

private:
    std::mutex mutex_;
    std::map<std::string, Segment> cache_;
};

struct EncodeStage {
    RunManifest manifest;
    std::vector<PlanExecution> executions;  // parallel to manifest.segments
};

inline EncodeStage run_encode_stage(const std::vector<LadderPlan>& plans,
                                    const std::vector<Segment>& corpus,
                                    const std::vector<FeatureRecord>& features,
                                    const RunConfig& config, Scheme scheme,
                                    const LatencyBudget& budget) {
    EncodeStage stage;
    stage.manifest.scheme_label = run_label(scheme, budget);
    stage.manifest.budget_label = budget_label(scheme, budget);
    const std::string run_dir =
        (std::filesystem::path(config.output_dir) / "encodes" / stage.manifest.scheme_label)
            .string();

    for (const LadderPlan& plan : plans) {
        const Segment* segment = nullptr;
        const FeatureRecord* record = nullptr;
        for (const Segment& s : corpus)
            if (s.source_id == plan.segment_id)
                segment = &s;
        for (const FeatureRecord& r : features)
            if (r.id == plan.segment_id)
                record = &r;
        require(record != nullptr, ErrorKind::validation,
                "no features for planned segment '" + plan.segment_id + "'");
        require(segment != nullptr, ErrorKind::validation,
                "planned segment '" + plan.segment_id + "' is not in the corpus");

        const SegmentContext ctx = make_context(*segment, record->features);
        const PlanExecution exec =
            execute_plan(plan, ctx, config.encoder, config.workers, run_dir);
        RunManifest::SegmentEntry entry;
        entry.segment_id = plan.segment_id;
        entry.results = exec.results;
        entry.latency_seconds = exec.segment_latency_seconds;
        entry.total_seconds = exec.total_seconds;
        stage.manifest.segments.push_back(std::move(entry));
        stage.executions.push_back(exec);
    }
    return stage;
}

// Measures every successful encode of a run against its source segment.
// Mock encodes synthesise the decoded segment; external encodes need the
// adapter's decode_template.
inline SchemeRun run_measure_stage(const RunManifest& manifest,
                                   const std::vector<Segment>& corpus, const RunConfig& config,
                                   MockDecodeCache* cache = nullptr) {
    SchemeRun run;
    run.label = manifest.scheme_label;
    run.budget_label = manifest.budget_label;
    run.segments.resize(manifest.segments.size());

    parallel_for(manifest.segments.size(), config.workers, [&](std::size_t si) {
        const RunManifest::SegmentEntry& entry = manifest.segments[si];
        const Segment* source = nullptr;
        for (const Segment& s : corpus)
            if (s.source_id == entry.segment_id)
                source = &s;
        require(source != nullptr, ErrorKind::validation,
                "segment '" + entry.segment_id + "' from the run manifest is not in the corpus");

        SegmentRun seg;
        seg.segment_id = entry.segment_id;
        seg.latency_seconds = entry.latency_seconds;
        seg.total_seconds = entry.total_seconds;
        for (const EncodeResult& enc : entry.results) {
            if (!enc.ok)
                continue;
            QualityScore score;
            if (config.encoder.kind == EncoderAdapter::Kind::mock) {
                Segment decoded = cache ? cache->base(*source, enc.representation.resolution)
                                        : mock_round_trip(*source, enc.representation.resolution);
                apply_mock_noise(decoded, source->source_id, enc.representation.resolution,
                                 enc.representation.rate_factor, config.ladder.rate_factor_min);
                score = quality_vs_source(*source, decoded);
            } else {
                require(!config.encoder.decode_template.empty(), ErrorKind::validation,
                        "measuring external encodes requires a decode_template");
                const std::string decoded_path = enc.output_path + ".dec.yuv";
                std::string cmd = config.encoder.decode_template;
                detail::replace_all(cmd, "{input}", enc.output_path);
                detail::replace_all(cmd, "{output}", decoded_path);
                detail::replace_all(cmd, "{width}",
                                    std::to_string(enc.representation.resolution.width));
                detail::replace_all(cmd, "{height}",
                                    std::to_string(enc.representation.resolution.height));
                detail::replace_all(cmd, "{fps}", detail::format_bitrate(source->fps));
                const auto dec = detail::run_command(cmd, std::nullopt);
                require(dec.exit_status == 0, ErrorKind::encode,
                        "decode command failed for " + enc.output_path + ": " + dec.output_tail);
                const Segment decoded =
                    read_yuv420(decoded_path, enc.representation.resolution, source->fps);
                score = quality_vs_source(*source, decoded);
            }
            MeasuredRung rung;
            rung.bitrate_mbps = enc.bitrate_mbps;
            rung.bytes = enc.output_bytes;
            rung.seconds = enc.wall_seconds;
            rung.psnr_db = score.psnr;
            rung.xpsnr_db = score.xpsnr;
            seg.rungs.push_back(rung);
        }
        run.segments[si] = std::move(seg);
    });
    return run;
}

struct PipelineOutcome {
    FeatureStage features;
    ModelSet models;
    EvaluationReport report;
    std::vector<std::string> artifact_paths;
};

// The full chain: features -> training -> per-scheme planning, encoding and
// measurement over the latency sweep -> evaluation against the default
// ladder. Every stage writes its artifact so any stage can be re-run alone.
inline PipelineOutcome run_pipeline(const RunConfig& config, RunLog* log = nullptr) {
    require(!config.corpus_manifest.empty(), ErrorKind::validation,
            "pipeline needs a corpus_manifest in the config");
    const std::vector<CorpusEntry> entries = load_manifest(config.corpus_manifest);
    std::vector<Segment> corpus;
    corpus.reserve(entries.size());
    for (const CorpusEntry& e : entries)
        corpus.push_back(load_corpus_segment(e));

    PipelineOutcome outcome;
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    const auto keep = [&outcome](const std::string& p) { outcome.artifact_paths.push_back(p); };

    outcome.features = run_feature_stage(corpus, config.feature_block_size, config.workers);
    const std::string features_path = (out_dir / "features.csv").string();
    write_features_csv(outcome.features.records, features_path);
    keep(features_path);
    if (log)
        log->note("features: " + std::to_string(outcome.features.mean_fps) + " fps mean");

    TrainingTables tables;
    outcome.models = run_train_stage(corpus, config, &tables, log);
    const std::string models_path =
        config.model_path.empty() ? (out_dir / "models.json").string() : config.model_path;
    save_models(outcome.models, models_path);
    keep(models_path);
    const std::string tables_path = (out_dir / "training_table.csv").string();
    write_training_csv(tables, tables_path);
    keep(tables_path);

    std::vector<std::pair<Scheme, LatencyBudget>> scheme_runs;
    scheme_runs.emplace_back(Scheme::default_hls, LatencyBudget::infinite());
    scheme_runs.emplace_back(Scheme::opte, LatencyBudget::infinite());
    if (config.tau_sweep.empty()) {
        scheme_runs.emplace_back(Scheme::ladre, config.ladder.latency_budget);
    } else {
        for (const LatencyBudget& b : config.tau_sweep)
            scheme_runs.emplace_back(Scheme::ladre, b);
    }

    MockDecodeCache cache;
    std::vector<SchemeRun> measured;
    for (const auto& [scheme, budget] : scheme_runs) {
        LadderConfig ladder = config.ladder;
        ladder.scheme = scheme;
        ladder.latency_budget = budget;
        const std::string label = run_label(scheme, budget);

        const std::vector<LadderPlan> plans =
            run_plan_stage(outcome.features.records, outcome.models, ladder);
        nlohmann::json plans_json = nlohmann::json::array();
        for (const LadderPlan& p : plans)
            plans_json.push_back(plan_to_json(p));
        const std::string plans_path = (out_dir / ("plans_" + label + ".json")).string();
        write_json(nlohmann::json{{"schema_version", kArtifactSchemaVersion},
                                  {"scheme", scheme_name(scheme)},
                                  {"tau_l", budget_label(scheme, budget)},
                                  {"plans", std::move(plans_json)}},
                   plans_path);
        keep(plans_path);

        const EncodeStage encoded =
            run_encode_stage(plans, corpus, outcome.features.records, config, scheme, budget);
        const std::string manifest_path = (out_dir / ("run_" + label + ".json")).string();
        write_json(run_manifest_to_json(encoded.manifest), manifest_path);
        keep(manifest_path);

        SchemeRun quality = run_measure_stage(encoded.manifest, corpus, config, &cache);
        const std::string quality_path = (out_dir / ("quality_" + label + ".json")).string();
        write_json(scheme_run_to_json(quality), quality_path);
        keep(quality_path);
        measured.push_back(std::move(quality));
        if (log)
            log->note("run " + label + " complete");
    }

    outcome.report =
        compare_schemes(measured, "default", outcome.features.mean_extract_seconds);
    const std::string report_json_path = (out_dir / "report.json").string();
    write_json(report_to_json(outcome.report), report_json_path);
    keep(report_json_path);
    const std::string report_txt_path = (out_dir / "report.txt").string();
    {
        std::ofstream txt(report_txt_path, std::ios::trunc);
        txt << render_report_table(outcome.report);
    }
    keep(report_txt_path);
    return outcome;
}

}  // namespace ladre
