// Command-line front end: each subcommand runs one pipeline stage and writes
// its artifact; `pipeline` chains all of them over the latency sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ladre/artifacts.hpp"
#include "ladre/config.hpp"
#include "ladre/csv.hpp"
#include "ladre/evaluation.hpp"
#include "ladre/metrics.hpp"
#include "ladre/models.hpp"
#include "ladre/optimizer.hpp"
#include "ladre/orchestrator.hpp"
#include "ladre/pipeline.hpp"
#include "ladre/synth.hpp"

namespace {

struct GlobalOptions {
    bool json_errors = false;
    std::string config_path;
    std::optional<std::string> tau_override;
    std::optional<std::string> scheme_override;
    std::optional<std::string> encoder_override;
    std::optional<int> workers_override;
    std::optional<std::uint64_t> seed_override;
};

ladre::LatencyBudget parse_budget(const std::string& text) {
    if (text == "inf")
        return ladre::LatencyBudget::infinite();
    try {
        return ladre::LatencyBudget::finite(std::stod(text));
    } catch (const std::logic_error&) {
        ladre::fail(ladre::ErrorKind::validation,
                    "--tau-l must be a positive number or 'inf', got '" + text + "'");
    }
}

ladre::RunConfig load_run_config(const GlobalOptions& opts) {
    ladre::require(!opts.config_path.empty(), ladre::ErrorKind::validation,
                   "this subcommand needs --config");
    ladre::require(std::filesystem::exists(opts.config_path), ladre::ErrorKind::validation,
                   "config file does not exist: " + opts.config_path);
    ladre::RunConfig cfg = ladre::load_config(opts.config_path);
    if (opts.tau_override)
        cfg.ladder.latency_budget = parse_budget(*opts.tau_override);
    if (opts.scheme_override)
        cfg.ladder.scheme = ladre::parse_scheme(*opts.scheme_override);
    if (opts.encoder_override) {
        if (*opts.encoder_override == "mock")
            cfg.encoder.kind = ladre::EncoderAdapter::Kind::mock;
        else if (*opts.encoder_override == "external")
            cfg.encoder.kind = ladre::EncoderAdapter::Kind::external;
        else
            ladre::fail(ladre::ErrorKind::validation,
                        "--encoder must be mock or external, got '" + *opts.encoder_override + "'");
        cfg.encoder.validate();
    }
    if (opts.workers_override)
        cfg.workers = *opts.workers_override;
    if (opts.seed_override) {
        cfg.seed = *opts.seed_override;
        cfg.forest.seed = cfg.seed;
    }
    return cfg;
}

std::vector<ladre::Segment> load_corpus(const ladre::RunConfig& cfg) {
    ladre::require(!cfg.corpus_manifest.empty(), ladre::ErrorKind::validation,
                   "config has no corpus_manifest");
    std::vector<ladre::Segment> corpus;
    for (const ladre::CorpusEntry& e : ladre::load_manifest(cfg.corpus_manifest))
        corpus.push_back(ladre::load_corpus_segment(e));
    return corpus;
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed) {
    const std::string manifest = ladre::write_corpus(out_dir, seed);
    std::cout << "wrote corpus manifest " << manifest << "\n";
    return 0;
}

int cmd_features(const GlobalOptions& opts, const std::string& out_path) {
    const ladre::RunConfig cfg = load_run_config(opts);
    const std::vector<ladre::Segment> corpus = load_corpus(cfg);
    const ladre::FeatureStage stage =
        ladre::run_feature_stage(corpus, cfg.feature_block_size, cfg.workers);
    const std::string path =
        out_path.empty() ? (std::filesystem::path(cfg.output_dir) / "features.csv").string()
                         : out_path;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    ladre::write_features_csv(stage.records, path);
    std::cout << "wrote " << path << " (" << stage.records.size() << " segments, "
              << ladre::detail::format_bitrate(stage.mean_fps) << " fps extraction)\n";
    return 0;
}

struct TrainFlags {
    std::optional<int> trees, max_depth, min_leaf, feature_subsample;
    bool no_bootstrap = false;
};

int cmd_train(const GlobalOptions& opts, const std::string& model_out, const TrainFlags& flags) {
    ladre::RunConfig cfg = load_run_config(opts);
    if (flags.trees)
        cfg.forest.tree_count = *flags.trees;
    if (flags.max_depth)
        cfg.forest.max_depth = *flags.max_depth;
    if (flags.min_leaf)
        cfg.forest.min_leaf = *flags.min_leaf;
    if (flags.feature_subsample)
        cfg.forest.feature_subsample = *flags.feature_subsample;
    if (flags.no_bootstrap)
        cfg.forest.bootstrap = false;
    const std::vector<ladre::Segment> corpus = load_corpus(cfg);
    ladre::RunLog log((std::filesystem::path(cfg.output_dir) / "run.log").string());
    ladre::TrainingTables tables;
    ladre::ModelSet models = ladre::run_train_stage(corpus, cfg, &tables, &log);
    const std::string path = !model_out.empty()
                                 ? model_out
                                 : (cfg.model_path.empty()
                                        ? (std::filesystem::path(cfg.output_dir) / "models.json").string()
                                        : cfg.model_path);
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    ladre::save_models(models, path);
    const std::string tables_path =
        (std::filesystem::path(cfg.output_dir) / "training_table.csv").string();
    std::filesystem::create_directories(std::filesystem::path(tables_path).parent_path());
    ladre::write_training_csv(tables, tables_path);
    std::printf("wrote %s (holdout MAE: %.3f s, %.3f qp, %.3f dB; %d grid cells skipped)\n",
                path.c_str(), models.mae.time_seconds, models.mae.rate_factor,
                models.mae.quality_db, tables.skipped);
    return 0;
}

int cmd_ladder(const GlobalOptions& opts, const std::string& model_path,
               const std::string& features_path, const std::string& out_path) {
    const ladre::RunConfig cfg = load_run_config(opts);
    const std::string models_file =
        model_path.empty()
            ? (cfg.model_path.empty()
                   ? (std::filesystem::path(cfg.output_dir) / "models.json").string()
                   : cfg.model_path)
            : model_path;
    ladre::require(std::filesystem::exists(models_file), ladre::ErrorKind::validation,
                   "model file does not exist: " + models_file);
    const ladre::ModelSet models = ladre::load_models(models_file);
    models.validate_against(cfg.ladder);

    const std::string feat_file =
        features_path.empty()
            ? (std::filesystem::path(cfg.output_dir) / "features.csv").string()
            : features_path;
    ladre::require(std::filesystem::exists(feat_file), ladre::ErrorKind::validation,
                   "features file does not exist: " + feat_file);
    const std::vector<ladre::FeatureRecord> features = ladre::read_features_csv(feat_file);

    const std::vector<ladre::LadderPlan> plans =
        ladre::run_plan_stage(features, models, cfg.ladder);
    nlohmann::json plans_json = nlohmann::json::array();
    for (const ladre::LadderPlan& p : plans)
        plans_json.push_back(ladre::plan_to_json(p));
    const std::string label = ladre::run_label(cfg.ladder.scheme, cfg.ladder.latency_budget);
    const std::string path =
        out_path.empty()
            ? (std::filesystem::path(cfg.output_dir) / ("plans_" + label + ".json")).string()
            : out_path;
    ladre::write_json(
        nlohmann::json{{"schema_version", ladre::kArtifactSchemaVersion},
                       {"scheme", ladre::scheme_name(cfg.ladder.scheme)},
                       {"tau_l", ladre::budget_label(cfg.ladder.scheme, cfg.ladder.latency_budget)},
                       {"plans", std::move(plans_json)}},
        path);
    std::cout << "wrote " << path << " (" << plans.size() << " plans)\n";
    return 0;
}

int cmd_encode(const GlobalOptions& opts, const std::string& plans_path,
               const std::string& out_path) {
    const ladre::RunConfig cfg = load_run_config(opts);
    ladre::require(std::filesystem::exists(plans_path), ladre::ErrorKind::validation,
                   "plans file does not exist: " + plans_path);
    const nlohmann::json pj = ladre::read_json(plans_path);
    ladre::check_schema_version(pj, "plans file");
    const ladre::Scheme scheme = ladre::parse_scheme(pj.at("scheme").get<std::string>());
    const std::string tau = pj.at("tau_l").get<std::string>();
    const ladre::LatencyBudget budget =
        (tau == "-" || tau == "inf") ? ladre::LatencyBudget::infinite() : parse_budget(tau);

    std::vector<ladre::LadderPlan> plans;
    for (const auto& j : pj.at("plans"))
        plans.push_back(ladre::plan_from_json(j));

    const std::vector<ladre::Segment> corpus = load_corpus(cfg);
    const ladre::FeatureStage stage =
        ladre::run_feature_stage(corpus, cfg.feature_block_size, cfg.workers);
    const ladre::EncodeStage encoded =
        ladre::run_encode_stage(plans, corpus, stage.records, cfg, scheme, budget);
    const std::string path =
        out_path.empty()
            ? (std::filesystem::path(cfg.output_dir) /
               ("run_" + ladre::run_label(scheme, budget) + ".json"))
                  .string()
            : out_path;
    ladre::write_json(ladre::run_manifest_to_json(encoded.manifest), path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_measure_files(const std::string& reference, const std::string& ref_res,
                      const std::string& distorted, const std::string& dist_res, double fps,
                      const std::string& out_path) {
    ladre::require(std::filesystem::exists(reference), ladre::ErrorKind::validation,
                   "reference file does not exist: " + reference);
    ladre::require(std::filesystem::exists(distorted), ladre::ErrorKind::validation,
                   "distorted file does not exist: " + distorted);
    const ladre::Segment ref =
        ladre::read_yuv420(reference, ladre::parse_resolution(ref_res), fps);
    const ladre::Segment dis =
        ladre::read_yuv420(distorted, ladre::parse_resolution(dist_res), fps);
    const ladre::QualityScore score = ladre::quality_vs_source(ref, dis);
    const nlohmann::json j{{"psnr", score.psnr}, {"xpsnr", score.xpsnr}};
    if (!out_path.empty())
        ladre::write_json(j, out_path);
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_measure_run(const GlobalOptions& opts, const std::string& run_path,
                    const std::string& out_path) {
    const ladre::RunConfig cfg = load_run_config(opts);
    ladre::require(std::filesystem::exists(run_path), ladre::ErrorKind::validation,
                   "run manifest does not exist: " + run_path);
    const ladre::RunManifest manifest =
        ladre::run_manifest_from_json(ladre::read_json(run_path));
    const std::vector<ladre::Segment> corpus = load_corpus(cfg);
    const ladre::SchemeRun quality = ladre::run_measure_stage(manifest, corpus, cfg);
    const std::string path =
        out_path.empty()
            ? (std::filesystem::path(cfg.output_dir) /
               ("quality_" + manifest.scheme_label + ".json"))
                  .string()
            : out_path;
    ladre::write_json(ladre::scheme_run_to_json(quality), path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& quality_paths, const std::string& baseline,
                 double tau_p, const std::string& out_dir) {
    std::vector<ladre::SchemeRun> runs;
    for (const std::string& p : quality_paths) {
        ladre::require(std::filesystem::exists(p), ladre::ErrorKind::validation,
                       "quality file does not exist: " + p);
        runs.push_back(ladre::scheme_run_from_json(ladre::read_json(p)));
    }
    const ladre::EvaluationReport report = ladre::compare_schemes(runs, baseline, tau_p);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        ladre::write_json(ladre::report_to_json(report),
                          (std::filesystem::path(out_dir) / "report.json").string());
        std::ofstream txt((std::filesystem::path(out_dir) / "report.txt").string(),
                          std::ios::trunc);
        txt << ladre::render_report_table(report);
    }
    std::cout << ladre::render_report_table(report);
    return 0;
}

int cmd_report(const std::vector<std::string>& quality_paths, const std::string& out_dir,
               bool plot_data) {
    ladre::require(plot_data, ladre::ErrorKind::validation,
                   "report currently only supports --plot-data");
    std::filesystem::create_directories(out_dir);
    int files = 0;
    for (const std::string& p : quality_paths) {
        ladre::require(std::filesystem::exists(p), ladre::ErrorKind::validation,
                       "quality file does not exist: " + p);
        const ladre::SchemeRun run = ladre::scheme_run_from_json(ladre::read_json(p));
        for (const ladre::SegmentRun& seg : run.segments) {
            const std::string path =
                (std::filesystem::path(out_dir) / (run.label + "_" + seg.segment_id + "_rd.csv"))
                    .string();
            std::ofstream out(path, std::ios::trunc);
            out << "bitrate_mbps,psnr,xpsnr,encode_seconds\n";
            for (const ladre::MeasuredRung& r : seg.rungs)
                out << ladre::format_double(r.bitrate_mbps) << ',' << ladre::format_double(r.psnr_db)
                    << ',' << ladre::format_double(r.xpsnr_db) << ','
                    << ladre::format_double(r.seconds) << '\n';
            ++files;
        }
    }
    std::cout << "wrote " << files << " RD CSV files to " << out_dir << "\n";
    return 0;
}

int cmd_pipeline(const GlobalOptions& opts) {
    const ladre::RunConfig cfg = load_run_config(opts);
    ladre::RunLog log((std::filesystem::path(cfg.output_dir) / "run.log").string());
    const ladre::PipelineOutcome outcome = ladre::run_pipeline(cfg, &log);
    std::cout << ladre::render_report_table(outcome.report);
    std::cout << "artifacts in " << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-title encoding ladder toolkit"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_flag("--json", opts.json_errors, "emit machine-readable errors on stderr");

    const auto add_common = [&opts](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "run configuration file");
        cmd->add_option("--tau-l", [&opts](const std::vector<std::string>& v) {
            opts.tau_override = v.front();
            return true;
        }, "latency budget override (seconds or 'inf')");
        cmd->add_option("--scheme", [&opts](const std::vector<std::string>& v) {
            opts.scheme_override = v.front();
            return true;
        }, "scheme override (default|opte|ladre)");
        cmd->add_option("--encoder", [&opts](const std::vector<std::string>& v) {
            opts.encoder_override = v.front();
            return true;
        }, "encoder override (mock|external)");
        cmd->add_option("--workers", [&opts](const std::vector<std::string>& v) {
            opts.workers_override = std::stoi(v.front());
            return true;
        }, "worker count override");
        cmd->add_option("--seed", [&opts](const std::vector<std::string>& v) {
            opts.seed_override = std::stoull(v.front());
            return true;
        }, "seed override");
    };

    // synth
    auto* synth = app.add_subcommand("synth", "write the bundled synthetic corpus");
    std::string synth_dir = "corpus";
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_dir, "output directory");
    synth->add_option("--seed", synth_seed, "generation seed");

    // features
    auto* features = app.add_subcommand("features", "extract complexity features to CSV");
    std::string features_out;
    features->add_option("--out", features_out, "output CSV path");
    add_common(features);

    // train
    auto* train = app.add_subcommand("train", "build training tables and train models");
    std::string train_model_out;
    TrainFlags train_flags;
    train->add_option("--model-out", train_model_out, "model JSON output path");
    train->add_option("--trees", [&train_flags](const std::vector<std::string>& v) {
        train_flags.trees = std::stoi(v.front());
        return true;
    }, "forest size override");
    train->add_option("--max-depth", [&train_flags](const std::vector<std::string>& v) {
        train_flags.max_depth = std::stoi(v.front());
        return true;
    }, "tree depth override");
    train->add_option("--min-leaf", [&train_flags](const std::vector<std::string>& v) {
        train_flags.min_leaf = std::stoi(v.front());
        return true;
    }, "minimum leaf size override");
    train->add_option("--mtry", [&train_flags](const std::vector<std::string>& v) {
        train_flags.feature_subsample = std::stoi(v.front());
        return true;
    }, "candidate features per split (0 = sqrt rule)");
    train->add_flag("--no-bootstrap", train_flags.no_bootstrap, "train each tree on the full sample");
    add_common(train);

    // ladder
    auto* ladder = app.add_subcommand("ladder", "build per-segment ladder plans");
    std::string ladder_model, ladder_features, ladder_out;
    ladder->add_option("--model", ladder_model, "model JSON path");
    ladder->add_option("--features", ladder_features, "features CSV path");
    ladder->add_option("--out", ladder_out, "plans JSON output path");
    add_common(ladder);

    // encode
    auto* encode = app.add_subcommand("encode", "execute ladder plans");
    std::string encode_plans, encode_out;
    encode->add_option("--plans", encode_plans, "plans JSON path")->required();
    encode->add_option("--out", encode_out, "run manifest output path");
    add_common(encode);

    // measure
    auto* measure = app.add_subcommand("measure", "measure quality (file pair or run manifest)");
    std::string m_ref, m_ref_res, m_dist, m_dist_res, m_run, m_out;
    double m_fps = 24.0;
    measure->add_option("--reference", m_ref, "reference YUV path");
    measure->add_option("--reference-res", m_ref_res, "reference resolution (WxH or 1080p)");
    measure->add_option("--distorted", m_dist, "distorted YUV path");
    measure->add_option("--distorted-res", m_dist_res, "distorted resolution");
    measure->add_option("--fps", m_fps, "framerate");
    measure->add_option("--run", m_run, "run manifest to measure");
    measure->add_option("--out", m_out, "output path");
    add_common(measure);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "compare schemes against a baseline");
    std::vector<std::string> eval_quality;
    std::string eval_baseline = "default", eval_out;
    double eval_tau_p = 0.0;
    evaluate->add_option("--quality", eval_quality, "quality JSON files")->required();
    evaluate->add_option("--baseline", eval_baseline, "baseline scheme label");
    evaluate->add_option("--tau-p", eval_tau_p, "pre-processing latency to report (s)");
    evaluate->add_option("--out-dir", eval_out, "where to write report.json/report.txt");

    // report
    auto* report = app.add_subcommand("report", "emit per-segment RD-curve CSVs");
    std::vector<std::string> report_quality;
    std::string report_dir = "rd_csv";
    bool report_plot = false;
    report->add_option("--quality", report_quality, "quality JSON files")->required();
    report->add_option("--out-dir", report_dir, "output directory");
    report->add_flag("--plot-data", report_plot, "emit RD-curve CSV files");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run the whole chain over the latency sweep");
    add_common(pipeline);

    try {
        app.parse(argc, argv);
        if (synth->parsed())
            return cmd_synth(synth_dir, synth_seed);
        if (features->parsed())
            return cmd_features(opts, features_out);
        if (train->parsed())
            return cmd_train(opts, train_model_out);
        if (ladder->parsed())
            return cmd_ladder(opts, ladder_model, ladder_features, ladder_out);
        if (encode->parsed())
            return cmd_encode(opts, encode_plans, encode_out);
        if (measure->parsed()) {
            if (!m_run.empty())
                return cmd_measure_run(opts, m_run, m_out);
            ladre::require(!m_ref.empty() && !m_dist.empty() && !m_ref_res.empty() &&
                               !m_dist_res.empty(),
                           ladre::ErrorKind::validation,
                           "measure needs either --run or all of --reference/--reference-res/"
                           "--distorted/--distorted-res");
            return cmd_measure_files(m_ref, m_ref_res, m_dist, m_dist_res, m_fps, m_out);
        }
        if (evaluate->parsed())
            return cmd_evaluate(eval_quality, eval_baseline, eval_tau_p, eval_out);
        if (report->parsed())
            return cmd_report(report_quality, report_dir, report_plot);
        if (pipeline->parsed())
            return cmd_pipeline(opts);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ladre::Error& e) {
        const bool is_validation = e.kind() == ladre::ErrorKind::validation;
        if (opts.json_errors) {
            const nlohmann::json j{
                {"error",
                 {{"kind", is_validation ? "validation" : "runtime"}, {"message", e.what()}}}};
            std::cerr << j.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return is_validation ? 1 : 2;
    } catch (const std::exception& e) {
        if (opts.json_errors)
            std::cerr << nlohmann::json{{"error", {{"kind", "runtime"}, {"message", e.what()}}}}.dump()
                      << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
