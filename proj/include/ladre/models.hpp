#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladre/common.hpp"
#include "ladre/complexity.hpp"
#include "ladre/csv.hpp"
#include "ladre/forest.hpp"
#include "ladre/ladder.hpp"
#include "ladre/metrics.hpp"
#include "ladre/orchestrator.hpp"

namespace ladre {

constexpr int kModelSchemaVersion = 1;
constexpr int kPredictorDims = 8;  // seven complexity features + target bitrate

// Model input layout shared by all three families.
inline std::array<double, kPredictorDims> predictor_input(const SegmentFeatures& f,
                                                          double bitrate_mbps) {
    return {f.e_y, f.h, f.l_y, f.e_u, f.l_u, f.e_v, f.l_v, bitrate_mbps};
}

enum class LabelKind { quality_db, time_seconds, rate_factor };

inline const char* label_kind_name(LabelKind k) {
    switch (k) {
        case LabelKind::quality_db: return "quality_db";
        case LabelKind::time_seconds: return "time_seconds";
        case LabelKind::rate_factor: return "rate_factor";
    }
    return "?";
}

struct TrainingRow {
    std::string segment_id;
    SegmentFeatures features;
    Resolution resolution;
    double bitrate_mbps = 0.0;
    double label = 0.0;
};

struct TrainingTable {
    LabelKind kind = LabelKind::quality_db;
    std::vector<TrainingRow> rows;
};

struct TrainingTables {
    TrainingTable quality{LabelKind::quality_db, {}};
    TrainingTable time{LabelKind::time_seconds, {}};
    TrainingTable rate_factor{LabelKind::rate_factor, {}};
    int skipped = 0;  // encoder failures, reported not fatal
    std::vector<std::string> warnings;
};

struct ResolutionModels {
    RegressionForest quality;
    RegressionForest time;
    RegressionForest rate_factor;
};

struct ModelMae {
    double quality_db = std::numeric_limits<double>::quiet_NaN();
    double time_seconds = std::numeric_limits<double>::quiet_NaN();
    double rate_factor = std::numeric_limits<double>::quiet_NaN();
};

class ModelSet {
public:
    void add(const Resolution& r, ResolutionModels models) {
        per_resolution_.emplace_back(r, std::move(models));
    }

    const ResolutionModels* find(const Resolution& r) const {
        for (const auto& [res, m] : per_resolution_)
            if (res == r)
                return &m;
        return nullptr;
    }

    const ResolutionModels& at(const Resolution& r) const {
        const ResolutionModels* m = find(r);
        if (!m)
            fail(ErrorKind::validation, "no trained models for resolution " + r.label + " (" +
                                            std::to_string(r.width) + "x" +
                                            std::to_string(r.height) + ")");
        return *m;
    }

    double predict_quality_db(const Resolution& r, const SegmentFeatures& f, double bitrate) const {
        const auto in = predictor_input(f, bitrate);
        return std::max(0.0, at(r).quality.predict(in));
    }

    double predict_time_seconds(const Resolution& r, const SegmentFeatures& f, double bitrate) const {
        const auto in = predictor_input(f, bitrate);
        return std::max(0.0, at(r).time.predict(in));
    }

    double predict_rate_factor(const Resolution& r, const SegmentFeatures& f, double bitrate) const {
        const auto in = predictor_input(f, bitrate);
        return at(r).rate_factor.predict(in);
    }

    // Every resolution in the ladder must have all three models.
    void validate_against(const LadderConfig& config) const {
        std::string missing;
        for (const Resolution& r : config.resolutions)
            if (!find(r))
                missing += (missing.empty() ? "" : ", ") + r.label;
        if (!missing.empty())
            fail(ErrorKind::validation, "model set is missing resolutions: " + missing);
    }

    const std::vector<std::pair<Resolution, ResolutionModels>>& entries() const {
        return per_resolution_;
    }

    std::string corpus_id;
    ModelMae mae;

private:
    std::vector<std::pair<Resolution, ResolutionModels>> per_resolution_;
};

namespace detail {

// Grid measurements for one (segment, resolution): achieved bitrate, measured
// quality and wall time per calibration rate factor.
struct CalibrationPoint {
    int rate_factor = 0;
    double bitrate_mbps = 0.0;
    double xpsnr_db = 0.0;
    double seconds = 0.0;
};

// Rate-factor label: the grid point whose achieved bitrate is closest to the
// target, ties broken toward the larger rate factor (the lower bitrate).
inline const CalibrationPoint& closest_point(const std::vector<CalibrationPoint>& grid,
                                             double target_mbps) {
    const CalibrationPoint* best = &grid.front();
    double best_d = std::fabs(best->bitrate_mbps - target_mbps);
    for (const CalibrationPoint& p : grid) {
        const double d = std::fabs(p.bitrate_mbps - target_mbps);
        if (d < best_d || (d == best_d && p.rate_factor > best->rate_factor)) {
            best = &p;
            best_d = d;
        }
    }
    return *best;
}

}  // namespace detail

// Builds the three label tables by sweeping the calibration grid. Mock
// encodes come from the synthetic RD model; quality is always measured
// against the source with the metrics module, never copied from the model.
// External adapters need a decode_template so the encoded stream can be
// measured; grid points whose encode or decode fails are skipped and counted.
inline TrainingTables build_training_table(const std::vector<Segment>& corpus,
                                           const LadderConfig& config,
                                           const EncoderAdapter& adapter, int workers = 1,
                                           int feature_block_size = kDefaultFeatureBlockSize) {
    require(!corpus.empty(), ErrorKind::validation, "training corpus is empty");
    config.validate();
    adapter.validate();

    const std::vector<int> grid = config.calibration_grid();
    struct Cell {
        std::vector<detail::CalibrationPoint> points;
        SegmentFeatures features;
        std::string error;
    };
    const std::size_t nres = config.resolutions.size();
    std::vector<Cell> cells(corpus.size() * nres);

    std::vector<SegmentFeatures> features(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t si) {
        features[si] = extract_features(corpus[si], feature_block_size);
    });

    parallel_for(cells.size(), workers, [&](std::size_t cell_idx) {
        const std::size_t si = cell_idx / nres;
        const Resolution& r = config.resolutions[cell_idx % nres];
        const Segment& segment = corpus[si];
        Cell& cell = cells[cell_idx];
        cell.features = features[si];
        try {
            SegmentContext ctx = make_context(segment, cell.features);
            if (adapter.kind == EncoderAdapter::Kind::mock) {
                // The noiseless round trip is shared by every grid point.
                const Segment base = mock_round_trip(segment, r);
                for (int c : grid) {
                    detail::CalibrationPoint p;
                    p.rate_factor = c;
                    p.bitrate_mbps = MockRdModel::bitrate_mbps(r, c, cell.features);
                    p.seconds = MockRdModel::encode_seconds(r, segment.frame_count(), cell.features);
                    Segment decoded = base;
                    apply_mock_noise(decoded, segment.source_id, r, c, config.rate_factor_min);
                    p.xpsnr_db = xpsnr(segment, decoded);
                    cell.points.push_back(p);
                }
            } else {
                require(!adapter.decode_template.empty(), ErrorKind::validation,
                        "external training needs a decode_template to measure quality");
                for (int c : grid) {
                    Representation rep;
                    rep.bitrate_mbps = config.bitrates_mbps.back();  // cap, not a target here
                    rep.resolution = r;
                    rep.rate_factor = c;
                    LadderPlan probe;
                    probe.segment_id = segment.source_id;
                    probe.budget = config.latency_budget;
                    probe.rungs = {rep};
                    const PlanExecution exec = execute_plan(probe, ctx, adapter, 1, "ladre_calibration");
                    const EncodeResult& enc = exec.results.front();
                    if (!enc.ok)
                        continue;
                    const std::string decoded_path = enc.output_path + ".dec.yuv";
                    std::string cmd = adapter.decode_template;
                    detail::replace_all(cmd, "{input}", enc.output_path);
                    detail::replace_all(cmd, "{output}", decoded_path);
                    detail::replace_all(cmd, "{width}", std::to_string(r.width));
                    detail::replace_all(cmd, "{height}", std::to_string(r.height));
                    detail::replace_all(cmd, "{fps}", detail::format_bitrate(segment.fps));
                    const auto dec = detail::run_command(cmd, std::nullopt);
                    if (dec.exit_status != 0)
                        continue;
                    const Segment decoded = read_yuv420(decoded_path, r, segment.fps);
                    detail::CalibrationPoint p;
                    p.rate_factor = c;
                    p.bitrate_mbps = enc.bitrate_mbps;
                    p.seconds = enc.wall_seconds;
                    p.xpsnr_db = quality_vs_source(segment, decoded).xpsnr;
                    cell.points.push_back(p);
                }
            }
        } catch (const Error& e) {
            cell.error = e.what();
        }
    });

    TrainingTables tables;
    for (std::size_t si = 0; si < corpus.size(); ++si) {
        for (std::size_t ri = 0; ri < nres; ++ri) {
            const Cell& cell = cells[si * nres + ri];
            const Resolution& r = config.resolutions[ri];
            if (!cell.error.empty() || cell.points.empty()) {
                ++tables.skipped;
                tables.warnings.push_back("segment '" + corpus[si].source_id + "' at " + r.label +
                                          ": " +
                                          (cell.error.empty() ? "no usable grid points" : cell.error));
                continue;
            }
            for (double b_t : config.bitrates_mbps) {
                const auto& p = detail::closest_point(cell.points, b_t);
                TrainingRow row{corpus[si].source_id, cell.features, r, b_t, 0.0};
                row.label = p.xpsnr_db;
                tables.quality.rows.push_back(row);
                row.label = p.seconds;
                tables.time.rows.push_back(row);
                row.label = static_cast<double>(p.rate_factor);
                tables.rate_factor.rows.push_back(row);
            }
        }
    }
    return tables;
}

// Trains one forest per (resolution, label family) on the rows for that
// resolution.
inline ModelSet train_models(const TrainingTables& tables, const LadderConfig& config,
                             const ForestHyper& hyper, int workers = 1) {
    ModelSet models;
    const auto train_family = [&](const TrainingTable& table, const Resolution& r,
                                  std::uint64_t salt) {
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (const TrainingRow& row : table.rows) {
            if (!(row.resolution == r))
                continue;
            const auto in = predictor_input(row.features, row.bitrate_mbps);
            x.emplace_back(in.begin(), in.end());
            y.push_back(row.label);
        }
        require(!x.empty(), ErrorKind::validation,
                std::string("no training rows for resolution ") + r.label + " in table " +
                    label_kind_name(table.kind));
        ForestHyper h = hyper;
        h.seed = hash_mix(hyper.seed, hash_mix(hash_string(r.label), salt));
        return RegressionForest::train(x, y, h, workers);
    };

    for (const Resolution& r : config.resolutions) {
        ResolutionModels rm;
        rm.quality = train_family(tables.quality, r, 1);
        rm.time = train_family(tables.time, r, 2);
        rm.rate_factor = train_family(tables.rate_factor, r, 3);
        models.add(r, std::move(rm));
    }
    return models;
}

// Mean absolute error per model family over holdout tables.
inline ModelMae evaluate_mae(const ModelSet& models, const TrainingTables& holdout) {
    const auto family_mae = [&](const TrainingTable& table, LabelKind kind) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const TrainingRow& row : table.rows) {
            const auto in = predictor_input(row.features, row.bitrate_mbps);
            const ResolutionModels& rm = models.at(row.resolution);
            double pred = 0.0;
            switch (kind) {
                case LabelKind::quality_db: pred = rm.quality.predict(in); break;
                case LabelKind::time_seconds: pred = rm.time.predict(in); break;
                case LabelKind::rate_factor: pred = rm.rate_factor.predict(in); break;
            }
            sum += std::fabs(pred - row.label);
            ++n;
        }
        return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    };
    ModelMae mae;
    mae.quality_db = family_mae(holdout.quality, LabelKind::quality_db);
    mae.time_seconds = family_mae(holdout.time, LabelKind::time_seconds);
    mae.rate_factor = family_mae(holdout.rate_factor, LabelKind::rate_factor);
    return mae;
}

inline nlohmann::json models_to_json(const ModelSet& models) {
    nlohmann::json resolutions = nlohmann::json::array();
    for (const auto& [r, rm] : models.entries()) {
        resolutions.push_back({{"width", r.width},
                               {"height", r.height},
                               {"label", r.label},
                               {"quality", rm.quality.to_json()},
                               {"time", rm.time.to_json()},
                               {"rate_factor", rm.rate_factor.to_json()}});
    }
    nlohmann::json j{{"schema_version", kModelSchemaVersion},
                     {"corpus_id", models.corpus_id},
                     {"resolutions", std::move(resolutions)}};
    if (std::isfinite(models.mae.quality_db))
        j["mae"] = {{"quality_db", models.mae.quality_db},
                    {"time_seconds", models.mae.time_seconds},
                    {"rate_factor", models.mae.rate_factor}};
    return j;
}

inline ModelSet models_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("schema_version"))
        fail(ErrorKind::validation, "model file has no schema_version field");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
        fail(ErrorKind::validation,
             "model schema version mismatch: file has " + std::to_string(version) +
                 ", this build expects " + std::to_string(kModelSchemaVersion));
    try {
        ModelSet models;
        models.corpus_id = j.value("corpus_id", "");
        if (j.contains("mae")) {
            models.mae.quality_db = j["mae"].value("quality_db", 0.0);
            models.mae.time_seconds = j["mae"].value("time_seconds", 0.0);
            models.mae.rate_factor = j["mae"].value("rate_factor", 0.0);
        }
        for (const auto& rj : j.at("resolutions")) {
            const Resolution r = make_resolution(rj.at("width").get<int>(),
                                                 rj.at("height").get<int>(),
                                                 rj.value("label", ""));
            ResolutionModels rm;
            rm.quality = RegressionForest::from_json(rj.at("quality"));
            rm.time = RegressionForest::from_json(rj.at("time"));
            rm.rate_factor = RegressionForest::from_json(rj.at("rate_factor"));
            models.add(r, std::move(rm));
        }
        return models;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed model file: ") + e.what());
    }
}

inline void save_models(const ModelSet& models, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << models_to_json(models).dump(1, '\t') << '\n';
    if (!out)
        fail(ErrorKind::io, "short write to '" + path + "'");
}

inline ModelSet load_models(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, "model file '" + path + "' is not valid JSON: " + e.what());
    }
    return models_from_json(j);
}

// Splits tables by segment id. Whole segments go to the holdout side so the
// MAE estimate never sees rows from a training segment.
inline std::pair<TrainingTables, TrainingTables> split_tables_by_segment(
    const TrainingTables& tables, double holdout_fraction, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const TrainingRow& row : tables.quality.rows)
        if (std::find(ids.begin(), ids.end(), row.segment_id) == ids.end())
            ids.push_back(row.segment_id);
    std::sort(ids.begin(), ids.end());

    Rng rng(hash_mix(seed, 0x5b1d0ULL));
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.below(i)]);
    const std::size_t n_holdout =
        static_cast<std::size_t>(static_cast<double>(ids.size()) * holdout_fraction);
    std::vector<std::string> holdout_ids(ids.begin(), ids.begin() + n_holdout);

    const auto is_holdout = [&](const std::string& id) {
        return std::find(holdout_ids.begin(), holdout_ids.end(), id) != holdout_ids.end();
    };
    std::pair<TrainingTables, TrainingTables> out;  // (train, holdout)
    const auto split = [&](const TrainingTable& src, TrainingTable& train, TrainingTable& hold) {
        train.kind = hold.kind = src.kind;
        for (const TrainingRow& row : src.rows)
            (is_holdout(row.segment_id) ? hold : train).rows.push_back(row);
    };
    split(tables.quality, out.first.quality, out.second.quality);
    split(tables.time, out.first.time, out.second.time);
    split(tables.rate_factor, out.first.rate_factor, out.second.rate_factor);
    return out;
}

// Training-table CSV: one file, all three label kinds stacked.
inline void write_training_csv(const TrainingTables& tables, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << "segment,width,height,resolution,bitrate_mbps,kind,label,e_y,h,l_y,e_u,l_u,e_v,l_v\n";
    const auto dump = [&](const TrainingTable& table) {
        for (const TrainingRow& r : table.rows) {
            out << csv_field(r.segment_id) << ',' << r.resolution.width << ','
                << r.resolution.height << ',' << csv_field(r.resolution.label) << ','
                << format_double(r.bitrate_mbps) << ',' << label_kind_name(table.kind) << ','
                << format_double(r.label);
            for (double v : r.features.as_array())
                out << ',' << format_double(v);
            out << '\n';
        }
    };
    dump(tables.quality);
    dump(tables.time);
    dump(tables.rate_factor);
}

inline TrainingTables read_training_csv(const std::string& path) {
    TrainingTables tables;
    for (const auto& row : read_csv(path)) {
        require(row.size() == 14, ErrorKind::validation,
                "training CSV row has " + std::to_string(row.size()) + " fields, expected 14");
        TrainingRow r;
        r.segment_id = row[0];
        r.resolution = make_resolution(std::stoi(row[1]), std::stoi(row[2]), row[3]);
        r.bitrate_mbps = std::stod(row[4]);
        r.label = std::stod(row[6]);
        const auto f = &r.features;
        f->e_y = std::stod(row[7]);
        f->h = std::stod(row[8]);
        f->l_y = std::stod(row[9]);
        f->e_u = std::stod(row[10]);
        f->l_u = std::stod(row[11]);
        f->e_v = std::stod(row[12]);
        f->l_v = std::stod(row[13]);
        const std::string kind = row[5];
        if (kind == "quality_db")
            tables.quality.rows.push_back(std::move(r));
        else if (kind == "time_seconds")
            tables.time.rows.push_back(std::move(r));
        else if (kind == "rate_factor")
            tables.rate_factor.rows.push_back(std::move(r));
        else
            fail(ErrorKind::validation, "unknown training label kind '" + kind + "'");
    }
    return tables;
}

}  // namespace ladre
