// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Everything runs against the bundled synthetic corpus and
// the mock encoder; no external binaries are involved.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ladre/bd.hpp"
#include "ladre/complexity.hpp"
#include "ladre/metrics.hpp"
#include "ladre/models.hpp"
#include "ladre/optimizer.hpp"
#include "ladre/orchestrator.hpp"
#include "ladre/synth.hpp"

using namespace ladre;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    if (!pass)
        ++failures;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

LadderConfig desk_config() {
    LadderConfig cfg;
    cfg.resolutions = {make_resolution(32, 18),  make_resolution(48, 28),
                       make_resolution(72, 40),  make_resolution(108, 60),
                       make_resolution(160, 90), make_resolution(240, 136)};
    cfg.bitrates_mbps = {1.8125e-5, 3.75e-5,  7.5e-5,  1.125e-4,  2e-4,    3e-4,
                         4.25e-4,   5.625e-4, 7.25e-4, 1.0125e-3, 1.45e-3, 2.1e-3};
    cfg.rate_factor_min = 17;
    cfg.rate_factor_max = 51;
    cfg.scheme = Scheme::ladre;
    return cfg;
}

SegmentFeatures random_features(Rng& rng) {
    SegmentFeatures f;
    f.e_y = rng.unit() * 0.1;
    f.h = rng.unit() * 0.01;
    f.l_y = 40.0 + rng.unit() * 45.0;
    f.e_u = rng.unit() * 0.05;
    f.l_u = 40.0 + rng.unit() * 40.0;
    f.e_v = rng.unit() * 0.05;
    f.l_v = 40.0 + rng.unit() * 40.0;
    return f;
}

// ---- independent BD oracle (separate PCHIP code + dense midpoint grid) ----

struct OraclePchip {
    std::vector<double> x, y, d;

    OraclePchip(std::vector<double> xs, std::vector<double> ys)
        : x(std::move(xs)), y(std::move(ys)) {
        const std::size_t n = x.size();
        std::vector<double> h(n - 1), s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x[i + 1] - x[i];
            s[i] = (y[i + 1] - y[i]) / h[i];
        }
        d.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] * s[i] <= 0)
                continue;
            const double w1 = 2 * h[i] + h[i - 1];
            const double w2 = h[i] + 2 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
        d[0] = edge(h[0], h[1], s[0], s[1]);
        d[n - 1] = edge(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    }

    static double edge(double h0, double h1, double s0, double s1) {
        double e = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (e * s0 <= 0)
            return 0.0;
        if (s0 * s1 < 0 && std::fabs(e) > 3 * std::fabs(s0))
            return 3 * s0;
        return e;
    }

    double eval(double q) const {
        std::size_t i = 0;
        while (i + 2 < x.size() && q > x[i + 1])
            ++i;
        const double h = x[i + 1] - x[i];
        const double t = (q - x[i]) / h;
        return y[i] + (y[i + 1] - y[i]) * t * t * (3 - 2 * t) +
               h * t * (1 - t) * ((1 - t) * d[i] - t * d[i + 1]);
    }
};

double oracle_mean_diff(const OraclePchip& r, const OraclePchip& t, double lo, double hi) {
    const int samples = 200000;
    double acc = 0.0;
    const double step = (hi - lo) / samples;
    for (int i = 0; i < samples; ++i) {
        const double q = lo + (i + 0.5) * step;
        acc += t.eval(q) - r.eval(q);
    }
    return acc / samples;
}

RdCurve random_rd_curve(Rng& rng) {
    RdCurve c;
    c.metric = "xpsnr";
    double bitrate = 0.5 + 0.5 * rng.unit();
    double quality = 25.0 + rng.unit();
    const int n = 4 + static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
        c.points.push_back({bitrate, quality});
        bitrate *= 1.5 + rng.unit();
        quality += 1.0 + rng.unit() * 2.0;
    }
    return c;
}

double oracle_bd_quality(const RdCurve& ref, const RdCurve& test) {
    const auto build = [](const RdCurve& c) {
        std::vector<double> x, y;
        for (const RdPoint& p : c.points) {
            x.push_back(std::log10(p.bitrate_mbps));
            y.push_back(p.quality_db);
        }
        return OraclePchip(std::move(x), std::move(y));
    };
    const OraclePchip r = build(ref), t = build(test);
    return oracle_mean_diff(r, t, std::max(r.x.front(), t.x.front()),
                            std::min(r.x.back(), t.x.back()));
}

double oracle_bd_rate(const RdCurve& ref, const RdCurve& test) {
    const auto build = [](const RdCurve& c) {
        std::vector<double> x, y;
        for (const RdPoint& p : c.points) {
            x.push_back(p.quality_db);
            y.push_back(std::log10(p.bitrate_mbps));
        }
        return OraclePchip(std::move(x), std::move(y));
    };
    const OraclePchip r = build(ref), t = build(test);
    const double m = oracle_mean_diff(r, t, std::max(r.x.front(), t.x.front()),
                                      std::min(r.x.back(), t.x.back()));
    return 100.0 * (std::pow(10.0, m) - 1.0);
}

// ---- brute-force DCT oracle ----

double oracle_block_energy(const std::vector<double>& block, int b) {
    const double pi = std::acos(-1.0);
    double sum = 0.0;
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j) {
            if (i == 0 && j == 0)
                continue;
            double acc = 0.0;
            for (int m = 0; m < b; ++m)
                for (int n = 0; n < b; ++n)
                    acc += block[m * b + n] * std::cos(pi * (2 * m + 1) * i / (2.0 * b)) *
                           std::cos(pi * (2 * n + 1) * j / (2.0 * b));
            const double ai = i == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
            const double aj = j == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
            sum += std::exp(static_cast<double>(i) * j / (b * b) - 1.0) * std::fabs(ai * aj * acc);
        }
    return sum / (b * b * std::sqrt(static_cast<double>(b) * b));
}

Segment flat_segment(int w, int h, int frames, std::uint8_t value) {
    Segment seg;
    seg.source_id = "flat";
    seg.fps = 24.0;
    for (int i = 0; i < frames; ++i)
        seg.frames.push_back(make_frame(w, h, value));
    return seg;
}

}  // namespace

int main() {
    const int workers = 2;
    const LadderConfig desk = desk_config();
    const std::vector<Segment> corpus = bundled_corpus(7);

    // Trained models shared by several criteria; training time counts toward
    // the first criterion's budget.
    const double c1_start = now_seconds();
    std::vector<SegmentFeatures> corpus_features(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        corpus_features[i] = extract_features(corpus[i], 32, workers);
    const TrainingTables tables = build_training_table(corpus, desk, EncoderAdapter{}, workers);
    ForestHyper hyper;
    hyper.seed = 1;
    const ModelSet models = train_models(tables, desk, hyper, workers);

    // C1: ladre with an unbounded budget must produce plans identical to opte.
    {
        bool pass = true;
        std::string detail;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            LadderConfig ladre_cfg = desk;
            ladre_cfg.scheme = Scheme::ladre;
            ladre_cfg.latency_budget = LatencyBudget::infinite();
            LadderConfig opte_cfg = desk;
            opte_cfg.scheme = Scheme::opte;
            opte_cfg.latency_budget = LatencyBudget::finite(0.001);  // opte must ignore this
            const LadderPlan a =
                build_ladder(corpus[i].source_id, corpus_features[i], models, ladre_cfg);
            const LadderPlan b =
                build_ladder(corpus[i].source_id, corpus_features[i], models, opte_cfg);
            if (!(a == b) || a.rungs.size() != desk.bitrates_mbps.size()) {
                pass = false;
                detail = "plan mismatch for segment " + corpus[i].source_id;
                break;
            }
            for (std::size_t k = 0; k < a.rungs.size(); ++k)
                if (!(a.rungs[k].resolution == b.rungs[k].resolution) ||
                    a.rungs[k].rate_factor != b.rungs[k].rate_factor)
                    pass = false;
        }
        const double elapsed = now_seconds() - c1_start;
        if (elapsed >= 60.0)
            pass = false;
        if (pass) {
            char buf[120];
            std::snprintf(buf, sizeof(buf),
                          "ladre(inf) == opte on all 6 segments x 12 bitrates (train+plan %.1f s)",
                          elapsed);
            detail = buf;
        }
        report("C1 opte-convergence", pass, detail);
    }

    // C2 + C3: latency sweep monotonicity and constraint satisfaction over
    // 100 randomized mock segments.
    {
        const double start = now_seconds();
        Rng rng(2718281828ULL);
        std::vector<SegmentFeatures> suite(100);
        for (auto& f : suite)
            f = random_features(rng);

        const std::vector<LatencyBudget> sweep = {
            LatencyBudget::infinite(), LatencyBudget::finite(0.4), LatencyBudget::finite(0.2),
            LatencyBudget::finite(0.1), LatencyBudget::finite(0.05)};

        int monotonicity_violations = 0;
        int constraint_violations = 0;
        double prev_mean_latency = 0.0;
        double prev_total_time = 0.0;
        long prev_omitted = -1;
        bool first = true;

        for (const LatencyBudget& budget : sweep) {
            LadderConfig cfg = desk;
            cfg.latency_budget = budget;
            double latency_sum = 0.0;
            double total_time = 0.0;
            long omitted = 0;
            for (std::size_t si = 0; si < suite.size(); ++si) {
                const LadderPlan plan =
                    build_ladder("r" + std::to_string(si), suite[si], models, cfg);
                omitted += static_cast<long>(plan.omitted.size());
                for (const Representation& rep : plan.rungs)
                    if (!budget.allows(rep.predicted_seconds))
                        ++constraint_violations;
                SegmentContext ctx;
                ctx.id = "r" + std::to_string(si);
                ctx.features = suite[si];
                ctx.frame_count = 12;
                ctx.fps = 24.0;
                const PlanExecution exec = execute_plan(plan, ctx, EncoderAdapter{}, workers);
                latency_sum += exec.segment_latency_seconds;
                total_time += exec.total_seconds;
            }
            const double mean_latency = latency_sum / static_cast<double>(suite.size());
            if (!first) {
                if (mean_latency > prev_mean_latency + 1e-12)
                    ++monotonicity_violations;
                if (total_time > prev_total_time + 1e-9)
                    ++monotonicity_violations;
                if (omitted < prev_omitted)
                    ++monotonicity_violations;
            }
            prev_mean_latency = mean_latency;
            prev_total_time = total_time;
            prev_omitted = omitted;
            first = false;
        }
        const double elapsed = now_seconds() - start;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%d violations over 100 segments x 5 budgets (%.1f s)",
                      monotonicity_violations, elapsed);
        report("C2 latency-budget monotonicity", monotonicity_violations == 0 && elapsed < 300.0,
               buf);
        report("C3 constraint satisfaction", constraint_violations == 0,
               std::to_string(constraint_violations) +
                   " included representations above their budget");
    }

    // C4: BD against the independent dense-grid oracle.
    {
        Rng rng(424242);
        double worst_quality = 0.0, worst_rate = 0.0;
        for (int i = 0; i < 50; ++i) {
            const RdCurve a = random_rd_curve(rng);
            const RdCurve b = random_rd_curve(rng);
            worst_quality =
                std::max(worst_quality, std::fabs(bd_quality(a, b) - oracle_bd_quality(a, b)));
            worst_rate = std::max(worst_rate, std::fabs(bd_rate(a, b) - oracle_bd_rate(a, b)));
        }
        RdCurve base;
        base.metric = "xpsnr";
        base.points = {{0.5, 30.0}, {1.0, 33.0}, {2.0, 35.5}, {4.0, 37.0}};
        RdCurve shifted = base;
        for (RdPoint& p : shifted.points)
            p.quality_db += 1.0;
        const double self_q = std::fabs(bd_quality(base, base));
        const double self_r = std::fabs(bd_rate(base, base));
        const double plus_one = bd_quality(base, shifted);
        const bool pass = worst_quality < 0.01 && worst_rate < 0.1 && self_q < 1e-9 &&
                          self_r < 1e-9 && std::fabs(plus_one - 1.0) < 1e-6;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "max |dq|=%.2e dB, max |dr|=%.2e pp over 50 pairs; self=%.1e; +1dB=%.9f",
                      worst_quality, worst_rate, std::max(self_q, self_r), plus_one);
        report("C4 bd-oracle equivalence", pass, buf);
    }

    // C5: metric oracles.
    {
        const Segment black = flat_segment(8, 8, 2, 0);
        const Segment white = flat_segment(8, 8, 2, 255);
        const Segment grey = flat_segment(8, 8, 2, 100);
        const Segment grey_plus = flat_segment(8, 8, 2, 101);
        const double zero_db = psnr(black, white);
        const double unit_db = psnr(grey, grey_plus);
        const double cap_db = psnr(grey, grey);

        const Segment flat_ref = flat_segment(32, 32, 3, 128);
        Segment noisy = flat_ref;
        Rng rng(5);
        for (auto& frame : noisy.frames)
            for (auto& v : frame.y)
                v = static_cast<std::uint8_t>(128 + rng.below(40));
        const double uniform_gap = std::fabs(xpsnr(flat_ref, noisy, 8) - psnr(flat_ref, noisy));

        // two-block closed form (block A flat, block B busy, equal SSE)
        Segment ref = flat_segment(8, 4, 1, 100);
        for (int y = 0; y < 4; ++y)
            for (int x = 5; x < 8; ++x)
                ref.frames[0].y[y * 8 + x] = ((x + y) % 2 == 0) ? 255 : 0;
        Segment dist = ref;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 8; ++x) {
                auto& v = dist.frames[0].y[y * 8 + x];
                v = static_cast<std::uint8_t>(x < 4 ? v + 2 : (v >= 2 ? v - 2 : v + 2));
            }
        const auto lap_mean = [&](int x0) {
            double acc = 0.0;
            for (int y = 0; y < 4; ++y)
                for (int x = x0; x < x0 + 4; ++x) {
                    const auto at = [&](int xx, int yy) {
                        xx = std::clamp(xx, 0, 7);
                        yy = std::clamp(yy, 0, 3);
                        return static_cast<double>(ref.frames[0].y[yy * 8 + xx]);
                    };
                    acc += std::fabs(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) -
                                     4.0 * at(x, y));
                }
            return acc / 16.0;
        };
        const double a_flat = std::max(kMinBlockActivity, lap_mean(0));
        const double a_busy = std::max(kMinBlockActivity, lap_mean(4));
        const double a_pic = 0.5 * (a_flat + a_busy);
        const double wsse = a_pic / a_flat * 64.0 + a_pic / a_busy * 64.0;
        const double expected_two_block = 10.0 * std::log10(255.0 * 255.0 * 32.0 / wsse);
        const double two_block_gap = std::fabs(xpsnr(ref, dist, 4) - expected_two_block);

        const bool pass = std::fabs(zero_db) < 1e-9 &&
                          std::fabs(unit_db - 10.0 * std::log10(65025.0)) < 1e-9 &&
                          cap_db == kQualityCapDb && uniform_gap < 1e-9 &&
                          a_flat == kMinBlockActivity && two_block_gap < 1e-9;
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "0dB err=%.1e, unit-error err=%.1e, cap=%g, uniform gap=%.1e, two-block "
                      "gap=%.1e",
                      std::fabs(zero_db), std::fabs(unit_db - 10.0 * std::log10(65025.0)), cap_db,
                      uniform_gap, two_block_gap);
        report("C5 metric oracles", pass, buf);
    }

    // C6: feature oracles.
    {
        Rng rng(99);
        double worst_rel = 0.0;
        for (int b : {4, 8}) {
            for (int trial = 0; trial < 6; ++trial) {
                std::vector<double> block(static_cast<std::size_t>(b) * b);
                for (auto& v : block)
                    v = static_cast<double>(rng.below(256));
                const double expected = oracle_block_energy(block, b);
                const double got = block_texture_energy(block, b);
                worst_rel = std::max(worst_rel, std::fabs(got - expected) / expected);
            }
        }
        const SegmentFeatures flat_f = extract_features(flat_segment(16, 16, 2, 0), 4);
        bool flat_zero = true;
        for (double v : flat_f.as_array())
            flat_zero = flat_zero && v == 0.0;
        Segment twin = bundled_corpus(3)[1];
        twin.frames.resize(1);
        twin.frames.push_back(twin.frames[0]);
        const SegmentFeatures twin_f = extract_features(twin, 32);
        const bool pass = worst_rel < 1e-9 && flat_zero && twin_f.h == 0.0 && twin_f.e_y > 0.0;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "oracle rel err=%.2e (B in {4,8}), flat features zero=%d, twin-frame h=%g",
                      worst_rel, flat_zero ? 1 : 0, twin_f.h);
        report("C6 feature oracles", pass, buf);
    }

    // C7: forest determinism, memorization and serialization.
    {
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        Rng rng(31337);
        for (int i = 0; i < 150; ++i) {
            std::vector<double> row(kPredictorDims);
            for (auto& v : row)
                v = rng.unit() * 20.0;
            y.push_back(3.0 * row[0] - row[7] + rng.unit());
            x.push_back(std::move(row));
        }
        ForestHyper h1;
        h1.tree_count = 40;
        h1.seed = 77;
        const RegressionForest f1 = RegressionForest::train(x, y, h1, 1);
        const RegressionForest f2 = RegressionForest::train(x, y, h1, workers);
        const bool deterministic = f1 == f2;

        ForestHyper mem;
        mem.tree_count = 4;
        mem.max_depth = 40;
        mem.min_leaf = 1;
        mem.feature_subsample = kPredictorDims;
        mem.bootstrap = false;
        mem.seed = 5;
        const RegressionForest memorizer = RegressionForest::train(x, y, mem, workers);
        double mem_mae = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            mem_mae += std::fabs(memorizer.predict(x[i]) - y[i]);
        mem_mae /= static_cast<double>(x.size());

        const RegressionForest back =
            RegressionForest::from_json(nlohmann::json::parse(f1.to_json().dump()));
        bool roundtrip_exact = true;
        for (int i = 0; i < 100; ++i) {
            std::vector<double> probe(kPredictorDims);
            for (auto& v : probe)
                v = rng.unit() * 25.0 - 2.0;
            if (back.predict(probe) != f1.predict(probe))
                roundtrip_exact = false;
        }
        const bool pass = deterministic && mem_mae < 1e-9 && roundtrip_exact;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "double-train identical=%d, memorization MAE=%.2e, 100 round-trip "
                      "predictions exact=%d",
                      deterministic ? 1 : 0, mem_mae, roundtrip_exact ? 1 : 0);
        report("C7 forest determinism", pass, buf);
    }

    // C8: hull crossings in the synthetic RD surface over the full-scale
    // ladder, and resolution switching in the trained desk models.
    {
        const std::vector<Resolution> full = {
            make_resolution(640, 360, "360p"),    make_resolution(960, 540, "540p"),
            make_resolution(1280, 720, "720p"),   make_resolution(1920, 1080, "1080p"),
            make_resolution(2560, 1440, "1440p"), make_resolution(3840, 2160, "2160p")};
        const std::vector<double> full_bitrates = {0.145, 0.3, 0.6, 0.9, 1.6, 2.4,
                                                   3.4,   4.5, 5.8, 8.1, 11.6, 16.8};
        int changes = 0;
        std::string prev_label;
        for (double b : full_bitrates) {
            const Resolution* best = nullptr;
            double best_q = -1e18;
            for (const Resolution& r : full) {
                const double q = MockRdModel::quality_db(r, b);
                if (q > best_q) {
                    best_q = q;
                    best = &r;
                }
            }
            if (!prev_label.empty() && best->label != prev_label)
                ++changes;
            prev_label = best->label;
        }

        LadderConfig inf_cfg = desk;
        inf_cfg.latency_budget = LatencyBudget::infinite();
        bool per_segment_crossing = true;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const LadderPlan plan =
                build_ladder(corpus[i].source_id, corpus_features[i], models, inf_cfg);
            if (plan.rungs.size() < 2 ||
                plan.rungs.front().resolution == plan.rungs.back().resolution)
                per_segment_crossing = false;
        }
        const bool pass = changes >= 2 && per_segment_crossing;
        char buf[180];
        std::snprintf(buf, sizeof(buf),
                      "surface argmax changes %d times across the 12-bitrate ladder; trained "
                      "ladre(inf) picks low!=high resolutions on all 6 segments=%d",
                      changes, per_segment_crossing ? 1 : 0);
        report("C8 hull crossing", pass, buf);
    }

    // C9: inference latency for one full representation triple.
    {
        Rng rng(11);
        std::vector<double> times;
        for (int i = 0; i < 100; ++i) {
            const SegmentFeatures f = random_features(rng);
            const double b = desk.bitrates_mbps[rng.below(desk.bitrates_mbps.size())];
            const Resolution& r = desk.resolutions[rng.below(desk.resolutions.size())];
            const double t0 = now_seconds();
            volatile double q = models.predict_quality_db(r, f, b);
            volatile double t = models.predict_time_seconds(r, f, b);
            volatile double c = models.predict_rate_factor(r, f, b);
            (void)q;
            (void)t;
            (void)c;
            times.push_back(now_seconds() - t0);
        }
        std::sort(times.begin(), times.end());
        const double median = times[times.size() / 2];
        const double worst = times.back();
        const bool pass = median < 0.05;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "triple prediction median %.3f ms, worst %.3f ms (bound 50 ms)", median * 1e3,
                      worst * 1e3);
        report("C9 inference latency", pass, buf);
    }

    // C10: full-scale reproduction is out of desk scope by design; what ships
    // instead is the external-encoder recipe for users with the full dataset
    // and a VVC toolchain.
    {
        const char* candidates[] = {"configs/table3.json", "../configs/table3.json",
                                    "../../configs/table3.json", "../../../configs/table3.json"};
        std::string found;
        for (const char* c : candidates)
            if (std::filesystem::exists(c))
                found = c;
        const bool pass = !found.empty();
        report("C10 full-scale recipe", pass,
               pass ? "published quality/energy deltas are not reproducible at desk scale; "
                      "external-encoder recipe present at " +
                          found
                    : "external-encoder recipe config not found");
    }

    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
