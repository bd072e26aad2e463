#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "ladre/orchestrator.hpp"
#include "test_helpers.hpp"

using namespace ladre;

namespace {

Representation rep_of(const Resolution& r, double bitrate, int c) {
    Representation rep;
    rep.bitrate_mbps = bitrate;
    rep.resolution = r;
    rep.rate_factor = c;
    return rep;
}

SegmentContext feature_context(const std::string& id, double e_y, double h, std::size_t frames,
                               double fps) {
    SegmentContext ctx;
    ctx.id = id;
    ctx.features.e_y = e_y;
    ctx.features.h = h;
    ctx.frame_count = frames;
    ctx.fps = fps;
    return ctx;
}

}  // namespace

TEST_CASE("MockRdModel") {
    SECTION("2160p at c=20 with E_Y=50 gives the documented bitrate") {
        SegmentFeatures f;
        f.e_y = 50.0;
        const Resolution r = make_resolution(3840, 2160, "2160p");
        const double expected = 3.5e-8 * 8294400.0 * 2.0;  // 0.580608 Mbps
        CHECK(MockRdModel::bitrate_mbps(r, 20, f) == Catch::Approx(expected).epsilon(1e-12));
        CHECK(MockRdModel::bitrate_mbps(r, 20, f) == Catch::Approx(0.580608).epsilon(1e-9));
    }

    SECTION("+6 rate-factor steps halve the bitrate exactly") {
        SegmentFeatures f;
        f.e_y = 50.0;
        const Resolution r = make_resolution(3840, 2160, "2160p");
        CHECK(MockRdModel::bitrate_mbps(r, 26, f) == 0.5 * MockRdModel::bitrate_mbps(r, 20, f));
    }

    SECTION("bitrate decreases in c, increases in pixels; time increases in pixels") {
        SegmentFeatures f;
        f.e_y = 20.0;
        f.h = 10.0;
        const Resolution small = make_resolution(960, 540, "540p");
        const Resolution big = make_resolution(1920, 1080, "1080p");
        double prev = std::numeric_limits<double>::infinity();
        for (int c = 17; c <= 51; ++c) {
            const double b = MockRdModel::bitrate_mbps(small, c, f);
            REQUIRE(b < prev);
            REQUIRE(b > 0.0);
            prev = b;
            REQUIRE(MockRdModel::bitrate_mbps(big, c, f) > b);
        }
        CHECK(MockRdModel::encode_seconds(big, 24, f) > MockRdModel::encode_seconds(small, 24, f));
    }

    SECTION("the synthetic quality surface crosses over the ladder range") {
        const Resolution r540 = make_resolution(960, 540, "540p");
        const Resolution r2160 = make_resolution(3840, 2160, "2160p");
        CHECK(MockRdModel::quality_db(r540, 0.145) > MockRdModel::quality_db(r2160, 0.145));
        CHECK(MockRdModel::quality_db(r2160, 16.8) > MockRdModel::quality_db(r540, 16.8));
        for (double b : {0.145, 1.0, 16.8}) {
            CHECK(MockRdModel::quality_db(r540, b) > 0.0);
            CHECK(std::isfinite(MockRdModel::quality_db(r2160, b)));
        }
    }
}

TEST_CASE("encode_representation with the mock adapter") {
    const EncoderAdapter adapter;  // mock
    const SegmentContext ctx = feature_context("seg", 50.0, 0.0, 24, 24.0);
    const Resolution r = make_resolution(3840, 2160, "2160p");

    const EncodeResult result = encode_representation(ctx, rep_of(r, 4.5, 20), adapter);
    CHECK(result.ok);
    CHECK(result.exit_status == 0);
    CHECK(result.bitrate_mbps == Catch::Approx(0.580608).epsilon(1e-9));
    CHECK(result.wall_seconds ==
          Catch::Approx(MockRdModel::encode_seconds(r, 24, ctx.features)).epsilon(1e-12));
    // bytes follow from bitrate * duration
    const double duration = 24.0 / 24.0;
    CHECK(result.output_bytes ==
          static_cast<std::uint64_t>(std::llround(result.bitrate_mbps * 1e6 / 8.0 * duration)));
}

TEST_CASE("external adapter validation happens before any launch") {
    EncoderAdapter adapter;
    adapter.kind = EncoderAdapter::Kind::external;
    adapter.command_template =
        "encode {input} {output} {width} {height} {fps} {maxrate_kbps} {threads}";  // no {qp}
    try {
        adapter.validate();
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(std::string(e.what()).find("{qp}") != std::string::npos);
    }
}

TEST_CASE("execute_plan with the mock adapter") {
    const EncoderAdapter adapter;
    const SegmentContext ctx = feature_context("seg", 10.0, 0.0, 12, 24.0);

    SECTION("latency is the max rung time and total is the sum") {
        LadderPlan plan;
        plan.segment_id = "seg";
        plan.budget = LatencyBudget::infinite();
        plan.rungs = {rep_of(make_resolution(64, 36), 1e-4, 26),
                      rep_of(make_resolution(128, 72), 2e-4, 26),
                      rep_of(make_resolution(256, 144), 4e-4, 26)};
        const PlanExecution exec = execute_plan(plan, ctx, adapter, 1);
        REQUIRE(exec.results.size() == 3);
        double max_t = 0.0, sum_t = 0.0;
        for (const EncodeResult& r : exec.results) {
            REQUIRE(r.ok);
            max_t = std::max(max_t, r.wall_seconds);
            sum_t += r.wall_seconds;
        }
        CHECK(exec.segment_latency_seconds == max_t);
        CHECK(exec.total_seconds == sum_t);
        // with 12 frames and zero temporal gradient the model times are exact
        CHECK(exec.results[2].wall_seconds ==
              Catch::Approx(2.2e-6 * 256 * 144 * 12).epsilon(1e-12));
    }

    SECTION("an empty plan yields zero statistics and no results") {
        LadderPlan plan;
        plan.segment_id = "seg";
        const PlanExecution exec = execute_plan(plan, ctx, adapter, 4);
        CHECK(exec.results.empty());
        CHECK(exec.segment_latency_seconds == 0.0);
        CHECK(exec.total_seconds == 0.0);
    }

    SECTION("worker count does not change results or statistics") {
        LadderPlan plan;
        plan.segment_id = "seg";
        for (int i = 0; i < 12; ++i)
            plan.rungs.push_back(rep_of(make_resolution(64 + 2 * i, 36 + 2 * i), 1e-4 * (i + 1),
                                        17 + i));
        const PlanExecution one = execute_plan(plan, ctx, adapter, 1);
        const PlanExecution four = execute_plan(plan, ctx, adapter, 4);
        REQUIRE(one.results.size() == four.results.size());
        for (std::size_t i = 0; i < one.results.size(); ++i) {
            CHECK(one.results[i].bitrate_mbps == four.results[i].bitrate_mbps);
            CHECK(one.results[i].wall_seconds == four.results[i].wall_seconds);
            CHECK(one.results[i].output_bytes == four.results[i].output_bytes);
        }
        CHECK(one.segment_latency_seconds == four.segment_latency_seconds);
        CHECK(one.total_seconds == four.total_seconds);
    }
}

TEST_CASE("mock decoded segments") {
    const Segment source = testutil::noise_segment(64, 36, 3, 5, 24.0, "mockseg");
    const Resolution r = make_resolution(32, 18);

    SECTION("deterministic for identical (segment, resolution, rate factor)") {
        const Segment a = mock_decoded_segment(source, r, 30, 17);
        const Segment b = mock_decoded_segment(source, r, 30, 17);
        CHECK(a == b);
    }

    SECTION("noise grows with the rate factor") {
        const Segment clean = mock_decoded_segment(source, r, 17, 17);  // amplitude 0
        const Segment noisy = mock_decoded_segment(source, r, 45, 17);
        CHECK(clean == mock_round_trip(source, r));
        CHECK_FALSE(noisy == clean);
    }
}

TEST_CASE("external adapter end to end with a shell stand-in") {
    testutil::TempDir dir("external");
    EncoderAdapter adapter;
    adapter.kind = EncoderAdapter::Kind::external;
    adapter.threads = 2;

    const Segment source = testutil::noise_segment(16, 8, 4, 9, 24.0, "ext");
    SegmentContext ctx = make_context(source, SegmentFeatures{});
    ctx.id = "ext";

    LadderPlan plan;
    plan.segment_id = "ext";
    plan.budget = LatencyBudget::infinite();
    plan.rungs = {rep_of(make_resolution(8, 4), 0.5, 26)};

    SECTION("a byte-emitting command produces measurable output") {
        adapter.command_template =
            "cat {input} >/dev/null && head -c 1000 /dev/zero > {output} "
            "# {width}x{height}@{fps} qp={qp} maxrate={maxrate_kbps} threads={threads}";
        const PlanExecution exec = execute_plan(plan, ctx, adapter, 1, dir.str());
        REQUIRE(exec.results.size() == 1);
        const EncodeResult& r = exec.results.front();
        REQUIRE(r.ok);
        CHECK(r.output_bytes == 1000);
        CHECK(r.wall_seconds > 0.0);
        const double duration = 4.0 / 24.0;
        CHECK(r.bitrate_mbps == Catch::Approx(1000.0 * 8.0 / duration / 1e6).epsilon(1e-12));
        CHECK(std::filesystem::exists(r.output_path));
        CHECK(r.output_path.find("ext_0.5_4p_26.bin") != std::string::npos);
    }

    SECTION("a failing command is recorded, and an all-failed plan throws") {
        adapter.command_template =
            "echo boom >&2; exit 3 # {input} {output} {width} {height} {fps} {qp} "
            "{maxrate_kbps} {threads}";
        CHECK_THROWS_AS(execute_plan(plan, ctx, adapter, 1, dir.str()), Error);
    }

    SECTION("one failed rung does not stop the others") {
        adapter.command_template =
            "[ {qp} -lt 30 ] && head -c 500 {input} > {output} "
            "# {width} {height} {fps} {maxrate_kbps} {threads}";
        plan.rungs = {rep_of(make_resolution(8, 4), 0.5, 26),
                      rep_of(make_resolution(8, 4), 0.25, 40)};
        const PlanExecution exec = execute_plan(plan, ctx, adapter, 1, dir.str());
        REQUIRE(exec.results.size() == 2);
        CHECK(exec.results[0].ok);
        CHECK_FALSE(exec.results[1].ok);
        CHECK(exec.failures == 1);
        CHECK(exec.total_seconds == exec.results[0].wall_seconds);
    }

    SECTION("a hung command times out against the budget") {
        adapter.command_template =
            "sleep 30 # {input} {output} {width} {height} {fps} {qp} {maxrate_kbps} {threads}";
        adapter.timeout_factor = 2.0;
        plan.budget = LatencyBudget::finite(0.1);  // timeout at 0.2 s
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(execute_plan(plan, ctx, adapter, 1, dir.str()), Error);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        CHECK(elapsed.count() < 5.0);
    }
}
