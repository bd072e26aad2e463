#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <vector>

#include "ladre/resample.hpp"
#include "ladre/video.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace ladre;

namespace {

void write_bytes(const std::string& path, std::size_t count, std::uint8_t value = 0) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const std::vector<char> buf(count, static_cast<char>(value));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

TEST_CASE("read_yuv420 reads whole frames in file order") {
    testutil::TempDir dir("yuv_read");
    const Resolution res = make_resolution(8, 8);

    SECTION("96 zero bytes are exactly one 8x8 frame") {
        write_bytes(dir.file("one.yuv"), 96);
        const Segment seg = read_yuv420(dir.file("one.yuv"), res, 24.0);
        REQUIRE(seg.frame_count() == 1);
        for (auto v : seg.frames[0].y)
            CHECK(v == 0);
        for (auto v : seg.frames[0].u)
            CHECK(v == 0);
    }

    SECTION("max_frames truncates by request") {
        write_bytes(dir.file("two.yuv"), 192);
        const Segment seg = read_yuv420(dir.file("two.yuv"), res, 24.0, 1);
        REQUIRE(seg.frame_count() == 1);
    }

    SECTION("a non-multiple size is a truncated-file error naming both sizes") {
        write_bytes(dir.file("bad.yuv"), 100);
        try {
            read_yuv420(dir.file("bad.yuv"), res, 24.0);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::io);
            const std::string msg = e.what();
            CHECK(msg.find("100") != std::string::npos);
            CHECK(msg.find("96") != std::string::npos);
        }
    }

    SECTION("empty and missing files are errors") {
        write_bytes(dir.file("empty.yuv"), 0);
        CHECK_THROWS_AS(read_yuv420(dir.file("empty.yuv"), res, 24.0), Error);
        CHECK_THROWS_AS(read_yuv420(dir.file("nope.yuv"), res, 24.0), Error);
    }
}

TEST_CASE("write-read round trip is bit-exact") {
    testutil::TempDir dir("yuv_roundtrip");
    const Segment seg = testutil::noise_segment(16, 8, 3, 99);
    write_yuv420(seg, dir.file("rt.yuv"));
    const Segment back = read_yuv420(dir.file("rt.yuv"), make_resolution(16, 8), seg.fps);
    CHECK(back == seg);

    write_yuv420(back, dir.file("rt2.yuv"));
    const Segment again = read_yuv420(dir.file("rt2.yuv"), make_resolution(16, 8), seg.fps);
    CHECK(again == seg);
}

TEST_CASE("resample") {
    SECTION("identity target returns a bit-identical segment") {
        const Segment seg = testutil::noise_segment(12, 10, 2, 5);
        const Segment out = resample(seg, make_resolution(12, 10));
        CHECK(out == seg);
    }

    SECTION("a constant plane stays constant through any scaling") {
        const Segment seg = testutil::flat_segment(16, 16, 1, 57);
        for (const auto& [w, h] : std::vector<std::pair<int, int>>{{8, 8}, {32, 32}, {24, 12}}) {
            const Segment out = resample(seg, make_resolution(w, h));
            for (auto v : out.frames[0].y)
                REQUIRE(v == 57);
            for (auto v : out.frames[0].u)
                REQUIRE(v == 57);
        }
    }

    SECTION("downscale then upscale of a constant plane is lossless") {
        for (std::uint8_t value : {0, 1, 57, 128, 254, 255}) {
            const Segment seg = testutil::flat_segment(16, 16, 1, value);
            const Segment round = resample(resample(seg, make_resolution(8, 8)),
                                           make_resolution(16, 16));
            CHECK(round == seg);
        }
    }

    SECTION("4x4 ramp loses information through a 2x round trip") {
        Segment seg = testutil::flat_segment(4, 4, 1, 0);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                seg.frames[0].y[y * 4 + x] = static_cast<std::uint8_t>(16 * (4 * y + x));
        const Segment round = resample(resample(seg, make_resolution(2, 2)), make_resolution(4, 4));
        const double mse = oracle::mse_luma(seg, round);
        CHECK(mse > 0.0);
        CHECK(std::isfinite(mse));
    }

    SECTION("deterministic across repeated runs") {
        const Segment seg = testutil::noise_segment(20, 14, 2, 17);
        const Segment a = resample(seg, make_resolution(10, 8));
        const Segment b = resample(seg, make_resolution(10, 8));
        CHECK(a == b);
    }

    SECTION("odd target dimensions are rejected") {
        const Segment seg = testutil::flat_segment(8, 8, 1, 0);
        CHECK_THROWS_AS(resample(seg, Resolution{7, 8, "bad"}), Error);
    }
}
