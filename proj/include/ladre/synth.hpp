#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/csv.hpp"
#include "ladre/video.hpp"

namespace ladre {

// Procedural test content: a sinusoidal grating plus bilinear value noise,
// optionally translating and flickering over time. Deterministic in the seed.
struct SynthSpec {
    std::string id;
    int width = 256;
    int height = 144;
    int frames = 12;
    double fps = 24.0;
    double base_luma = 110.0;
    double grating_amp = 30.0;
    double wavelength_x = 24.0;
    double wavelength_y = 17.0;
    double noise_amp = 20.0;
    int noise_cell = 8;       // lattice spacing in pixels
    double motion_px = 0.0;   // translation per frame
    double flicker = 0.0;     // 0 = static noise field, 1 = fully re-rolled per frame
    double chroma_amp = 12.0;
    double chroma_base_u = 118.0;
    double chroma_base_v = 134.0;
    std::uint64_t seed = 1;
};

namespace detail {

inline double lattice_value(std::uint64_t seed, std::int64_t cx, std::int64_t cy) {
    std::uint64_t h = hash_mix(seed, hash_mix(static_cast<std::uint64_t>(cx) * 0x9e3779b97f4a7c15ULL,
                                              static_cast<std::uint64_t>(cy)));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Bilinear interpolation of a hashed lattice.
inline double value_noise(std::uint64_t seed, double x, double y, int cell) {
    const double gx = x / cell;
    const double gy = y / cell;
    const std::int64_t x0 = static_cast<std::int64_t>(std::floor(gx));
    const std::int64_t y0 = static_cast<std::int64_t>(std::floor(gy));
    const double fx = gx - x0;
    const double fy = gy - y0;
    const double v00 = lattice_value(seed, x0, y0);
    const double v10 = lattice_value(seed, x0 + 1, y0);
    const double v01 = lattice_value(seed, x0, y0 + 1);
    const double v11 = lattice_value(seed, x0 + 1, y0 + 1);
    const double top = v00 + (v10 - v00) * fx;
    const double bottom = v01 + (v11 - v01) * fx;
    return top + (bottom - top) * fy;
}

inline std::uint8_t to_sample(double v) {
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

}  // namespace detail

inline Segment synthesize_segment(const SynthSpec& spec) {
    require(spec.width % 2 == 0 && spec.height % 2 == 0, ErrorKind::validation,
            "synthetic segment dimensions must be even");
    require(spec.frames >= 1, ErrorKind::validation, "synthetic segment needs at least one frame");
    const double two_pi = 2.0 * std::acos(-1.0);

    Segment seg;
    seg.source_id = spec.id;
    seg.fps = spec.fps;
    for (int t = 0; t < spec.frames; ++t) {
        Frame f = make_frame(spec.width, spec.height);
        f.index = static_cast<std::size_t>(t);
        const double shift = spec.motion_px * t;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const double sx = x + shift;
                const double sy = y + 0.5 * shift;
                double v = spec.base_luma +
                           spec.grating_amp * std::sin(two_pi * sx / spec.wavelength_x) *
                               std::cos(two_pi * sy / spec.wavelength_y);
                const double still = detail::value_noise(spec.seed, sx, sy, spec.noise_cell);
                double noise = still;
                if (spec.flicker > 0.0) {
                    const double rolled = detail::value_noise(
                        hash_mix(spec.seed, static_cast<std::uint64_t>(t) + 1), sx, sy,
                        spec.noise_cell);
                    noise = (1.0 - spec.flicker) * still + spec.flicker * rolled;
                }
                v += spec.noise_amp * noise;
                f.y[static_cast<std::size_t>(y) * spec.width + x] = detail::to_sample(v);
            }
        const int cw = spec.width / 2;
        const int ch = spec.height / 2;
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x) {
                const double sx = 2.0 * x + shift;
                const double sy = 2.0 * y + 0.5 * shift;
                const double wave = std::sin(two_pi * sx / (2.0 * spec.wavelength_x)) *
                                    std::cos(two_pi * sy / (2.0 * spec.wavelength_y));
                f.u[static_cast<std::size_t>(y) * cw + x] =
                    detail::to_sample(spec.chroma_base_u + spec.chroma_amp * wave);
                f.v[static_cast<std::size_t>(y) * cw + x] =
                    detail::to_sample(spec.chroma_base_v - spec.chroma_amp * wave);
            }
        seg.frames.push_back(std::move(f));
    }
    return seg;
}

// The bundled six-segment corpus: spans smooth/detailed texture, still/fast
// motion and dark/bright content so the trained models see a usable spread of
// all seven features.
inline std::vector<SynthSpec> bundled_corpus_specs(std::uint64_t seed = 7) {
    std::vector<SynthSpec> specs(6);
    specs[0].id = "seg01_smooth_still";
    specs[0].base_luma = 120;
    specs[0].grating_amp = 28;
    specs[0].wavelength_x = 40;
    specs[0].wavelength_y = 30;
    specs[0].noise_amp = 6;
    specs[0].noise_cell = 16;

    specs[1].id = "seg02_detail_still";
    specs[1].base_luma = 100;
    specs[1].grating_amp = 45;
    specs[1].wavelength_x = 10;
    specs[1].wavelength_y = 8;
    specs[1].noise_amp = 25;
    specs[1].noise_cell = 4;

    specs[2].id = "seg03_slow_pan";
    specs[2].base_luma = 110;
    specs[2].grating_amp = 35;
    specs[2].wavelength_x = 22;
    specs[2].wavelength_y = 18;
    specs[2].noise_amp = 12;
    specs[2].noise_cell = 8;
    specs[2].motion_px = 1.0;

    specs[3].id = "seg04_fast_motion";
    specs[3].base_luma = 95;
    specs[3].grating_amp = 40;
    specs[3].wavelength_x = 14;
    specs[3].wavelength_y = 11;
    specs[3].noise_amp = 20;
    specs[3].noise_cell = 6;
    specs[3].motion_px = 4.0;
    specs[3].flicker = 0.5;

    specs[4].id = "seg05_bright_smooth";
    specs[4].base_luma = 200;
    specs[4].grating_amp = 18;
    specs[4].wavelength_x = 48;
    specs[4].wavelength_y = 36;
    specs[4].noise_amp = 5;
    specs[4].noise_cell = 16;
    specs[4].motion_px = 0.3;

    specs[5].id = "seg06_dark_busy";
    specs[5].base_luma = 60;
    specs[5].grating_amp = 30;
    specs[5].wavelength_x = 9;
    specs[5].wavelength_y = 7;
    specs[5].noise_amp = 30;
    specs[5].noise_cell = 3;
    specs[5].motion_px = 2.0;
    specs[5].flicker = 0.3;

    for (std::size_t i = 0; i < specs.size(); ++i)
        specs[i].seed = hash_mix(seed, i + 1);
    return specs;
}

inline std::vector<Segment> bundled_corpus(std::uint64_t seed = 7) {
    std::vector<Segment> corpus;
    for (const SynthSpec& spec : bundled_corpus_specs(seed))
        corpus.push_back(synthesize_segment(spec));
    return corpus;
}

// Writes the corpus as raw YUV plus the manifest CSV the CLI consumes.
inline std::string write_corpus(const std::string& dir, std::uint64_t seed = 7) {
    std::filesystem::create_directories(dir);
    const std::string manifest_path = (std::filesystem::path(dir) / "manifest.csv").string();
    std::ofstream manifest(manifest_path, std::ios::trunc);
    if (!manifest)
        fail(ErrorKind::io, "cannot write corpus manifest '" + manifest_path + "'");
    manifest << "path,width,height,fps,id\n";
    for (const SynthSpec& spec : bundled_corpus_specs(seed)) {
        const Segment seg = synthesize_segment(spec);
        const std::string name = spec.id + ".yuv";
        write_yuv420(seg, (std::filesystem::path(dir) / name).string());
        manifest << name << ',' << spec.width << ',' << spec.height << ','
                 << format_double(spec.fps) << ',' << spec.id << '\n';
    }
    return manifest_path;
}

}  // namespace ladre
