#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/resolution.hpp"

namespace ladre {

// One 8-bit YUV 4:2:0 frame. Chroma planes are (width/2) x (height/2).
struct Frame {
    int width = 0;
    int height = 0;
    std::size_t index = 0;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> u;
    std::vector<std::uint8_t> v;

    bool operator==(const Frame& o) const {
        return width == o.width && height == o.height && y == o.y && u == o.u && v == o.v;
    }
};

inline Frame make_frame(int width, int height, std::uint8_t fill = 0) {
    Frame f;
    f.width = width;
    f.height = height;
    f.y.assign(static_cast<std::size_t>(width) * height, fill);
    f.u.assign(static_cast<std::size_t>(width / 2) * (height / 2), fill);
    f.v.assign(static_cast<std::size_t>(width / 2) * (height / 2), fill);
    return f;
}

struct Segment {
    std::string source_id;
    double fps = 0.0;
    std::vector<Frame> frames;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t frame_count() const { return frames.size(); }
    double duration_seconds() const { return fps > 0 ? frames.size() / fps : 0.0; }

    Resolution resolution() const { return make_resolution(width(), height()); }

    bool operator==(const Segment& o) const { return frames == o.frames; }
};

inline std::size_t yuv420_frame_bytes(const Resolution& res) {
    return static_cast<std::size_t>(res.width) * res.height * 3 / 2;
}

// Reads planar I420 (Y then U then V). The file size must be a whole number of
// frames even when max_frames asks for fewer.
inline Segment read_yuv420(const std::string& path, const Resolution& res, double fps,
                           std::size_t max_frames = std::numeric_limits<std::size_t>::max()) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec)
        fail(ErrorKind::io, "cannot stat '" + path + "': " + ec.message());

    const std::size_t frame_bytes = yuv420_frame_bytes(res);
    if (size % frame_bytes != 0)
        fail(ErrorKind::io, "truncated YUV file '" + path + "': size " + std::to_string(size) +
                                " is not a multiple of the " + std::to_string(frame_bytes) +
                                "-byte frame size for " + std::to_string(res.width) + "x" +
                                std::to_string(res.height));
    const std::size_t available = size / frame_bytes;
    if (available == 0)
        fail(ErrorKind::io, "empty YUV file '" + path + "'");

    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::io, "cannot open '" + path + "' for reading");

    Segment seg;
    seg.source_id = std::filesystem::path(path).stem().string();
    seg.fps = fps;
    const std::size_t n = std::min(available, max_frames);
    seg.frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Frame f = make_frame(res.width, res.height);
        f.index = i;
        in.read(reinterpret_cast<char*>(f.y.data()), static_cast<std::streamsize>(f.y.size()));
        in.read(reinterpret_cast<char*>(f.u.data()), static_cast<std::streamsize>(f.u.size()));
        in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size()));
        if (!in)
            fail(ErrorKind::io, "short read from '" + path + "' at frame " + std::to_string(i));
        seg.frames.push_back(std::move(f));
    }
    return seg;
}

inline void write_yuv420(const Segment& seg, const std::string& path) {
    require(!seg.frames.empty(), ErrorKind::validation, "cannot write empty segment");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    for (const Frame& f : seg.frames) {
        out.write(reinterpret_cast<const char*>(f.y.data()), static_cast<std::streamsize>(f.y.size()));
        out.write(reinterpret_cast<const char*>(f.u.data()), static_cast<std::streamsize>(f.u.size()));
        out.write(reinterpret_cast<const char*>(f.v.data()), static_cast<std::streamsize>(f.v.size()));
    }
    if (!out)
        fail(ErrorKind::io, "short write to '" + path + "'");
}

}  // namespace ladre
