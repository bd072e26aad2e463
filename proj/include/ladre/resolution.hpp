#pragma once

#include <cstdint>
#include <string>

#include "ladre/common.hpp"

namespace ladre {

// Encoding resolution. 4:2:0 chroma requires even dimensions.
struct Resolution {
    int width = 0;
    int height = 0;
    std::string label;

    std::int64_t pixels() const { return static_cast<std::int64_t>(width) * height; }

    bool operator==(const Resolution& o) const { return width == o.width && height == o.height; }
    bool operator!=(const Resolution& o) const { return !(*this == o); }
};

inline Resolution make_resolution(int width, int height, std::string label = "") {
    require(width >= 2 && height >= 2, ErrorKind::validation,
            "resolution must be at least 2x2, got " + std::to_string(width) + "x" +
                std::to_string(height));
    require(width % 2 == 0 && height % 2 == 0, ErrorKind::validation,
            "resolution dimensions must be even for 4:2:0, got " + std::to_string(width) + "x" +
                std::to_string(height));
    if (label.empty())
        label = std::to_string(height) + "p";
    return Resolution{width, height, std::move(label)};
}

// Accepts "WxH" or a canonical 16:9 short name ("360p" .. "2160p").
inline Resolution parse_resolution(const std::string& text) {
    struct Named {
        const char* name;
        int w, h;
    };
    static const Named known[] = {
        {"360p", 640, 360},   {"432p", 768, 432},   {"540p", 960, 540},  {"720p", 1280, 720},
        {"1080p", 1920, 1080}, {"1440p", 2560, 1440}, {"2160p", 3840, 2160},
    };
    for (const auto& n : known)
        if (text == n.name)
            return make_resolution(n.w, n.h, n.name);
    const auto x = text.find('x');
    if (x != std::string::npos) {
        try {
            const int w = std::stoi(text.substr(0, x));
            const int h = std::stoi(text.substr(x + 1));
            return make_resolution(w, h);
        } catch (const std::logic_error&) {
            // falls through to the error below
        }
    }
    fail(ErrorKind::validation, "cannot parse resolution '" + text + "' (expected WxH or e.g. 1080p)");
}

}  // namespace ladre
