#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "ladre/common.hpp"
#include "ladre/forest.hpp"
#include "ladre/models.hpp"
#include "ladre/video.hpp"

namespace testutil {

inline ladre::Segment flat_segment(int w, int h, int frames, std::uint8_t value,
                                   double fps = 24.0, const std::string& id = "flat") {
    ladre::Segment seg;
    seg.source_id = id;
    seg.fps = fps;
    for (int i = 0; i < frames; ++i) {
        ladre::Frame f = ladre::make_frame(w, h, value);
        f.index = static_cast<std::size_t>(i);
        seg.frames.push_back(std::move(f));
    }
    return seg;
}

inline ladre::Segment noise_segment(int w, int h, int frames, std::uint64_t seed,
                                    double fps = 24.0, const std::string& id = "noise") {
    ladre::Segment seg;
    seg.source_id = id;
    seg.fps = fps;
    ladre::Rng rng(seed);
    for (int i = 0; i < frames; ++i) {
        ladre::Frame f = ladre::make_frame(w, h);
        f.index = static_cast<std::size_t>(i);
        for (auto& v : f.y)
            v = static_cast<std::uint8_t>(rng.below(256));
        for (auto& v : f.u)
            v = static_cast<std::uint8_t>(rng.below(256));
        for (auto& v : f.v)
            v = static_cast<std::uint8_t>(rng.below(256));
        seg.frames.push_back(std::move(f));
    }
    return seg;
}

// Forest that returns `values[k]` when input[feature] falls into the k-th cell
// of the breakpoint partition; constant in every other input dimension.
inline ladre::RegressionForest step_forest(int feature, const std::vector<double>& breakpoints,
                                           const std::vector<double>& values, int dims = 8) {
    nlohmann::json nodes = nlohmann::json::array();
    // build a left-leaning chain: internal node k tests x < breakpoints[k]
    const int n = static_cast<int>(breakpoints.size());
    for (int k = 0; k < n; ++k) {
        const int leaf_id = n + k;               // value when x < breakpoints[k]
        const int next_id = k + 1 < n ? k + 1 : n + n;  // next test or final leaf
        nodes.push_back({feature, breakpoints[k], leaf_id, next_id, 0.0});
    }
    for (int k = 0; k <= n; ++k)
        nodes.push_back({-1, 0.0, -1, -1, values[k]});
    nlohmann::json j{{"dims", dims},
                     {"hyper",
                      {{"tree_count", 1},
                       {"max_depth", 32},
                       {"min_leaf", 1},
                       {"feature_subsample", 0},
                       {"bootstrap", false},
                       {"seed", 0}}},
                     {"trees", nlohmann::json::array({nodes})}};
    return ladre::RegressionForest::from_json(j);
}

inline ladre::ResolutionModels constant_models(double quality, double seconds,
                                               double rate_factor) {
    ladre::ResolutionModels m;
    m.quality = ladre::RegressionForest::constant(quality, 8);
    m.time = ladre::RegressionForest::constant(seconds, 8);
    m.rate_factor = ladre::RegressionForest::constant(rate_factor, 8);
    return m;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("ladre_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
