#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ladre/common.hpp"
#include "ladre/complexity.hpp"
#include "ladre/ladder.hpp"
#include "ladre/resample.hpp"
#include "ladre/video.hpp"

namespace ladre {

// Command-template driven adapter. The mock kind needs no encoder binary and
// is fully deterministic.
struct EncoderAdapter {
    enum class Kind { mock, external };

    Kind kind = Kind::mock;
    std::string command_template;  // {input} {output} {width} {height} {fps} {qp} {maxrate_kbps} {threads}
    std::string decode_template;   // optional: {input} {output} {width} {height} {fps}
    int threads = 4;
    double timeout_factor = 2.0;   // encode timeout = factor * latency budget, when bounded

    void validate() const {
        if (kind != Kind::external)
            return;
        static const char* placeholders[] = {"{input}",  "{output}", "{width}",        "{height}",
                                             "{fps}",    "{qp}",     "{maxrate_kbps}", "{threads}"};
        for (const char* p : placeholders)
            require(command_template.find(p) != std::string::npos, ErrorKind::validation,
                    std::string("encoder command template is missing placeholder ") + p);
    }
};

// Synthetic rate-distortion surface for the mock encoder. Bitrate halves per
// +6 rate-factor steps and scales with pixel count; encode time scales with
// pixels, frames and temporal complexity; the quality surface is anchored at
// 540p/1080p/2160p and interpolated in log-pixels (q_max linearly, the
// bitrate-penalty coefficient geometrically so it stays positive for small
// frames). The anchors are chosen so per-resolution RD curves cross inside a
// ladder's bitrate range.
struct MockRdModel {
    static constexpr double kBitratePerPixelMbps = 3.5e-8;
    static constexpr double kSecondsPerPixelFrame = 2.2e-6;
    static constexpr double kNoiseAmplitudePerStep = 0.90;  // luma noise per rate-factor step
    static constexpr double kMinQualityDb = 0.001;

    static double bitrate_mbps(const Resolution& r, int rate_factor, const SegmentFeatures& f) {
        return kBitratePerPixelMbps * static_cast<double>(r.pixels()) * (1.0 + f.e_y / 50.0) *
               std::exp2(-(rate_factor - 20.0) / 6.0);
    }

    static double encode_seconds(const Resolution& r, std::size_t frames,
                                 const SegmentFeatures& f) {
        return kSecondsPerPixelFrame * static_cast<double>(r.pixels()) *
               static_cast<double>(frames) * (1.0 + f.h / 100.0);
    }

    // (q_max, a) for quality_db = q_max - a / bitrate.
    static std::pair<double, double> quality_anchors(double pixels) {
        struct Anchor {
            double log_pixels, q_max, log_a;
        };
        static const Anchor anchors[] = {
            {std::log(960.0 * 540.0), 40.0, std::log(1.2)},
            {std::log(1920.0 * 1080.0), 43.0, std::log(4.0)},
            {std::log(3840.0 * 2160.0), 45.5, std::log(14.0)},
        };
        const double lp = std::log(pixels);
        const Anchor& a0 = lp <= anchors[1].log_pixels ? anchors[0] : anchors[1];
        const Anchor& a1 = lp <= anchors[1].log_pixels ? anchors[1] : anchors[2];
        const double t = (lp - a0.log_pixels) / (a1.log_pixels - a0.log_pixels);
        const double q_max = a0.q_max + t * (a1.q_max - a0.q_max);
        const double a = std::exp(a0.log_a + t * (a1.log_a - a0.log_a));
        return {q_max, a};
    }

    static double quality_db(const Resolution& r, double bitrate_mbps) {
        const auto [q_max, a] = quality_anchors(static_cast<double>(r.pixels()));
        return std::max(kMinQualityDb, q_max - a / bitrate_mbps);
    }
};

struct EncodeResult {
    Representation representation;
    double bitrate_mbps = 0.0;  // output bytes * 8 * fps / frames, in Mbps
    std::uint64_t output_bytes = 0;
    double wall_seconds = 0.0;
    int exit_status = 0;
    std::string output_path;
    bool ok = false;
    std::string diagnostics;
};

// What the orchestrator needs to know about one segment. Pixel data is only
// required for external encodes and for synthesising mock decoded output.
struct SegmentContext {
    std::string id;
    SegmentFeatures features;
    std::size_t frame_count = 0;
    double fps = 0.0;
    Resolution source_resolution;
    const Segment* pixels = nullptr;
};

inline SegmentContext make_context(const Segment& segment, const SegmentFeatures& features) {
    SegmentContext ctx;
    ctx.id = segment.source_id;
    ctx.features = features;
    ctx.frame_count = segment.frame_count();
    ctx.fps = segment.fps;
    ctx.source_resolution = segment.resolution();
    ctx.pixels = &segment;
    return ctx;
}

namespace detail {

struct CommandResult {
    int exit_status = -1;
    double seconds = 0.0;
    bool timed_out = false;
    std::string output_tail;  // combined stdout+stderr, last few KB
};

// Runs cmd under /bin/sh, captures combined output, enforces an optional
// wall-clock timeout by killing the process group.
inline CommandResult run_command(const std::string& cmd, std::optional<double> timeout_seconds) {
    CommandResult result;
    int fds[2];
    if (pipe(fds) != 0)
        fail(ErrorKind::internal, "pipe() failed");

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        fail(ErrorKind::internal, "fork() failed");
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        close(fds[0]);
        close(fds[1]);
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(fds[1]);

    constexpr std::size_t kTailLimit = 8192;
    char buf[4096];
    bool open = true;
    while (open) {
        int wait_ms = 200;
        if (timeout_seconds) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (elapsed.count() >= *timeout_seconds) {
                kill(-pid, SIGKILL);
                result.timed_out = true;
                timeout_seconds.reset();  // drain any remaining output, then reap
            }
        }
        pollfd pfd{fds[0], POLLIN, 0};
        const int rc = poll(&pfd, 1, wait_ms);
        if (rc > 0) {
            const ssize_t n = read(fds[0], buf, sizeof(buf));
            if (n <= 0)
                open = false;
            else {
                result.output_tail.append(buf, static_cast<std::size_t>(n));
                if (result.output_tail.size() > kTailLimit)
                    result.output_tail.erase(0, result.output_tail.size() - kTailLimit);
            }
        } else if (rc == 0 && result.timed_out) {
            open = false;
        }
    }
    close(fds[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    result.seconds = elapsed.count();
    result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status)
                                           : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    return result;
}

inline void replace_all(std::string& text, std::string_view key, const std::string& value) {
    for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
}

// Trim trailing zeros so artifact names stay stable and readable.
inline std::string format_bitrate(double mbps) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", mbps);
    std::string s(buf);
    while (s.size() > 1 && s.back() == '0')
        s.pop_back();
    if (!s.empty() && s.back() == '.')
        s.pop_back();
    return s;
}

}  // namespace detail

// Deterministic name for one encoded representation.
inline std::string encode_output_name(const std::string& segment_id, const Representation& rep) {
    return segment_id + "_" + detail::format_bitrate(rep.bitrate_mbps) + "_" +
           std::to_string(rep.resolution.height) + "p_" + std::to_string(rep.rate_factor) + ".bin";
}

// Downscale-upscale round trip used by the mock encoder's decoded output.
inline Segment mock_round_trip(const Segment& source, const Resolution& r) {
    return resample(resample(source, r), source.resolution());
}

// Additive deterministic luma noise, amplitude proportional to the distance
// from the lowest rate factor. The stream is seeded from (segment id, r, c)
// only, so training labels and evaluation measurements agree run to run.
inline void apply_mock_noise(Segment& decoded, std::string_view segment_id, const Resolution& r,
                             int rate_factor, int rate_factor_min,
                             double per_step = MockRdModel::kNoiseAmplitudePerStep) {
    const double amplitude = per_step * (rate_factor - rate_factor_min);
    if (amplitude <= 0.0)
        return;
    Rng rng(hash_mix(hash_string(segment_id),
                     hash_mix(static_cast<std::uint64_t>(r.pixels()),
                              static_cast<std::uint64_t>(rate_factor))));
    for (Frame& f : decoded.frames)
        for (std::uint8_t& y : f.y) {
            const double noisy = y + (rng.unit() * 2.0 - 1.0) * amplitude;
            y = static_cast<std::uint8_t>(std::clamp<long>(std::lround(noisy), 0, 255));
        }
}

// Full mock decode: what a client would measure after encoding at (r, c).
inline Segment mock_decoded_segment(const Segment& source, const Resolution& r, int rate_factor,
                                    int rate_factor_min,
                                    double per_step = MockRdModel::kNoiseAmplitudePerStep) {
    Segment decoded = mock_round_trip(source, r);
    apply_mock_noise(decoded, source.source_id, r, rate_factor, rate_factor_min, per_step);
    return decoded;
}

// Encodes one representation. External encodes expect the input file for the
// representation's resolution to exist already (execute_plan prepares them);
// mock encodes are pure computation.
inline EncodeResult encode_representation(const SegmentContext& ctx, const Representation& rep,
                                          const EncoderAdapter& adapter,
                                          const std::string& run_dir = "",
                                          std::optional<double> timeout_seconds = std::nullopt,
                                          const std::string& prepared_input = "") {
    adapter.validate();
    EncodeResult result;
    result.representation = rep;

    if (adapter.kind == EncoderAdapter::Kind::mock) {
        result.bitrate_mbps = MockRdModel::bitrate_mbps(rep.resolution, rep.rate_factor, ctx.features);
        result.wall_seconds = MockRdModel::encode_seconds(rep.resolution, ctx.frame_count, ctx.features);
        const double duration = ctx.frame_count / ctx.fps;
        result.output_bytes =
            static_cast<std::uint64_t>(std::llround(result.bitrate_mbps * 1e6 / 8.0 * duration));
        result.exit_status = 0;
        result.ok = true;
        return result;
    }

    require(!prepared_input.empty(), ErrorKind::validation,
            "external encode needs a prepared input path");
    const std::string out_path =
        (std::filesystem::path(run_dir) / encode_output_name(ctx.id, rep)).string();

    std::string cmd = adapter.command_template;
    detail::replace_all(cmd, "{input}", prepared_input);
    detail::replace_all(cmd, "{output}", out_path);
    detail::replace_all(cmd, "{width}", std::to_string(rep.resolution.width));
    detail::replace_all(cmd, "{height}", std::to_string(rep.resolution.height));
    detail::replace_all(cmd, "{fps}", detail::format_bitrate(ctx.fps));
    detail::replace_all(cmd, "{qp}", std::to_string(rep.rate_factor));
    detail::replace_all(cmd, "{maxrate_kbps}",
                        std::to_string(static_cast<long long>(std::llround(rep.bitrate_mbps * 1000))));
    detail::replace_all(cmd, "{threads}", std::to_string(adapter.threads));

    const detail::CommandResult run = detail::run_command(cmd, timeout_seconds);
    result.wall_seconds = run.seconds;
    result.exit_status = run.exit_status;
    result.output_path = out_path;
    if (run.timed_out) {
        result.ok = false;
        result.diagnostics = "encode timed out after " + std::to_string(run.seconds) + " s";
        return result;
    }
    if (run.exit_status != 0) {
        result.ok = false;
        result.diagnostics = "encoder exited with status " + std::to_string(run.exit_status) +
                             ": " + run.output_tail;
        return result;
    }
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(out_path, ec);
    if (ec) {
        result.ok = false;
        result.diagnostics = "encoder succeeded but output missing: " + out_path;
        return result;
    }
    result.output_bytes = bytes;
    const double duration = ctx.frame_count / ctx.fps;
    result.bitrate_mbps = static_cast<double>(bytes) * 8.0 / duration / 1e6;
    result.ok = result.bitrate_mbps > 0.0;
    if (!result.ok)
        result.diagnostics = "encoder produced an empty output file";
    return result;
}

struct PlanExecution {
    std::vector<EncodeResult> results;      // plan order
    double segment_latency_seconds = 0.0;   // max rung wall time (concurrent-farm model)
    double total_seconds = 0.0;             // sum of rung wall times (energy proxy)
    int failures = 0;
};

// Encodes all rungs of a plan with at most `workers` concurrent encodes.
// Results are collected in plan order regardless of completion order; the
// latency/total statistics use per-encode wall times, not the pool makespan.
inline PlanExecution execute_plan(const LadderPlan& plan, const SegmentContext& ctx,
                                  const EncoderAdapter& adapter, int workers,
                                  const std::string& run_dir = "") {
    require(workers >= 1, ErrorKind::validation, "execute_plan needs at least one worker");
    adapter.validate();

    PlanExecution exec;
    exec.results.resize(plan.rungs.size());
    if (plan.rungs.empty())
        return exec;

    std::optional<double> timeout;
    if (!plan.budget.unbounded)
        timeout = adapter.timeout_factor * plan.budget.seconds;

    // Inputs per distinct resolution are prepared once, before the pool runs.
    std::vector<std::pair<Resolution, std::string>> inputs;
    if (adapter.kind == EncoderAdapter::Kind::external) {
        require(ctx.pixels != nullptr, ErrorKind::validation,
                "external encoding requires segment pixel data");
        std::filesystem::create_directories(run_dir);
        for (const Representation& rep : plan.rungs) {
            const bool seen = std::any_of(inputs.begin(), inputs.end(), [&](const auto& p) {
                return p.first == rep.resolution;
            });
            if (seen)
                continue;
            const std::string path =
                (std::filesystem::path(run_dir) /
                 (ctx.id + "_" + std::to_string(rep.resolution.height) + "p_in.yuv"))
                    .string();
            write_yuv420(resample(*ctx.pixels, rep.resolution), path);
            inputs.emplace_back(rep.resolution, path);
        }
    }
    const auto input_for = [&](const Resolution& r) -> std::string {
        for (const auto& [res, path] : inputs)
            if (res == r)
                return path;
        return "";
    };

    std::atomic<std::size_t> cursor{0};
    const auto work = [&] {
        for (std::size_t i = cursor.fetch_add(1); i < plan.rungs.size(); i = cursor.fetch_add(1)) {
            try {
                exec.results[i] = encode_representation(ctx, plan.rungs[i], adapter, run_dir,
                                                        timeout, input_for(plan.rungs[i].resolution));
            } catch (const Error& e) {
                exec.results[i].representation = plan.rungs[i];
                exec.results[i].ok = false;
                exec.results[i].diagnostics = e.what();
            }
        }
    };
    const int nthreads = std::min<int>(workers, static_cast<int>(plan.rungs.size()));
    if (nthreads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }

    for (const EncodeResult& r : exec.results) {
        if (!r.ok) {
            ++exec.failures;
            continue;
        }
        exec.segment_latency_seconds = std::max(exec.segment_latency_seconds, r.wall_seconds);
        exec.total_seconds += r.wall_seconds;
    }
    if (exec.failures == static_cast<int>(plan.rungs.size()))
        fail(ErrorKind::encode, "all " + std::to_string(exec.failures) +
                                    " encodes failed for segment '" + ctx.id + "'; first: " +
                                    exec.results.front().diagnostics);
    return exec;
}

}  // namespace ladre
