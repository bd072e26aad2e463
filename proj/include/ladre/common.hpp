#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ladre {

enum class ErrorKind {
    io,          // unreadable, truncated or unwritable files
    validation,  // bad arguments, malformed config or schema mismatch
    encode,      // encoder subprocess failure or timeout
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition)
        fail(kind, message);
}

// splitmix64. Used for seed derivation and as the random stream everywhere;
// the std:: engines are portable but the std:: distributions are not, and
// artifacts must be reproducible across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_); }

    // Unbiased draw in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0)
            fail(ErrorKind::internal, "Rng::below called with bound 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next();
        while (x >= limit)
            x = next();
        return x % bound;
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

inline std::uint64_t hash_string(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Results must be
// written to preallocated slots so the outcome is schedule-independent.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    if (count == 0)
        return;
    const std::size_t nthreads =
        std::min<std::size_t>(count, workers <= 1 ? 1 : static_cast<std::size_t>(workers));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([t, count, nthreads, &fn] {
            for (std::size_t i = t; i < count; i += nthreads)
                fn(i);
        });
    }
    for (auto& th : pool)
        th.join();
}

}  // namespace ladre
