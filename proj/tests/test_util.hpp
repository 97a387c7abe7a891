#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "flowroi/core.hpp"
#include "flowroi/rng.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("flowroi-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// Noise plus a smooth gradient: enough texture for registration and flow.
inline flowroi::Frame textured_frame(int w, int h, int depth, std::uint64_t seed,
                                     double noise_sigma = 12.0) {
    flowroi::Rng rng(seed);
    flowroi::Frame f(w, h, depth);
    const double unit = f.maxval() / 255.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = 0.35 * f.maxval() +
                             28.0 * unit * std::sin(2.0 * 3.14159265358979 * x / 37.0) *
                                 std::cos(2.0 * 3.14159265358979 * y / 31.0) +
                             rng.normal(0.0, noise_sigma * unit);
            f.at(x, y) = flowroi::clamp_to_depth(v, depth);
        }
    return f;
}

inline flowroi::Frame random_frame(int w, int h, int depth, std::uint64_t seed) {
    flowroi::Rng rng(seed);
    flowroi::Frame f(w, h, depth);
    for (auto& p : f.pixels) p = std::uint16_t(rng.next_u64() & std::uint64_t(f.maxval()));
    return f;
}

inline flowroi::Frame cyclic_shift(const flowroi::Frame& f, int dx, int dy) {
    flowroi::Frame out(f.width, f.height, f.depth);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const int sx = ((x - dx) % f.width + f.width) % f.width;
            const int sy = ((y - dy) % f.height + f.height) % f.height;
            out.at(x, y) = f.at(sx, sy);
        }
    return out;
}

inline flowroi::RoiMask random_mask(int w, int h, double fill, std::uint64_t seed) {
    flowroi::Rng rng(seed);
    flowroi::RoiMask m(w, h);
    for (auto& b : m.bits) b = rng.next_double() < fill ? 1 : 0;
    return m;
}

}  // namespace testutil
