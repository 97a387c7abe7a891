#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowroi {

// Error taxonomy: usage_error -> exit 1, data_error -> exit 2 in the CLI.
// Anything else escaping to main is an internal error (exit 3).
class usage_error : public std::runtime_error {
public:
    explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Single grayscale frame. Samples are carried as 16-bit regardless of depth;
// `depth` (8 or 16) bounds the valid range: every sample < 2^depth.
struct Frame {
    int width = 0;
    int height = 0;
    int depth = 8;
    std::vector<std::uint16_t> pixels;

    Frame() = default;
    Frame(int w, int h, int d, std::uint16_t fill = 0)
        : width(w), height(h), depth(d), pixels(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw data_error("frame dimensions must be positive");
        if (d != 8 && d != 16) throw data_error("unsupported bit depth " + std::to_string(d));
    }

    std::size_t size() const { return pixels.size(); }
    int maxval() const { return (1 << depth) - 1; }
    std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    // Edge-replicated access, usable outside the frame bounds.
    std::uint16_t at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }

    bool same_shape(const Frame& o) const {
        return width == o.width && height == o.height && depth == o.depth;
    }

    bool operator==(const Frame& o) const {
        return same_shape(o) && pixels == o.pixels;
    }
};

// Temporally ordered frames sharing one geometry.
struct Sequence {
    std::vector<Frame> frames;
    double frame_interval_s = 8.0;  // informational

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    const Frame& operator[](std::size_t i) const { return frames[i]; }
    Frame& operator[](std::size_t i) { return frames[i]; }

    void push(Frame f) {
        if (!frames.empty() && !frames.front().same_shape(f))
            throw data_error("sequence frames must share dimensions and depth");
        frames.push_back(std::move(f));
    }
};

// Binary per-pixel mask, 1 = region of interest.
struct RoiMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    RoiMask() = default;
    RoiMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t size() const { return bits.size(); }
    bool get(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b != 0;
        return n;
    }
    double fraction() const { return bits.empty() ? 0.0 : double(count()) / double(bits.size()); }

    bool operator==(const RoiMask& o) const {
        return width == o.width && height == o.height && bits == o.bits;
    }
};

// Dense displacement field between two frames, one (u, v) pair per pixel.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          u(static_cast<std::size_t>(w) * h, 0.0f),
          v(static_cast<std::size_t>(w) * h, 0.0f) {}

    std::size_t size() const { return u.size(); }
    float mag(std::size_t i) const { return std::hypot(u[i], v[i]); }
};

// Floating-point image plane used by flow and saliency internals.
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ImageF() = default;
    ImageF(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t size() const { return values.size(); }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }
};

// Frame intensities normalized to [0,1].
inline ImageF normalize_frame(const Frame& f) {
    ImageF out(f.width, f.height);
    const double scale = 1.0 / f.maxval();
    for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = f.pixels[i] * scale;
    return out;
}

inline std::uint16_t clamp_to_depth(double v, int depth) {
    const double maxval = double((1 << depth) - 1);
    v = std::min(std::max(v, 0.0), maxval);
    return static_cast<std::uint16_t>(std::lround(v));
}

// FNV-1a, used for content hashes embedded in reports and sweep resume keys.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace flowroi
