#pragma once

#include <cstdint>
#include <vector>

#include "flowroi/core.hpp"

namespace flowroi {

// Multi-level reversible 5/3 decomposition in the canonical in-place layout:
// the top-left quadrant chain holds the coarser levels, with ceil/floor
// splitting for odd extents. Coefficients are DC-shifted integers.
struct SubbandGrid {
    int width = 0;
    int height = 0;
    int levels = 0;
    int depth = 8;
    std::vector<std::int32_t> coeffs;

    std::int32_t at(int x, int y) const { return coeffs[std::size_t(y) * width + x]; }
    std::int32_t& at(int x, int y) { return coeffs[std::size_t(y) * width + x]; }
};

enum class SubbandKind { LL, HL, LH, HH };

struct Subband {
    int level = 0;  // 1 = finest
    SubbandKind kind = SubbandKind::LL;
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

namespace detail {

// One reversible 5/3 lifting pass over an interleaved signal with
// whole-sample symmetric extension. C++20 guarantees arithmetic >> on
// negatives, which is exactly the floor division the lifting needs.
inline void lift_53_forward(std::vector<std::int32_t>& x) {
    const int n = int(x.size());
    if (n < 2) return;
    for (int i = 1; i < n; i += 2) {
        const int r = i + 1 < n ? i + 1 : n - 2;
        x[i] -= (x[i - 1] + x[r]) >> 1;
    }
    for (int i = 0; i < n; i += 2) {
        const int l = i > 0 ? i - 1 : 1;
        const int r = i + 1 < n ? i + 1 : n - 2;
        x[i] += (x[l] + x[r] + 2) >> 2;
    }
}

inline void lift_53_inverse(std::vector<std::int32_t>& x) {
    const int n = int(x.size());
    if (n < 2) return;
    for (int i = 0; i < n; i += 2) {
        const int l = i > 0 ? i - 1 : 1;
        const int r = i + 1 < n ? i + 1 : n - 2;
        x[i] -= (x[l] + x[r] + 2) >> 2;
    }
    for (int i = 1; i < n; i += 2) {
        const int r = i + 1 < n ? i + 1 : n - 2;
        x[i] += (x[i - 1] + x[r]) >> 1;
    }
}

inline void deinterleave(const std::vector<std::int32_t>& x, std::vector<std::int32_t>& out) {
    const int n = int(x.size());
    const int half = (n + 1) / 2;
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i % 2 == 0) out[i / 2] = x[i];
        else out[half + i / 2] = x[i];
    }
}

inline void interleave(const std::vector<std::int32_t>& x, std::vector<std::int32_t>& out) {
    const int n = int(x.size());
    const int half = (n + 1) / 2;
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i % 2 == 0) out[i] = x[i / 2];
        else out[i] = x[half + i / 2];
    }
}

}  // namespace detail

inline int dwt_level_extent(int n, int level) {
    for (int l = 0; l < level; ++l) n = (n + 1) / 2;
    return n;
}

// Subbands in embedded coding order: the final LL first, then detail bands
// from the coarsest level down to the finest.
inline std::vector<Subband> subband_layout(int width, int height, int levels) {
    std::vector<Subband> bands;
    bands.push_back({levels, SubbandKind::LL, 0, 0, dwt_level_extent(width, levels),
                     dwt_level_extent(height, levels)});
    for (int l = levels; l >= 1; --l) {
        const int w = dwt_level_extent(width, l - 1);
        const int h = dwt_level_extent(height, l - 1);
        const int cw = (w + 1) / 2, ch = (h + 1) / 2;
        bands.push_back({l, SubbandKind::HL, cw, 0, w - cw, ch});
        bands.push_back({l, SubbandKind::LH, 0, ch, cw, h - ch});
        bands.push_back({l, SubbandKind::HH, cw, ch, w - cw, h - ch});
    }
    return bands;
}

inline SubbandGrid dwt_forward(const Frame& frame, int levels) {
    if (levels < 1) throw usage_error("dwt: levels must be >= 1");
    if (frame.width < (1 << levels) || frame.height < (1 << levels))
        throw data_error("dwt: frame too small for " + std::to_string(levels) + " levels");
    SubbandGrid g;
    g.width = frame.width;
    g.height = frame.height;
    g.levels = levels;
    g.depth = frame.depth;
    g.coeffs.resize(frame.size());
    const std::int32_t dc = 1 << (frame.depth - 1);
    for (std::size_t i = 0; i < frame.size(); ++i)
        g.coeffs[i] = std::int32_t(frame.pixels[i]) - dc;

    std::vector<std::int32_t> line, scratch;
    for (int l = 0; l < levels; ++l) {
        const int w = dwt_level_extent(frame.width, l);
        const int h = dwt_level_extent(frame.height, l);
        for (int y = 0; y < h; ++y) {
            line.assign(g.coeffs.begin() + std::size_t(y) * g.width,
                        g.coeffs.begin() + std::size_t(y) * g.width + w);
            detail::lift_53_forward(line);
            detail::deinterleave(line, scratch);
            std::copy(scratch.begin(), scratch.end(), g.coeffs.begin() + std::size_t(y) * g.width);
        }
        for (int x = 0; x < w; ++x) {
            line.resize(h);
            for (int y = 0; y < h; ++y) line[y] = g.at(x, y);
            detail::lift_53_forward(line);
            detail::deinterleave(line, scratch);
            for (int y = 0; y < h; ++y) g.at(x, y) = scratch[y];
        }
    }
    return g;
}

inline Frame dwt_inverse(const SubbandGrid& grid) {
    SubbandGrid g = grid;
    std::vector<std::int32_t> line, scratch;
    for (int l = g.levels - 1; l >= 0; --l) {
        const int w = dwt_level_extent(g.width, l);
        const int h = dwt_level_extent(g.height, l);
        for (int x = 0; x < w; ++x) {
            line.resize(h);
            for (int y = 0; y < h; ++y) line[y] = g.at(x, y);
            detail::interleave(line, scratch);
            detail::lift_53_inverse(scratch);
            for (int y = 0; y < h; ++y) g.at(x, y) = scratch[y];
        }
        for (int y = 0; y < h; ++y) {
            line.assign(g.coeffs.begin() + std::size_t(y) * g.width,
                        g.coeffs.begin() + std::size_t(y) * g.width + w);
            detail::interleave(line, scratch);
            detail::lift_53_inverse(scratch);
            std::copy(scratch.begin(), scratch.end(), g.coeffs.begin() + std::size_t(y) * g.width);
        }
    }
    Frame f(g.width, g.height, g.depth);
    const std::int32_t dc = 1 << (g.depth - 1);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.pixels[i] = clamp_to_depth(double(g.coeffs[i] + dc), g.depth);
    return f;
}

}  // namespace flowroi
