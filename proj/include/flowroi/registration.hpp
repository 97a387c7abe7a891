#pragma once

#include <cmath>
#include <vector>

#include "flowroi/core.hpp"
#include "flowroi/fft.hpp"

namespace flowroi {

// Integer translation of `moving` relative to `reference`, recovered from the
// phase-correlation surface. confidence = main peak / best non-neighbor peak.
struct Shift {
    int dx = 0;
    int dy = 0;
    double confidence = 1.0;
};

constexpr double kShiftConfidenceThreshold = 1.5;
constexpr int kDefaultMaxShift = 16;

namespace detail {

// Hann-windowed, mean-removed copy of the frame, edge-replicated into a
// power-of-two grid so the transform sees no wrap discontinuity.
inline std::vector<cplx> windowed_spectrum_input(const Frame& f, int pw, int ph) {
    double mean = 0.0;
    for (auto v : f.pixels) mean += v;
    mean /= double(f.size());
    std::vector<double> wx(pw), wy(ph);
    for (int x = 0; x < pw; ++x) wx[x] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * x / pw);
    for (int y = 0; y < ph; ++y) wy[y] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * y / ph);
    std::vector<cplx> a(std::size_t(pw) * ph);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, f.height - 1);
        for (int x = 0; x < pw; ++x) {
            const int sx = std::min(x, f.width - 1);
            a[std::size_t(y) * pw + x] = (f.at(sx, sy) - mean) * wx[x] * wy[y];
        }
    }
    return a;
}

}  // namespace detail

inline Shift estimate_shift(const Frame& reference, const Frame& moving,
                            int max_shift = kDefaultMaxShift) {
    if (!reference.same_shape(moving))
        throw data_error("estimate_shift: frames must share dimensions and depth");
    if (max_shift < 1 || max_shift >= std::min(reference.width, reference.height) / 4)
        throw usage_error("estimate_shift: max_shift must be in [1, min(w,h)/4)");

    const int pw = next_pow2(reference.width);
    const int ph = next_pow2(reference.height);
    auto fa = detail::windowed_spectrum_input(reference, pw, ph);
    auto fb = detail::windowed_spectrum_input(moving, pw, ph);
    fft2d_inplace(fa, pw, ph, false);
    fft2d_inplace(fb, pw, ph, false);

    // cross-power spectrum: conj(F_ref) * F_mov, unit magnitude
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const cplx c = std::conj(fa[i]) * fb[i];
        const double m = std::abs(c);
        fa[i] = m > 1e-12 ? c / m : cplx(0.0, 0.0);
    }
    fft2d_inplace(fa, pw, ph, true);

    // search only displacements within [-max_shift, max_shift]^2; the surface
    // wraps, so negative shifts live at the far edges
    const auto surface_at = [&](int dx, int dy) {
        const int x = dx < 0 ? dx + pw : dx;
        const int y = dy < 0 ? dy + ph : dy;
        return fa[std::size_t(y) * pw + x].real();
    };
    int best_dx = 0, best_dy = 0;
    double best = -1e300;
    for (int dy = -max_shift; dy <= max_shift; ++dy)
        for (int dx = -max_shift; dx <= max_shift; ++dx)
            if (const double v = surface_at(dx, dy); v > best) {
                best = v;
                best_dx = dx;
                best_dy = dy;
            }
    double second = 0.0;
    for (int dy = -max_shift; dy <= max_shift; ++dy)
        for (int dx = -max_shift; dx <= max_shift; ++dx) {
            if (std::max(std::abs(dx - best_dx), std::abs(dy - best_dy)) <= 2) continue;
            second = std::max(second, surface_at(dx, dy));
        }

    if (best <= 0.0) return Shift{0, 0, 1.0};  // degenerate surface (blank frames)
    Shift s;
    s.dx = best_dx;
    s.dy = best_dy;
    s.confidence = best / std::max(second, 1e-12);
    return s;
}

// Undoes the estimated motion: out(x, y) = in(x + dx, y + dy), borders replicated.
inline Frame apply_shift(const Frame& f, const Shift& s) {
    if (s.dx == 0 && s.dy == 0) return f;
    Frame out(f.width, f.height, f.depth);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            out.at(x, y) = f.at_clamped(x + s.dx, y + s.dy);
    return out;
}

// Maps a mask computed in registered coordinates back to the frame's own
// coordinates (the inverse translation of apply_shift, zero fill at borders).
inline RoiMask unshift_mask(const RoiMask& m, const Shift& s) {
    if (s.dx == 0 && s.dy == 0) return m;
    RoiMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const int sx = x - s.dx, sy = y - s.dy;
            if (sx >= 0 && sx < m.width && sy >= 0 && sy < m.height)
                out.set(x, y, m.get(sx, sy));
        }
    return out;
}

}  // namespace flowroi
