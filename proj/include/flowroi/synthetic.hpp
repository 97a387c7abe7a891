#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flowroi/core.hpp"
#include "flowroi/rng.hpp"

namespace flowroi {

// Parameters of the synthetic migration benchmark. Contrast and noise are
// expressed in 8-bit gray levels and rescaled internally for 16-bit output.
struct SyntheticSpec {
    int n_cells = 20;
    double radius_min = 6.0, radius_max = 14.0;      // px
    double contrast_min = 20.0, contrast_max = 60.0; // gray levels (8-bit scale)
    double speed_min = 1.0, speed_max = 3.0;         // px/frame
    double noise_sigma = 4.0;                        // static white background noise, gray levels
    double temporal_noise_sigma = 1.0;               // per-frame sensor noise, gray levels
    double background_texture = 2.0;                 // multi-scale static texture, gray levels
    double cell_texture = 3.0;                       // cell internal texture, gray levels
    int n_debris = 25;                               // static textured blobs (dust, dead cells)
    double low_contrast_fraction = 0.05;             // fraction of cells near noise floor
    int n_frames = 50;
    int width = 512;
    int height = 512;
    int depth = 8;
    std::uint64_t seed = 7;

    void validate() const {
        if (width <= 0 || height <= 0) throw usage_error("synthetic: dimensions must be positive");
        if (depth != 8 && depth != 16) throw usage_error("synthetic: depth must be 8 or 16");
        if (n_cells < 0 || n_frames <= 0) throw usage_error("synthetic: counts must be non-negative");
        if (radius_min <= 0 || radius_max < radius_min)
            throw usage_error("synthetic: bad radius range");
        if (radius_max >= std::min(width, height) / 2.0)
            throw usage_error("synthetic: cell radius exceeds image half-size");
        if (contrast_min <= 0 || contrast_max < contrast_min)
            throw usage_error("synthetic: bad contrast range");
        if (speed_min < 0 || speed_max < speed_min) throw usage_error("synthetic: bad speed range");
        if (noise_sigma < 0 || temporal_noise_sigma < 0)
            throw usage_error("synthetic: noise sigmas must be >= 0");
        if (background_texture < 0 || cell_texture < 0)
            throw usage_error("synthetic: texture amplitudes must be >= 0");
        if (n_debris < 0) throw usage_error("synthetic: n_debris must be >= 0");
        if (low_contrast_fraction < 0 || low_contrast_fraction > 1)
            throw usage_error("synthetic: low-contrast fraction must be in [0,1]");
    }
};

struct TrackPoint {
    double x = 0, y = 0;
};

struct CellTrack {
    int id = 0;
    double radius = 0;
    double contrast = 0;             // peak amplitude in native gray levels
    bool low_contrast = false;
    std::vector<TrackPoint> centers; // one per frame
};

struct GroundTruth {
    std::vector<RoiMask> masks;      // one per frame, 1 = inside some cell
    std::vector<CellTrack> tracks;
    double noise_sigma = 0;          // native gray levels, for contrast-floor splits
};

namespace detail {

// Multi-octave value noise: white noise smoothed at several scales, each
// octave renormalized to unit standard deviation before weighting. Gives the
// power-law-ish spectra of real micrographs, so wavelet coefficients spread
// across many bitplanes instead of piling up at one noise plane.
inline ImageF multiscale_texture(int w, int h, Rng& rng, const double* sigmas,
                                 const double* amps, int octaves) {
    ImageF out(w, h);
    std::vector<double> field(out.size()), tmp(out.size());
    for (int oct = 0; oct < octaves; ++oct) {
        for (auto& v : field) v = rng.normal();
        const double s = sigmas[oct];
        const int radius = std::max(1, int(std::ceil(2.5 * s)));
        std::vector<double> k(2 * radius + 1);
        double ksum = 0;
        for (int t = -radius; t <= radius; ++t) {
            k[t + radius] = std::exp(-double(t) * t / (2.0 * s * s));
            ksum += k[t + radius];
        }
        for (auto& v : k) v /= ksum;
        // separable blur with edge replication
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0;
                for (int t = -radius; t <= radius; ++t)
                    acc += k[t + radius] * field[std::size_t(y) * w + std::clamp(x + t, 0, w - 1)];
                tmp[std::size_t(y) * w + x] = acc;
            }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0;
                for (int t = -radius; t <= radius; ++t)
                    acc += k[t + radius] * tmp[std::size_t(std::clamp(y + t, 0, h - 1)) * w + x];
                field[std::size_t(y) * w + x] = acc;
            }
        double var = 0;
        for (const double v : field) var += v * v;
        const double inv_std = var > 0 ? 1.0 / std::sqrt(var / double(field.size())) : 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += amps[oct] * field[i] * inv_std;
    }
    return out;
}

// Persistent random walk: fixed speed, diffusing heading, reflected at the
// margins so every center stays at least `radius` inside the image.
inline void advance_walk(TrackPoint& p, double& angle, double speed, double rmargin,
                         int width, int height, Rng& rng) {
    angle += rng.normal(0.0, 0.4);
    p.x += speed * std::cos(angle);
    p.y += speed * std::sin(angle);
    const double xlo = rmargin, xhi = width - 1 - rmargin;
    const double ylo = rmargin, yhi = height - 1 - rmargin;
    if (p.x < xlo) { p.x = 2 * xlo - p.x; angle = 3.14159265358979323846 - angle; }
    if (p.x > xhi) { p.x = 2 * xhi - p.x; angle = 3.14159265358979323846 - angle; }
    if (p.y < ylo) { p.y = 2 * ylo - p.y; angle = -angle; }
    if (p.y > yhi) { p.y = 2 * yhi - p.y; angle = -angle; }
    p.x = std::clamp(p.x, xlo, xhi);
    p.y = std::clamp(p.y, ylo, yhi);
}

}  // namespace detail

// Generates Gaussian-profile blobs on a noisy, gently shaded background.
// Pure function of the spec: a fixed seed reproduces the dataset bit for bit.
inline std::pair<Sequence, GroundTruth> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int maxval = (1 << spec.depth) - 1;
    const double unit = maxval / 255.0;  // gray-level unit at this depth
    const double base = 0.25 * maxval;
    const double shade_amp = 10.0 * unit;

    GroundTruth truth;
    truth.noise_sigma = spec.noise_sigma * unit;
    truth.tracks.resize(spec.n_cells);
    const int n_low = int(std::floor(spec.n_cells * spec.low_contrast_fraction));
    std::vector<double> angles(spec.n_cells, 0.0);
    std::vector<double> speeds(spec.n_cells, 0.0);
    std::vector<ImageF> patches(spec.n_cells);  // per-cell internal texture
    std::vector<int> patch_half(spec.n_cells, 0);
    for (int c = 0; c < spec.n_cells; ++c) {
        auto& t = truth.tracks[c];
        t.id = c;
        t.radius = rng.uniform(spec.radius_min, spec.radius_max);
        t.low_contrast = c < n_low;
        // low-contrast cells sit near the noise floor (peak <= 1.5 sigma)
        const double contrast8 = t.low_contrast
                                     ? rng.uniform(0.75, 1.5) * std::max(spec.noise_sigma, 1.0)
                                     : rng.uniform(spec.contrast_min, spec.contrast_max);
        t.contrast = contrast8 * unit;
        const double m = t.radius + 2.0;
        TrackPoint p{rng.uniform(m, spec.width - 1 - m), rng.uniform(m, spec.height - 1 - m)};
        t.centers.push_back(p);
        angles[c] = rng.uniform(0.0, 6.283185307179586);
        speeds[c] = rng.uniform(spec.speed_min, spec.speed_max);

        patch_half[c] = int(std::ceil(1.5 * t.radius)) + 2;
        const int side = 2 * patch_half[c] + 1;
        const double psig[3] = {1.6, 3.0, 5.5};
        const double pamp[3] = {0.5, 0.45, 0.4};
        patches[c] = detail::multiscale_texture(side, side, rng, psig, pamp, 3);
    }
    for (int f = 1; f < spec.n_frames; ++f) {
        for (int c = 0; c < spec.n_cells; ++c) {
            auto& t = truth.tracks[c];
            TrackPoint p = t.centers.back();
            detail::advance_walk(p, angles[c], speeds[c], t.radius + 2.0, spec.width,
                                 spec.height, rng);
            t.centers.push_back(p);
        }
    }

    // static background: low-frequency illumination shading, a multi-scale
    // texture, and a white-noise floor, all shared by every frame so only the
    // cells (and sensor noise) change over time
    const double bsig[4] = {1.2, 2.5, 5.0, 10.0};
    const double bamp[4] = {0.45 * spec.background_texture * unit,
                            0.55 * spec.background_texture * unit,
                            0.65 * spec.background_texture * unit,
                            0.80 * spec.background_texture * unit};
    ImageF background =
        spec.background_texture > 0
            ? detail::multiscale_texture(spec.width, spec.height, rng, bsig, bamp, 4)
            : ImageF(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            background.at(x, y) +=
                base +
                shade_amp * std::sin(3.14159265358979323846 * x / spec.width) *
                    std::sin(3.14159265358979323846 * y / spec.height) +
                rng.normal(0.0, spec.noise_sigma * unit);

    // static debris: motionless textured blobs (dust, dead cells, medium
    // structure). They carry real image content that a motion-driven RoI
    // rightly leaves at background priority.
    for (int d = 0; d < spec.n_debris; ++d) {
        const double radius = rng.uniform(3.0, 11.0);
        const double amp = rng.uniform(12.0, 45.0) * unit;
        const double cx = rng.uniform(radius, spec.width - 1 - radius);
        const double cy = rng.uniform(radius, spec.height - 1 - radius);
        const int half = int(std::ceil(1.5 * radius)) + 2;
        const double dsig[2] = {0.8, 2.0};
        const double damp[2] = {0.55, 0.45};
        const ImageF patch =
            detail::multiscale_texture(2 * half + 1, 2 * half + 1, rng, dsig, damp, 2);
        const double sigma = radius / 2.0;
        const int reach = int(std::ceil(3.0 * sigma));
        for (int y = std::max(0, int(cy) - reach);
             y <= std::min(spec.height - 1, int(cy) + reach); ++y)
            for (int x = std::max(0, int(cx) - reach);
                 x <= std::min(spec.width - 1, int(cx) + reach); ++x) {
                const double dx = x - cx, dy = y - cy;
                const double envelope = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                const double tex = patch.at(std::clamp(int(dx) + half, 0, 2 * half),
                                            std::clamp(int(dy) + half, 0, 2 * half));
                background.at(x, y) += amp * envelope * (0.6 + 0.8 * tex);
            }
    }

    // bilinear patch lookup so cell texture translates rigidly with the cell
    const auto patch_at = [](const ImageF& p, double u, double v) {
        u = std::clamp(u, 0.0, double(p.width - 1));
        v = std::clamp(v, 0.0, double(p.height - 1));
        const int x0 = std::min(int(u), p.width - 2 < 0 ? 0 : p.width - 2);
        const int y0 = std::min(int(v), p.height - 2 < 0 ? 0 : p.height - 2);
        const double fx = u - x0, fy = v - y0;
        return p.at(x0, y0) * (1 - fx) * (1 - fy) + p.at(x0 + 1, y0) * fx * (1 - fy) +
               p.at(x0, y0 + 1) * (1 - fx) * fy + p.at(x0 + 1, y0 + 1) * fx * fy;
    };

    Sequence seq;
    seq.frames.reserve(spec.n_frames);
    truth.masks.reserve(spec.n_frames);
    const double sensor = spec.temporal_noise_sigma * unit;
    for (int f = 0; f < spec.n_frames; ++f) {
        ImageF img = background;
        if (sensor > 0.0)
            for (std::size_t i = 0; i < img.size(); ++i) img.values[i] += rng.normal(0.0, sensor);

        RoiMask mask(spec.width, spec.height);
        for (std::size_t c = 0; c < truth.tracks.size(); ++c) {
            const auto& t = truth.tracks[c];
            const TrackPoint p = t.centers[f];
            // flat-top profile with a cosine rim: the cell body carries its
            // full texture amplitude out to the labeled boundary, where the
            // intensity rolls off to zero
            const int reach = int(std::ceil(t.radius)) + 1;
            const int x0 = std::max(0, int(std::floor(p.x)) - reach);
            const int x1 = std::min(spec.width - 1, int(std::ceil(p.x)) + reach);
            const int y0 = std::max(0, int(std::floor(p.y)) - reach);
            const int y1 = std::min(spec.height - 1, int(std::ceil(p.y)) + reach);
            // faint cells stay faint: texture never exceeds half the contrast
            const double tex_amp = std::min(spec.cell_texture * unit, 0.5 * t.contrast);
            const double rim = 0.8 * t.radius;
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - p.x, dy = y - p.y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 > t.radius * t.radius) continue;
                    const double d = std::sqrt(d2);
                    const double envelope =
                        d <= rim ? 1.0
                                 : 0.5 * (1.0 + std::cos(3.14159265358979323846 * (d - rim) /
                                                         (t.radius - rim)));
                    const double texture =
                        tex_amp * patch_at(patches[c], dx + patch_half[c], dy + patch_half[c]);
                    img.at(x, y) += envelope * (t.contrast + texture);
                    mask.set(x, y, true);
                }
            }
        }

        Frame frame(spec.width, spec.height, spec.depth);
        for (std::size_t i = 0; i < img.size(); ++i)
            frame.pixels[i] = clamp_to_depth(img.values[i], spec.depth);
        seq.frames.push_back(std::move(frame));
        truth.masks.push_back(std::move(mask));
    }
    return {std::move(seq), std::move(truth)};
}

}  // namespace flowroi
