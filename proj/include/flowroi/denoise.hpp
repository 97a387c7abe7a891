#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "flowroi/core.hpp"

namespace flowroi {

struct DenoiseParams {
    bool enabled = true;
    int median_radius = 1;               // 3x3
    double bilateral_sigma_spatial = 2.0;
    double bilateral_sigma_range = 0.04; // on intensities normalized by maxval
    int bilateral_radius = 2;            // 5x5

    void validate() const {
        if (median_radius < 1 || bilateral_radius < 1)
            throw usage_error("denoise: radii must be >= 1");
        if (bilateral_sigma_spatial <= 0 || bilateral_sigma_range <= 0)
            throw usage_error("denoise: sigmas must be > 0");
    }
};

// Median over a (2r+1)^2 window with edge replication. The window always has
// an odd element count, so the median is an order statistic of the samples.
inline Frame median_filter(const Frame& f, int radius) {
    Frame out(f.width, f.height, f.depth);
    std::vector<std::uint16_t> window;
    window.reserve(std::size_t(2 * radius + 1) * (2 * radius + 1));
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            window.clear();
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    window.push_back(f.at_clamped(x + dx, y + dy));
            auto mid = window.begin() + window.size() / 2;
            std::nth_element(window.begin(), mid, window.end());
            out.at(x, y) = *mid;
        }
    }
    return out;
}

// Bilateral filter. Range weights are looked up by integer intensity delta;
// the table holds exactly exp(-(d/maxval)^2 / (2 sigma_r^2)).
inline Frame bilateral_filter(const Frame& f, int radius, double sigma_spatial,
                              double sigma_range) {
    const int maxval = f.maxval();
    std::vector<double> range_lut(std::size_t(maxval) + 1);
    for (int d = 0; d <= maxval; ++d) {
        const double t = double(d) / maxval;
        range_lut[d] = std::exp(-t * t / (2.0 * sigma_range * sigma_range));
    }
    const int side = 2 * radius + 1;
    std::vector<double> spatial(std::size_t(side) * side);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            spatial[(dy + radius) * side + (dx + radius)] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial));

    Frame out(f.width, f.height, f.depth);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const int center = f.at(x, y);
            double num = 0.0, den = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int v = f.at_clamped(x + dx, y + dy);
                    const double w = spatial[(dy + radius) * side + (dx + radius)] *
                                     range_lut[std::abs(v - center)];
                    num += w * v;
                    den += w;
                }
            }
            out.at(x, y) = clamp_to_depth(num / den, f.depth);
        }
    }
    return out;
}

// Median first so impulse outliers cannot poison the bilateral range weights.
inline Frame denoise(const Frame& f, const DenoiseParams& p) {
    p.validate();
    if (!p.enabled) return f;
    Frame m = median_filter(f, p.median_radius);
    return bilateral_filter(m, p.bilateral_radius, p.bilateral_sigma_spatial,
                            p.bilateral_sigma_range);
}

}  // namespace flowroi
