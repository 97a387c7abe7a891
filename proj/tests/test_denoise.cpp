#include <doctest.h>

#include <algorithm>

#include "flowroi/denoise.hpp"
#include "test_util.hpp"

using namespace flowroi;

namespace {

// Reference implementations, written directly from the filter definitions and
// independent of the library code paths.
Frame oracle_median(const Frame& f, int radius) {
    Frame out(f.width, f.height, f.depth);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            std::vector<int> vals;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    vals.push_back(f.at_clamped(x + dx, y + dy));
            std::sort(vals.begin(), vals.end());
            out.at(x, y) = std::uint16_t(vals[vals.size() / 2]);
        }
    return out;
}

Frame oracle_bilateral(const Frame& f, int radius, double ss, double sr) {
    Frame out(f.width, f.height, f.depth);
    const double maxval = f.maxval();
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double num = 0, den = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double v = f.at_clamped(x + dx, y + dy);
                    const double dr = (v - f.at(x, y)) / maxval;
                    const double w = std::exp(-(dx * dx + dy * dy) / (2 * ss * ss)) *
                                     std::exp(-dr * dr / (2 * sr * sr));
                    num += w * v;
                    den += w;
                }
            out.at(x, y) = clamp_to_depth(num / den, f.depth);
        }
    return out;
}

}  // namespace

TEST_CASE("filters are identities on constant frames") {
    const Frame f(24, 18, 8, 77);
    CHECK(median_filter(f, 1) == f);
    CHECK(bilateral_filter(f, 2, 2.0, 0.04) == f);
    DenoiseParams p;
    CHECK(denoise(f, p) == f);
}

TEST_CASE("3x3 median picks the sorted middle value") {
    Frame f(3, 3, 8);
    const std::uint16_t vals[9] = {1, 2, 100, 4, 5, 6, 7, 8, 9};
    std::copy(vals, vals + 9, f.pixels.begin());
    const Frame m = median_filter(f, 1);
    CHECK(m.at(1, 1) == 6);  // sorted: 1 2 4 5 6 7 8 9 100
    CHECK(m == oracle_median(f, 1));
}

TEST_CASE("both filters match the reference implementation") {
    const Frame f = testutil::textured_frame(48, 40, 8, 909);
    const Frame m = median_filter(f, 1);
    const Frame mo = oracle_median(f, 1);
    CHECK(m == mo);

    const Frame b = bilateral_filter(f, 2, 2.0, 0.04);
    const Frame bo = oracle_bilateral(f, 2, 2.0, 0.04);
    int maxdiff = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
        maxdiff = std::max(maxdiff, std::abs(int(b.pixels[i]) - int(bo.pixels[i])));
    CHECK(maxdiff <= 1);  // the implementations may round the same sum differently
}

TEST_CASE("impulses are removed while the blob peak survives") {
    Frame f(64, 64, 8, 100);
    // gaussian blob, peak +80 at (32,32), sigma 6
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double d2 = (x - 32.0) * (x - 32.0) + (y - 32.0) * (y - 32.0);
            f.at(x, y) = clamp_to_depth(100.0 + 80.0 * std::exp(-d2 / 72.0), 8);
        }
    Frame noisy = f;
    Rng rng(5);
    for (int k = 0; k < 40; ++k) {
        const int x = int(rng.next_below(64)), y = int(rng.next_below(64));
        if (std::hypot(x - 32.0, y - 32.0) < 12) continue;  // keep the blob clean
        noisy.at(x, y) = 255;
    }
    DenoiseParams p;
    const Frame d = denoise(noisy, p);
    for (int y = 1; y < 63; ++y)
        for (int x = 1; x < 63; ++x)
            if (noisy.at(x, y) == 255 && f.at(x, y) != 255)
                CHECK(d.at(x, y) < 140);  // impulse gone
    const double peak_drop = (f.at(32, 32) - 100.0 - (d.at(32, 32) - 100.0)) /
                             (f.at(32, 32) - 100.0);
    CHECK(peak_drop < 0.10);
}

TEST_CASE("median commutes with monotone intensity remapping") {
    Rng rng(42);
    // strictly increasing random remap over [0, 255]
    std::vector<std::uint16_t> remap(256);
    std::uint16_t acc = 0;
    for (int v = 0; v < 256; ++v) {
        acc = std::uint16_t(acc + 1 + rng.next_below(200));
        remap[v] = acc;
    }
    for (int trial = 0; trial < 50; ++trial) {
        Frame f = testutil::random_frame(9, 9, 8, 1000 + trial);
        Frame mapped(9, 9, 16);
        for (std::size_t i = 0; i < f.size(); ++i) mapped.pixels[i] = remap[f.pixels[i]];
        const Frame a = median_filter(mapped, 1);
        const Frame b = median_filter(f, 1);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.pixels[i] == remap[b.pixels[i]]);
    }
}

TEST_CASE("denoise preserves shape and is disabled cleanly") {
    const Frame f = testutil::textured_frame(33, 21, 16, 8);
    DenoiseParams p;
    const Frame d = denoise(f, p);
    CHECK(d.width == f.width);
    CHECK(d.height == f.height);
    CHECK(d.depth == f.depth);
    p.enabled = false;
    CHECK(denoise(f, p) == f);
}

TEST_CASE("bad parameters are rejected at validation") {
    DenoiseParams p;
    p.median_radius = 0;
    CHECK_THROWS_AS(p.validate(), usage_error);
    p = DenoiseParams{};
    p.bilateral_sigma_range = 0.0;
    CHECK_THROWS_AS(p.validate(), usage_error);
}
