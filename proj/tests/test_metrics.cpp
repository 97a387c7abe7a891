#include <doctest.h>

#include "flowroi/metrics.hpp"
#include "test_util.hpp"

using namespace flowroi;

TEST_CASE("psnr of identical frames is infinite") {
    const Frame f = testutil::random_frame(32, 32, 8, 1);
    CHECK(std::isinf(psnr(f, f)));
}

TEST_CASE("a one-level uniform difference gives 48.13 dB") {
    Frame a(64, 64, 8, 100), b(64, 64, 8, 101);
    CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(2e-4));
}

TEST_CASE("region-restricted psnr separates RoI from background") {
    Frame a(64, 64, 8, 100);
    Frame b = a;
    RoiMask m(64, 64);
    for (int y = 10; y < 20; ++y)
        for (int x = 10; x < 20; ++x) {
            m.set(x, y, true);
            b.at(x, y) = 102;  // +2 inside the mask only
        }
    CHECK(psnr(a, b, &m) == doctest::Approx(42.1103).epsilon(2e-4));
    CHECK(std::isinf(psnr(a, b, &m, true)));
}

TEST_CASE("psnr is symmetric and demands matching shapes") {
    const Frame a = testutil::random_frame(24, 24, 8, 5);
    const Frame b = testutil::random_frame(24, 24, 8, 6);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK_THROWS_AS(psnr(a, testutil::random_frame(12, 12, 8, 7)), data_error);
    RoiMask empty(24, 24);
    CHECK_THROWS_AS(psnr(a, b, &empty), data_error);
}

TEST_CASE("global mse decomposes exactly over any mask partition") {
    const Frame a = testutil::random_frame(80, 60, 16, 8);
    const Frame b = testutil::random_frame(80, 60, 16, 9);
    const RoiMask m = testutil::random_mask(80, 60, 0.3, 10);
    const double f = m.fraction();
    const double lhs = mse(a, b);
    const double rhs = f * mse(a, b, &m) + (1.0 - f) * mse(a, b, &m, true);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("coverage saturates for full masks and zeroes for empty ones") {
    SyntheticSpec spec;
    spec.n_cells = 6;
    spec.n_frames = 4;
    spec.width = spec.height = 96;
    spec.seed = 31;
    auto [seq, truth] = generate_synthetic(spec);

    std::vector<RoiMask> full(4, RoiMask(96, 96, 1));
    const CoverageReport all = coverage(full, truth);
    CHECK(all.coverage_rate == 1.0);
    CHECK(all.cells_total == 24);
    CHECK(all.missed.empty());

    std::vector<RoiMask> none(4, RoiMask(96, 96));
    const CoverageReport nothing = coverage(none, truth);
    CHECK(nothing.coverage_rate == 0.0);
    CHECK(nothing.missed.size() == 24);
}

TEST_CASE("coverage splits by contrast floor") {
    SyntheticSpec spec;
    spec.n_cells = 10;
    spec.n_frames = 2;
    spec.width = spec.height = 128;
    spec.low_contrast_fraction = 0.2;
    spec.seed = 12;
    auto [seq, truth] = generate_synthetic(spec);
    std::vector<RoiMask> full(2, RoiMask(128, 128, 1));
    const CoverageReport rep = coverage(full, truth, 2.0 * spec.noise_sigma);
    CHECK(rep.cells_total == 20);
    CHECK(rep.high_contrast_total == 16);  // 2 of 10 cells are low-contrast
    CHECK(rep.high_contrast_rate == 1.0);
}

TEST_CASE("rate curve rows behave like an embedded codec") {
    SyntheticSpec spec;
    spec.n_cells = 6;
    spec.n_frames = 3;
    spec.width = spec.height = 256;
    spec.contrast_min = 30;
    spec.contrast_max = 60;
    spec.low_contrast_fraction = 0;
    spec.seed = 21;
    auto [seq, truth] = generate_synthetic(spec);
    const auto rows = rate_curve(seq, truth.masks, CodecParams{}, {20.0, 40.0, 80.0}, &truth, 2);
    REQUIRE(rows.size() == 6);  // flowroi + uniform per rate

    double prev_flowroi = 1e18, prev_uniform = 1e18;
    for (const auto& r : rows) {
        CHECK(r.achieved_ratio >= r.rate * 0.999);
        if (r.method == "flowroi") {
            CHECK(r.psnr_global <= prev_flowroi + 0.01);
            prev_flowroi = r.psnr_global;
        } else {
            CHECK(r.psnr_global <= prev_uniform + 0.01);
            prev_uniform = r.psnr_global;
        }
    }
    // at every rate the RoI side must win inside the cells
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
        REQUIRE(rows[i].method == "flowroi");
        REQUIRE(rows[i + 1].method == "uniform");
        CHECK(rows[i].psnr_roi > rows[i + 1].psnr_roi);
    }
}

TEST_CASE("empty-mask rate curve collapses to the uniform baseline") {
    SyntheticSpec spec;
    spec.n_cells = 3;
    spec.n_frames = 2;
    spec.width = spec.height = 96;
    spec.seed = 2;
    auto [seq, truth] = generate_synthetic(spec);
    std::vector<RoiMask> empty(2, RoiMask(96, 96));
    const auto rows = rate_curve(seq, empty, CodecParams{}, {30.0}, &truth, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].psnr_global == rows[1].psnr_global);
    CHECK(rows[0].psnr_roi == rows[1].psnr_roi);
    CHECK(rows[0].achieved_ratio == rows[1].achieved_ratio);
}

TEST_CASE("rate curve validates its rate list") {
    SyntheticSpec spec;
    spec.n_cells = 1;
    spec.n_frames = 2;
    spec.width = spec.height = 64;
    auto [seq, truth] = generate_synthetic(spec);
    CHECK_THROWS_AS(rate_curve(seq, truth.masks, CodecParams{}, {40.0, 20.0}, nullptr, 1),
                    usage_error);
}
