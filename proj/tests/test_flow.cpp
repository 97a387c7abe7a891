#include <doctest.h>

#include <array>

#include "flowroi/flow.hpp"
#include "flowroi/synthetic.hpp"
#include "test_util.hpp"

using namespace flowroi;

namespace {

// Direct dense weighted-least-squares fit of f ~ x'Ax + b'x + c at one pixel,
// solving the full 6x6 normal equations; independent of the separable path.
struct LocalFit {
    double c, bx, by, a11, a22, a12;
};

LocalFit oracle_poly_fit(const ImageF& img, int px, int py, int poly_n, double sigma) {
    const int r = (poly_n - 1) / 2;
    double normal[6][6] = {};
    double rhs[6] = {};
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            const double basis[6] = {1.0,
                                     double(dx),
                                     double(dy),
                                     double(dx) * dx,
                                     double(dy) * dy,
                                     double(dx) * dy};
            const double v = img.at_clamped(px + dx, py + dy);
            for (int i = 0; i < 6; ++i) {
                rhs[i] += w * basis[i] * v;
                for (int j = 0; j < 6; ++j) normal[i][j] += w * basis[i] * basis[j];
            }
        }
    // gaussian elimination with partial pivoting
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int row = col + 1; row < 6; ++row)
            if (std::abs(normal[row][col]) > std::abs(normal[piv][col])) piv = row;
        for (int j = 0; j < 6; ++j) std::swap(normal[col][j], normal[piv][j]);
        std::swap(rhs[col], rhs[piv]);
        for (int row = 0; row < 6; ++row) {
            if (row == col) continue;
            const double k = normal[row][col] / normal[col][col];
            for (int j = col; j < 6; ++j) normal[row][j] -= k * normal[col][j];
            rhs[row] -= k * rhs[col];
        }
    }
    double q[6];
    for (int i = 0; i < 6; ++i) q[i] = rhs[i] / normal[i][i];
    return {q[0], q[1], q[2], q[3], q[4], 0.5 * q[5]};
}

ImageF ramp_image(int w, int h, double alpha) {
    ImageF img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = alpha * x;
    return img;
}

}  // namespace

TEST_CASE("expansion of a constant frame is the constant") {
    ImageF img(32, 32, 0.42);
    const PolyExpansion e = polynomial_expansion(img, 5, 1.1);
    for (int y = 4; y < 28; ++y)
        for (int x = 4; x < 28; ++x) {
            const std::size_t i = std::size_t(y) * 32 + x;
            REQUIRE(e.c[i] == doctest::Approx(0.42).epsilon(1e-12));
            REQUIRE(std::abs(e.bx[i]) < 1e-12);
            REQUIRE(std::abs(e.by[i]) < 1e-12);
            REQUIRE(std::abs(e.a11[i]) < 1e-12);
            REQUIRE(std::abs(e.a22[i]) < 1e-12);
            REQUIRE(std::abs(e.a12[i]) < 1e-12);
        }
}

TEST_CASE("expansion recovers a linear ramp exactly on the interior") {
    const double alpha = 0.0125;
    const ImageF img = ramp_image(40, 30, alpha);
    const PolyExpansion e = polynomial_expansion(img, 5, 1.1);
    for (int y = 3; y < 27; ++y)
        for (int x = 3; x < 37; ++x) {
            const std::size_t i = std::size_t(y) * 40 + x;
            REQUIRE(e.bx[i] == doctest::Approx(alpha).epsilon(1e-6));
            REQUIRE(std::abs(e.by[i]) < 1e-6);
            REQUIRE(std::abs(e.a11[i]) < 1e-6);
            REQUIRE(std::abs(e.a12[i]) < 1e-6);
        }
}

TEST_CASE("expansion matches the dense least-squares oracle at random pixels") {
    Rng rng(31);
    ImageF img(48, 48);
    for (auto& v : img.values) v = rng.next_double();
    const PolyExpansion e = polynomial_expansion(img, 5, 1.1);
    for (int k = 0; k < 10; ++k) {
        const int px = 4 + int(rng.next_below(40));
        const int py = 4 + int(rng.next_below(40));
        const LocalFit fit = oracle_poly_fit(img, px, py, 5, 1.1);
        const std::size_t i = std::size_t(py) * 48 + px;
        CHECK(e.c[i] == doctest::Approx(fit.c).epsilon(1e-9));
        CHECK(e.bx[i] == doctest::Approx(fit.bx).epsilon(1e-9));
        CHECK(e.by[i] == doctest::Approx(fit.by).epsilon(1e-9));
        CHECK(e.a11[i] == doctest::Approx(fit.a11).epsilon(1e-9));
        CHECK(e.a22[i] == doctest::Approx(fit.a22).epsilon(1e-9));
        CHECK(e.a12[i] == doctest::Approx(fit.a12).epsilon(1e-9));
    }
}

TEST_CASE("expansion of f = x^2 has unit curvature inside") {
    ImageF img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(x, y) = double(x) * x;
    const PolyExpansion e = polynomial_expansion(img, 5, 1.1);
    for (int y = 4; y < 28; ++y)
        for (int x = 4; x < 28; ++x) {
            const std::size_t i = std::size_t(y) * 32 + x;
            REQUIRE(e.a11[i] == doctest::Approx(1.0).epsilon(1e-3));
        }
}

TEST_CASE("flow between identical frames is exactly zero") {
    const Frame f = testutil::textured_frame(96, 80, 8, 21);
    const FlowField flow = compute_flow(f, f, FlowParams{});
    for (std::size_t i = 0; i < flow.size(); ++i) {
        REQUIRE(flow.u[i] == 0.0f);
        REQUIRE(flow.v[i] == 0.0f);
    }
}

TEST_CASE("flow_step on identical expansions with zero prior is zero") {
    const Frame f = testutil::textured_frame(64, 64, 8, 3);
    const ImageF img = normalize_frame(f);
    const PolyExpansion e = polynomial_expansion(img, 5, 1.1);
    const FlowField flow = flow_step(e, e, FlowField(64, 64), 15);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        REQUIRE(flow.u[i] == 0.0f);
        REQUIRE(flow.v[i] == 0.0f);
    }
}

TEST_CASE("blank frames give zero flow through the singularity fallback") {
    const Frame f(64, 64, 8, 100);
    const FlowField flow = compute_flow(f, f, FlowParams{});
    for (std::size_t i = 0; i < flow.size(); ++i) {
        REQUIRE(flow.u[i] == 0.0f);
        REQUIRE(flow.v[i] == 0.0f);
    }
}

TEST_CASE("single-level flow tracks a 2px translation") {
    const Frame f = testutil::textured_frame(128, 128, 8, 40);
    const Frame g = testutil::cyclic_shift(f, 2, 0);
    FlowParams p;
    p.pyramid_levels = 1;
    const FlowField flow = compute_flow(f, g, p);
    double su = 0, sv = 0;
    std::size_t n = 0;
    for (int y = 16; y < 112; ++y)
        for (int x = 16; x < 112; ++x) {
            const std::size_t i = std::size_t(y) * 128 + x;
            su += flow.u[i];
            sv += flow.v[i];
            ++n;
        }
    su /= double(n);
    sv /= double(n);
    CHECK(su > 1.5);
    CHECK(su < 2.5);
    CHECK(std::abs(sv) < 0.3);
}

TEST_CASE("pyramidal flow recovers a (4,-3) translation under 0.5px mean error") {
    const Frame f = testutil::textured_frame(160, 160, 8, 50);
    const Frame g = testutil::cyclic_shift(f, 4, -3);
    const FlowField flow = compute_flow(f, g, FlowParams{});
    double err = 0;
    std::size_t n = 0;
    for (int y = 16; y < 144; ++y)
        for (int x = 16; x < 144; ++x) {
            const std::size_t i = std::size_t(y) * 160 + x;
            err += std::hypot(flow.u[i] - 4.0, flow.v[i] + 3.0);
            ++n;
        }
    CHECK(err / double(n) < 0.5);
}

TEST_CASE("a moving blob lights up in the flow field while background stays quiet") {
    SyntheticSpec spec;
    spec.n_cells = 1;
    spec.n_frames = 2;
    spec.width = spec.height = 128;
    spec.speed_min = spec.speed_max = 3.0;
    spec.contrast_min = spec.contrast_max = 50.0;
    spec.low_contrast_fraction = 0;
    spec.seed = 13;
    auto [seq, truth] = generate_synthetic(spec);
    const FlowField flow = compute_flow(seq[0], seq[1], FlowParams{});
    double inside = 0;
    std::size_t nin = 0;
    std::vector<float> bg;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            const std::size_t i = std::size_t(y) * 128 + x;
            if (truth.masks[0].get(x, y)) {
                inside += flow.mag(i);
                ++nin;
            } else {
                bg.push_back(flow.mag(i));
            }
        }
    inside /= double(nin);
    std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
    CHECK(inside >= 1.0);
    CHECK(bg[bg.size() / 2] < 0.2);
}

TEST_CASE("flow is finite for arbitrary inputs") {
    for (std::uint64_t seed : {1ull, 2ull}) {
        const Frame a = testutil::random_frame(64, 64, 8, seed);
        const Frame b = testutil::random_frame(64, 64, 8, seed + 100);
        const FlowField flow = compute_flow(a, b, FlowParams{});
        for (std::size_t i = 0; i < flow.size(); ++i) {
            REQUIRE(std::isfinite(flow.u[i]));
            REQUIRE(std::isfinite(flow.v[i]));
        }
    }
}

TEST_CASE("doubling intensity leaves the flow unchanged") {
    Frame f = testutil::textured_frame(96, 96, 8, 60);
    for (auto& p : f.pixels) p = std::uint16_t(std::min(127, int(p / 2)));
    Frame f2 = f;
    for (auto& p : f2.pixels) p = std::uint16_t(p * 2);
    const Frame g = testutil::cyclic_shift(f, 2, 1);
    Frame g2 = g;
    for (auto& p : g2.pixels) p = std::uint16_t(p * 2);

    const FlowField fa = compute_flow(f, g, FlowParams{});
    const FlowField fb = compute_flow(f2, g2, FlowParams{});
    double max_diff = 0;
    for (std::size_t i = 0; i < fa.size(); ++i)
        max_diff = std::max(max_diff, double(std::hypot(fa.u[i] - fb.u[i], fa.v[i] - fb.v[i])));
    CHECK(max_diff < 1e-3);
}

TEST_CASE("flo files round-trip") {
    testutil::TempDir dir("flo");
    FlowField f(17, 9);
    Rng rng(4);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.u[i] = float(rng.normal(0, 2));
        f.v[i] = float(rng.normal(0, 2));
    }
    save_flo(f, dir.file("a.flo"));
    const FlowField g = load_flo(dir.file("a.flo"));
    CHECK(g.width == f.width);
    CHECK(g.u == f.u);
    CHECK(g.v == f.v);
}

TEST_CASE("flow parameter validation") {
    FlowParams p;
    p.window_size = 14;
    CHECK_THROWS_AS(p.validate(), usage_error);
    p = FlowParams{};
    p.pyramid_scale = 1.0;
    CHECK_THROWS_AS(p.validate(), usage_error);
    const Frame a(64, 64, 8), b(32, 32, 8);
    CHECK_THROWS_AS(compute_flow(a, b, FlowParams{}), data_error);
}
