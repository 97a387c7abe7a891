#include <doctest.h>

#include "flowroi/dwt.hpp"
#include "test_util.hpp"

using namespace flowroi;

namespace {

// Direct one-level 5/3 analysis by separable convolution (real arithmetic),
// used as a support oracle for the lifting path. Mirror extension matches the
// lifting's whole-sample symmetry.
double sample_mirror(const Frame& f, int x, int y) {
    const auto refl = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return i;
    };
    return double(f.pixels[std::size_t(refl(y, f.height)) * f.width + refl(x, f.width)]) -
           (1 << (f.depth - 1));
}

struct RealSubbands {
    int cw, ch, fw, fh;
    std::vector<double> ll, hl, lh, hh;
};

RealSubbands oracle_analysis(const Frame& f) {
    const double lo[5] = {-0.125, 0.25, 0.75, 0.25, -0.125};  // centered at 0
    const double hi[3] = {-0.5, 1.0, -0.5};                   // centered at 0
    const int w = f.width, h = f.height;
    const int cw = (w + 1) / 2, ch = (h + 1) / 2, fw = w / 2, fh = h / 2;
    // horizontal pass
    std::vector<double> L(std::size_t(cw) * h), H(std::size_t(fw) * h);
    for (int y = 0; y < h; ++y) {
        for (int k = 0; k < cw; ++k) {
            double acc = 0;
            for (int j = -2; j <= 2; ++j) acc += lo[j + 2] * sample_mirror(f, 2 * k + j, y);
            L[std::size_t(y) * cw + k] = acc;
        }
        for (int k = 0; k < fw; ++k) {
            double acc = 0;
            for (int j = -1; j <= 1; ++j) acc += hi[j + 1] * sample_mirror(f, 2 * k + 1 + j, y);
            H[std::size_t(y) * fw + k] = acc;
        }
    }
    const auto col = [&](const std::vector<double>& src, int sw, int x, int y) {
        const auto refl = [&](int i) {
            while (i < 0 || i >= h) {
                if (i < 0) i = -i;
                if (i >= h) i = 2 * (h - 1) - i;
            }
            return i;
        };
        return src[std::size_t(refl(y)) * sw + x];
    };
    RealSubbands out{cw, ch, fw, fh, {}, {}, {}, {}};
    out.ll.resize(std::size_t(cw) * ch);
    out.hl.resize(std::size_t(fw) * ch);
    out.lh.resize(std::size_t(cw) * fh);
    out.hh.resize(std::size_t(fw) * fh);
    for (int k = 0; k < ch; ++k) {
        for (int x = 0; x < cw; ++x) {
            double acc = 0;
            for (int j = -2; j <= 2; ++j) acc += lo[j + 2] * col(L, cw, x, 2 * k + j);
            out.ll[std::size_t(k) * cw + x] = acc;
        }
        for (int x = 0; x < fw; ++x) {
            double acc = 0;
            for (int j = -2; j <= 2; ++j) acc += lo[j + 2] * col(H, fw, x, 2 * k + j);
            out.hl[std::size_t(k) * fw + x] = acc;
        }
    }
    for (int k = 0; k < fh; ++k) {
        for (int x = 0; x < cw; ++x) {
            double acc = 0;
            for (int j = -1; j <= 1; ++j) acc += hi[j + 1] * col(L, cw, x, 2 * k + 1 + j);
            out.lh[std::size_t(k) * cw + x] = acc;
        }
        for (int x = 0; x < fw; ++x) {
            double acc = 0;
            for (int j = -1; j <= 1; ++j) acc += hi[j + 1] * col(H, fw, x, 2 * k + 1 + j);
            out.hh[std::size_t(k) * fw + x] = acc;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("forward then inverse is the identity for many shapes and depths") {
    const int sizes[][2] = {{32, 32}, {33, 47}, {64, 33}, {61, 61}, {128, 96}};
    for (const auto& s : sizes)
        for (const int depth : {8, 16})
            for (const int levels : {1, 3, 5}) {
                if (s[0] < (1 << levels) || s[1] < (1 << levels)) continue;
                const Frame f = testutil::random_frame(s[0], s[1], depth,
                                                       std::uint64_t(s[0] * depth + levels));
                const SubbandGrid g = dwt_forward(f, levels);
                REQUIRE(g.coeffs.size() == f.size());
                const Frame r = dwt_inverse(g);
                REQUIRE(r == f);
            }
}

TEST_CASE("a constant frame has zero detail and a constant LL") {
    const Frame f(64, 48, 8, 77);
    const SubbandGrid g = dwt_forward(f, 3);
    for (const Subband& b : subband_layout(64, 48, 3)) {
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x) {
                const std::int32_t v = g.at(b.x0 + x, b.y0 + y);
                if (b.kind == SubbandKind::LL) REQUIRE(v == 77 - 128);
                else REQUIRE(v == 0);
            }
    }
}

TEST_CASE("impulse support stays inside the analysis filter footprint") {
    for (const auto& pt : {std::pair{20, 14}, std::pair{21, 15}}) {
        Frame f(40, 30, 8, 128);  // dc-neutral background
        f.at(pt.first, pt.second) = 255;
        const SubbandGrid g = dwt_forward(f, 1);
        const RealSubbands ref = oracle_analysis(f);
        const auto check_band = [&](SubbandKind kind, const std::vector<double>& real, int bw) {
            for (const Subband& b : subband_layout(40, 30, 1)) {
                if (b.kind != kind || b.level != 1) continue;
                for (int y = 0; y < b.h; ++y)
                    for (int x = 0; x < b.w; ++x) {
                        const std::int32_t mine = g.at(b.x0 + x, b.y0 + y) -
                                                  (kind == SubbandKind::LL ? 0 : 0);
                        const bool ref_zero =
                            std::abs(real[std::size_t(y) * bw + x]) < 1e-9;
                        if (kind != SubbandKind::LL && ref_zero) REQUIRE(mine == 0);
                    }
            }
        };
        check_band(SubbandKind::HL, ref.hl, ref.fw);
        check_band(SubbandKind::LH, ref.lh, ref.cw);
        check_band(SubbandKind::HH, ref.hh, ref.fw);
    }
}

TEST_CASE("lifting values match the convolution oracle within rounding") {
    const Frame f = testutil::random_frame(32, 24, 8, 99);
    const SubbandGrid g = dwt_forward(f, 1);
    const RealSubbands ref = oracle_analysis(f);
    // integer lifting approximates the real filter bank with bounded rounding
    for (const Subband& b : subband_layout(32, 24, 1)) {
        const std::vector<double>* real = nullptr;
        int bw = 0;
        switch (b.kind) {
            case SubbandKind::LL: real = &ref.ll; bw = ref.cw; break;
            case SubbandKind::HL: real = &ref.hl; bw = ref.fw; break;
            case SubbandKind::LH: real = &ref.lh; bw = ref.cw; break;
            case SubbandKind::HH: real = &ref.hh; bw = ref.fw; break;
        }
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x) {
                const double mine = g.at(b.x0 + x, b.y0 + y);
                const double want = (*real)[std::size_t(y) * bw + x];
                REQUIRE(std::abs(mine - want) <= 2.0);
            }
    }
}

TEST_CASE("frames too small for the level count are rejected") {
    CHECK_THROWS_AS(dwt_forward(Frame(16, 16, 8), 5), data_error);
    CHECK_THROWS_AS(dwt_forward(Frame(64, 64, 8), 0), usage_error);
}

TEST_CASE("subband layout tiles the grid exactly") {
    for (const auto& dims : {std::pair{37, 53}, std::pair{64, 64}}) {
        const int levels = 3;
        const auto bands = subband_layout(dims.first, dims.second, levels);
        std::vector<int> hits(std::size_t(dims.first) * dims.second, 0);
        for (const Subband& b : bands)
            for (int y = 0; y < b.h; ++y)
                for (int x = 0; x < b.w; ++x) ++hits[std::size_t(b.y0 + y) * dims.first + b.x0 + x];
        // the layout covers the coarse chain region once; finer-level cells too
        std::size_t total = 0;
        for (const Subband& b : bands) total += std::size_t(b.w) * b.h;
        CHECK(total == std::size_t(dims.first) * dims.second);
        for (int v : hits) CHECK(v == 1);
    }
}
