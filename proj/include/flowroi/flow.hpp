#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <vector>

#include "flowroi/core.hpp"

namespace flowroi {

struct FlowParams {
    int pyramid_levels = 3;
    double pyramid_scale = 0.5;
    int window_size = 15;
    int iterations = 3;
    int poly_n = 5;
    double poly_sigma = 1.1;

    void validate() const {
        if (pyramid_levels < 1) throw usage_error("flow: pyramid_levels must be >= 1");
        if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
            throw usage_error("flow: pyramid_scale must be in (0,1)");
        if (window_size < 3 || window_size % 2 == 0)
            throw usage_error("flow: window_size must be odd and >= 3");
        if (poly_n < 3 || poly_n % 2 == 0) throw usage_error("flow: poly_n must be odd and >= 3");
        if (iterations < 1) throw usage_error("flow: iterations must be >= 1");
        if (poly_sigma <= 0.0) throw usage_error("flow: poly_sigma must be > 0");
    }
};

// Per-pixel quadratic model f(x) ~ x'Ax + b'x + c over a Gaussian-weighted
// neighborhood: A = [[a11, a12], [a12, a22]], b = (bx, by).
struct PolyExpansion {
    int width = 0;
    int height = 0;
    std::vector<double> c, bx, by, a11, a12, a22;

    PolyExpansion() = default;
    PolyExpansion(int w, int h)
        : width(w), height(h) {
        const std::size_t n = std::size_t(w) * h;
        c.assign(n, 0.0);
        bx.assign(n, 0.0);
        by.assign(n, 0.0);
        a11.assign(n, 0.0);
        a12.assign(n, 0.0);
        a22.assign(n, 0.0);
    }
};

namespace detail {

// Horizontal then vertical correlation with edge replication.
inline void correlate_rows(const ImageF& src, const std::vector<double>& kernel, int radius,
                           ImageF& dst) {
    const int w = src.width, h = src.height;
    for (int y = 0; y < h; ++y) {
        const double* row = src.values.data() + std::size_t(y) * w;
        double* out = dst.values.data() + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int xi = std::clamp(x + t, 0, w - 1);
                acc += kernel[t + radius] * row[xi];
            }
            out[x] = acc;
        }
    }
}

inline void correlate_cols(const ImageF& src, const std::vector<double>& kernel, int radius,
                           ImageF& dst) {
    const int w = src.width, h = src.height;
    for (int y = 0; y < h; ++y) {
        double* out = dst.values.data() + std::size_t(y) * w;
        for (int t = -radius; t <= radius; ++t) {
            const int yi = std::clamp(y + t, 0, h - 1);
            const double k = kernel[t + radius];
            const double* row = src.values.data() + std::size_t(yi) * w;
            for (int x = 0; x < w; ++x) out[x] += k * row[x];
        }
    }
}

struct Moments {
    double inv_m20 = 0, inv_m22 = 0;
    // symmetric inverse of the (1, x^2, y^2) block
    double i00 = 0, i01 = 0, i11 = 0, i12 = 0;
};

inline Moments expansion_moments(const std::vector<double>& g, int radius) {
    double s0 = 0, s2 = 0, s4 = 0;
    for (int t = -radius; t <= radius; ++t) {
        const double w = g[t + radius];
        s0 += w;
        s2 += w * t * t;
        s4 += w * t * t * t * t;
    }
    const double m00 = s0 * s0, m20 = s2 * s0, m40 = s4 * s0, m22 = s2 * s2;
    // M = [[m00, m20, m20], [m20, m40, m22], [m20, m22, m40]]
    const double det = m00 * (m40 * m40 - m22 * m22) - m20 * (m20 * m40 - m22 * m20) +
                       m20 * (m20 * m22 - m40 * m20);
    Moments mo;
    mo.inv_m20 = 1.0 / m20;
    mo.inv_m22 = 1.0 / m22;
    mo.i00 = (m40 * m40 - m22 * m22) / det;
    mo.i01 = (m20 * m22 - m20 * m40) / det;
    mo.i11 = (m00 * m40 - m20 * m20) / det;
    mo.i12 = (m20 * m20 - m00 * m22) / det;
    return mo;
}

}  // namespace detail

// Weighted-least-squares quadratic fit at every pixel via six separable
// correlations. Input intensities are expected in [0,1].
inline PolyExpansion polynomial_expansion(const ImageF& img, int poly_n, double poly_sigma) {
    const int radius = (poly_n - 1) / 2;
    std::vector<double> g0(poly_n), g1(poly_n), g2(poly_n);
    for (int t = -radius; t <= radius; ++t) {
        const double w = std::exp(-double(t) * t / (2.0 * poly_sigma * poly_sigma));
        g0[t + radius] = w;
        g1[t + radius] = w * t;
        g2[t + radius] = w * t * t;
    }
    const auto mo = detail::expansion_moments(g0, radius);

    const int w = img.width, h = img.height;
    ImageF r0(w, h), r1(w, h), r2(w, h);
    detail::correlate_rows(img, g0, radius, r0);
    detail::correlate_rows(img, g1, radius, r1);
    detail::correlate_rows(img, g2, radius, r2);

    ImageF s1(w, h), sx(w, h), sy(w, h), sxx(w, h), syy(w, h), sxy(w, h);
    detail::correlate_cols(r0, g0, radius, s1);
    detail::correlate_cols(r1, g0, radius, sx);
    detail::correlate_cols(r0, g1, radius, sy);
    detail::correlate_cols(r2, g0, radius, sxx);
    detail::correlate_cols(r0, g2, radius, syy);
    detail::correlate_cols(r1, g1, radius, sxy);

    PolyExpansion e(w, h);
    for (std::size_t i = 0; i < e.c.size(); ++i) {
        e.bx[i] = sx.values[i] * mo.inv_m20;
        e.by[i] = sy.values[i] * mo.inv_m20;
        e.a12[i] = 0.5 * sxy.values[i] * mo.inv_m22;
        e.c[i] = mo.i00 * s1.values[i] + mo.i01 * (sxx.values[i] + syy.values[i]);
        e.a11[i] = mo.i01 * s1.values[i] + mo.i11 * sxx.values[i] + mo.i12 * syy.values[i];
        e.a22[i] = mo.i01 * s1.values[i] + mo.i12 * sxx.values[i] + mo.i11 * syy.values[i];
    }
    return e;
}

namespace detail {

inline double bilinear(const std::vector<double>& p, int w, int h, double x, double y) {
    x = std::clamp(x, 0.0, double(w - 1));
    y = std::clamp(y, 0.0, double(h - 1));
    const int x0 = std::min(int(x), w - 2 >= 0 ? w - 2 : 0);
    const int y0 = std::min(int(y), h - 2 >= 0 ? h - 2 : 0);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = p[std::size_t(y0) * w + x0] * (1 - fx) + p[std::size_t(y0) * w + x1] * fx;
    const double bot = p[std::size_t(y1) * w + x0] * (1 - fx) + p[std::size_t(y1) * w + x1] * fx;
    return top * (1 - fy) + bot * fy;
}

// Separable box mean with shrinking windows at the borders.
inline void box_mean(std::vector<double>& f, int w, int h, int radius, std::vector<double>& tmp) {
    tmp.resize(f.size());
    for (int y = 0; y < h; ++y) {
        const double* row = f.data() + std::size_t(y) * w;
        double* out = tmp.data() + std::size_t(y) * w;
        double acc = 0.0;
        int lo = 0, hi = -1;
        for (int x = 0; x < w; ++x) {
            const int nlo = std::max(0, x - radius), nhi = std::min(w - 1, x + radius);
            while (hi < nhi) acc += row[++hi];
            while (lo < nlo) acc -= row[lo++];
            out[x] = acc / (hi - lo + 1);
        }
    }
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        int lo = 0, hi = -1;
        for (int y = 0; y < h; ++y) {
            const int nlo = std::max(0, y - radius), nhi = std::min(h - 1, y + radius);
            while (hi < nhi) { ++hi; acc += tmp[std::size_t(hi) * w + x]; }
            while (lo < nlo) { acc -= tmp[std::size_t(lo) * w + x]; ++lo; }
            f[std::size_t(y) * w + x] = acc / (hi - lo + 1);
        }
    }
}

}  // namespace detail

// One displacement refinement. Each pixel contributes its local constraint
// A d = db; the window average of the normal-equation products A'A and A'db
// is solved per pixel (signed A entries would cancel if averaged directly).
// Near-singular systems keep the prior estimate; the normalized-determinant
// test is intensity-scale free.
inline FlowField flow_step(const PolyExpansion& prev, const PolyExpansion& next,
                           const FlowField& prior, int window_size) {
    if (prev.width != next.width || prev.height != next.height)
        throw data_error("flow_step: expansion grids must share dimensions");
    const int w = prev.width, h = prev.height;
    const std::size_t n = std::size_t(w) * h;
    std::vector<double> g11(n), g12(n), g22(n), gh1(n), gh2(n);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            const double du = prior.u[i], dv = prior.v[i];
            const double sxp = x + du, syp = y + dv;
            const double a11 = 0.5 * (prev.a11[i] + detail::bilinear(next.a11, w, h, sxp, syp));
            const double a12 = 0.5 * (prev.a12[i] + detail::bilinear(next.a12, w, h, sxp, syp));
            const double a22 = 0.5 * (prev.a22[i] + detail::bilinear(next.a22, w, h, sxp, syp));
            const double db1 =
                -0.5 * (detail::bilinear(next.bx, w, h, sxp, syp) - prev.bx[i]) + a11 * du +
                a12 * dv;
            const double db2 =
                -0.5 * (detail::bilinear(next.by, w, h, sxp, syp) - prev.by[i]) + a12 * du +
                a22 * dv;
            g11[i] = a11 * a11 + a12 * a12;
            g12[i] = (a11 + a22) * a12;
            g22[i] = a12 * a12 + a22 * a22;
            gh1[i] = a11 * db1 + a12 * db2;
            gh2[i] = a12 * db1 + a22 * db2;
        }
    }

    const int radius = (window_size - 1) / 2;
    std::vector<double> tmp;
    detail::box_mean(g11, w, h, radius, tmp);
    detail::box_mean(g12, w, h, radius, tmp);
    detail::box_mean(g22, w, h, radius, tmp);
    detail::box_mean(gh1, w, h, radius, tmp);
    detail::box_mean(gh2, w, h, radius, tmp);

    FlowField out(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        const double det = g11[i] * g22[i] - g12[i] * g12[i];
        const double frob2 = g11[i] * g11[i] + 2.0 * g12[i] * g12[i] + g22[i] * g22[i];
        if (!(det > 1e-9 * frob2)) {
            out.u[i] = prior.u[i];
            out.v[i] = prior.v[i];
            continue;
        }
        out.u[i] = float((g22[i] * gh1[i] - g12[i] * gh2[i]) / det);
        out.v[i] = float((-g12[i] * gh1[i] + g11[i] * gh2[i]) / det);
    }
    return out;
}

namespace detail {

inline ImageF gaussian_blur3(const ImageF& src, double sigma) {
    const int radius = std::max(1, int(std::ceil(2.5 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        k[t + radius] = std::exp(-double(t) * t / (2.0 * sigma * sigma));
        sum += k[t + radius];
    }
    for (auto& v : k) v /= sum;
    ImageF tmp(src.width, src.height), out(src.width, src.height);
    correlate_rows(src, k, radius, tmp);
    correlate_cols(tmp, k, radius, out);
    return out;
}

inline ImageF resize_bilinear(const ImageF& src, int tw, int th) {
    ImageF out(tw, th);
    const double sx = double(src.width) / tw, sy = double(src.height) / th;
    for (int y = 0; y < th; ++y) {
        const double srcy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < tw; ++x) {
            const double srcx = (x + 0.5) * sx - 0.5;
            out.at(x, y) = bilinear(src.values, src.width, src.height, srcx, srcy);
        }
    }
    return out;
}

constexpr int kMinPyramidSize = 32;

inline std::vector<ImageF> build_pyramid(const ImageF& base, int levels, double scale) {
    std::vector<ImageF> pyr{base};
    for (int l = 1; l < levels; ++l) {
        const ImageF& cur = pyr.back();
        const int tw = int(cur.width * scale), th = int(cur.height * scale);
        if (tw < kMinPyramidSize || th < kMinPyramidSize) break;
        pyr.push_back(resize_bilinear(gaussian_blur3(cur, 1.0), tw, th));
    }
    return pyr;
}

}  // namespace detail

// Coarse-to-fine dense flow. Output u,v are displacements from prev to next:
// next(x + u, y + v) ~ prev(x, y).
inline FlowField compute_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
    params.validate();
    if (!prev.same_shape(next)) throw data_error("compute_flow: frames must share dimensions");
    const ImageF ip = normalize_frame(prev);
    const ImageF in = normalize_frame(next);
    const auto pyr_prev = detail::build_pyramid(ip, params.pyramid_levels, params.pyramid_scale);
    const auto pyr_next = detail::build_pyramid(in, params.pyramid_levels, params.pyramid_scale);

    FlowField flow;
    for (int l = int(pyr_prev.size()) - 1; l >= 0; --l) {
        const ImageF& a = pyr_prev[l];
        const ImageF& b = pyr_next[l];
        if (flow.width == 0) {
            flow = FlowField(a.width, a.height);
        } else {
            // upscale the coarser estimate, rescaling vectors per axis
            FlowField up(a.width, a.height);
            const double fx = double(a.width) / flow.width;
            const double fy = double(a.height) / flow.height;
            std::vector<double> cu(flow.size()), cv(flow.size());
            for (std::size_t i = 0; i < flow.size(); ++i) {
                cu[i] = flow.u[i];
                cv[i] = flow.v[i];
            }
            for (int y = 0; y < a.height; ++y) {
                const double sy = (y + 0.5) / fy - 0.5;
                for (int x = 0; x < a.width; ++x) {
                    const double sx = (x + 0.5) / fx - 0.5;
                    const std::size_t i = std::size_t(y) * a.width + x;
                    up.u[i] = float(detail::bilinear(cu, flow.width, flow.height, sx, sy) * fx);
                    up.v[i] = float(detail::bilinear(cv, flow.width, flow.height, sx, sy) * fy);
                }
            }
            flow = std::move(up);
        }
        const PolyExpansion ea = polynomial_expansion(a, params.poly_n, params.poly_sigma);
        const PolyExpansion eb = polynomial_expansion(b, params.poly_n, params.poly_sigma);
        for (int it = 0; it < params.iterations; ++it)
            flow = flow_step(ea, eb, flow, params.window_size);
    }
    return flow;
}

// FLO1 dump: magic "FLO1", width and height as u32 little-endian, then
// row-major (u, v) pairs as f32 little-endian.
inline void save_flo(const FlowField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out.write("FLO1", 4);
    const auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                     char((v >> 24) & 0xff)};
        out.write(b, 4);
    };
    put_u32(std::uint32_t(f.width));
    put_u32(std::uint32_t(f.height));
    static_assert(sizeof(float) == 4);
    for (std::size_t i = 0; i < f.size(); ++i) {
        out.write(reinterpret_cast<const char*>(&f.u[i]), 4);
        out.write(reinterpret_cast<const char*>(&f.v[i]), 4);
    }
    if (!out) throw data_error("I/O error writing " + path);
}

inline FlowField load_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (std::string(magic, 4) != "FLO1") throw data_error(path + ": not a FLO1 file");
    const auto get_u32 = [&]() {
        std::uint8_t b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    };
    const int w = int(get_u32()), h = int(get_u32());
    if (w <= 0 || h <= 0) throw data_error(path + ": bad FLO1 header");
    FlowField f(w, h);
    for (std::size_t i = 0; i < f.size(); ++i) {
        in.read(reinterpret_cast<char*>(&f.u[i]), 4);
        in.read(reinterpret_cast<char*>(&f.v[i]), 4);
    }
    if (!in) throw data_error(path + ": truncated FLO1 data");
    return f;
}

}  // namespace flowroi
