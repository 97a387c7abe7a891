#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "flowroi/core.hpp"
#include "flowroi/denoise.hpp"
#include "flowroi/flow.hpp"
#include "flowroi/parallel.hpp"
#include "flowroi/registration.hpp"

namespace flowroi {

enum class SaliencyGradient { image, flow };

struct RoiParams {
    double roi_threshold = 0.2;      // fraction of pixels kept as RoI
    double flow_weight = 0.7;        // weight of the flow-magnitude term
    int adjacent_factor = 0;         // masks unioned from [t-k, t+k]
    int min_area = 20;               // px, smaller 8-connected components dropped
    int open_radius = 1;
    int close_radius = 1;
    SaliencyGradient gradient_source = SaliencyGradient::image;

    void validate() const {
        if (!(roi_threshold > 0.0 && roi_threshold < 1.0))
            throw usage_error("roi: roi_threshold must be in (0,1)");
        if (flow_weight < 0.0 || flow_weight > 1.0)
            throw usage_error("roi: flow_weight must be in [0,1]");
        if (adjacent_factor < 0) throw usage_error("roi: adjacent_factor must be >= 0");
        if (min_area < 0) throw usage_error("roi: min_area must be >= 0");
        if (open_radius < 0 || close_radius < 0) throw usage_error("roi: radii must be >= 0");
    }
};

// Scalar motion-saliency values in [0,1].
using SaliencyMap = ImageF;

namespace detail {

// Robust per-frame normalization: 1st percentile -> 0, 99th -> 1, clamped.
// A (near-)constant input maps to all zeros.
inline void robust_normalize(std::vector<double>& v) {
    if (v.empty()) return;
    std::vector<double> sorted(v);
    const std::size_t n = sorted.size();
    const std::size_t ilo = std::size_t(0.01 * double(n - 1));
    const std::size_t ihi = std::size_t(0.99 * double(n - 1));
    std::nth_element(sorted.begin(), sorted.begin() + ilo, sorted.end());
    const double lo = sorted[ilo];
    std::nth_element(sorted.begin(), sorted.begin() + ihi, sorted.end());
    const double hi = sorted[ihi];
    if (!(hi - lo > 1e-12)) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    const double inv = 1.0 / (hi - lo);
    for (auto& x : v) x = std::clamp((x - lo) * inv, 0.0, 1.0);
}

inline std::vector<double> gradient_magnitude(const ImageF& img) {
    std::vector<double> g(img.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double gx = 0.5 * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y));
            const double gy = 0.5 * (img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1));
            g[std::size_t(y) * img.width + x] = std::hypot(gx, gy);
        }
    return g;
}

}  // namespace detail

// S = w * N(|flow|) + (1-w) * N(|grad I|). The gradient term defaults to the
// intensity gradient of the current frame; gradient_source=flow switches it to
// the gradient of the flow magnitude instead.
inline SaliencyMap saliency(const FlowField& flow, const Frame& frame, double flow_weight,
                            SaliencyGradient gradient_source = SaliencyGradient::image) {
    if (flow.width != frame.width || flow.height != frame.height)
        throw data_error("saliency: flow/frame dimension mismatch");
    std::vector<double> fmag(flow.size());
    for (std::size_t i = 0; i < flow.size(); ++i) fmag[i] = flow.mag(i);

    std::vector<double> grad;
    if (gradient_source == SaliencyGradient::image) {
        grad = detail::gradient_magnitude(normalize_frame(frame));
    } else {
        ImageF m(flow.width, flow.height);
        m.values = fmag;
        grad = detail::gradient_magnitude(m);
    }
    detail::robust_normalize(fmag);
    detail::robust_normalize(grad);

    SaliencyMap s(frame.width, frame.height);
    for (std::size_t i = 0; i < s.size(); ++i)
        s.values[i] = flow_weight * fmag[i] + (1.0 - flow_weight) * grad[i];
    return s;
}

// Keeps the round(t*N) largest saliency values. Ties at the boundary value are
// admitted in row-major order until the count is met. Zero saliency carries no
// motion evidence and is never selected, so degenerate all-zero maps produce
// empty masks.
inline RoiMask threshold_mask(const SaliencyMap& map, double roi_threshold) {
    if (!(roi_threshold > 0.0 && roi_threshold < 1.0))
        throw usage_error("threshold_mask: roi_threshold must be in (0,1)");
    const std::size_t n = map.size();
    RoiMask mask(map.width, map.height);
    const std::size_t target = std::size_t(std::llround(roi_threshold * double(n)));
    if (target == 0) return mask;

    std::vector<double> sorted(map.values);
    std::nth_element(sorted.begin(), sorted.begin() + (target - 1), sorted.end(),
                     std::greater<double>());
    const double boundary = sorted[target - 1];
    if (!(boundary > 0.0)) {
        // fewer than `target` positive values: keep the positive ones only
        for (std::size_t i = 0; i < n; ++i) mask.bits[i] = map.values[i] > 0.0 ? 1 : 0;
        return mask;
    }
    std::size_t selected = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (map.values[i] > boundary) {
            mask.bits[i] = 1;
            ++selected;
        }
    for (std::size_t i = 0; i < n && selected < target; ++i)
        if (map.values[i] == boundary) {
            mask.bits[i] = 1;
            ++selected;
        }
    return mask;
}

namespace detail {

// Separable square-window min/max. Shrinking windows at the borders mean
// erosion treats the outside as set and dilation as unset.
template <bool Erode>
inline RoiMask morph_square(const RoiMask& m, int radius) {
    if (radius <= 0) return m;
    const int w = m.width, h = m.height;
    RoiMask tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - radius), hi = std::min(w - 1, x + radius);
            std::uint8_t acc = Erode ? 1 : 0;
            for (int t = lo; t <= hi; ++t) {
                const bool v = m.get(t, y);
                if (Erode) acc &= std::uint8_t(v);
                else acc |= std::uint8_t(v);
            }
            tmp.set(x, y, acc != 0);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, y - radius), hi = std::min(h - 1, y + radius);
            std::uint8_t acc = Erode ? 1 : 0;
            for (int t = lo; t <= hi; ++t) {
                const bool v = tmp.get(x, t);
                if (Erode) acc &= std::uint8_t(v);
                else acc |= std::uint8_t(v);
            }
            out.set(x, y, acc != 0);
        }
    return out;
}

}  // namespace detail

inline RoiMask erode(const RoiMask& m, int radius) { return detail::morph_square<true>(m, radius); }
inline RoiMask dilate(const RoiMask& m, int radius) { return detail::morph_square<false>(m, radius); }

inline RoiMask morph_open(const RoiMask& m, int radius) { return dilate(erode(m, radius), radius); }
inline RoiMask morph_close(const RoiMask& m, int radius) { return erode(dilate(m, radius), radius); }

// Two-pass 8-connected labeling with union-find; returns labels (0 = background)
// and per-label areas (index 0 unused).
inline std::vector<int> label_components(const RoiMask& m, std::vector<std::size_t>& areas) {
    const int w = m.width, h = m.height;
    std::vector<int> labels(m.size(), 0);
    std::vector<int> parent{0};
    const auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    const auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.get(x, y)) continue;
            const std::size_t i = std::size_t(y) * w + x;
            int best = 0;
            const int nx[4] = {x - 1, x - 1, x, x + 1};
            const int ny[4] = {y, y - 1, y - 1, y - 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0) continue;
                const int nl = labels[std::size_t(ny[k]) * w + nx[k]];
                if (nl == 0) continue;
                if (best == 0) best = nl;
                else unite(best, nl);
            }
            if (best == 0) {
                best = int(parent.size());
                parent.push_back(best);
            }
            labels[i] = best;
        }
    }
    // resolve and compact
    std::vector<int> remap(parent.size(), 0);
    int next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) continue;
        const int root = find(labels[i]);
        if (remap[root] == 0) remap[root] = ++next;
        labels[i] = remap[root];
    }
    areas.assign(std::size_t(next) + 1, 0);
    for (const int l : labels)
        if (l > 0) ++areas[l];
    return labels;
}

// Opening, closing, then removal of 8-connected components below min_area.
inline RoiMask morph_cleanup(const RoiMask& mask, int open_radius, int close_radius,
                             int min_area) {
    RoiMask m = morph_close(morph_open(mask, open_radius), close_radius);
    if (min_area <= 1) return m;
    std::vector<std::size_t> areas;
    const std::vector<int> labels = label_components(m, areas);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (labels[i] > 0 && areas[labels[i]] < std::size_t(min_area)) m.bits[i] = 0;
    return m;
}

// Pixel-wise union of the masks in the window [t-k, t+k], clipped at the ends.
inline RoiMask temporal_ensemble(const std::vector<RoiMask>& masks, std::size_t t, int k) {
    if (t >= masks.size()) throw data_error("temporal_ensemble: index out of range");
    RoiMask out = masks[t];
    const std::size_t lo = t >= std::size_t(k) ? t - k : 0;
    const std::size_t hi = std::min(masks.size() - 1, t + std::size_t(k));
    for (std::size_t j = lo; j <= hi; ++j) {
        if (j == t) continue;
        if (masks[j].width != out.width || masks[j].height != out.height)
            throw data_error("temporal_ensemble: mask dimension mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out.bits[i] |= masks[j].bits[i];
    }
    return out;
}

struct ExtractParams {
    DenoiseParams denoise;
    FlowParams flow;
    RoiParams roi;
    int max_shift = kDefaultMaxShift;
};

// Per-frame diagnostics from the extraction pipeline.
struct ExtractInfo {
    std::vector<Shift> shifts;            // shift of frame t relative to t-1 (t >= 1)
    std::vector<double> raw_fractions;    // mask fraction before ensembling
};

// Cumulative per-stage wall time, summed across workers. Integer atomics so
// concurrent accumulation stays exact.
struct StageTimes {
    std::atomic<std::uint64_t> denoise_ns{0};
    std::atomic<std::uint64_t> flow_ns{0};
    std::atomic<std::uint64_t> roi_ns{0};
    std::atomic<std::uint64_t> encode_ns{0};
};

namespace detail {

class StageStopwatch {
public:
    explicit StageStopwatch(std::atomic<std::uint64_t>* sink) : sink_(sink) {
        if (sink_) start_ = std::chrono::steady_clock::now();
    }
    ~StageStopwatch() {
        if (sink_)
            sink_->fetch_add(std::uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                               std::chrono::steady_clock::now() - start_)
                                               .count()),
                             std::memory_order_relaxed);
    }

private:
    std::atomic<std::uint64_t>* sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Full RoI stage: denoise, register, flow, saliency, threshold, cleanup, then
// temporal ensembling. Frame 0 has no predecessor and reuses frame 1's mask.
inline std::vector<RoiMask> extract_roi(const Sequence& seq, const ExtractParams& params,
                                        int workers = 1, ExtractInfo* info = nullptr,
                                        StageTimes* timers = nullptr) {
    params.roi.validate();
    params.flow.validate();
    const std::size_t n = seq.size();
    if (n < 2) throw data_error("extract_roi: sequence needs at least 2 frames");

    std::vector<Frame> den(n);
    parallel_for(n, workers, [&](std::size_t i) {
        detail::StageStopwatch sw(timers ? &timers->denoise_ns : nullptr);
        den[i] = denoise(seq[i], params.denoise);
    });

    std::vector<RoiMask> masks(n);
    std::vector<Shift> shifts(n);
    parallel_for(n - 1, workers, [&](std::size_t idx) {
        const std::size_t t = idx + 1;
        const Frame& a = den[t - 1];
        Shift s;
        FlowField flow;
        {
            detail::StageStopwatch sw(timers ? &timers->flow_ns : nullptr);
            s = estimate_shift(a, den[t], params.max_shift);
            if (s.confidence < kShiftConfidenceThreshold) s = Shift{0, 0, s.confidence};
            flow = compute_flow(a, apply_shift(den[t], s), params.flow);
        }
        detail::StageStopwatch sw(timers ? &timers->roi_ns : nullptr);
        // gradient term on the raw registered frame: denoising feeds the flow
        // only, so static scenes keep pixel-scale gradients that morphology
        // removes instead of denoiser-smoothed ridges that would survive it
        const SaliencyMap sal = saliency(flow, apply_shift(seq[t], s), params.roi.flow_weight,
                                         params.roi.gradient_source);
        RoiMask m = threshold_mask(sal, params.roi.roi_threshold);
        m = morph_cleanup(m, params.roi.open_radius, params.roi.close_radius,
                          params.roi.min_area);
        masks[t] = unshift_mask(m, s);
        shifts[t] = s;
    });
    masks[0] = masks[1];
    shifts[0] = Shift{0, 0, 1.0};

    if (info) {
        info->shifts = shifts;
        info->raw_fractions.resize(n);
        for (std::size_t t = 0; t < n; ++t) info->raw_fractions[t] = masks[t].fraction();
    }
    if (params.roi.adjacent_factor > 0) {
        std::vector<RoiMask> merged(n);
        parallel_for(n, workers, [&](std::size_t t) {
            merged[t] = temporal_ensemble(masks, t, params.roi.adjacent_factor);
        });
        masks = std::move(merged);
    }
    return masks;
}

}  // namespace flowroi
