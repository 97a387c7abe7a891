#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowroi/codec.hpp"
#include "flowroi/core.hpp"
#include "flowroi/parallel.hpp"
#include "flowroi/roi.hpp"
#include "flowroi/synthetic.hpp"

namespace flowroi {

inline double mse(const Frame& reference, const Frame& test, const RoiMask* region = nullptr,
                  bool invert_region = false) {
    if (!reference.same_shape(test)) throw data_error("psnr: frames must share dimensions");
    if (region && (region->width != reference.width || region->height != reference.height))
        throw data_error("psnr: region dimension mismatch");
    std::uint64_t sum = 0, count = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (region) {
            const bool in = region->bits[i] != 0;
            if (in == invert_region) continue;
        }
        const std::int64_t d = std::int64_t(reference.pixels[i]) - test.pixels[i];
        sum += std::uint64_t(d * d);
        ++count;
    }
    if (count == 0) throw data_error("psnr: empty region");
    return double(sum) / double(count);
}

// 10*log10(MAX^2 / MSE); identical regions report +infinity.
inline double psnr(const Frame& reference, const Frame& test, const RoiMask* region = nullptr,
                   bool invert_region = false) {
    const double m = mse(reference, test, region, invert_region);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    const double maxval = double(reference.maxval());
    return 10.0 * std::log10(maxval * maxval / m);
}

struct FrameQuality {
    double psnr_global = 0;
    double psnr_roi = 0;         // over the evaluation region (truth mask if present)
    double psnr_background = 0;
    double achieved_ratio = 0;   // raw bytes / compressed bytes
    double mask_fraction = 0;
};

struct QualityReport {
    std::vector<FrameQuality> frames;
    double mean_psnr_global = 0, min_psnr_global = 0;
    double mean_psnr_roi = 0, min_psnr_roi = 0;
    double mean_psnr_background = 0, min_psnr_background = 0;
    double mean_achieved_ratio = 0;
    double mean_mask_fraction = 0;

    void aggregate() {
        if (frames.empty()) return;
        const auto fold = [&](auto get, double& mean, double* min_out) {
            double sum = 0, mn = std::numeric_limits<double>::infinity();
            for (const auto& f : frames) {
                sum += get(f);
                mn = std::min(mn, get(f));
            }
            mean = sum / double(frames.size());
            if (min_out) *min_out = mn;
        };
        fold([](const FrameQuality& f) { return f.psnr_global; }, mean_psnr_global,
             &min_psnr_global);
        fold([](const FrameQuality& f) { return f.psnr_roi; }, mean_psnr_roi, &min_psnr_roi);
        fold([](const FrameQuality& f) { return f.psnr_background; }, mean_psnr_background,
             &min_psnr_background);
        fold([](const FrameQuality& f) { return f.achieved_ratio; }, mean_achieved_ratio, nullptr);
        fold([](const FrameQuality& f) { return f.mask_fraction; }, mean_mask_fraction, nullptr);
    }
};

struct MissedCell {
    int frame = 0;
    int cell = 0;
    double contrast = 0;
};

struct CoverageReport {
    std::size_t cells_total = 0;
    std::size_t cells_covered = 0;
    double coverage_rate = 1.0;
    std::size_t high_contrast_total = 0;    // cells with contrast > floor
    std::size_t high_contrast_covered = 0;
    double high_contrast_rate = 1.0;
    std::vector<MissedCell> missed;
};

// A cell counts as covered in a frame when at least one of its ground-truth
// pixels falls inside the extracted mask.
inline CoverageReport coverage(const std::vector<RoiMask>& masks, const GroundTruth& truth,
                               double high_contrast_floor = 0.0) {
    if (masks.size() != truth.masks.size())
        throw data_error("coverage: mask/truth frame count mismatch");
    CoverageReport rep;
    for (std::size_t f = 0; f < masks.size(); ++f) {
        const RoiMask& m = masks[f];
        for (const CellTrack& t : truth.tracks) {
            const TrackPoint p = t.centers[f];
            bool covered = false;
            const int reach = int(std::ceil(t.radius));
            const int cx = int(std::lround(p.x)), cy = int(std::lround(p.y));
            for (int y = std::max(0, cy - reach); y <= std::min(m.height - 1, cy + reach) && !covered; ++y)
                for (int x = std::max(0, cx - reach); x <= std::min(m.width - 1, cx + reach); ++x) {
                    const double dx = x - p.x, dy = y - p.y;
                    if (dx * dx + dy * dy <= t.radius * t.radius && m.get(x, y)) {
                        covered = true;
                        break;
                    }
                }
            ++rep.cells_total;
            const bool high = t.contrast > high_contrast_floor;
            if (high) ++rep.high_contrast_total;
            if (covered) {
                ++rep.cells_covered;
                if (high) ++rep.high_contrast_covered;
            } else {
                rep.missed.push_back({int(f), t.id, t.contrast});
            }
        }
    }
    rep.coverage_rate =
        rep.cells_total == 0 ? 1.0 : double(rep.cells_covered) / double(rep.cells_total);
    rep.high_contrast_rate = rep.high_contrast_total == 0
                                 ? 1.0
                                 : double(rep.high_contrast_covered) /
                                       double(rep.high_contrast_total);
    return rep;
}

// Compresses and evaluates one frame at the given settings. The evaluation
// region defaults to the ground-truth mask so codec quality is measured
// independently of mask quality; callers pass the pipeline mask otherwise.
inline FrameQuality evaluate_frame(const Frame& frame, const RoiMask& coding_mask,
                                   const CodecParams& params, const RoiMask* eval_region) {
    const std::vector<std::uint8_t> bytes = encode(frame, coding_mask, params);
    const DecodeResult dec = decode(bytes);
    FrameQuality q;
    q.psnr_global = psnr(frame, dec.frame);
    const RoiMask* region = eval_region ? eval_region : &coding_mask;
    const bool region_usable = region->count() > 0 && region->count() < region->size();
    q.psnr_roi = region_usable ? psnr(frame, dec.frame, region) : q.psnr_global;
    q.psnr_background = region_usable ? psnr(frame, dec.frame, region, true) : q.psnr_global;
    q.achieved_ratio = double(frame.size() * (frame.depth / 8)) / double(bytes.size());
    q.mask_fraction = coding_mask.fraction();
    return q;
}

struct RateCurveRow {
    double rate = 0;
    std::string method;  // "flowroi" or "uniform"
    double psnr_global = 0;
    double psnr_roi = 0;
    double psnr_background = 0;
    double achieved_ratio = 0;
    double mask_fraction = 0;
};

// PSNR-vs-rate sweep with fixed masks, including the uniform (empty mask)
// baseline that isolates the RoI mechanism.
inline std::vector<RateCurveRow> rate_curve(const Sequence& seq,
                                            const std::vector<RoiMask>& masks,
                                            const CodecParams& base,
                                            const std::vector<double>& rates,
                                            const GroundTruth* truth = nullptr,
                                            int workers = 1) {
    if (seq.size() != masks.size()) throw data_error("rate_curve: mask count mismatch");
    for (std::size_t i = 1; i < rates.size(); ++i)
        if (!(rates[i] > rates[i - 1])) throw usage_error("rate_curve: rates must ascend");
    std::vector<RateCurveRow> rows;
    const RoiMask empty(seq[0].width, seq[0].height);
    for (const double rate : rates) {
        CodecParams p = base;
        p.compression_rate = rate;
        p.lossless = false;
        for (const bool uniform : {false, true}) {
            QualityReport rep;
            rep.frames.resize(seq.size());
            parallel_for(seq.size(), workers, [&](std::size_t i) {
                const RoiMask& coding = uniform ? empty : masks[i];
                const RoiMask* region = truth ? &truth->masks[i] : nullptr;
                rep.frames[i] = evaluate_frame(seq[i], coding, p, region);
            });
            rep.aggregate();
            RateCurveRow row;
            row.rate = rate;
            row.method = uniform ? "uniform" : "flowroi";
            row.psnr_global = rep.mean_psnr_global;
            row.psnr_roi = rep.mean_psnr_roi;
            row.psnr_background = rep.mean_psnr_background;
            row.achieved_ratio = rep.mean_achieved_ratio;
            row.mask_fraction = rep.mean_mask_fraction;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace flowroi
