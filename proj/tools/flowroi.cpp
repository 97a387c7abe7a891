// flowroi: motion-guided RoI compression for time-lapse microscopy sequences.
//
// Subcommands: synth, extract-roi, compress, decompress, evaluate, sweep, plot.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>

#include "flowroi/pipeline.hpp"

using namespace flowroi;

namespace {

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

// ---- shared pipeline options ----

struct PipelineOptions {
    PipelineConfig config;
    std::string denoise_switch = "on";

    void attach(CLI::App* cmd) {
        cmd->add_option("--denoise", denoise_switch, "denoising in flow extraction: on|off")
            ->check(CLI::IsMember({"on", "off"}))
            ->capture_default_str();
        cmd->add_option("--median-radius", config.denoise.median_radius)->capture_default_str();
        cmd->add_option("--bilateral-sigma-spatial", config.denoise.bilateral_sigma_spatial)
            ->capture_default_str();
        cmd->add_option("--bilateral-sigma-range", config.denoise.bilateral_sigma_range)
            ->capture_default_str();
        cmd->add_option("--bilateral-radius", config.denoise.bilateral_radius)
            ->capture_default_str();
        cmd->add_option("--max-shift", config.max_shift, "registration search bound (px)")
            ->capture_default_str();
        cmd->add_option("--flow-levels", config.flow.pyramid_levels)->capture_default_str();
        cmd->add_option("--flow-scale", config.flow.pyramid_scale)->capture_default_str();
        cmd->add_option("--flow-window", config.flow.window_size)->capture_default_str();
        cmd->add_option("--flow-iters", config.flow.iterations)->capture_default_str();
        cmd->add_option("--poly-n", config.flow.poly_n)->capture_default_str();
        cmd->add_option("--poly-sigma", config.flow.poly_sigma)->capture_default_str();
        cmd->add_option("--roi-threshold", config.roi.roi_threshold,
                        "fraction of pixels kept as RoI")
            ->capture_default_str();
        cmd->add_option("--adjacent-factor", config.roi.adjacent_factor,
                        "neighboring masks unioned into each frame")
            ->capture_default_str();
        cmd->add_option("--min-area", config.roi.min_area)->capture_default_str();
        cmd->add_option("--open-radius", config.roi.open_radius)->capture_default_str();
        cmd->add_option("--close-radius", config.roi.close_radius)->capture_default_str();
        cmd->add_option_function<std::string>(
               "--saliency-gradient",
               [this](const std::string& v) {
                   config.roi.gradient_source =
                       v == "flow" ? SaliencyGradient::flow : SaliencyGradient::image;
               },
               "gradient term source: image|flow")
            ->check(CLI::IsMember({"image", "flow"}));
        cmd->add_option("--scaling-factor", config.codec.scaling_factor,
                        "RoI priority bit-shift [1,10]")
            ->capture_default_str();
        cmd->add_option("--compression-rate", config.codec.compression_rate,
                        "target raw/compressed ratio (> 1)")
            ->capture_default_str();
        cmd->add_option("--dwt-levels", config.codec.dwt_levels)->capture_default_str();
        cmd->add_flag("--lossless", config.codec.lossless, "encode all bitplanes");
        cmd->add_option("--workers", config.workers, "worker threads (0 = all cores)")
            ->capture_default_str();
        cmd->add_option("--seed", config.seed)->capture_default_str();
    }

    PipelineConfig resolve(CLI::App* cmd) const {
        PipelineConfig c = config;
        c.denoise.enabled = denoise_switch == "on";
        if (c.codec.lossless && cmd->count("--compression-rate"))
            throw usage_error("--lossless conflicts with --compression-rate");
        c.validate();
        return c;
    }
};

void add_config_file(CLI::App* cmd) {
    cmd->set_config("--config", "", "key=value config file (CLI flags take precedence)");
}

// ---- synth ----

struct SynthOptions {
    SyntheticSpec spec;
    std::string out;
};

void attach_synth(CLI::App* cmd, SynthOptions& o) {
    add_config_file(cmd);
    cmd->add_option("--out", o.out, "output dataset directory")->required();
    cmd->add_option("--cells", o.spec.n_cells)->capture_default_str();
    cmd->add_option("--frames", o.spec.n_frames)->capture_default_str();
    cmd->add_option("--width", o.spec.width)->capture_default_str();
    cmd->add_option("--height", o.spec.height)->capture_default_str();
    cmd->add_option("--depth", o.spec.depth, "bits per sample: 8 or 16")->capture_default_str();
    cmd->add_option("--radius-min", o.spec.radius_min)->capture_default_str();
    cmd->add_option("--radius-max", o.spec.radius_max)->capture_default_str();
    cmd->add_option("--contrast-min", o.spec.contrast_min)->capture_default_str();
    cmd->add_option("--contrast-max", o.spec.contrast_max)->capture_default_str();
    cmd->add_option("--speed-min", o.spec.speed_min)->capture_default_str();
    cmd->add_option("--speed-max", o.spec.speed_max)->capture_default_str();
    cmd->add_option("--noise-sigma", o.spec.noise_sigma, "static texture sigma (gray levels)")
        ->capture_default_str();
    cmd->add_option("--temporal-noise-sigma", o.spec.temporal_noise_sigma,
                    "per-frame sensor noise sigma")
        ->capture_default_str();
    cmd->add_option("--low-contrast-fraction", o.spec.low_contrast_fraction)
        ->capture_default_str();
    cmd->add_option("--seed", o.spec.seed)->capture_default_str();
}

void write_manifest(const SyntheticSpec& s, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out << "cells=" << s.n_cells << "\n"
        << "frames=" << s.n_frames << "\n"
        << "width=" << s.width << "\n"
        << "height=" << s.height << "\n"
        << "depth=" << s.depth << "\n"
        << "radius-min=" << fmt_double(s.radius_min) << "\n"
        << "radius-max=" << fmt_double(s.radius_max) << "\n"
        << "contrast-min=" << fmt_double(s.contrast_min) << "\n"
        << "contrast-max=" << fmt_double(s.contrast_max) << "\n"
        << "speed-min=" << fmt_double(s.speed_min) << "\n"
        << "speed-max=" << fmt_double(s.speed_max) << "\n"
        << "noise-sigma=" << fmt_double(s.noise_sigma) << "\n"
        << "temporal-noise-sigma=" << fmt_double(s.temporal_noise_sigma) << "\n"
        << "low-contrast-fraction=" << fmt_double(s.low_contrast_fraction) << "\n"
        << "seed=" << s.seed << "\n";
}

int run_synth(const SynthOptions& o) {
    auto [seq, truth] = generate_synthetic(o.spec);
    ensure_dir(o.out);
    ensure_dir(join_path(o.out, "frames"));
    for (std::size_t i = 0; i < seq.size(); ++i)
        save_pgm(seq[i], join_path(o.out, join_path("frames", frame_name(i, ".pgm"))));
    save_ground_truth(truth, join_path(o.out, "truth"));
    write_manifest(o.spec, join_path(o.out, "manifest.cfg"));
    std::cout << "wrote " << seq.size() << " frames to " << o.out << "\n";
    return 0;
}

// ---- extract-roi ----

struct ExtractOptions {
    PipelineOptions pipeline;
    std::string in, out, dump_flow, report_out;
};

int run_extract(CLI::App* cmd, ExtractOptions& o) {
    const PipelineConfig config = o.pipeline.resolve(cmd);
    const Sequence seq = load_sequence(o.in);
    ExtractInfo info;
    const auto masks = extract_roi(seq, config.extract_params(), config.workers, &info);
    ensure_dir(o.out);
    for (std::size_t i = 0; i < masks.size(); ++i)
        save_pbm(masks[i], join_path(o.out, frame_name(i, ".pbm")));

    if (!o.dump_flow.empty()) {
        ensure_dir(o.dump_flow);
        std::vector<Frame> den(seq.size());
        parallel_for(seq.size(), config.workers,
                     [&](std::size_t i) { den[i] = denoise(seq[i], config.denoise); });
        parallel_for(seq.size() - 1, config.workers, [&](std::size_t idx) {
            const Shift s = info.shifts[idx + 1];
            const FlowField flow =
                compute_flow(den[idx], apply_shift(den[idx + 1], s), config.flow);
            save_flo(flow, join_path(o.dump_flow, frame_name(idx + 1, ".flo")));
        });
    }

    json frames = json::array();
    for (std::size_t i = 0; i < masks.size(); ++i) {
        std::vector<std::size_t> areas;
        label_components(masks[i], areas);
        frames.push_back({{"index", i},
                          {"mask_fraction", masks[i].fraction()},
                          {"components", areas.empty() ? 0 : areas.size() - 1},
                          {"shift",
                           {{"dx", info.shifts[i].dx},
                            {"dy", info.shifts[i].dy},
                            {"confidence", info.shifts[i].confidence}}}});
    }
    const json report{{"schema", "flowroi-report/1"},
                      {"command", "extract-roi"},
                      {"config", to_json(config)},
                      {"input_hash", hex64(sequence_content_hash(seq))},
                      {"frames", frames}};
    write_json_file(report, o.report_out.empty() ? join_path(o.out, "report.json")
                                                 : o.report_out);
    return 0;
}

// ---- compress ----

struct CompressOptions {
    PipelineOptions pipeline;
    std::string in, out, report_out;
    bool no_timing = false;
};

int run_compress(CLI::App* cmd, CompressOptions& o) {
    const PipelineConfig config = o.pipeline.resolve(cmd);
    const Sequence seq = load_sequence(o.in);
    const CompressResult res = compress_sequence(seq, config);
    ensure_dir(o.out);
    for (std::size_t i = 0; i < res.files.size(); ++i)
        save_froi(res.files[i], join_path(o.out, frame_name(i, ".froi")));
    write_json_file(compress_report(seq, config, res),
                    o.report_out.empty() ? join_path(o.out, "report.json") : o.report_out);
    if (!o.no_timing)
        write_json_file(timing_report(seq, config, res), join_path(o.out, "timing.json"));
    return 0;
}

// ---- decompress ----

int run_decompress(const std::string& in, const std::string& out, int workers) {
    const auto failures = decompress_dir(in, out, workers);
    for (const auto& f : failures)
        std::cerr << "error: " << f.file << ": " << f.error << "\n";
    if (!failures.empty()) {
        std::cerr << failures.size() << " file(s) failed to decode\n";
        return 2;
    }
    return 0;
}

// ---- evaluate ----

struct EvaluateOptions {
    std::string raw, decoded, truth, compressed, report_out;
    int workers = 0;
};

int run_evaluate(const EvaluateOptions& o) {
    const Sequence raw = load_sequence(o.raw);
    const Sequence dec = load_sequence(o.decoded);
    if (raw.size() != dec.size())
        throw data_error("evaluate: raw and decoded frame counts differ");

    GroundTruth truth;
    const bool have_truth = !o.truth.empty();
    if (have_truth) {
        truth = load_ground_truth(o.truth);
        if (truth.masks.size() != raw.size())
            throw data_error("evaluate: truth frame count mismatch");
    }

    // decoded masks (written by decompress) drive coverage and, without
    // ground truth, the RoI-restricted PSNR region
    std::vector<RoiMask> masks;
    const std::string mask_dir = join_path(o.decoded, "masks");
    if (std::filesystem::is_directory(mask_dir)) {
        for (const auto& p : list_files(mask_dir, ".pbm")) masks.push_back(load_pbm(p));
        if (masks.size() != raw.size())
            throw data_error("evaluate: decoded mask count mismatch");
    }

    std::vector<std::size_t> file_sizes;
    if (!o.compressed.empty()) {
        for (const auto& p : list_files(o.compressed, ".froi"))
            file_sizes.push_back(std::filesystem::file_size(p));
        if (file_sizes.size() != raw.size())
            throw data_error("evaluate: compressed file count mismatch");
    }

    QualityReport q;
    q.frames.resize(raw.size());
    parallel_for(raw.size(), o.workers, [&](std::size_t i) {
        FrameQuality fq;
        fq.psnr_global = psnr(raw[i], dec[i]);
        const RoiMask* region = have_truth ? &truth.masks[i]
                                           : (masks.empty() ? nullptr : &masks[i]);
        const bool usable = region && region->count() > 0 && region->count() < region->size();
        fq.psnr_roi = usable ? psnr(raw[i], dec[i], region) : fq.psnr_global;
        fq.psnr_background = usable ? psnr(raw[i], dec[i], region, true) : fq.psnr_global;
        fq.mask_fraction = masks.empty() ? 0.0 : masks[i].fraction();
        if (!file_sizes.empty())
            fq.achieved_ratio =
                double(raw[i].size() * (raw[i].depth / 8)) / double(file_sizes[i]);
        q.frames[i] = fq;
    });
    q.aggregate();

    json report{{"schema", "flowroi-report/1"},
                {"command", "evaluate"},
                {"input_hash", hex64(sequence_content_hash(raw))},
                {"quality", quality_to_json(q)}};
    if (have_truth && !masks.empty())
        report["coverage"] = coverage_to_json(coverage(masks, truth));

    if (o.report_out.empty()) std::cout << report.dump(2) << "\n";
    else write_json_file(report, o.report_out);
    return 0;
}

// ---- sweep ----

struct SweepOptions {
    PipelineOptions pipeline;
    std::string in, truth, out, done_log;
    std::vector<std::string> grid_denoise{"on"};
    std::vector<double> grid_threshold{0.2};
    std::vector<int> grid_adjacent{0};
    std::vector<int> grid_scaling{5};
    std::vector<double> grid_rate{40.0};
};

int run_sweep(CLI::App* cmd, SweepOptions& o) {
    const PipelineConfig base = o.pipeline.resolve(cmd);
    const std::size_t combos = o.grid_denoise.size() * o.grid_threshold.size() *
                               o.grid_adjacent.size() * o.grid_scaling.size() *
                               o.grid_rate.size();
    if (combos == 0) throw usage_error("sweep: empty grid");
    if (combos > 10000)
        throw usage_error("sweep: grid has " + std::to_string(combos) +
                          " combinations (limit 10000)");
    const Sequence seq = load_sequence(o.in);
    GroundTruth truth;
    const bool have_truth = !o.truth.empty();
    if (have_truth) truth = load_ground_truth(o.truth);

    const std::string done_path = o.done_log.empty() ? o.out + ".done" : o.done_log;
    std::set<std::string> done;
    {
        std::ifstream in_log(done_path);
        std::string line;
        while (std::getline(in_log, line))
            if (!line.empty()) done.insert(line);
    }
    const bool fresh = !std::filesystem::exists(o.out);
    std::ofstream csv(o.out, std::ios::app);
    if (!csv) throw data_error("cannot write " + o.out);
    if (fresh)
        csv << "denoise,roi_threshold,adjacent_factor,scaling_factor,compression_rate,method,"
               "psnr_global,psnr_roi,psnr_background,achieved_ratio,mask_fraction,coverage\n";
    std::ofstream done_out(done_path, std::ios::app);

    const auto fmt_db = [](double v) {
        return std::isinf(v) ? std::string("inf") : fmt_double(v);
    };

    for (const auto& den : o.grid_denoise)
        for (const double threshold : o.grid_threshold)
            for (const int adjacent : o.grid_adjacent) {
                PipelineConfig mask_cfg = base;
                mask_cfg.denoise.enabled = den == "on";
                mask_cfg.roi.roi_threshold = threshold;
                mask_cfg.roi.adjacent_factor = adjacent;
                std::vector<RoiMask> masks;
                double cov = -1.0;
                for (const int scaling : o.grid_scaling)
                    for (const double rate : o.grid_rate) {
                        std::ostringstream key;
                        key << den << "," << fmt_double(threshold) << "," << adjacent << ","
                            << scaling << "," << fmt_double(rate);
                        if (done.count(key.str())) continue;
                        if (masks.empty()) {
                            masks = extract_roi(seq, mask_cfg.extract_params(),
                                                mask_cfg.workers);
                            if (have_truth) cov = coverage(masks, truth).coverage_rate;
                        }
                        CodecParams cp = base.codec;
                        cp.scaling_factor = scaling;
                        cp.lossless = false;
                        try {
                            const auto rows = rate_curve(seq, masks, cp, {rate},
                                                         have_truth ? &truth : nullptr,
                                                         base.workers);
                            for (const auto& r : rows) {
                                csv << den << "," << fmt_double(threshold) << "," << adjacent
                                    << "," << scaling << "," << fmt_double(rate) << ","
                                    << r.method << "," << fmt_db(r.psnr_global) << ","
                                    << fmt_db(r.psnr_roi) << "," << fmt_db(r.psnr_background)
                                    << "," << fmt_double(r.achieved_ratio) << ","
                                    << fmt_double(r.mask_fraction) << ",";
                                if (r.method == "flowroi" && cov >= 0.0) csv << fmt_double(cov);
                                csv << "\n";
                            }
                        } catch (const data_error& e) {
                            std::cerr << "sweep: skipping " << key.str() << ": " << e.what()
                                      << "\n";
                        }
                        csv.flush();
                        done_out << key.str() << "\n";
                        done_out.flush();
                    }
            }
    return 0;
}

// ---- plot ----

struct PlotOptions {
    std::string curve, out;
    std::string metric = "psnr_roi";
};

struct CurvePoint {
    double rate, value;
};

int run_plot(const PlotOptions& o) {
    std::ifstream in(o.curve);
    if (!in) throw data_error("cannot open " + o.curve);
    std::string header;
    if (!std::getline(in, header)) throw data_error(o.curve + ": empty file");
    std::vector<std::string> cols;
    {
        std::istringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const auto col_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return int(i);
        throw data_error(o.curve + ": missing column " + name);
    };
    const int rate_col = col_of("compression_rate");
    const int method_col = col_of("method");
    const int metric_col = col_of(o.metric);

    std::map<std::string, std::vector<CurvePoint>> series;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (int(fields.size()) <= std::max(metric_col, std::max(rate_col, method_col))) continue;
        if (fields[metric_col] == "inf" || fields[metric_col].empty()) continue;
        series[fields[method_col]].push_back(
            {std::stod(fields[rate_col]), std::stod(fields[metric_col])});
    }
    if (series.empty()) throw data_error(o.curve + ": no plottable rows");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto& [name, pts] : series) {
        std::sort(pts.begin(), pts.end(),
                  [](const CurvePoint& a, const CurvePoint& b) { return a.rate < b.rate; });
        for (const auto& p : pts) {
            xmin = std::min(xmin, p.rate);
            xmax = std::max(xmax, p.rate);
            ymin = std::min(ymin, p.value);
            ymax = std::max(ymax, p.value);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    const double W = 800, H = 500, ml = 70, mr = 160, mt = 30, mb = 55;
    const auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto Y = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream svg(o.out, std::ios::trunc);
    if (!svg) throw data_error("cannot write " + o.out);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        svg << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">" << int(std::lround(xv))
            << "</text>\n";
        svg << "<line x1=\"" << X(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << X(xv)
            << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", yv);
        svg << "<text x=\"" << ml - 10 << "\" y=\"" << Y(yv) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << buf << "</text>\n";
        svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << ml << "\" y2=\""
            << Y(yv) << "\" stroke=\"black\"/>\n";
    }
    svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" font-size=\"14\" text-anchor=\"middle\">compression rate</text>\n";
    svg << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (mt + H - mb) / 2 << ")\">" << o.metric << " (dB)</text>\n";

    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    int idx = 0;
    for (const auto& [name, pts] : series) {
        const char* color = palette[idx % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : pts) svg << X(p.rate) << "," << Y(p.value) << " ";
        svg << "\"/>\n";
        for (const auto& p : pts)
            svg << "<circle cx=\"" << X(p.rate) << "\" cy=\"" << Y(p.value)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        svg << "<rect x=\"" << W - mr + 15 << "\" y=\"" << mt + 20 * idx << "\" width=\"12\""
            << " height=\"12\" fill=\"" << color << "\"/>\n"
            << "<text x=\"" << W - mr + 32 << "\" y=\"" << mt + 20 * idx + 10
            << "\" font-size=\"12\">" << name << "</text>\n";
        ++idx;
    }
    svg << "</svg>\n";
    if (!svg) throw data_error("I/O error writing " + o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motion-guided RoI compression for time-lapse microscopy"};
    app.require_subcommand(1);

    SynthOptions synth_opts;
    attach_synth(app.add_subcommand("synth", "generate a synthetic benchmark dataset"),
                 synth_opts);

    ExtractOptions ex;
    {
        CLI::App* cmd = app.add_subcommand("extract-roi", "compute RoI masks for a sequence");
        add_config_file(cmd);
        cmd->add_option("--in", ex.in, "input frame directory (.pgm)")->required();
        cmd->add_option("--out", ex.out, "output mask directory (.pbm)")->required();
        cmd->add_option("--dump-flow", ex.dump_flow, "also dump FLO1 flow fields here");
        cmd->add_option("--report-out", ex.report_out);
        ex.pipeline.attach(cmd);
    }

    CompressOptions co;
    {
        CLI::App* cmd = app.add_subcommand("compress", "RoI-compress a sequence to .froi files");
        add_config_file(cmd);
        cmd->add_option("--in", co.in)->required();
        cmd->add_option("--out", co.out)->required();
        cmd->add_option("--report-out", co.report_out);
        cmd->add_flag("--no-timing", co.no_timing, "skip the timing.json side file");
        co.pipeline.attach(cmd);
    }

    std::string dec_in, dec_out;
    int dec_workers = 0;
    {
        CLI::App* cmd = app.add_subcommand("decompress", "decode .froi files to frames + masks");
        cmd->add_option("--in", dec_in)->required();
        cmd->add_option("--out", dec_out)->required();
        cmd->add_option("--workers", dec_workers);
    }

    EvaluateOptions ev;
    {
        CLI::App* cmd = app.add_subcommand("evaluate", "PSNR and coverage reports");
        cmd->add_option("--raw", ev.raw, "original frame directory")->required();
        cmd->add_option("--decoded", ev.decoded, "decoded frame directory")->required();
        cmd->add_option("--truth", ev.truth, "ground-truth directory from synth");
        cmd->add_option("--compressed", ev.compressed, ".froi directory for achieved ratios");
        cmd->add_option("--report-out", ev.report_out);
        cmd->add_option("--workers", ev.workers);
    }

    SweepOptions sw;
    {
        CLI::App* cmd = app.add_subcommand("sweep", "grid sweep over the five hyperparameters");
        add_config_file(cmd);
        cmd->add_option("--in", sw.in)->required();
        cmd->add_option("--truth", sw.truth);
        cmd->add_option("--out", sw.out, "output CSV")->required();
        cmd->add_option("--done-log", sw.done_log, "resume log (default <out>.done)");
        cmd->add_option("--grid-denoise", sw.grid_denoise)->delimiter(',');
        cmd->add_option("--grid-threshold", sw.grid_threshold)->delimiter(',');
        cmd->add_option("--grid-adjacent", sw.grid_adjacent)->delimiter(',');
        cmd->add_option("--grid-scaling", sw.grid_scaling)->delimiter(',');
        cmd->add_option("--grid-rate", sw.grid_rate)->delimiter(',');
        sw.pipeline.attach(cmd);
    }

    PlotOptions pl;
    {
        CLI::App* cmd = app.add_subcommand("plot", "render a PSNR-vs-rate SVG from a sweep CSV");
        cmd->add_option("--curve", pl.curve, "sweep CSV")->required();
        cmd->add_option("--out", pl.out, "output SVG")->required();
        cmd->add_option("--metric", pl.metric)
            ->check(CLI::IsMember({"psnr_global", "psnr_roi", "psnr_background"}));
    }

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("synth")) return run_synth(synth_opts);
        if (app.got_subcommand("extract-roi"))
            return run_extract(app.get_subcommand("extract-roi"), ex);
        if (app.got_subcommand("compress"))
            return run_compress(app.get_subcommand("compress"), co);
        if (app.got_subcommand("decompress")) return run_decompress(dec_in, dec_out, dec_workers);
        if (app.got_subcommand("evaluate")) return run_evaluate(ev);
        if (app.got_subcommand("sweep")) return run_sweep(app.get_subcommand("sweep"), sw);
        if (app.got_subcommand("plot")) return run_plot(pl);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // 0 for --help, 1 otherwise
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
