#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowroi/codec.hpp"
#include "flowroi/core.hpp"
#include "flowroi/metrics.hpp"
#include "flowroi/pgm.hpp"
#include "flowroi/roi.hpp"
#include "flowroi/synthetic.hpp"

namespace flowroi {

using json = nlohmann::json;

struct PipelineConfig {
    DenoiseParams denoise;
    FlowParams flow;
    RoiParams roi;
    CodecParams codec;
    int max_shift = kDefaultMaxShift;
    int workers = 0;  // 0 = all hardware threads
    std::uint64_t seed = 0;

    void validate() const {
        denoise.validate();
        flow.validate();
        roi.validate();
        codec.validate();
        if (max_shift < 1) throw usage_error("max_shift must be >= 1");
        if (workers < 0) throw usage_error("workers must be >= 0");
    }

    ExtractParams extract_params() const {
        return ExtractParams{denoise, flow, roi, max_shift};
    }
};

inline json to_json(const PipelineConfig& c) {
    return json{
        {"denoise",
         {{"enabled", c.denoise.enabled},
          {"median_radius", c.denoise.median_radius},
          {"bilateral_sigma_spatial", c.denoise.bilateral_sigma_spatial},
          {"bilateral_sigma_range", c.denoise.bilateral_sigma_range},
          {"bilateral_radius", c.denoise.bilateral_radius}}},
        {"flow",
         {{"pyramid_levels", c.flow.pyramid_levels},
          {"pyramid_scale", c.flow.pyramid_scale},
          {"window_size", c.flow.window_size},
          {"iterations", c.flow.iterations},
          {"poly_n", c.flow.poly_n},
          {"poly_sigma", c.flow.poly_sigma}}},
        {"roi",
         {{"roi_threshold", c.roi.roi_threshold},
          {"flow_weight", c.roi.flow_weight},
          {"adjacent_factor", c.roi.adjacent_factor},
          {"min_area", c.roi.min_area},
          {"open_radius", c.roi.open_radius},
          {"close_radius", c.roi.close_radius},
          {"saliency_gradient",
           c.roi.gradient_source == SaliencyGradient::image ? "image" : "flow"}}},
        {"codec",
         {{"scaling_factor", c.codec.scaling_factor},
          {"compression_rate", c.codec.compression_rate},
          {"dwt_levels", c.codec.dwt_levels},
          {"lossless", c.codec.lossless}}},
        {"max_shift", c.max_shift},
        {"workers", c.workers},
        {"seed", c.seed}};
}

// Infinite PSNR is serialized as the string "inf", never a sentinel number.
inline json json_db(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t sequence_content_hash(const Sequence& seq) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Frame& f : seq.frames) {
        const std::int32_t dims[3] = {f.width, f.height, f.depth};
        h = fnv1a64(dims, sizeof dims, h);
        h = fnv1a64(f.pixels.data(), f.pixels.size() * 2, h);
    }
    return h;
}

inline std::string cpu_identifier() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                std::string name = line.substr(colon + 1);
                const auto start = name.find_first_not_of(' ');
                return start == std::string::npos ? name : name.substr(start);
            }
        }
    }
    return "unknown";
}

// ---- compression run ----

struct StageBreakdown {
    std::uint64_t denoise_ns = 0;
    std::uint64_t flow_ns = 0;
    std::uint64_t roi_ns = 0;
    std::uint64_t encode_ns = 0;
};

struct CompressResult {
    std::vector<std::vector<std::uint8_t>> files;  // one .froi per frame
    std::vector<RoiMask> masks;
    ExtractInfo info;
    StageBreakdown stages;
    double wall_seconds = 0;
};

// Extract masks and encode every frame. Deterministic for a fixed config:
// workers only change wall time, never a byte of output.
inline CompressResult compress_sequence(const Sequence& seq, const PipelineConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CompressResult res;
    StageTimes timers;
    res.masks = extract_roi(seq, config.extract_params(), config.workers, &res.info, &timers);
    res.files.resize(seq.size());
    parallel_for(seq.size(), config.workers, [&](std::size_t i) {
        detail::StageStopwatch sw(&timers.encode_ns);
        res.files[i] = encode(seq[i], res.masks[i], config.codec);
    });
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.stages = {timers.denoise_ns.load(), timers.flow_ns.load(), timers.roi_ns.load(),
                  timers.encode_ns.load()};
    return res;
}

inline json compress_report(const Sequence& seq, const PipelineConfig& config,
                            const CompressResult& res) {
    json frames = json::array();
    for (std::size_t i = 0; i < res.files.size(); ++i) {
        const std::size_t raw = seq[i].size() * (seq[i].depth / 8);
        json row{{"index", i},
                 {"file", frame_name(i, ".froi")},
                 {"mask_fraction", res.masks[i].fraction()},
                 {"file_bytes", res.files[i].size()},
                 {"achieved_ratio", double(raw) / double(res.files[i].size())}};
        if (i < res.info.shifts.size()) {
            row["shift"] = {{"dx", res.info.shifts[i].dx},
                            {"dy", res.info.shifts[i].dy},
                            {"confidence", res.info.shifts[i].confidence}};
        }
        frames.push_back(std::move(row));
    }
    double mask_sum = 0, ratio_sum = 0;
    std::size_t byte_sum = 0;
    for (std::size_t i = 0; i < res.files.size(); ++i) {
        mask_sum += res.masks[i].fraction();
        byte_sum += res.files[i].size();
        ratio_sum += double(seq[i].size() * (seq[i].depth / 8)) / double(res.files[i].size());
    }
    return json{{"schema", "flowroi-report/1"},
                {"command", "compress"},
                {"config", to_json(config)},
                {"input_hash", hex64(sequence_content_hash(seq))},
                {"frames", frames},
                {"aggregate",
                 {{"frame_count", res.files.size()},
                  {"mean_mask_fraction", mask_sum / double(res.files.size())},
                  {"mean_achieved_ratio", ratio_sum / double(res.files.size())},
                  {"total_bytes", byte_sum}}}};
}

// Wall-clock timing report. Lives in its own file so the main report stays
// byte-identical across runs and worker counts.
inline json timing_report(const Sequence& seq, const PipelineConfig& config,
                          const CompressResult& res) {
    const double n = double(seq.size());
    return json{{"schema", "flowroi-timing/1"},
                {"cpu", cpu_identifier()},
                {"workers", resolve_workers(config.workers)},
                {"frames", seq.size()},
                {"wall_seconds", res.wall_seconds},
                {"fps", n / res.wall_seconds},
                {"stage_seconds",
                 {{"denoise", res.stages.denoise_ns * 1e-9},
                  {"flow", res.stages.flow_ns * 1e-9},
                  {"roi", res.stages.roi_ns * 1e-9},
                  {"encode", res.stages.encode_ns * 1e-9}}}};
}

// fps of the extract+encode path after a small warm-up, at a given worker
// count. Reported, never asserted.
inline json measure_throughput(const Sequence& seq, const PipelineConfig& config) {
    if (seq.size() < 10) throw usage_error("throughput: need at least 10 frames");
    PipelineConfig warm = config;
    Sequence head;
    head.frames.assign(seq.frames.begin(), seq.frames.begin() + 2);
    compress_sequence(head, warm);  // warm-up excluded from the measurement
    const CompressResult res = compress_sequence(seq, config);
    return timing_report(seq, config, res);
}

// ---- directory-level operations ----

inline void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw data_error("cannot create directory " + path + ": " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

struct DecompressFailure {
    std::string file;
    std::string error;
};

// Decodes every .froi in a directory to PGM frames and PBM masks. Bad files
// are reported and skipped.
inline std::vector<DecompressFailure> decompress_dir(const std::string& in_dir,
                                                     const std::string& out_dir, int workers) {
    const auto files = list_files(in_dir, ".froi");
    if (files.empty()) throw data_error("no .froi files in " + in_dir);
    ensure_dir(out_dir);
    ensure_dir(join_path(out_dir, "masks"));
    std::vector<DecompressFailure> failures(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        try {
            const DecodeResult dec = decode(load_froi(files[i]));
            const std::string stem = std::filesystem::path(files[i]).stem().string();
            save_pgm(dec.frame, join_path(out_dir, stem + ".pgm"));
            save_pbm(dec.mask, join_path(out_dir, join_path("masks", stem + ".pbm")));
        } catch (const std::exception& e) {
            failures[i] = {files[i], e.what()};
        }
    });
    std::vector<DecompressFailure> out;
    for (auto& f : failures)
        if (!f.file.empty()) out.push_back(std::move(f));
    return out;
}

// ---- ground-truth serialization (synth output, evaluate input) ----

inline void save_ground_truth(const GroundTruth& truth, const std::string& dir) {
    ensure_dir(dir);
    ensure_dir(join_path(dir, "masks"));
    for (std::size_t i = 0; i < truth.masks.size(); ++i)
        save_pbm(truth.masks[i], join_path(dir, join_path("masks", frame_name(i, ".pbm"))));
    std::ofstream csv(join_path(dir, "trajectories.csv"), std::ios::trunc);
    if (!csv) throw data_error("cannot write trajectories.csv in " + dir);
    csv << "frame,cell,x,y,radius,contrast,low_contrast\n";
    csv.precision(17);
    for (std::size_t f = 0; f < truth.masks.size(); ++f)
        for (const CellTrack& t : truth.tracks)
            csv << f << "," << t.id << "," << t.centers[f].x << "," << t.centers[f].y << ","
                << t.radius << "," << t.contrast << "," << (t.low_contrast ? 1 : 0) << "\n";
    if (!csv) throw data_error("I/O error writing trajectories.csv");
}

inline GroundTruth load_ground_truth(const std::string& dir) {
    GroundTruth truth;
    const auto mask_files = list_files(join_path(dir, "masks"), ".pbm");
    if (mask_files.empty()) throw data_error("no truth masks in " + dir);
    for (const auto& p : mask_files) truth.masks.push_back(load_pbm(p));

    std::ifstream csv(join_path(dir, "trajectories.csv"));
    if (!csv) throw data_error("cannot open trajectories.csv in " + dir);
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw data_error("bad trajectories.csv row: " + line);
        const std::size_t frame = std::stoul(fields[0]);
        const int cell = std::stoi(fields[1]);
        if (cell >= int(truth.tracks.size())) truth.tracks.resize(cell + 1);
        CellTrack& t = truth.tracks[cell];
        t.id = cell;
        if (t.centers.size() != frame) throw data_error("trajectories.csv rows out of order");
        t.centers.push_back({std::stod(fields[2]), std::stod(fields[3])});
        t.radius = std::stod(fields[4]);
        t.contrast = std::stod(fields[5]);
        t.low_contrast = fields[6] == "1";
    }
    for (const auto& t : truth.tracks)
        if (t.centers.size() != truth.masks.size())
            throw data_error("trajectories.csv incomplete for cell " + std::to_string(t.id));
    return truth;
}

// ---- evaluation ----

inline json quality_to_json(const QualityReport& q) {
    json frames = json::array();
    for (const auto& f : q.frames)
        frames.push_back({{"psnr_global", json_db(f.psnr_global)},
                          {"psnr_roi", json_db(f.psnr_roi)},
                          {"psnr_background", json_db(f.psnr_background)},
                          {"achieved_ratio", f.achieved_ratio},
                          {"mask_fraction", f.mask_fraction}});
    return json{{"frames", frames},
                {"aggregate",
                 {{"mean_psnr_global", json_db(q.mean_psnr_global)},
                  {"min_psnr_global", json_db(q.min_psnr_global)},
                  {"mean_psnr_roi", json_db(q.mean_psnr_roi)},
                  {"min_psnr_roi", json_db(q.min_psnr_roi)},
                  {"mean_psnr_background", json_db(q.mean_psnr_background)},
                  {"min_psnr_background", json_db(q.min_psnr_background)},
                  {"mean_achieved_ratio", q.mean_achieved_ratio},
                  {"mean_mask_fraction", q.mean_mask_fraction}}}};
}

inline json coverage_to_json(const CoverageReport& c) {
    json missed = json::array();
    for (const auto& m : c.missed)
        missed.push_back({{"frame", m.frame}, {"cell", m.cell}, {"contrast", m.contrast}});
    return json{{"cells_total", c.cells_total},
                {"cells_covered", c.cells_covered},
                {"coverage_rate", c.coverage_rate},
                {"high_contrast_total", c.high_contrast_total},
                {"high_contrast_covered", c.high_contrast_covered},
                {"high_contrast_rate", c.high_contrast_rate},
                {"missed_cells", missed}};
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw data_error("I/O error writing " + path);
}

}  // namespace flowroi
