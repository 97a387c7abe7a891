#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flowroi/core.hpp"

namespace flowroi {

enum class ImageFormat { pgm, png, tiff_gray };

inline ImageFormat parse_image_format(const std::string& s) {
    if (s == "pgm") return ImageFormat::pgm;
    if (s == "png") return ImageFormat::png;
    if (s == "tiff" || s == "tiff-gray") return ImageFormat::tiff_gray;
    throw usage_error("unknown image format '" + s + "'");
}

namespace detail {

// Reads one PNM header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

inline int pnm_int(std::istream& in, const std::string& what, const std::string& path) {
    const std::string tok = pnm_token(in);
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw data_error(path + ": bad PNM header (" + what + ")");
    }
}

}  // namespace detail

// Binary PGM (P5). 16-bit samples are stored big-endian per the PGM convention.
inline Frame load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    if (detail::pnm_token(in) != "P5") throw data_error(path + ": not a binary PGM (P5)");
    const int w = detail::pnm_int(in, "width", path);
    const int h = detail::pnm_int(in, "height", path);
    const int maxval = detail::pnm_int(in, "maxval", path);
    int depth = 0;
    if (maxval == 255) depth = 8;
    else if (maxval == 65535) depth = 16;
    else throw data_error(path + ": unsupported bit depth (maxval " + std::to_string(maxval) + ")");
    if (w <= 0 || h <= 0) throw data_error(path + ": bad dimensions");

    Frame f(w, h, depth);
    const std::size_t n = f.size();
    if (depth == 8) {
        std::vector<std::uint8_t> raw(n);
        if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n)))
            throw data_error(path + ": truncated pixel data");
        for (std::size_t i = 0; i < n; ++i) f.pixels[i] = raw[i];
    } else {
        std::vector<std::uint8_t> raw(n * 2);
        if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n * 2)))
            throw data_error(path + ": truncated pixel data");
        for (std::size_t i = 0; i < n; ++i)
            f.pixels[i] = std::uint16_t((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
    return f;
}

inline void save_pgm(const Frame& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out << "P5\n" << f.width << " " << f.height << "\n" << f.maxval() << "\n";
    if (f.depth == 8) {
        std::vector<std::uint8_t> raw(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) raw[i] = std::uint8_t(f.pixels[i]);
        out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    } else {
        std::vector<std::uint8_t> raw(f.size() * 2);
        for (std::size_t i = 0; i < f.size(); ++i) {
            raw[2 * i] = std::uint8_t(f.pixels[i] >> 8);
            raw[2 * i + 1] = std::uint8_t(f.pixels[i] & 0xff);
        }
        out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    }
    if (!out) throw data_error("I/O error writing " + path);
}

// Binary PBM (P4), rows padded to whole bytes, MSB first. Set bit = RoI.
inline RoiMask load_pbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    if (detail::pnm_token(in) != "P4") throw data_error(path + ": not a binary PBM (P4)");
    const int w = detail::pnm_int(in, "width", path);
    const int h = detail::pnm_int(in, "height", path);
    if (w <= 0 || h <= 0) throw data_error(path + ": bad dimensions");
    const std::size_t stride = (std::size_t(w) + 7) / 8;
    std::vector<std::uint8_t> raw(stride * h);
    if (!in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size())))
        throw data_error(path + ": truncated pixel data");
    RoiMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set(x, y, (raw[y * stride + x / 8] >> (7 - x % 8)) & 1);
    return m;
}

inline void save_pbm(const RoiMask& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out << "P4\n" << m.width << " " << m.height << "\n";
    const std::size_t stride = (std::size_t(m.width) + 7) / 8;
    std::vector<std::uint8_t> raw(stride * m.height, 0);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.get(x, y)) raw[y * stride + x / 8] |= std::uint8_t(1 << (7 - x % 8));
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    if (!out) throw data_error("I/O error writing " + path);
}

inline Frame load_frame(const std::string& path, ImageFormat format = ImageFormat::pgm) {
    if (format != ImageFormat::pgm)
        throw usage_error("this build reads PGM only; convert PNG/TIFF inputs first");
    return load_pgm(path);
}

inline void save_frame(const Frame& f, const std::string& path, ImageFormat format = ImageFormat::pgm) {
    if (format != ImageFormat::pgm)
        throw usage_error("this build writes PGM only");
    save_pgm(f, path);
}

// Lists files with the given extension, sorted lexicographically so that
// zero-padded numeric names land in temporal order.
inline std::vector<std::string> list_files(const std::string& dir, const std::string& ext) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw data_error("no such directory: " + dir);
    if (!fs::is_directory(dir)) throw data_error("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ext) names.push_back(e.path().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

inline Sequence load_sequence(const std::string& dir, ImageFormat format = ImageFormat::pgm) {
    if (format != ImageFormat::pgm)
        throw usage_error("this build reads PGM sequences only");
    const auto files = list_files(dir, ".pgm");
    if (files.empty()) throw data_error("no .pgm frames in " + dir);
    Sequence seq;
    for (const auto& p : files) {
        Frame f = load_pgm(p);
        if (!seq.empty() && !seq.frames.front().same_shape(f))
            throw data_error("dimension mismatch in sequence: " + p);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

inline std::string frame_name(std::size_t index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu%s", index, ext);
    return buf;
}

}  // namespace flowroi
