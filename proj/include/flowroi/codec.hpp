#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "flowroi/bitcoder.hpp"
#include "flowroi/core.hpp"
#include "flowroi/dwt.hpp"
#include "flowroi/roi.hpp"

namespace flowroi {

struct CodecParams {
    int scaling_factor = 5;          // RoI magnitude bit-shift, [1,10]
    double compression_rate = 40.0;  // raw bytes / compressed bytes, > 1
    int dwt_levels = 5;
    bool lossless = false;

    void validate() const {
        if (scaling_factor < 1 || scaling_factor > 10)
            throw usage_error("codec: scaling_factor must be in [1,10]");
        if (!lossless && !(compression_rate > 1.0))
            throw usage_error("codec: compression_rate must be > 1");
        if (dwt_levels < 1) throw usage_error("codec: dwt_levels must be >= 1");
    }
};

// Parsed .froi container header. All integers little-endian on disk.
struct FroiHeader {
    std::uint16_t version = 1;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint8_t depth = 8;
    std::uint8_t levels = 5;
    std::uint8_t scaling = 5;
    std::uint32_t rate_x100 = 0;  // 0 means lossless
    std::uint32_t mask_len = 0;
    std::uint32_t payload_len = 0;
};

constexpr std::size_t kFroiHeaderBytes = 29;
constexpr std::size_t kFroiHeaderAllowance = 64;

namespace froi {

// ---- mask segment: context-modeled binary arithmetic coding
//
// Each mask bit is coded with an adaptive model selected by six causal
// neighbors (two rows of context), which prices a mask by its contour length
// rather than its run count. Fragmented masks stay a few hundred bytes where
// run-length coding balloons past the whole byte budget at high rates.

inline int mask_context(const RoiMask& m, int x, int y) {
    const auto at = [&](int xx, int yy) {
        return (xx >= 0 && yy >= 0 && xx < m.width) ? int(m.get(xx, yy)) : 0;
    };
    return at(x - 1, y) | (at(x - 2, y) << 1) | (at(x - 1, y - 1) << 2) | (at(x, y - 1) << 3) |
           (at(x + 1, y - 1) << 4) | (at(x, y - 2) << 5);
}

inline std::vector<std::uint8_t> encode_mask_segment(const RoiMask& mask) {
    RangeEncoder enc;
    std::vector<BitModel> models(64);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            enc.encode(models[mask_context(mask, x, y)], mask.get(x, y) ? 1 : 0);
    enc.flush();
    return enc.take();
}

inline RoiMask decode_mask_segment(const std::uint8_t* data, std::size_t size, int width,
                                   int height) {
    RangeDecoder dec(data, size);
    std::vector<BitModel> models(64);
    RoiMask mask(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            mask.set(x, y, dec.decode(models[mask_context(mask, x, y)]) != 0);
    if (dec.exhausted()) throw data_error("froi: truncated mask segment");
    return mask;
}

// ---- header serialization

inline void put_u16(std::vector<std::uint8_t>& o, std::uint16_t v) {
    o.push_back(std::uint8_t(v));
    o.push_back(std::uint8_t(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& o, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) o.push_back(std::uint8_t(v >> (8 * i)));
}
inline std::uint16_t get_u16(const std::uint8_t* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

inline std::vector<std::uint8_t> serialize_header(const FroiHeader& h) {
    std::vector<std::uint8_t> out;
    out.reserve(kFroiHeaderBytes);
    out.insert(out.end(), {'F', 'R', 'O', 'I'});
    put_u16(out, h.version);
    put_u32(out, h.width);
    put_u32(out, h.height);
    out.push_back(h.depth);
    out.push_back(h.levels);
    out.push_back(h.scaling);
    put_u32(out, h.rate_x100);
    put_u32(out, h.mask_len);
    put_u32(out, h.payload_len);
    return out;
}

inline FroiHeader parse_header(const std::uint8_t* p, std::size_t size) {
    if (size < kFroiHeaderBytes) throw data_error("froi: file shorter than header");
    if (p[0] != 'F' || p[1] != 'R' || p[2] != 'O' || p[3] != 'I')
        throw data_error("froi: bad magic");
    FroiHeader h;
    h.version = get_u16(p + 4);
    if (h.version != 1) throw data_error("froi: unsupported version " + std::to_string(h.version));
    h.width = get_u32(p + 6);
    h.height = get_u32(p + 10);
    h.depth = p[14];
    h.levels = p[15];
    h.scaling = p[16];
    h.rate_x100 = get_u32(p + 17);
    h.mask_len = get_u32(p + 21);
    h.payload_len = get_u32(p + 25);
    if (h.width == 0 || h.height == 0 || (h.depth != 8 && h.depth != 16) || h.levels < 1 ||
        h.scaling < 1 || h.scaling > 10)
        throw data_error("froi: inconsistent header");
    return h;
}

// ---- per-subband context sets

struct SubbandModels {
    BitModel significance[4];  // indexed by significant causal-neighbor count
    BitModel sign;
    BitModel refinement;
};

constexpr std::uint16_t kStreamTerminator = 0xA55A;

}  // namespace froi

// RoI coefficients are those whose inverse-transform footprint can touch an
// RoI pixel: the pixel mask is 2x2-OR downsampled level by level and dilated
// by the 5/3 synthesis half-length (2) each time.
inline std::vector<RoiMask> map_mask_to_subbands(const RoiMask& mask, int levels) {
    std::vector<RoiMask> out;
    out.reserve(levels);
    RoiMask cur = mask;
    bool any = cur.count() > 0;
    for (int l = 1; l <= levels; ++l) {
        const int w = (cur.width + 1) / 2, h = (cur.height + 1) / 2;
        RoiMask down(w, h);
        if (any)
            for (int y = 0; y < cur.height; ++y)
                for (int x = 0; x < cur.width; ++x)
                    if (cur.get(x, y)) down.set(x / 2, y / 2, true);
        cur = any ? dilate(down, 2) : down;
        out.push_back(cur);
    }
    return out;
}

namespace froi {

// Count of significant causal neighbors (left, up, up-left) inside the
// subband, giving the significance context in [0,3].
inline int neighbor_context(const std::vector<std::uint8_t>& sig, const Subband& b,
                            int grid_width, int x, int y) {
    int c = 0;
    const auto at = [&](int xx, int yy) {
        return sig[std::size_t(b.y0 + yy) * grid_width + (b.x0 + xx)] != 0;
    };
    if (x > 0 && at(x - 1, y)) ++c;
    if (y > 0 && at(x, y - 1)) ++c;
    if (x > 0 && y > 0 && at(x - 1, y - 1)) ++c;
    return c;
}

// Each subband is scanned as two units, its RoI coefficients and the rest,
// each with its own transmitted plane count. Planes above a unit's own
// magnitude ceiling are skipped outright instead of coding a full grid of
// known zeros, which is what keeps the priority shift affordable: with a
// single shared scan, the extra scaled planes would burn a third of a tight
// byte budget on idle visits.
struct ScanUnit {
    std::size_t band = 0;
    std::vector<std::uint32_t> cells;  // grid indices in raster order
    int planes = 0;  // bit_width of the unit's max magnitude, transmitted
};

// Derivable from the transmitted mask alone, so encoder and decoder agree.
inline std::vector<ScanUnit> build_scan_units(const std::vector<Subband>& bands, int grid_width,
                                              const std::vector<std::uint8_t>& roi) {
    std::vector<ScanUnit> units;
    units.reserve(bands.size() * 2);
    for (std::size_t sb = 0; sb < bands.size(); ++sb) {
        const Subband& b = bands[sb];
        ScanUnit ru, bu;
        ru.band = bu.band = sb;
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x) {
                const std::uint32_t i =
                    std::uint32_t(std::size_t(b.y0 + y) * grid_width + (b.x0 + x));
                (roi[i] ? ru : bu).cells.push_back(i);
            }
        if (!ru.cells.empty()) units.push_back(std::move(ru));
        if (!bu.cells.empty()) units.push_back(std::move(bu));
    }
    return units;
}

}  // namespace froi

// Encodes one frame with scaling-based RoI priority into a .froi container.
// RoI coefficient magnitudes are shifted up by scaling_factor before bitplane
// coding, so their planes drain into the budget-truncated stream first.
inline std::vector<std::uint8_t> encode(const Frame& frame, const RoiMask& mask,
                                        const CodecParams& params) {
    params.validate();
    if (mask.width != frame.width || mask.height != frame.height)
        throw data_error("encode: mask/frame dimension mismatch");

    const std::size_t raw_bytes = frame.size() * (frame.depth / 8);
    const std::vector<std::uint8_t> mask_seg = froi::encode_mask_segment(mask);
    std::size_t payload_budget = std::size_t(-1);
    if (!params.lossless) {
        // header and mask segment are charged against the byte budget first,
        // so the whole file never exceeds raw_bytes / compression_rate
        const std::size_t target = std::size_t(double(raw_bytes) / params.compression_rate);
        if (target <= kFroiHeaderBytes + mask_seg.size())
            throw data_error(
                "encode: compression rate infeasible; minimum file size is about " +
                std::to_string(kFroiHeaderBytes + mask_seg.size() + 8) + " bytes (" +
                std::to_string(mask_seg.size()) + " of them RoI mask)");
        payload_budget = target - kFroiHeaderBytes - mask_seg.size();
    }

    SubbandGrid grid = dwt_forward(frame, params.dwt_levels);
    const auto bands = subband_layout(grid.width, grid.height, grid.levels);
    const auto level_masks = map_mask_to_subbands(mask, grid.levels);

    // RoI scaling: multiply marked magnitudes by 2^s
    std::vector<std::uint8_t> roi(grid.coeffs.size(), 0);
    if (mask.count() > 0) {
        for (const Subband& b : bands) {
            const RoiMask& lm = level_masks[b.level - 1];
            for (int y = 0; y < b.h; ++y)
                for (int x = 0; x < b.w; ++x)
                    if (lm.get(std::min(x, lm.width - 1), std::min(y, lm.height - 1)))
                        roi[std::size_t(b.y0 + y) * grid.width + (b.x0 + x)] = 1;
        }
        const std::int32_t mult = 1 << params.scaling_factor;
        for (std::size_t i = 0; i < grid.coeffs.size(); ++i)
            if (roi[i]) grid.coeffs[i] *= mult;
    }

    std::vector<std::uint32_t> mag(grid.coeffs.size());
    for (std::size_t i = 0; i < grid.coeffs.size(); ++i)
        mag[i] = std::uint32_t(grid.coeffs[i] < 0 ? -std::int64_t(grid.coeffs[i])
                                                  : std::int64_t(grid.coeffs[i]));

    auto units = froi::build_scan_units(bands, grid.width, roi);
    int plane_count = 0;
    for (auto& u : units) {
        std::uint32_t m = 0;
        for (const auto idx : u.cells) m = std::max(m, mag[idx]);
        u.planes = int(std::bit_width(m));
        plane_count = std::max(plane_count, u.planes);
    }

    RangeEncoder enc;
    std::vector<froi::SubbandModels> models(bands.size());
    std::vector<std::uint8_t> sig(grid.coeffs.size(), 0);
    enc.encode_direct(std::uint32_t(plane_count), 6);
    for (const auto& u : units) enc.encode_direct(std::uint32_t(u.planes), 6);

    bool budget_hit = false;
    for (int plane = plane_count - 1; plane >= 0 && !budget_hit; --plane) {
        for (const auto& u : units) {
            if (u.planes <= plane) continue;  // every bit here is a known zero
            const Subband& b = bands[u.band];
            froi::SubbandModels& mset = models[u.band];
            for (const auto i : u.cells) {
                const int bit = int((mag[i] >> plane) & 1u);
                if (!sig[i]) {
                    const int x = int(i % grid.width) - b.x0;
                    const int y = int(i / grid.width) - b.y0;
                    const int ctx = froi::neighbor_context(sig, b, grid.width, x, y);
                    enc.encode(mset.significance[ctx], bit);
                    if (bit) {
                        sig[i] = 1;
                        enc.encode(mset.sign, grid.coeffs[i] < 0 ? 1 : 0);
                    }
                } else {
                    enc.encode(mset.refinement, bit);
                }
                if (enc.bytes_written() >= payload_budget) {
                    budget_hit = true;
                    break;
                }
            }
            if (budget_hit) break;
        }
    }
    if (!budget_hit) {
        // room left for a clean termination: desync marker plus coder flush
        if (payload_budget == std::size_t(-1) || enc.bytes_written() + 8 <= payload_budget) {
            enc.encode_direct(froi::kStreamTerminator, 16);
            enc.flush();
        }
    }
    std::vector<std::uint8_t> payload = enc.take();
    if (payload.size() > payload_budget) payload.resize(payload_budget);

    FroiHeader h;
    h.width = std::uint32_t(frame.width);
    h.height = std::uint32_t(frame.height);
    h.depth = std::uint8_t(frame.depth);
    h.levels = std::uint8_t(params.dwt_levels);
    h.scaling = std::uint8_t(params.scaling_factor);
    h.rate_x100 =
        params.lossless ? 0 : std::uint32_t(std::llround(params.compression_rate * 100.0));
    h.mask_len = std::uint32_t(mask_seg.size());
    h.payload_len = std::uint32_t(payload.size());

    std::vector<std::uint8_t> out = froi::serialize_header(h);
    out.insert(out.end(), mask_seg.begin(), mask_seg.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

struct DecodeResult {
    Frame frame;
    RoiMask mask;
    FroiHeader header;
};

inline DecodeResult decode(const std::vector<std::uint8_t>& bytes) {
    const FroiHeader h = froi::parse_header(bytes.data(), bytes.size());
    const std::size_t need = kFroiHeaderBytes + std::size_t(h.mask_len) + h.payload_len;
    if (bytes.size() < need) throw data_error("froi: truncated file");
    if (bytes.size() > need) throw data_error("froi: trailing bytes after payload");

    const int width = int(h.width), height = int(h.height);
    if (width < (1 << h.levels) || height < (1 << h.levels))
        throw data_error("froi: inconsistent header (levels too deep for dimensions)");
    RoiMask mask =
        froi::decode_mask_segment(bytes.data() + kFroiHeaderBytes, h.mask_len, width, height);

    SubbandGrid grid;
    grid.width = width;
    grid.height = height;
    grid.levels = h.levels;
    grid.depth = h.depth;
    grid.coeffs.assign(std::size_t(width) * height, 0);
    const auto bands = subband_layout(width, height, grid.levels);
    const auto level_masks = map_mask_to_subbands(mask, grid.levels);

    // roi marking must precede unit construction: scan layout derives from it
    std::vector<std::uint8_t> roi(grid.coeffs.size(), 0);
    if (mask.count() > 0)
        for (const Subband& b : bands) {
            const RoiMask& lm = level_masks[b.level - 1];
            for (int y = 0; y < b.h; ++y)
                for (int x = 0; x < b.w; ++x)
                    if (lm.get(std::min(x, lm.width - 1), std::min(y, lm.height - 1)))
                        roi[std::size_t(b.y0 + y) * grid.width + (b.x0 + x)] = 1;
        }

    RangeDecoder dec(bytes.data() + kFroiHeaderBytes + h.mask_len, h.payload_len);
    std::vector<froi::SubbandModels> models(bands.size());
    std::vector<std::uint8_t> sig(grid.coeffs.size(), 0);
    std::vector<std::uint32_t> mag(grid.coeffs.size(), 0);
    std::vector<std::uint8_t> neg(grid.coeffs.size(), 0);
    std::vector<std::int8_t> known(grid.coeffs.size(), 127);

    auto units = froi::build_scan_units(bands, grid.width, roi);
    const int plane_count = int(dec.decode_direct(6));
    if (plane_count > 31) throw data_error("froi: corrupt stream (bad plane count)");
    for (auto& u : units) {
        u.planes = int(dec.decode_direct(6));
        if (u.planes > 31) throw data_error("froi: corrupt stream (bad unit plane count)");
    }
    bool stopped = false;
    for (int plane = plane_count - 1; plane >= 0 && !stopped; --plane) {
        for (const auto& u : units) {
            if (u.planes <= plane) continue;
            const Subband& b = bands[u.band];
            froi::SubbandModels& mset = models[u.band];
            for (const auto i : u.cells) {
                if (dec.exhausted()) {
                    stopped = true;
                    break;
                }
                if (!sig[i]) {
                    const int x = int(i % grid.width) - b.x0;
                    const int y = int(i / grid.width) - b.y0;
                    const int ctx = froi::neighbor_context(sig, b, grid.width, x, y);
                    if (dec.decode(mset.significance[ctx])) {
                        sig[i] = 1;
                        mag[i] |= 1u << plane;
                        neg[i] = std::uint8_t(dec.decode(mset.sign));
                    }
                } else {
                    if (dec.decode(mset.refinement)) mag[i] |= 1u << plane;
                }
                known[i] = std::int8_t(plane);
            }
            if (stopped) break;
        }
    }
    if (!stopped && !dec.exhausted()) {
        const std::uint32_t marker = dec.decode_direct(16);
        if (!dec.exhausted() && marker != froi::kStreamTerminator)
            throw data_error("froi: corrupt stream (terminator mismatch)");
    }
    // a lossless payload is complete by construction, so running out of bytes
    // means the stream was damaged rather than budget-truncated
    if (h.rate_x100 == 0 && dec.exhausted())
        throw data_error("froi: corrupt stream (lossless payload ended early)");

    // midpoint reconstruction within the remaining uncertainty interval, then
    // undo the RoI scaling (magnitude shift floors toward zero)
    for (std::size_t i = 0; i < grid.coeffs.size(); ++i) {
        std::uint32_t m = mag[i];
        if (m != 0 && known[i] > 0) m += 1u << (known[i] - 1);
        if (roi[i]) m >>= h.scaling;
        grid.coeffs[i] = neg[i] ? -std::int32_t(m) : std::int32_t(m);
    }

    DecodeResult res;
    res.frame = dwt_inverse(grid);
    res.mask = std::move(mask);
    res.header = h;
    return res;
}

inline void save_froi(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw data_error("I/O error writing " + path);
}

inline std::vector<std::uint8_t> load_froi(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw data_error("cannot open " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (!in.read(reinterpret_cast<char*>(bytes.data()), size))
        throw data_error("I/O error reading " + path);
    return bytes;
}

}  // namespace flowroi
