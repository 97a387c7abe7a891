#pragma once

#include <cstdint>
#include <vector>

namespace flowroi {

// Adaptive binary arithmetic coder: carry-propagating range coder with 15-bit
// probability models. Integer-only state, so streams are identical across
// platforms. A stream prefix always decodes to a prefix of the symbols, which
// is what embedded truncation relies on. The 15-bit resolution matters for
// bitplane coding: significance scans are overwhelmingly skewed toward zero,
// and the adaptation fixpoint (~1/1000 here) bounds the cost of each
// insignificant coefficient visit.
struct BitModel {
    std::uint16_t p0 = 16384;  // P(bit == 0) in units of 1/32768
};

class RangeEncoder {
public:
    static constexpr std::uint32_t kTop = 1u << 24;
    static constexpr int kProbBits = 15;
    static constexpr int kMoveBits = 5;

    void encode(BitModel& m, int bit) {
        const std::uint32_t bound = (range_ >> kProbBits) * m.p0;
        if (bit == 0) {
            range_ = bound;
            m.p0 = std::uint16_t(m.p0 + (((1u << kProbBits) - m.p0) >> kMoveBits));
        } else {
            low_ += bound;
            range_ -= bound;
            m.p0 = std::uint16_t(m.p0 - (m.p0 >> kMoveBits));
        }
        while (range_ < kTop) {
            shift_low();
            range_ <<= 8;
        }
    }

    // Fixed-probability bits, most significant first.
    void encode_direct(std::uint32_t value, int nbits) {
        for (int i = nbits - 1; i >= 0; --i) {
            range_ >>= 1;
            if ((value >> i) & 1u) low_ += range_;
            while (range_ < kTop) {
                shift_low();
                range_ <<= 8;
            }
        }
    }

    void flush() {
        for (int i = 0; i < 5; ++i) shift_low();
    }

    std::size_t bytes_written() const { return bytes_.size(); }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    void shift_low() {
        if (std::uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
            std::uint8_t carry = std::uint8_t(low_ >> 32);
            std::uint8_t temp = cache_;
            do {
                bytes_.push_back(std::uint8_t(temp + carry));
                temp = 0xFF;
            } while (--cache_size_ != 0);
            cache_ = std::uint8_t(low_ >> 24);
        }
        ++cache_size_;
        low_ = (low_ & 0x00FFFFFFull) << 8;
    }

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::vector<std::uint8_t> bytes_;
};

class RangeDecoder {
public:
    RangeDecoder(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {
        next_byte();  // leading zero byte from the encoder cache
        for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
    }

    int decode(BitModel& m) {
        const std::uint32_t bound = (range_ >> RangeEncoder::kProbBits) * m.p0;
        int bit;
        if (code_ < bound) {
            range_ = bound;
            m.p0 = std::uint16_t(m.p0 + (((1u << RangeEncoder::kProbBits) - m.p0) >>
                                         RangeEncoder::kMoveBits));
            bit = 0;
        } else {
            code_ -= bound;
            range_ -= bound;
            m.p0 = std::uint16_t(m.p0 - (m.p0 >> RangeEncoder::kMoveBits));
            bit = 1;
        }
        while (range_ < RangeEncoder::kTop) {
            range_ <<= 8;
            code_ = (code_ << 8) | next_byte();
        }
        return bit;
    }

    std::uint32_t decode_direct(int nbits) {
        std::uint32_t value = 0;
        for (int i = 0; i < nbits; ++i) {
            range_ >>= 1;
            int bit = 0;
            if (code_ >= range_) {
                code_ -= range_;
                bit = 1;
            }
            value = (value << 1) | std::uint32_t(bit);
            while (range_ < RangeEncoder::kTop) {
                range_ <<= 8;
                code_ = (code_ << 8) | next_byte();
            }
        }
        return value;
    }

    // True once a read past the end of the payload happened; symbols decoded
    // after this point are padding-fed and the caller should stop.
    bool exhausted() const { return exhausted_; }

private:
    std::uint8_t next_byte() {
        if (pos_ >= size_) {
            exhausted_ = true;
            return 0;
        }
        return data_[pos_++];
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint32_t code_ = 0;
    bool exhausted_ = false;
};

}  // namespace flowroi
