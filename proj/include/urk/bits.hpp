#pragma once

#include <cstdint>
#include <vector>

#include "urk/errors.hpp"

// Bit-exact stream packing. Convention used across all serialized forms:
// bits are written LSB-first within each byte, i.e. bit index t of the stream
// lives at byte t/8, mask 1 << (t%8). An N-bit unsigned value is written with
// its least significant bit first, so reading N bits back yields the value.

namespace urk {

class BitWriter {
  public:
    void put_bit(bool b) {
        size_t byte = nbits_ >> 3;
        if (byte == buf_.size()) buf_.push_back(0);
        if (b) buf_[byte] |= static_cast<uint8_t>(1u << (nbits_ & 7));
        ++nbits_;
    }

    void put_bits(uint64_t value, unsigned nbits) {
        for (unsigned t = 0; t < nbits; ++t) put_bit((value >> t) & 1u);
    }

    // Zero-pad to the next byte boundary.
    void align_byte() {
        while (nbits_ & 7) put_bit(false);
    }

    size_t bit_count() const { return nbits_; }
    const std::vector<uint8_t>& bytes() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

  private:
    std::vector<uint8_t> buf_;
    size_t nbits_ = 0;
};

class BitReader {
  public:
    BitReader(const uint8_t* data, size_t nbytes) : data_(data), nbits_(nbytes * 8) {}

    bool get_bit() {
        if (pos_ >= nbits_) throw format_error("bit stream truncated");
        bool b = (data_[pos_ >> 3] >> (pos_ & 7)) & 1u;
        ++pos_;
        return b;
    }

    uint64_t get_bits(unsigned nbits) {
        uint64_t v = 0;
        for (unsigned t = 0; t < nbits; ++t) v |= static_cast<uint64_t>(get_bit()) << t;
        return v;
    }

    void align_byte() {
        while (pos_ & 7) {
            if (get_bit()) throw format_error("nonzero padding bit");
        }
    }

    size_t bit_pos() const { return pos_; }
    size_t bits_left() const { return nbits_ - pos_; }

  private:
    const uint8_t* data_;
    size_t nbits_;
    size_t pos_ = 0;
};

// Little-endian u64 helpers for fixed headers.
inline void put_u64le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint64_t get_u64le(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

} // namespace urk
