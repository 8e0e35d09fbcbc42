#pragma once

#include <cstdint>
#include <vector>

#include "urk/bigint.hpp"
#include "urk/errors.hpp"

// Arithmetic over the prime field GF(q), dense vectors and matrices, and
// base-q bit packing for bit-exact message accounting.

namespace urk {

// A single field element with its modulus, for callers that want a
// self-describing value. Vectors store raw residues with one shared q.
struct FieldElem {
    uint32_t value = 0;
    uint32_t q = 3;
};

struct FieldVec {
    uint32_t q = 3;
    std::vector<uint32_t> e; // residues in [0, q)

    FieldVec() = default;
    FieldVec(uint32_t q_, size_t n) : q(q_), e(n, 0) {}

    size_t size() const { return e.size(); }
    bool operator==(const FieldVec&) const = default;

    // Indices with a nonzero entry, ascending.
    std::vector<uint32_t> support() const;
    size_t l0_norm() const;
};

// Canonical embedding of a signed integer into GF(q); inverse of the
// centered representative map on [-(q-1)/2, (q-1)/2].
inline uint32_t to_field(int64_t v, uint32_t q) {
    int64_t r = v % static_cast<int64_t>(q);
    if (r < 0) r += q;
    return static_cast<uint32_t>(r);
}

// Centered signed representative in [-(q-1)/2, (q-1)/2] of a residue.
inline int64_t from_field_centered(uint32_t v, uint32_t q) {
    return v <= (q - 1) / 2 ? static_cast<int64_t>(v)
                            : static_cast<int64_t>(v) - static_cast<int64_t>(q);
}

// Dense row-major matrix over GF(q) with entries drawn i.i.d. uniform from a
// counter-mode PRF keyed by (seed, "matrix", row, col); reconstruction from
// (seed, q, m_rows, n) is bit-identical across runs and platforms.
struct SketchMatrix {
    uint32_t q = 3;
    uint32_t m_rows = 0;
    uint32_t n = 0;
    uint64_t seed = 0;
    std::vector<uint32_t> a; // row-major, m_rows * n entries

    uint32_t at(uint32_t r, uint32_t c) const { return a[static_cast<size_t>(r) * n + c]; }

    // Column c as a length-m_rows vector.
    FieldVec column(uint32_t c) const;
};

// Deterministic matrix construction. q must be prime and >= 3.
SketchMatrix make_sketch_matrix(uint64_t seed, uint32_t q, uint32_t m_rows, uint32_t n);

// Entrywise sum mod q. Throws param_error on modulus or length mismatch.
FieldVec vec_add(const FieldVec& a, const FieldVec& b);

// Entrywise difference mod q (a - b). Same preconditions as vec_add.
FieldVec vec_sub(const FieldVec& a, const FieldVec& b);

// In-place a += c * column; c in [0, q). No allocation; the inner loop of
// every sketch update.
void vec_add_scaled_column(FieldVec& acc, const SketchMatrix& M, uint32_t col, uint32_t c);

// Matrix-vector product over GF(q); v must have length n and matching q.
FieldVec mat_apply(const SketchMatrix& M, const FieldVec& v);

// pack_base_q: encode v as the base-q integer sum(e[i] * q^i) — little-endian
// digit order — written LSB-first into exactly ceil(m * log2 q) bits.
// For odd prime q this bit count equals bitlength(q^m - 1), computed exactly.
std::vector<uint8_t> pack_base_q(const FieldVec& v);

// Exact bit length of pack_base_q for an m-entry vector over GF(q).
unsigned packed_bits(uint32_t q, size_t m);

// Inverse of pack_base_q. Throws format_error if the encoded integer is
// >= q^m (unused code points) or the buffer is shorter than packed_bits.
FieldVec unpack_base_q(const std::vector<uint8_t>& bytes, uint32_t q, size_t m);

// Validate that q is an odd prime >= 3; throws param_error otherwise.
void require_valid_modulus(uint64_t q);

} // namespace urk
