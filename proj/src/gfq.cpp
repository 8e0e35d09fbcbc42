#include "urk/gfq.hpp"

#include "urk/bits.hpp"
#include "urk/prf.hpp"

namespace urk {

std::vector<uint32_t> FieldVec::support() const {
    std::vector<uint32_t> s;
    for (uint32_t i = 0; i < e.size(); ++i)
        if (e[i] != 0) s.push_back(i);
    return s;
}

size_t FieldVec::l0_norm() const {
    size_t c = 0;
    for (uint32_t x : e) c += x != 0;
    return c;
}

FieldVec SketchMatrix::column(uint32_t c) const {
    FieldVec v(q, m_rows);
    for (uint32_t r = 0; r < m_rows; ++r) v.e[r] = at(r, c);
    return v;
}

void require_valid_modulus(uint64_t q) {
    if (q < 3 || !is_prime_u64(q))
        throw param_error("modulus must be a prime >= 3 (got " + std::to_string(q) + ")");
    if (q > 0x7fffffffull) throw param_error("modulus too large for 32-bit residues");
}

SketchMatrix make_sketch_matrix(uint64_t seed, uint32_t q, uint32_t m_rows, uint32_t n) {
    require_valid_modulus(q);
    SketchMatrix M;
    M.q = q;
    M.m_rows = m_rows;
    M.n = n;
    M.seed = seed;
    M.a.resize(static_cast<size_t>(m_rows) * n);
    for (uint32_t r = 0; r < m_rows; ++r) {
        size_t base = static_cast<size_t>(r) * n;
        for (uint32_t c = 0; c < n; ++c)
            M.a[base + c] = static_cast<uint32_t>(prf64(seed, "matrix", r, c) % q);
    }
    return M;
}

static void require_same_shape(const FieldVec& a, const FieldVec& b) {
    if (a.q != b.q) throw param_error("field modulus mismatch");
    if (a.size() != b.size()) throw param_error("vector length mismatch");
}

FieldVec vec_add(const FieldVec& a, const FieldVec& b) {
    require_same_shape(a, b);
    FieldVec r(a.q, a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        uint32_t s = a.e[i] + b.e[i];
        r.e[i] = s >= a.q ? s - a.q : s;
    }
    return r;
}

FieldVec vec_sub(const FieldVec& a, const FieldVec& b) {
    require_same_shape(a, b);
    FieldVec r(a.q, a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        uint32_t s = a.e[i] + a.q - b.e[i];
        r.e[i] = s >= a.q ? s - a.q : s;
    }
    return r;
}

void vec_add_scaled_column(FieldVec& acc, const SketchMatrix& M, uint32_t col, uint32_t c) {
    if (acc.q != M.q || acc.size() != M.m_rows) throw param_error("accumulator shape mismatch");
    if (col >= M.n) throw param_error("column index out of range");
    if (c == 0) return;
    uint64_t q = M.q;
    for (uint32_t r = 0; r < M.m_rows; ++r) {
        uint64_t s = acc.e[r] + static_cast<uint64_t>(M.at(r, col)) * c % q;
        acc.e[r] = static_cast<uint32_t>(s >= q ? s - q : s);
    }
}

FieldVec mat_apply(const SketchMatrix& M, const FieldVec& v) {
    if (v.q != M.q) throw param_error("field modulus mismatch");
    if (v.size() != M.n) throw param_error("vector length does not match matrix columns");
    FieldVec out(M.q, M.m_rows);
    // Sparse accumulation: cost scales with the support, which is what every
    // sketch-side caller has.
    for (uint32_t c = 0; c < M.n; ++c)
        if (v.e[c] != 0) vec_add_scaled_column(out, M, c, v.e[c]);
    return out;
}

unsigned packed_bits(uint32_t q, size_t m) {
    bigint top = 1;
    for (size_t i = 0; i < m; ++i) top *= q;
    // ceil(m*log2 q) == bitlength(q^m - 1): exact since q^m is never a power
    // of two for odd q.
    return bitlength(top - 1);
}

std::vector<uint8_t> pack_base_q(const FieldVec& v) {
    bigint value = 0;
    for (size_t i = v.size(); i-- > 0;) {
        value *= v.q;
        value += v.e[i];
    }
    unsigned nbits = packed_bits(v.q, v.size());
    BitWriter w;
    for (unsigned t = 0; t < nbits; ++t) w.put_bit(boost::multiprecision::bit_test(value, t));
    return w.take();
}

FieldVec unpack_base_q(const std::vector<uint8_t>& bytes, uint32_t q, size_t m) {
    unsigned nbits = packed_bits(q, m);
    if (bytes.size() * 8 < nbits) throw format_error("packed vector truncated");
    BitReader r(bytes.data(), bytes.size());
    bigint value = 0;
    for (unsigned t = 0; t < nbits; ++t)
        if (r.get_bit()) boost::multiprecision::bit_set(value, t);
    bigint top = 1;
    for (size_t i = 0; i < m; ++i) top *= q;
    if (value >= top) throw format_error("packed value out of range for q^m");
    FieldVec v(q, m);
    for (size_t i = 0; i < m; ++i) {
        v.e[i] = static_cast<uint32_t>(value % q);
        value /= q;
    }
    return v;
}

} // namespace urk
