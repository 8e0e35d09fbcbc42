#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "urk/bigint.hpp"
#include "urk/gfq.hpp"

// Construction, verification, and decoding of the s-sparse recovery sketch
// over GF(q), plus a practical bucketed backend for larger-scale runs.
//
// Decoding is a pure function: among all w with ||w||_0 <= s and Pi*w = b it
// returns the first in a fixed total order — sparsity t ascending, supports
// in colexicographic order, values in lexicographic order (value at the
// smallest support index most significant). Three internal strategies
// (exhaustive DFS in exactly that order, affine solution-coset enumeration,
// meet-in-the-middle over support halves) are all exact and complete, so they
// agree; the fastest applicable one is selected per call.

namespace urk {

struct RecoveryScheme;

namespace detail {
// Lazily built meet-in-the-middle tables for one scheme; shared by copies.
struct MitmCache;
}

struct RecoveryScheme {
    SketchMatrix matrix;
    uint32_t s = 1;     // decodable sparsity
    uint32_t slack = 0; // extra rows beyond the existence bound

    std::shared_ptr<detail::MitmCache> mitm; // internal, created by build_scheme

    uint32_t n() const { return matrix.n; }
    uint32_t q() const { return matrix.q; }
    uint32_t m_rows() const { return matrix.m_rows; }
};

// Row count used by build_scheme: 2s + ceil(log_q C(n, 2s)) + slack.
uint32_t scheme_rows(uint32_t n, uint32_t s, uint32_t q, uint32_t slack);

// Deterministic scheme construction; throws param_error unless 1 <= s <= n/2
// and q is an odd prime.
RecoveryScheme build_scheme(uint32_t n, uint32_t s, uint32_t q, uint32_t slack, uint64_t seed);

// Wrap an explicit matrix (used by tests to probe degenerate matrices).
RecoveryScheme wrap_scheme(SketchMatrix matrix, uint32_t s, uint32_t slack);

// Restriction of a scheme to an ascending subset of its columns. Decoding
// against the restriction searches only vectors supported on those columns —
// the right space when the caller knows the preimage lives there (per-level
// decoding) — and the canonical candidate order is the full order filtered
// to that support, so restricted and full decodes agree whenever the sparse
// preimage is unique. s_sub is clamped to [1, columns]; the injectivity row
// bound is deliberately not revalidated.
RecoveryScheme column_subscheme(const RecoveryScheme& base, const std::vector<uint32_t>& columns,
                                uint32_t s_sub);

// Search limits for the exhaustive operations; candidates above the limit
// raise refusal_error rather than returning a wrong answer.
struct DecodeLimits {
    uint64_t dfs_candidates = 60'000'000;  // full enumeration size cap
    uint64_t affine_solutions = 4'000'000; // q^(free variables) cap
    uint64_t mitm_table = 4'000'000;       // half-support table cap
    uint64_t kernel_candidates = 80'000'000;
};

// True iff no nonzero v with ||v||_0 <= 2s has Pi*v = 0. A full-column-rank
// matrix is accepted outright (trivial kernel); otherwise the search is
// exhaustive and raises refusal_error when the candidate space exceeds
// limits.kernel_candidates.
bool verify_injectivity(const RecoveryScheme& scheme, const DecodeLimits& limits = {});

// Witness search behind verify_injectivity: a nonzero (<= 2s)-sparse kernel
// vector if one exists. Splitting the witness w = w1 - w2 across its support
// exhibits two distinct s-sparse vectors with equal sketches.
std::optional<FieldVec> find_sparse_kernel_vector(const RecoveryScheme& scheme,
                                                  const DecodeLimits& limits = {});

// Decode result: the canonical-first sparse preimage, or nullopt (NoPreimage).
std::optional<FieldVec> exhaustive_decode(const RecoveryScheme& scheme, const FieldVec& sketch,
                                          const DecodeLimits& limits = {});

// Strategy-forcing variant for equivalence tests.
enum class DecodeStrategy { automatic, dfs, affine, mitm };
std::optional<FieldVec> exhaustive_decode_with(const RecoveryScheme& scheme,
                                               const FieldVec& sketch, DecodeStrategy strategy,
                                               const DecodeLimits& limits = {});

// ---------------------------------------------------------------------------
// Bucketed backend: three hash partitions of count/key-sum/fingerprint cells
// with peeling decode. All accumulators are linear in updates, so sketches of
// update streams merge by cellwise addition.

struct BucketCell {
    int64_t count = 0;
    int64_t keysum = 0; // sum of delta * (index+1)
    uint64_t fp = 0;    // sum of delta * g(index) over GF(2^61 - 1)
};

class BucketRecovery {
  public:
    BucketRecovery() = default;
    // buckets is rounded up to a multiple of 3 (one hash per partition).
    BucketRecovery(uint32_t n, uint32_t buckets, uint64_t seed);

    void add(uint32_t index, int64_t delta);
    void merge(const BucketRecovery& other);

    // Peeling decode: full recovery of the (index -> net count) map, or
    // nullopt when a nonzero residue cannot be peeled.
    std::optional<std::vector<std::pair<uint32_t, int64_t>>> decode() const;

    bool empty() const;
    uint32_t n() const { return n_; }
    uint32_t buckets() const { return static_cast<uint32_t>(cells_.size()); }
    uint64_t seed() const { return seed_; }

    // Fixed-width cell serialization (24 bytes per cell, little-endian).
    std::vector<uint8_t> serialize_cells() const;
    static BucketRecovery deserialize_cells(uint32_t n, uint32_t buckets, uint64_t seed,
                                            const uint8_t* data, size_t len);

  private:
    uint32_t cell_of(unsigned partition, uint32_t index) const;
    uint64_t fingerprint(uint32_t index) const;

    uint32_t n_ = 0;
    uint64_t seed_ = 0;
    uint64_t fp_base_ = 2;
    std::vector<BucketCell> cells_;
};

} // namespace urk
