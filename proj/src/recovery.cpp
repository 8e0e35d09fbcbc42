#include "urk/recovery.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_map>

#include "urk/bits.hpp"
#include "urk/errors.hpp"
#include "urk/prf.hpp"

namespace urk {

namespace {

// Number of vectors with ||w||_0 <= s over GF(q)^n: sum_t C(n,t)(q-1)^t.
bigint sparse_candidate_count(uint32_t n, uint32_t s, uint32_t q) {
    bigint total = 0;
    bigint pw = 1;
    for (uint32_t t = 0; t <= s; ++t) {
        total += binomial(n, t) * pw;
        pw *= q - 1;
    }
    return total;
}

// Canonical total order on sparse vectors: sparsity ascending, then support
// colex ascending, then assigned values lex ascending (smallest-index value
// most significant). Returns true if a < b.
bool canonical_less(const FieldVec& a, const FieldVec& b) {
    auto sa = a.support(), sb = b.support();
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    // Colex: compare largest differing element.
    for (size_t i = sa.size(); i-- > 0;) {
        if (sa[i] != sb[i]) return sa[i] < sb[i];
    }
    for (size_t i = 0; i < sa.size(); ++i) {
        if (a.e[sa[i]] != b.e[sb[i]]) return a.e[sa[i]] < b.e[sb[i]];
    }
    return false;
}

// ---------------------------------------------------------------------- DFS

// Enumerates supports {c_1 < ... < c_t} in colex order by choosing c_t
// descending through recursion levels, then assigns values a_1..a_t in lex
// order with running partial sums. Visits candidates exactly in the canonical
// order, so the first hit is the canonical-first solution.
struct DfsDecoder {
    const SketchMatrix& M;
    const FieldVec& target;
    uint32_t s;
    std::vector<uint32_t> idx;             // chosen support, descending slots
    std::optional<FieldVec> found;

    DfsDecoder(const SketchMatrix& m, const FieldVec& b, uint32_t s_) : M(m), target(b), s(s_) {}

    // Phase 2: assign values to idx[pos..t-1] (ascending index order stored
    // reversed in idx); sum accumulates chosen columns.
    bool assign_values(size_t pos, FieldVec& sum) {
        if (pos == idx.size()) return sum == target;
        uint32_t col = idx[idx.size() - 1 - pos]; // smallest index first
        for (uint32_t a = 1; a < M.q; ++a) {
            FieldVec next = sum;
            vec_add_scaled_column(next, M, col, a);
            vals_[pos] = a;
            if (assign_values(pos + 1, next)) return true;
        }
        return false;
    }

    // Phase 1: pick support elements in colex order. slot counts down from t.
    bool pick_support(uint32_t t, uint32_t slot, uint32_t hi) {
        if (slot == 0) {
            vals_.assign(t, 0);
            FieldVec zero(M.q, M.m_rows);
            if (assign_values(0, zero)) {
                FieldVec w(M.q, M.n);
                for (uint32_t p = 0; p < t; ++p) w.e[idx[t - 1 - p]] = vals_[p];
                found = std::move(w);
                return true;
            }
            return false;
        }
        for (uint32_t c = slot - 1; c < hi; ++c) {
            idx[t - slot] = c;
            if (pick_support(t, slot - 1, c)) return true;
        }
        return false;
    }

    std::optional<FieldVec> run() {
        // t = 0: the zero vector.
        FieldVec zero(M.q, M.m_rows);
        if (target == zero) return FieldVec(M.q, M.n);
        for (uint32_t t = 1; t <= s; ++t) {
            idx.assign(t, 0);
            if (pick_support(t, t, M.n)) return found;
        }
        return std::nullopt;
    }

  private:
    std::vector<uint32_t> vals_;
};

// Generic DFS over exact-support-t nonzero-value vectors, calling fn(w) for
// each; fn returns true to stop. Enumeration in canonical order.
template <typename Fn>
bool for_each_sparse_vector(const SketchMatrix& M, uint32_t t_max, Fn&& fn) {
    std::vector<uint32_t> idx;
    FieldVec w(M.q, M.n);

    struct Ctx {
        const SketchMatrix& M;
        std::vector<uint32_t>& idx;
        FieldVec& w;
        Fn& fn;

        bool values(uint32_t t, size_t pos) {
            if (pos == t) return fn(w);
            uint32_t col = idx[t - 1 - pos];
            for (uint32_t a = 1; a < M.q; ++a) {
                w.e[col] = a;
                if (values(t, pos + 1)) return true;
            }
            w.e[col] = 0;
            return false;
        }

        bool support(uint32_t t, uint32_t slot, uint32_t hi) {
            if (slot == 0) {
                bool stop = values(t, 0);
                for (uint32_t p = 0; p < t; ++p) w.e[idx[p]] = 0;
                return stop;
            }
            for (uint32_t c = slot - 1; c < hi; ++c) {
                idx[t - slot] = c;
                if (support(t, slot - 1, c)) return true;
            }
            return false;
        }
    } ctx{M, idx, w, fn};

    for (uint32_t t = 1; t <= t_max; ++t) {
        idx.assign(t, 0);
        if (ctx.support(t, t, M.n)) return true;
    }
    return false;
}

// -------------------------------------------------------------------- affine

struct Rref {
    std::vector<std::vector<uint32_t>> rows; // reduced rows over GF(q), width n+1 (augmented)
    std::vector<uint32_t> pivot_col;         // pivot column per reduced row
    bool consistent = true;
};

uint32_t inv_mod(uint32_t a, uint32_t q) {
    // Fermat: a^(q-2) mod q.
    uint64_t r = 1, base = a % q, e = q - 2;
    while (e) {
        if (e & 1) r = r * base % q;
        base = base * base % q;
        e >>= 1;
    }
    return static_cast<uint32_t>(r);
}

Rref eliminate(const SketchMatrix& M, const FieldVec& b) {
    uint64_t q = M.q;
    uint32_t n = M.n;
    std::vector<std::vector<uint32_t>> rows(M.m_rows, std::vector<uint32_t>(n + 1));
    for (uint32_t r = 0; r < M.m_rows; ++r) {
        for (uint32_t c = 0; c < n; ++c) rows[r][c] = M.at(r, c);
        rows[r][n] = b.e[r];
    }
    Rref out;
    uint32_t rank = 0;
    for (uint32_t col = 0; col < n && rank < rows.size(); ++col) {
        uint32_t piv = rank;
        while (piv < rows.size() && rows[piv][col] == 0) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[rank], rows[piv]);
        uint64_t inv = inv_mod(rows[rank][col], M.q);
        for (uint32_t c = col; c <= n; ++c)
            rows[rank][c] = static_cast<uint32_t>(rows[rank][c] * inv % q);
        for (uint32_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r][col] == 0) continue;
            uint64_t f = q - rows[r][col];
            for (uint32_t c = col; c <= n; ++c)
                rows[r][c] = static_cast<uint32_t>((rows[r][c] + f * rows[rank][c]) % q);
        }
        out.pivot_col.push_back(col);
        ++rank;
    }
    for (uint32_t r = rank; r < rows.size(); ++r) {
        if (rows[r][n] != 0) out.consistent = false;
    }
    rows.resize(rank);
    out.rows = std::move(rows);
    return out;
}

// Caller has already verified q^(n - rank) fits the solution limit.
std::optional<FieldVec> affine_decode(const RecoveryScheme& scheme, const FieldVec& b) {
    const SketchMatrix& M = scheme.matrix;
    Rref R = eliminate(M, b);
    if (!R.consistent) return std::nullopt;
    uint32_t n = M.n, q = M.q;
    uint32_t rank = static_cast<uint32_t>(R.pivot_col.size());
    uint32_t d = n - rank;

    std::vector<uint32_t> free_cols;
    {
        std::vector<char> is_pivot(n, 0);
        for (uint32_t c : R.pivot_col) is_pivot[c] = 1;
        for (uint32_t c = 0; c < n; ++c)
            if (!is_pivot[c]) free_cols.push_back(c);
    }

    std::optional<FieldVec> best;
    std::vector<uint32_t> assign(d, 0);
    FieldVec w(q, n);
    for (;;) {
        // Materialize the solution for the current free assignment.
        std::fill(w.e.begin(), w.e.end(), 0u);
        for (uint32_t f = 0; f < d; ++f) w.e[free_cols[f]] = assign[f];
        for (uint32_t r = 0; r < rank; ++r) {
            uint64_t v = R.rows[r][n];
            for (uint32_t f = 0; f < d; ++f) {
                uint32_t c = free_cols[f];
                if (assign[f] != 0 && R.rows[r][c] != 0)
                    v += static_cast<uint64_t>(q - R.rows[r][c]) * assign[f];
            }
            w.e[R.pivot_col[r]] = static_cast<uint32_t>(v % q);
        }
        if (w.l0_norm() <= scheme.s) {
            if (!best || canonical_less(w, *best)) best = w;
        }
        // Odometer over free assignments; stops after q^d combinations.
        uint32_t f = 0;
        while (f < d && ++assign[f] == q) assign[f++] = 0;
        if (f == d) break;
    }
    return best;
}

// --------------------------------------------------------------------- MITM

struct MitmKey {
    uint64_t lo = 0, hi = 0;
    bool operator==(const MitmKey&) const = default;
};

// The key packs all m_rows field digits exactly (bits_per * m_rows <= 128),
// so key equality is sum equality — lookups have no false positives.
MitmKey pack_key(const FieldVec& v, unsigned bits_per) {
    MitmKey k;
    unsigned pos = 0;
    for (uint32_t x : v.e) {
        if (pos < 64) {
            k.lo |= static_cast<uint64_t>(x) << pos;
            if (pos + bits_per > 64) k.hi |= static_cast<uint64_t>(x) >> (64 - pos);
        } else {
            k.hi |= static_cast<uint64_t>(x) << (pos - 64);
        }
        pos += bits_per;
    }
    return k;
}

// Key for "left sum = b - rsum" without materializing the difference.
MitmKey pack_key_sub(const FieldVec& b, const FieldVec& rsum, unsigned bits_per) {
    MitmKey k;
    unsigned pos = 0;
    uint32_t q = b.q;
    for (size_t i = 0; i < b.e.size(); ++i) {
        uint32_t d = b.e[i] + q - rsum.e[i];
        if (d >= q) d -= q;
        if (pos < 64) {
            k.lo |= static_cast<uint64_t>(d) << pos;
            if (pos + bits_per > 64) k.hi |= static_cast<uint64_t>(d) >> (64 - pos);
        } else {
            k.hi |= static_cast<uint64_t>(d) << (pos - 64);
        }
        pos += bits_per;
    }
    return k;
}

uint64_t hash_key(const MitmKey& k) { return mix64(k.lo ^ mix64(k.hi ^ 0x9e3779b97f4a7c15ull)); }

struct MitmEntry {
    MitmKey key;
    uint8_t t = 0;
    uint8_t idx[8] = {0};
    uint8_t val[8] = {0};
};

} // namespace

namespace detail {
struct MitmCache {
    std::once_flag once;
    unsigned bits_per = 0;
    uint32_t half = 0;
    unsigned bucket_bits = 1;
    std::vector<MitmEntry> entries;       // grouped into buckets by hash prefix
    std::vector<uint32_t> bucket_start;   // size 2^bucket_bits + 1
    bool usable = false;
};
} // namespace detail

namespace {

void build_mitm_table(const RecoveryScheme& scheme, detail::MitmCache& cache) {
    const SketchMatrix& M = scheme.matrix;
    unsigned bits_per = ceil_log2(bigint(M.q));
    // Entry layout packs support indices and values into bytes; key into 128b.
    if (static_cast<uint64_t>(M.m_rows) * bits_per > 128 || scheme.s > 8 || M.n < 2 ||
        M.n > 512 || M.q > 256) {
        cache.usable = false;
        return;
    }
    cache.bits_per = bits_per;
    cache.half = M.n / 2;
    uint32_t t_cap = std::min(scheme.s, cache.half);

    // Enumerate every left-half (support in [0, half)) vector with sparsity
    // <= t_cap once; sums maintained in place by single-column increments.
    std::vector<MitmEntry> entries;
    std::vector<uint32_t> idx(t_cap ? t_cap : 1), val(t_cap ? t_cap : 1);
    FieldVec sum(M.q, M.m_rows);
    entries.push_back(MitmEntry{pack_key(sum, bits_per), 0, {0}, {0}});

    struct Builder {
        const SketchMatrix& M;
        uint32_t t_cap;
        std::vector<uint32_t>& idx;
        std::vector<uint32_t>& val;
        std::vector<MitmEntry>& entries;
        unsigned bits_per;

        void rec(uint32_t t, uint32_t next, FieldVec& sum) {
            if (t == t_cap) return;
            for (uint32_t c = next; c < M.n / 2; ++c) {
                idx[t] = c;
                for (uint32_t a = 1; a < M.q; ++a) {
                    vec_add_scaled_column(sum, M, c, 1); // running total: a * column c
                    val[t] = a;
                    MitmEntry e;
                    e.key = pack_key(sum, bits_per);
                    e.t = static_cast<uint8_t>(t + 1);
                    for (uint32_t p = 0; p <= t && p < 8; ++p) {
                        e.idx[p] = static_cast<uint8_t>(idx[p]);
                        e.val[p] = static_cast<uint8_t>(val[p]);
                    }
                    entries.push_back(e);
                    rec(t + 1, c + 1, sum);
                }
                vec_add_scaled_column(sum, M, c, 1); // q-th increment restores sum
            }
        }
    } builder{M, t_cap, idx, val, entries, bits_per};
    builder.rec(0, 0, sum);

    // Bucket by hash prefix; probes scan one bucket and compare exact keys.
    unsigned bb = 1;
    while ((uint64_t{1} << bb) < entries.size() && bb < 22) ++bb;
    cache.bucket_bits = bb;
    std::sort(entries.begin(), entries.end(), [&](const MitmEntry& a, const MitmEntry& b) {
        return hash_key(a.key) < hash_key(b.key);
    });
    cache.bucket_start.assign((size_t{1} << bb) + 1, 0);
    for (const MitmEntry& e : entries) ++cache.bucket_start[(hash_key(e.key) >> (64 - bb)) + 1];
    for (size_t i = 1; i < cache.bucket_start.size(); ++i)
        cache.bucket_start[i] += cache.bucket_start[i - 1];
    cache.entries = std::move(entries);
    cache.usable = true;
}

std::optional<FieldVec> mitm_decode(const RecoveryScheme& scheme, const FieldVec& b) {
    const SketchMatrix& M = scheme.matrix;
    detail::MitmCache& cache = *scheme.mitm;
    std::call_once(cache.once, [&] { build_mitm_table(scheme, cache); });
    if (!cache.usable) throw refusal_error("meet-in-the-middle table not buildable");

    std::optional<FieldVec> best;
    std::vector<uint32_t> ridx(scheme.s ? scheme.s : 1), rval(scheme.s ? scheme.s : 1);

    auto probe = [&](const FieldVec& rsum, uint32_t rt) {
        MitmKey key = pack_key_sub(b, rsum, cache.bits_per);
        uint64_t h = hash_key(key);
        uint32_t bkt = static_cast<uint32_t>(h >> (64 - cache.bucket_bits));
        uint32_t lo = cache.bucket_start[bkt], hi = cache.bucket_start[bkt + 1];
        for (uint32_t e = lo; e < hi; ++e) {
            const MitmEntry& left = cache.entries[e];
            if (!(left.key == key) || left.t + rt > scheme.s) continue;
            FieldVec w(M.q, M.n);
            for (uint32_t p = 0; p < left.t; ++p) w.e[left.idx[p]] = left.val[p];
            for (uint32_t p = 0; p < rt; ++p) w.e[ridx[p]] = rval[p];
            if (!best || canonical_less(w, *best)) best = std::move(w);
        }
    };

    // Enumerate right-half combinations (support in [half, n)) in place.
    FieldVec rsum(M.q, M.m_rows);
    probe(rsum, 0);
    struct Walker {
        const SketchMatrix& M;
        uint32_t s;
        std::vector<uint32_t>& ridx;
        std::vector<uint32_t>& rval;
        decltype(probe)& do_probe;

        void rec(uint32_t t, uint32_t next, FieldVec& sum) {
            if (t == s) return;
            for (uint32_t c = next; c < M.n; ++c) {
                ridx[t] = c;
                for (uint32_t a = 1; a < M.q; ++a) {
                    vec_add_scaled_column(sum, M, c, 1);
                    rval[t] = a;
                    do_probe(sum, t + 1);
                    rec(t + 1, c + 1, sum);
                }
                vec_add_scaled_column(sum, M, c, 1);
            }
        }
    } walker{M, scheme.s, ridx, rval, probe};
    walker.rec(0, cache.half, rsum);
    return best;
}

uint64_t mitm_table_size(uint32_t n, uint32_t s, uint32_t q, uint64_t cap) {
    bigint total = sparse_candidate_count(n / 2, std::min(s, n / 2), q);
    return total > cap ? cap + 1 : static_cast<uint64_t>(total);
}

} // namespace

uint32_t scheme_rows(uint32_t n, uint32_t s, uint32_t q, uint32_t slack) {
    return 2 * s + ceil_log_base(q, binomial(n, 2 * s)) + slack;
}

RecoveryScheme build_scheme(uint32_t n, uint32_t s, uint32_t q, uint32_t slack, uint64_t seed) {
    require_valid_modulus(q);
    if (s < 1 || 2ull * s > n)
        throw param_error("sparsity must satisfy 1 <= s <= n/2 (got s=" + std::to_string(s) +
                          ", n=" + std::to_string(n) + ")");
    RecoveryScheme scheme;
    scheme.matrix = make_sketch_matrix(seed, q, scheme_rows(n, s, q, slack), n);
    scheme.s = s;
    scheme.slack = slack;
    scheme.mitm = std::make_shared<detail::MitmCache>();
    return scheme;
}

RecoveryScheme wrap_scheme(SketchMatrix matrix, uint32_t s, uint32_t slack) {
    require_valid_modulus(matrix.q);
    if (s < 1 || 2ull * s > matrix.n) throw param_error("sparsity must satisfy 1 <= s <= n/2");
    RecoveryScheme scheme;
    scheme.matrix = std::move(matrix);
    scheme.s = s;
    scheme.slack = slack;
    scheme.mitm = std::make_shared<detail::MitmCache>();
    return scheme;
}

RecoveryScheme column_subscheme(const RecoveryScheme& base, const std::vector<uint32_t>& columns,
                                uint32_t s_sub) {
    const SketchMatrix& M = base.matrix;
    if (columns.empty()) throw param_error("column subset must be nonempty");
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] >= M.n) throw param_error("column index out of range");
        if (i > 0 && columns[i] <= columns[i - 1])
            throw param_error("columns must be strictly ascending");
    }
    SketchMatrix sub;
    sub.q = M.q;
    sub.m_rows = M.m_rows;
    sub.n = static_cast<uint32_t>(columns.size());
    sub.seed = M.seed;
    sub.a.resize(static_cast<size_t>(M.m_rows) * columns.size());
    for (uint32_t r = 0; r < M.m_rows; ++r)
        for (uint32_t c = 0; c < sub.n; ++c)
            sub.a[static_cast<size_t>(r) * sub.n + c] = M.at(r, columns[c]);
    RecoveryScheme scheme;
    scheme.matrix = std::move(sub);
    scheme.s = std::max<uint32_t>(1, std::min<uint32_t>(s_sub, scheme.matrix.n));
    scheme.slack = base.slack;
    scheme.mitm = std::make_shared<detail::MitmCache>();
    return scheme;
}

std::optional<FieldVec> find_sparse_kernel_vector(const RecoveryScheme& scheme,
                                                  const DecodeLimits& limits) {
    const SketchMatrix& M = scheme.matrix;
    uint32_t t_max = std::min(2 * scheme.s, M.n);

    // Full column rank means the kernel is trivial; detect cheaply first.
    FieldVec zero(M.q, M.m_rows);
    Rref R = eliminate(M, zero);
    if (R.pivot_col.size() == M.n) return std::nullopt;

    bigint count = sparse_candidate_count(M.n, t_max, M.q);
    if (count > limits.kernel_candidates)
        throw refusal_error("kernel search space exceeds configured limit");

    std::optional<FieldVec> witness;
    FieldVec target(M.q, M.m_rows);
    for_each_sparse_vector(M, t_max, [&](const FieldVec& w) {
        if (mat_apply(M, w) == target) {
            witness = w;
            return true;
        }
        return false;
    });
    return witness;
}

bool verify_injectivity(const RecoveryScheme& scheme, const DecodeLimits& limits) {
    return !find_sparse_kernel_vector(scheme, limits).has_value();
}

std::optional<FieldVec> exhaustive_decode_with(const RecoveryScheme& scheme,
                                               const FieldVec& sketch, DecodeStrategy strategy,
                                               const DecodeLimits& limits) {
    const SketchMatrix& M = scheme.matrix;
    if (sketch.q != M.q) throw param_error("sketch modulus mismatch");
    if (sketch.size() != M.m_rows) throw param_error("sketch length must equal m_rows");

    if (strategy == DecodeStrategy::automatic) {
        // The zero vector is the global canonical minimum, so a zero sketch
        // needs no search at all. Forced strategies skip this certificate:
        // they exist to exercise a specific algorithm.
        if (std::all_of(sketch.e.begin(), sketch.e.end(), [](uint32_t v) { return v == 0; }))
            return FieldVec(M.q, M.n);
        // Affine wins whenever the solution coset is small (m_rows near n).
        FieldVec zero(M.q, M.m_rows);
        Rref R = eliminate(M, zero);
        uint32_t d = M.n - static_cast<uint32_t>(R.pivot_col.size());
        bigint coset = 1;
        for (uint32_t i = 0; i < d && coset <= limits.affine_solutions; ++i) coset *= M.q;
        if (coset <= limits.affine_solutions) {
            strategy = DecodeStrategy::affine;
        } else if (mitm_table_size(M.n, scheme.s, M.q, limits.mitm_table) <= limits.mitm_table &&
                   static_cast<uint64_t>(M.m_rows) * ceil_log2(bigint(M.q)) <= 128 &&
                   scheme.s <= 8 && M.n >= 2 && M.n <= 512 && M.q <= 256) {
            strategy = DecodeStrategy::mitm;
        } else if (sparse_candidate_count(M.n, scheme.s, M.q) <= limits.dfs_candidates) {
            strategy = DecodeStrategy::dfs;
        } else {
            throw refusal_error("decode search space exceeds all configured limits");
        }
    }

    switch (strategy) {
        case DecodeStrategy::dfs: {
            if (sparse_candidate_count(M.n, scheme.s, M.q) > limits.dfs_candidates)
                throw refusal_error("DFS enumeration exceeds configured limit");
            DfsDecoder d(M, sketch, scheme.s);
            return d.run();
        }
        case DecodeStrategy::affine: {
            FieldVec zero(M.q, M.m_rows);
            Rref R = eliminate(M, zero);
            uint32_t d = M.n - static_cast<uint32_t>(R.pivot_col.size());
            bigint coset = 1;
            for (uint32_t i = 0; i < d; ++i) {
                coset *= M.q;
                if (coset > limits.affine_solutions)
                    throw refusal_error("affine solution coset exceeds configured limit");
            }
            return affine_decode(scheme, sketch);
        }
        case DecodeStrategy::mitm:
            if (mitm_table_size(M.n, scheme.s, M.q, limits.mitm_table) > limits.mitm_table)
                throw refusal_error("meet-in-the-middle table exceeds configured limit");
            return mitm_decode(scheme, sketch);
        case DecodeStrategy::automatic:
            break;
    }
    throw refusal_error("unreachable decode strategy");
}

std::optional<FieldVec> exhaustive_decode(const RecoveryScheme& scheme, const FieldVec& sketch,
                                          const DecodeLimits& limits) {
    return exhaustive_decode_with(scheme, sketch, DecodeStrategy::automatic, limits);
}

// ---------------------------------------------------------------------------
// BucketRecovery

namespace {
constexpr uint64_t kP61 = (uint64_t{1} << 61) - 1;

uint64_t mod61(uint64_t x) {
    uint64_t r = (x & kP61) + (x >> 61);
    return r >= kP61 ? r - kP61 : r;
}

uint64_t mul61(uint64_t a, uint64_t b) {
    __uint128_t p = static_cast<__uint128_t>(a) * b;
    uint64_t lo = static_cast<uint64_t>(p & kP61);
    uint64_t hi = static_cast<uint64_t>(p >> 61);
    uint64_t r = lo + hi;
    return r >= kP61 ? r - kP61 : r;
}

uint64_t pow61(uint64_t base, uint64_t e) {
    uint64_t r = 1;
    base = mod61(base);
    while (e) {
        if (e & 1) r = mul61(r, base);
        base = mul61(base, base);
        e >>= 1;
    }
    return r;
}
} // namespace

BucketRecovery::BucketRecovery(uint32_t n, uint32_t buckets, uint64_t seed) : n_(n), seed_(seed) {
    if (n == 0) throw param_error("dimension must be positive");
    if (buckets < 3) buckets = 3;
    buckets += (3 - buckets % 3) % 3; // one hash per partition of equal size
    cells_.resize(buckets);
    fp_base_ = 2 + prf64(seed, "fpbase") % (kP61 - 3);
}

uint32_t BucketRecovery::cell_of(unsigned partition, uint32_t index) const {
    uint32_t per = buckets() / 3;
    return partition * per + static_cast<uint32_t>(prf64(seed_, "bh", partition, index) % per);
}

uint64_t BucketRecovery::fingerprint(uint32_t index) const {
    return pow61(fp_base_, static_cast<uint64_t>(index) + 1);
}

void BucketRecovery::add(uint32_t index, int64_t delta) {
    if (index >= n_) throw param_error("index out of range");
    if (delta == 0) return;
    uint64_t fp = fingerprint(index);
    uint64_t mag = delta < 0 ? ~static_cast<uint64_t>(delta) + 1 : static_cast<uint64_t>(delta);
    uint64_t dmod = delta >= 0 ? mod61(mag % kP61) : mod61(kP61 - mag % kP61);
    uint64_t dfp = mul61(dmod, fp);
    for (unsigned t = 0; t < 3; ++t) {
        BucketCell& c = cells_[cell_of(t, index)];
        c.count += delta;
        c.keysum += delta * (static_cast<int64_t>(index) + 1);
        c.fp = mod61(c.fp + dfp);
    }
}

void BucketRecovery::merge(const BucketRecovery& other) {
    if (n_ != other.n_ || buckets() != other.buckets() || seed_ != other.seed_)
        throw param_error("bucket structure mismatch");
    for (size_t i = 0; i < cells_.size(); ++i) {
        cells_[i].count += other.cells_[i].count;
        cells_[i].keysum += other.cells_[i].keysum;
        cells_[i].fp = mod61(cells_[i].fp + other.cells_[i].fp);
    }
}

bool BucketRecovery::empty() const {
    for (const BucketCell& c : cells_)
        if (c.count != 0 || c.keysum != 0 || c.fp != 0) return false;
    return true;
}

std::optional<std::vector<std::pair<uint32_t, int64_t>>> BucketRecovery::decode() const {
    std::vector<BucketCell> cells = cells_;
    std::unordered_map<uint32_t, int64_t> out;

    auto try_peel_cell = [&](uint32_t ci) -> bool {
        BucketCell& c = cells[ci];
        if (c.count == 0) return false;
        if (c.keysum % c.count != 0) return false;
        int64_t key = c.keysum / c.count;
        if (key < 1 || key > static_cast<int64_t>(n_)) return false;
        uint32_t index = static_cast<uint32_t>(key - 1);
        // The implied item must actually hash to this cell.
        unsigned partition = ci / (buckets() / 3);
        if (cell_of(partition, index) != ci) return false;
        int64_t cnt = c.count;
        uint64_t mag = cnt < 0 ? ~static_cast<uint64_t>(cnt) + 1 : static_cast<uint64_t>(cnt);
        uint64_t cmod = cnt >= 0 ? mod61(mag % kP61) : mod61(kP61 - mag % kP61);
        uint64_t dfp = mul61(cmod, fingerprint(index));
        if (c.fp != dfp) return false;
        for (unsigned t = 0; t < 3; ++t) {
            BucketCell& cc = cells[cell_of(t, index)];
            cc.count -= cnt;
            cc.keysum -= cnt * (static_cast<int64_t>(index) + 1);
            cc.fp = mod61(cc.fp + kP61 - dfp);
        }
        out[index] += cnt;
        return true;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (uint32_t ci = 0; ci < cells.size(); ++ci)
            if (try_peel_cell(ci)) changed = true;
    }
    for (const BucketCell& c : cells)
        if (c.count != 0 || c.keysum != 0 || c.fp != 0) return std::nullopt;

    std::vector<std::pair<uint32_t, int64_t>> result;
    for (auto& [i, cnt] : out)
        if (cnt != 0) result.emplace_back(i, cnt);
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<uint8_t> BucketRecovery::serialize_cells() const {
    std::vector<uint8_t> bytes;
    bytes.reserve(cells_.size() * 24);
    for (const BucketCell& c : cells_) {
        put_u64le(bytes, static_cast<uint64_t>(c.count));
        put_u64le(bytes, static_cast<uint64_t>(c.keysum));
        put_u64le(bytes, c.fp);
    }
    return bytes;
}

BucketRecovery BucketRecovery::deserialize_cells(uint32_t n, uint32_t buckets, uint64_t seed,
                                                 const uint8_t* data, size_t len) {
    BucketRecovery b(n, buckets, seed);
    if (len != b.cells_.size() * 24) throw format_error("bucket cell payload has wrong length");
    for (size_t i = 0; i < b.cells_.size(); ++i) {
        b.cells_[i].count = static_cast<int64_t>(get_u64le(data + 24 * i));
        b.cells_[i].keysum = static_cast<int64_t>(get_u64le(data + 24 * i + 8));
        b.cells_[i].fp = get_u64le(data + 24 * i + 16);
        if (b.cells_[i].fp >= kP61) throw format_error("bucket fingerprint out of field range");
    }
    return b;
}

} // namespace urk
