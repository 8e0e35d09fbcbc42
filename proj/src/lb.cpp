#include "urk/lb.hpp"

#include <algorithm>
#include <string>

#include "urk/bits.hpp"
#include "urk/errors.hpp"
#include "urk/prf.hpp"
#include "urk/subsetcode.hpp"

namespace urk {

namespace {

// Largest v in [0, m] with v^K * 2^r <= m^K (i.e. floor(m * 2^(-r/K))),
// decided entirely over big integers.
uint32_t shrink_target(uint32_t m, uint32_t K, uint32_t r, const bigint& m_pow_k) {
    uint32_t lo = 0, hi = m; // lo always feasible
    while (hi - lo > 0) {
        uint32_t mid = lo + (hi - lo + 1) / 2;
        bigint v = 1;
        for (uint32_t i = 0; i < K; ++i) v *= mid;
        if ((v << r) <= m_pow_k)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

void check_subset(const std::vector<uint32_t>& S, uint32_t n, uint32_t m) {
    if (S.size() != m)
        throw param_error("S must have exactly m=" + std::to_string(m) + " elements");
    for (size_t i = 0; i < S.size(); ++i) {
        if (S[i] >= n) throw param_error("S element out of range");
        if (i > 0 && S[i] <= S[i - 1]) throw param_error("S must be sorted and distinct");
    }
}

std::vector<uint8_t> indicator(const std::vector<uint32_t>& S, uint32_t n) {
    std::vector<uint8_t> x(n, 0);
    for (uint32_t a : S) x[a] = 1;
    return x;
}

void check_handle(const ProtocolHandle& P, uint32_t n, uint32_t k) {
    if (P.n != n) throw param_error("handle dimension does not match parameters");
    if (P.k != k)
        throw param_error("handle must answer k=" + std::to_string(k) + " (got k=" +
                          std::to_string(P.k) + ")");
    if (!P.alice || !P.bob) throw param_error("handle is missing alice or bob");
}

void check_message_frame(const ProtocolMessage& msg) {
    if (msg.bytes.size() != (msg.bits + 7) / 8)
        throw param_error("handle message byte length does not match its bit length");
}

} // namespace

LbParams lb_params(uint32_t n, uint32_t log2_inv_delta, uint64_t seed) {
    if (log2_inv_delta < 64 || static_cast<uint64_t>(log2_inv_delta) * 64 > n)
        throw param_error("parameters must satisfy 64 ≤ log 1/δ ≤ n/64 (got log 1/δ = " +
                          std::to_string(log2_inv_delta) + ", n = " + std::to_string(n) + ")");
    LbParams p;
    p.n = n;
    p.log2_inv_delta = log2_inv_delta;
    p.seed = seed;
    p.m = static_cast<uint32_t>(isqrt(static_cast<uint64_t>(n) * log2_inv_delta));
    p.K = log2_inv_delta / 16;

    // R = floor(K * log2(m / 4K)): the largest R with 2^R * (4K)^K <= m^K.
    bigint m_pow_k = 1, fourk_pow_k = 1;
    for (uint32_t i = 0; i < p.K; ++i) {
        m_pow_k *= p.m;
        fourk_pow_k *= 4 * p.K;
    }
    uint32_t R = 0;
    while ((fourk_pow_k << (R + 1)) <= m_pow_k) ++R;
    p.R = R;

    p.n_seq.resize(p.R + 1);
    for (uint32_t r = 0; r <= p.R; ++r) p.n_seq[r] = shrink_target(p.m, p.K, r, m_pow_k);
    for (uint32_t r = 0; r < p.R; ++r) {
        if (p.n_seq[r] < p.n_seq[r + 1] + 2)
            throw param_error("working-set sizes must shrink by at least 2 per round");
    }
    p.pi = seeded_permutation(seed, "lb-pi", n);
    return p;
}

LbParamsK lb_params_k(uint32_t n, uint32_t k, uint64_t seed) {
    if (k < 1 || (static_cast<uint64_t>(k) << 10) > n)
        throw param_error("parameters must satisfy 1 ≤ k ≤ n/2^10 (got k = " +
                          std::to_string(k) + ", n = " + std::to_string(n) + ")");
    LbParamsK p;
    p.n = n;
    p.k = k;
    p.seed = seed;
    p.m = static_cast<uint32_t>(isqrt(static_cast<uint64_t>(n) * k));
    // floor(log2(n/k)/2 - 2); the fractional part of log2 cannot move an
    // integer-shifted floor, so the integer form below is exact.
    uint32_t log_ratio = 0;
    for (uint64_t v = static_cast<uint64_t>(n) / k; v > 1; v >>= 1) ++log_ratio;
    p.R = (log_ratio - 4) / 2;
    if (p.R < 3) throw param_error("round budget must be at least 3");

    // Exit rounds: independent fair coins per (round, index); an index stays
    // in T_r while all coins up to round r came up heads.
    p.exit_round.resize(n);
    for (uint32_t a = 0; a < n; ++a) {
        uint32_t exit = p.R + 1;
        for (uint32_t r = 1; r <= p.R; ++r) {
            if ((prf64(seed, "T", r, a) & 1) == 0) {
                exit = r;
                break;
            }
        }
        p.exit_round[a] = exit;
    }
    return p;
}

EncoderOutput enc(const std::vector<uint32_t>& S, const ProtocolHandle& P,
                  const LbParams& params, LbTrace* trace) {
    check_handle(P, params.n, 1);
    check_subset(S, params.n, params.m);

    std::vector<uint8_t> x = indicator(S, params.n);
    ProtocolMessage msg = P.alice(x);
    check_message_frame(msg);

    std::vector<char> in_S(params.n, 0); // membership in the working set S_r
    std::vector<char> in_A(params.n, 0);
    for (uint32_t a : S) in_S[a] = 1;
    std::vector<uint8_t> y(params.n, 0); // indicator of S \ S_r
    uint32_t cur = params.m;

    // Trim order: S sorted by pi ascending; eviction walks this list once.
    std::vector<uint32_t> by_pi = S;
    std::sort(by_pi.begin(), by_pi.end(),
              [&](uint32_t a, uint32_t b) { return params.pi[a] < params.pi[b]; });
    size_t evict = 0;

    EncoderOutput out;
    out.message_bits = msg.bits;
    out.message = msg.bytes;
    out.b.assign(params.R, 0);

    auto snapshot = [&]() {
        if (!trace) return;
        std::vector<uint32_t> s_r;
        for (uint32_t a : S)
            if (in_S[a]) s_r.push_back(a);
        trace->sets.push_back(std::move(s_r));
    };
    if (trace) trace->sets.clear();
    snapshot(); // S_0 = S

    for (uint32_t r = 1; r <= params.R; ++r) {
        std::optional<std::vector<uint32_t>> ans = P.bob(msg, y);
        bool valid = ans && ans->size() == 1 && (*ans)[0] < params.n && in_S[(*ans)[0]];
        if (valid) {
            uint32_t e = (*ans)[0];
            out.b[r - 1] = 1;
            in_S[e] = 0;
            in_A[e] = 1;
            y[e] = 1;
            --cur;
        }
        // Evict smallest-pi survivors until |S_r| = n_r.
        while (cur > params.n_seq[r]) {
            while (!in_S[by_pi[evict]]) ++evict;
            uint32_t gone = by_pi[evict];
            in_S[gone] = 0;
            y[gone] = 1;
            --cur;
        }
        snapshot();
    }

    for (uint32_t a : S)
        if (!in_A[a]) out.coded_set.push_back(a);
    return out;
}

std::vector<uint32_t> dec(const EncoderOutput& out, const ProtocolHandle& P,
                          const LbParams& params, LbTrace* trace) {
    check_handle(P, params.n, 1);
    if (out.b.size() != params.R) throw format_error("round bit count does not match R");
    if (out.message.size() != (out.message_bits + 7) / 8)
        throw format_error("message byte length does not match its bit length");
    if (out.coded_set.size() > params.m) throw format_error("coded set larger than m");
    for (size_t i = 0; i < out.coded_set.size(); ++i) {
        if (out.coded_set[i] >= params.n) throw format_error("coded set element out of range");
        if (i > 0 && out.coded_set[i] <= out.coded_set[i - 1])
            throw format_error("coded set must be sorted and distinct");
    }

    ProtocolMessage msg{out.message, out.message_bits};
    std::vector<char> in_C(params.n, 0);
    std::vector<uint8_t> y(params.n, 0); // indicator of C_r
    std::vector<uint32_t> c_list;

    std::vector<uint32_t> b_by_pi = out.coded_set;
    std::sort(b_by_pi.begin(), b_by_pi.end(),
              [&](uint32_t a, uint32_t b) { return params.pi[a] < params.pi[b]; });
    size_t insert_at = 0;

    auto snapshot = [&]() {
        if (!trace) return;
        std::vector<uint32_t> c_r = c_list;
        std::sort(c_r.begin(), c_r.end());
        trace->sets.push_back(std::move(c_r));
    };
    if (trace) trace->sets.clear();
    snapshot(); // C_0 = {}

    for (uint32_t r = 1; r <= params.R; ++r) {
        if (out.b[r - 1]) {
            std::optional<std::vector<uint32_t>> ans = P.bob(msg, y);
            if (!ans || ans->size() != 1 || (*ans)[0] >= params.n || in_C[(*ans)[0]])
                throw format_error("protocol replay diverged from the recorded round bits");
            uint32_t e = (*ans)[0];
            in_C[e] = 1;
            y[e] = 1;
            c_list.push_back(e);
        }
        // Re-derive the encoder's evictions: the smallest-pi elements of
        // B \ C_r. Previous insertions form a prefix of B-by-pi, so a
        // forward pointer suffices.
        uint64_t want = static_cast<uint64_t>(params.m) - params.n_seq[r];
        if (c_list.size() > want) throw format_error("replay produced too many removals");
        uint64_t insert = want - c_list.size();
        while (insert-- > 0) {
            while (insert_at < b_by_pi.size() && in_C[b_by_pi[insert_at]]) ++insert_at;
            if (insert_at == b_by_pi.size())
                throw format_error("coded set exhausted during replay");
            uint32_t e = b_by_pi[insert_at++];
            in_C[e] = 1;
            y[e] = 1;
            c_list.push_back(e);
        }
        snapshot();
    }

    std::vector<uint32_t> S = out.coded_set;
    for (uint32_t e : c_list)
        if (!std::binary_search(out.coded_set.begin(), out.coded_set.end(), e)) S.push_back(e);
    std::sort(S.begin(), S.end());
    if (S.size() != params.m) throw format_error("decoded set has wrong cardinality");
    return S;
}

EncoderOutput enc_k(const std::vector<uint32_t>& S, const ProtocolHandle& P,
                    const LbParamsK& params, LbTrace* trace) {
    check_handle(P, params.n, params.k);
    check_subset(S, params.n, params.m);

    std::vector<uint8_t> x = indicator(S, params.n);
    ProtocolMessage msg = P.alice(x);
    check_message_frame(msg);

    std::vector<char> in_S_set(params.n, 0);
    for (uint32_t a : S) in_S_set[a] = 1;
    std::vector<char> in_A(params.n, 0);
    std::vector<uint8_t> y(params.n, 0); // indicator of S \ T_{r-1}

    // S grouped by exit round, to advance y one round at a time.
    std::vector<std::vector<uint32_t>> exits(params.R + 2);
    for (uint32_t a : S) exits[params.exit_round[a]].push_back(a);

    EncoderOutput out;
    out.message_bits = msg.bits;
    out.message = msg.bytes;
    out.b.assign(params.R, 0);

    auto snapshot = [&](uint32_t r) {
        if (!trace) return;
        std::vector<uint32_t> s_r; // the working set S ∩ T_r
        for (uint32_t a : S)
            if (params.exit_round[a] > r) s_r.push_back(a);
        trace->sets.push_back(std::move(s_r));
    };
    if (trace) trace->sets.clear();
    snapshot(0);

    for (uint32_t r = 1; r <= params.R; ++r) {
        // y reflects exits through round r-1.
        for (uint32_t a : exits[r - 1]) y[a] = 1;

        std::optional<std::vector<uint32_t>> ans = P.bob(msg, y);
        bool valid = ans.has_value();
        if (valid) {
            for (uint32_t e : *ans) {
                if (e >= params.n || !in_S_set[e] || params.exit_round[e] <= r - 1) {
                    valid = false;
                    break;
                }
            }
        }
        if (valid) {
            out.b[r - 1] = 1;
            for (uint32_t e : *ans)
                if (params.exit_round[e] == r) in_A[e] = 1;
        }
        snapshot(r);
    }

    for (uint32_t a : S)
        if (!in_A[a]) out.coded_set.push_back(a);
    return out;
}

std::vector<uint32_t> dec_k(const EncoderOutput& out, const ProtocolHandle& P,
                            const LbParamsK& params, LbTrace* trace) {
    check_handle(P, params.n, params.k);
    if (out.b.size() != params.R) throw format_error("round bit count does not match R");
    if (out.message.size() != (out.message_bits + 7) / 8)
        throw format_error("message byte length does not match its bit length");
    for (size_t i = 0; i < out.coded_set.size(); ++i) {
        if (out.coded_set[i] >= params.n) throw format_error("coded set element out of range");
        if (i > 0 && out.coded_set[i] <= out.coded_set[i - 1])
            throw format_error("coded set must be sorted and distinct");
    }

    ProtocolMessage msg{out.message, out.message_bits};
    std::vector<char> in_C(params.n, 0);
    std::vector<uint8_t> y(params.n, 0);
    std::vector<uint32_t> c_list;

    std::vector<std::vector<uint32_t>> b_exits(params.R + 2);
    for (uint32_t a : out.coded_set) b_exits[params.exit_round[a]].push_back(a);

    auto snapshot = [&]() {
        if (!trace) return;
        std::vector<uint32_t> c_r = c_list;
        std::sort(c_r.begin(), c_r.end());
        trace->sets.push_back(std::move(c_r));
    };
    if (trace) trace->sets.clear();
    snapshot();

    for (uint32_t r = 1; r <= params.R; ++r) {
        if (out.b[r - 1]) {
            std::optional<std::vector<uint32_t>> ans = P.bob(msg, y);
            if (!ans) throw format_error("protocol replay diverged from the recorded round bits");
            for (uint32_t e : *ans) {
                if (e >= params.n)
                    throw format_error("protocol replay diverged from the recorded round bits");
                if (params.exit_round[e] == r && !in_C[e]) {
                    in_C[e] = 1;
                    c_list.push_back(e);
                }
            }
        }
        // Everything left in B that exits T at this round is in S \ T_r.
        for (uint32_t e : b_exits[r]) {
            if (!in_C[e]) {
                in_C[e] = 1;
                c_list.push_back(e);
            }
        }
        // y for the next round is the indicator of C_r.
        for (uint32_t e : c_list) y[e] = 1;
        snapshot();
    }

    std::vector<uint32_t> S = out.coded_set;
    for (uint32_t e : c_list)
        if (!std::binary_search(out.coded_set.begin(), out.coded_set.end(), e)) S.push_back(e);
    std::sort(S.begin(), S.end());
    if (S.size() != params.m) throw format_error("decoded set has wrong cardinality");
    return S;
}

uint64_t encoding_bit_length(const EncoderOutput& out, uint32_t n) {
    return out.message_bits + out.b.size() + ceil_log2(bigint(n)) +
           subset_code_bits(n, static_cast<uint32_t>(out.coded_set.size()));
}

std::vector<uint8_t> encode_output_bytes(const EncoderOutput& out, uint32_t n, uint32_t m,
                                         uint32_t R) {
    if (out.b.size() != R) throw param_error("round bit count does not match R");
    if (out.message.size() != (out.message_bits + 7) / 8)
        throw param_error("message byte length does not match its bit length");
    if (out.coded_set.size() > m) throw param_error("coded set larger than m");

    std::vector<uint8_t> bytes;
    put_u64le(bytes, n);
    put_u64le(bytes, m);
    put_u64le(bytes, R);
    put_u64le(bytes, out.message_bits);
    bytes.insert(bytes.end(), out.message.begin(), out.message.end());

    BitWriter bw;
    for (uint8_t bit : out.b) {
        if (bit > 1) throw param_error("round bits must be 0 or 1");
        bw.put_bit(bit);
    }
    unsigned card_bits = ceil_log2(bigint(n));
    bw.put_bits(out.coded_set.size(), card_bits);
    bw.align_byte();
    std::vector<uint8_t> bit_block = bw.take();
    bytes.insert(bytes.end(), bit_block.begin(), bit_block.end());

    bigint rank = subset_rank(n, out.coded_set);
    unsigned rank_bits = subset_code_bits(n, static_cast<uint32_t>(out.coded_set.size()));
    unsigned rank_bytes = (rank_bits + 7) / 8;
    for (unsigned i = rank_bytes; i-- > 0;)
        bytes.push_back(static_cast<uint8_t>((rank >> (8 * i)) & 0xff));
    return bytes;
}

DecodedOutputFile decode_output_bytes(const std::vector<uint8_t>& bytes) {
    size_t pos = 0;
    auto need = [&](size_t count) {
        if (bytes.size() - pos < count) throw format_error("encoder output truncated");
    };
    auto read_u64 = [&]() {
        need(8);
        uint64_t v = get_u64le(bytes.data() + pos);
        pos += 8;
        return v;
    };
    auto narrow = [](uint64_t v, const char* field) {
        if (v > UINT32_MAX) throw format_error(std::string("field out of range: ") + field);
        return static_cast<uint32_t>(v);
    };

    DecodedOutputFile f;
    f.n = narrow(read_u64(), "n");
    f.m = narrow(read_u64(), "m");
    f.R = narrow(read_u64(), "R");
    if (f.n == 0 || f.m == 0 || f.m > f.n) throw format_error("degenerate header");

    f.out.message_bits = read_u64();
    size_t msg_bytes = (f.out.message_bits + 7) / 8;
    need(msg_bytes);
    f.out.message.assign(bytes.begin() + pos, bytes.begin() + pos + msg_bytes);
    pos += msg_bytes;

    unsigned card_bits = ceil_log2(bigint(f.n));
    size_t bit_block = (static_cast<size_t>(f.R) + card_bits + 7) / 8;
    need(bit_block);
    BitReader br(bytes.data() + pos, bit_block);
    f.out.b.resize(f.R);
    for (uint32_t r = 0; r < f.R; ++r) f.out.b[r] = br.get_bit();
    uint64_t card = br.get_bits(card_bits);
    br.align_byte();
    pos += bit_block;
    if (card > f.m) throw format_error("coded set larger than m");

    unsigned rank_bits = subset_code_bits(f.n, static_cast<uint32_t>(card));
    unsigned rank_bytes = (rank_bits + 7) / 8;
    need(rank_bytes);
    bigint rank = 0;
    for (unsigned i = 0; i < rank_bytes; ++i) {
        rank <<= 8;
        rank += bytes[pos + i];
    }
    pos += rank_bytes;
    if (pos != bytes.size()) throw format_error("trailing bytes after encoder output");
    if (rank >= binomial(f.n, card)) throw format_error("coded-set rank out of range");
    f.out.coded_set = subset_unrank(f.n, static_cast<uint32_t>(card), rank);
    return f;
}

} // namespace urk
