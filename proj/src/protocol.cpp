#include "urk/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "urk/bits.hpp"
#include "urk/errors.hpp"
#include "urk/prf.hpp"

namespace urk {

namespace {

constexpr char kMagic[4] = {'U', 'R', 'K', '1'};

void check_binary_vector(const std::vector<uint8_t>& x, uint32_t n, const char* who) {
    if (x.size() != n)
        throw param_error(std::string(who) + ": vector length " + std::to_string(x.size()) +
                          " does not match n=" + std::to_string(n));
    for (uint8_t b : x)
        if (b > 1) throw param_error(std::string(who) + ": entries must be 0 or 1");
}

// Per-level sketches of a binary vector: for each set coordinate, add its
// matrix column to levels 0..deepest_level(i) (the nested fast path).
std::vector<FieldVec> level_sketches(const SketchMatrix& M, const LevelFamily& f,
                                     const std::vector<uint8_t>& x) {
    std::vector<FieldVec> v(f.max_level + 1, FieldVec(M.q, M.m_rows));
    for (uint32_t i = 0; i < f.n; ++i) {
        if (!x[i]) continue;
        uint32_t jm = deepest_level(f, i);
        for (uint32_t j = 0; j <= jm; ++j) vec_add_scaled_column(v[j], M, i, 1);
    }
    return v;
}

} // namespace

uint32_t ProtocolParams::levels() const {
    // floor(log2(n/k)) with integer n/k; validate() guarantees n/k >= 2.
    uint32_t ratio = n / k;
    return static_cast<uint32_t>(std::bit_width(ratio)) - 1;
}

void ProtocolParams::validate() const {
    if (n == 0) throw param_error("n must be positive");
    if (k < 1 || 2ull * k > n)
        throw param_error("k must satisfy 1 <= k <= n/2 (got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
    require_valid_modulus(q);
    if (oversample < 1) throw param_error("oversample must be >= 1");
    uint64_t s = static_cast<uint64_t>(oversample) * k;
    if (2 * s > n)
        throw param_error("recovery sparsity oversample*k=" + std::to_string(s) +
                          " must be <= n/2");
}

uint64_t UrMessage::payload_bits() const {
    return static_cast<uint64_t>(levels + 1) * packed_bits(q, m_rows);
}

Protocol::Protocol(ProtocolParams params) : params_(params) {
    params_.validate();
    if (params_.backend != SketchBackend::exhaustive)
        throw param_error("Protocol serves the exhaustive backend; use make_protocol_handle "
                          "for bucket sketches");
    scheme_ = build_scheme(params_.n, params_.sparsity(), params_.q, params_.slack,
                           prf64(params_.seed, "matrix-seed"));
    levels_ = LevelFamily{prf64(params_.seed, "level-seed"), params_.n, params_.levels()};
}

UrMessage Protocol::alice(const std::vector<uint8_t>& x) const {
    check_binary_vector(x, params_.n, "alice");
    UrMessage msg;
    msg.n = params_.n;
    msg.k = params_.k;
    msg.q = params_.q;
    msg.levels = params_.levels();
    msg.m_rows = scheme_.m_rows();
    msg.seed = params_.seed;
    msg.v = level_sketches(scheme_.matrix, levels_, x);
    return msg;
}

std::optional<std::vector<uint32_t>> Protocol::bob(const UrMessage& msg,
                                                   const std::vector<uint8_t>& y) const {
    check_binary_vector(y, params_.n, "bob");
    if (msg.n != params_.n || msg.k != params_.k || msg.q != params_.q ||
        msg.levels != params_.levels() || msg.m_rows != scheme_.m_rows() ||
        msg.seed != params_.seed)
        throw param_error("message was produced under different parameters");
    if (msg.v.size() != static_cast<size_t>(msg.levels) + 1)
        throw param_error("message has wrong sketch count");

    std::vector<FieldVec> ys = level_sketches(scheme_.matrix, levels_, y);
    for (uint32_t j = msg.levels + 1; j-- > 0;) {
        std::optional<FieldVec> w = decode_level(j, vec_sub(msg.v[j], ys[j]));
        if (!w) {
            if (j == 0) return std::nullopt; // Fail
            continue;
        }
        std::vector<uint32_t> supp = w->support();
        if (supp.size() >= params_.k || j == 0) {
            if (supp.size() > params_.k) supp.resize(params_.k);
            return supp;
        }
        // Decodable but fewer than k survivors at j > 0: descend for more.
    }
    return std::nullopt; // unreachable: j == 0 always returns
}

std::optional<FieldVec> Protocol::decode_level(uint32_t j, const FieldVec& residual) const {
    if (j > levels_.max_level) throw param_error("level out of range");
    if (residual.q != params_.q || residual.size() != scheme_.m_rows())
        throw param_error("residual length must equal m_rows");

    bool zero = true;
    for (uint32_t v : residual.e) zero = zero && v == 0;
    if (zero) return FieldVec(params_.q, params_.n); // nothing to search

    // The residual provably lives on the level's surviving columns, so
    // decode over that restriction (level 0 keeps everything). A preimage-
    // free level and one whose search is unaffordable are undecodable alike.
    const RecoveryScheme* sch = &scheme_;
    const std::vector<uint32_t>* map = nullptr;
    if (j > 0) {
        ensure_level_schemes();
        if (level_members_[j].empty()) return std::nullopt; // nonzero residual, empty level
        sch = &level_schemes_[j];
        map = &level_members_[j];
    }
    std::optional<FieldVec> w;
    try {
        w = exhaustive_decode(*sch, residual);
    } catch (const refusal_error&) {
        return std::nullopt;
    }
    if (!w || !map) return w;
    FieldVec full(params_.q, params_.n);
    for (uint32_t c = 0; c < map->size(); ++c) full.e[(*map)[c]] = w->e[c];
    return full;
}

void Protocol::ensure_level_schemes() const {
    std::call_once(sub_once_, [this] {
        level_members_.resize(levels_.max_level + 1);
        level_schemes_.resize(levels_.max_level + 1);
        for (uint32_t i = 0; i < params_.n; ++i) {
            uint32_t jm = std::min(deepest_level(levels_, i), levels_.max_level);
            for (uint32_t j = 1; j <= jm; ++j) level_members_[j].push_back(i);
        }
        for (uint32_t j = 1; j <= levels_.max_level; ++j)
            if (!level_members_[j].empty())
                level_schemes_[j] =
                    column_subscheme(scheme_, level_members_[j], params_.sparsity());
    });
}

UrMessage alice(const ProtocolParams& params, const std::vector<uint8_t>& x) {
    return Protocol(params).alice(x);
}

std::optional<std::vector<uint32_t>> bob(const ProtocolParams& params, const UrMessage& msg,
                                         const std::vector<uint8_t>& y) {
    return Protocol(params).bob(msg, y);
}

std::vector<uint8_t> serialize(const UrMessage& msg) {
    std::vector<uint8_t> out(kMagic, kMagic + 4);
    put_u64le(out, msg.n);
    put_u64le(out, msg.k);
    put_u64le(out, msg.q);
    put_u64le(out, msg.levels);
    put_u64le(out, msg.m_rows);
    put_u64le(out, msg.seed);

    BitWriter bw;
    for (const FieldVec& vj : msg.v) {
        std::vector<uint8_t> packed = pack_base_q(vj);
        unsigned bits = packed_bits(vj.q, vj.size());
        for (unsigned b = 0; b < bits; ++b) bw.put_bit((packed[b / 8] >> (b % 8)) & 1);
    }
    bw.align_byte();
    std::vector<uint8_t> payload = bw.take();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

UrMessage deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 52) throw format_error("message truncated before header end");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw format_error("bad magic");

    auto u64_at = [&](size_t off) { return get_u64le(bytes.data() + off); };
    auto narrow = [](uint64_t v, const char* field) {
        if (v > UINT32_MAX) throw format_error(std::string("header field out of range: ") + field);
        return static_cast<uint32_t>(v);
    };
    UrMessage msg;
    msg.n = narrow(u64_at(4), "n");
    msg.k = narrow(u64_at(12), "k");
    msg.q = narrow(u64_at(20), "q");
    msg.levels = narrow(u64_at(28), "L");
    msg.m_rows = narrow(u64_at(36), "m_rows");
    msg.seed = u64_at(44);

    if (msg.n == 0 || msg.k == 0 || msg.levels > 63) throw format_error("degenerate header");
    try {
        require_valid_modulus(msg.q);
    } catch (const param_error& e) {
        throw format_error(std::string("header modulus invalid: ") + e.what());
    }

    uint64_t payload_bits = msg.payload_bits();
    uint64_t payload_bytes = (payload_bits + 7) / 8;
    if (bytes.size() < 52 + payload_bytes) throw format_error("payload truncated");
    if (bytes.size() > 52 + payload_bytes) throw format_error("trailing bytes after payload");

    BitReader br(bytes.data() + 52, bytes.size() - 52);
    unsigned per_level = packed_bits(msg.q, msg.m_rows);
    for (uint32_t j = 0; j <= msg.levels; ++j) {
        std::vector<uint8_t> packed((per_level + 7) / 8, 0);
        for (unsigned b = 0; b < per_level; ++b)
            if (br.get_bit()) packed[b / 8] |= uint8_t{1} << (b % 8);
        msg.v.push_back(unpack_base_q(packed, msg.q, msg.m_rows));
    }
    br.align_byte(); // throws on nonzero padding
    return msg;
}

// ---------------------------------------------------------------------------
// Handles

namespace {

// Payload-only transport for the exhaustive backend: params are shared
// context, so the handle ships just the packed sketches.
std::vector<uint8_t> pack_payload(const UrMessage& msg) {
    BitWriter bw;
    for (const FieldVec& vj : msg.v) {
        std::vector<uint8_t> packed = pack_base_q(vj);
        unsigned bits = packed_bits(vj.q, vj.size());
        for (unsigned b = 0; b < bits; ++b) bw.put_bit((packed[b / 8] >> (b % 8)) & 1);
    }
    bw.align_byte();
    return bw.take();
}

UrMessage unpack_payload(const ProtocolParams& params, uint32_t m_rows,
                         const std::vector<uint8_t>& bytes) {
    UrMessage msg;
    msg.n = params.n;
    msg.k = params.k;
    msg.q = params.q;
    msg.levels = params.levels();
    msg.m_rows = m_rows;
    msg.seed = params.seed;
    uint64_t want = (msg.payload_bits() + 7) / 8;
    if (bytes.size() != want) throw format_error("sketch payload has wrong length");
    BitReader br(bytes.data(), bytes.size());
    unsigned per_level = packed_bits(msg.q, m_rows);
    for (uint32_t j = 0; j <= msg.levels; ++j) {
        std::vector<uint8_t> packed((per_level + 7) / 8, 0);
        for (unsigned b = 0; b < per_level; ++b)
            if (br.get_bit()) packed[b / 8] |= uint8_t{1} << (b % 8);
        msg.v.push_back(unpack_base_q(packed, msg.q, m_rows));
    }
    br.align_byte();
    return msg;
}

ProtocolHandle make_bucket_handle(const ProtocolParams& params) {
    params.validate();
    uint32_t L = params.levels();
    uint32_t buckets =
        params.buckets_per_level ? params.buckets_per_level : 3 * params.sparsity();
    LevelFamily family{prf64(params.seed, "level-seed"), params.n, L};

    auto level_seed = [seed = params.seed](uint32_t j) { return prf64(seed, "bseed", j); };
    auto empty_levels = [=]() {
        std::vector<BucketRecovery> b;
        b.reserve(L + 1);
        for (uint32_t j = 0; j <= L; ++j)
            b.emplace_back(params.n, buckets, level_seed(j));
        return b;
    };

    ProtocolHandle h;
    h.n = params.n;
    h.k = params.k;
    h.name = "sketch-bucket";
    h.alice = [=](const std::vector<uint8_t>& x) {
        check_binary_vector(x, params.n, "alice");
        std::vector<BucketRecovery> b = empty_levels();
        for (uint32_t i = 0; i < params.n; ++i) {
            if (!x[i]) continue;
            uint32_t jm = deepest_level(family, i);
            for (uint32_t j = 0; j <= jm; ++j) b[j].add(i, +1);
        }
        ProtocolMessage msg;
        for (const BucketRecovery& br : b) {
            std::vector<uint8_t> cells = br.serialize_cells();
            msg.bytes.insert(msg.bytes.end(), cells.begin(), cells.end());
        }
        msg.bits = 8 * msg.bytes.size();
        return msg;
    };
    h.bob = [=](const ProtocolMessage& msg,
                const std::vector<uint8_t>& y) -> std::optional<std::vector<uint32_t>> {
        check_binary_vector(y, params.n, "bob");
        std::vector<BucketRecovery> b = empty_levels();
        size_t per = static_cast<size_t>(b[0].buckets()) * 24;
        if (msg.bytes.size() != per * (L + 1))
            throw format_error("bucket message has wrong length");
        for (uint32_t j = 0; j <= L; ++j)
            b[j] = BucketRecovery::deserialize_cells(params.n, buckets, level_seed(j),
                                                     msg.bytes.data() + per * j, per);
        // Subtract Bob's side, then peel levels top down.
        for (uint32_t i = 0; i < params.n; ++i) {
            if (!y[i]) continue;
            uint32_t jm = deepest_level(family, i);
            for (uint32_t j = 0; j <= jm; ++j) b[j].add(i, -1);
        }
        for (uint32_t j = L + 1; j-- > 0;) {
            auto decoded = b[j].decode();
            if (!decoded) {
                if (j == 0) return std::nullopt;
                continue;
            }
            std::vector<uint32_t> supp;
            for (auto& [i, cnt] : *decoded)
                if (cnt != 0) supp.push_back(i);
            if (supp.size() >= params.k || j == 0) {
                if (supp.size() > params.k) supp.resize(params.k);
                return supp;
            }
        }
        return std::nullopt;
    };
    return h;
}

// Stub message: x's support bitmap, so stub bobs have honest access to x.
ProtocolMessage bitmap_message(const std::vector<uint8_t>& x, uint32_t n) {
    check_binary_vector(x, n, "alice");
    ProtocolMessage msg;
    msg.bytes.assign((n + 7) / 8, 0);
    for (uint32_t i = 0; i < n; ++i)
        if (x[i]) msg.bytes[i / 8] |= uint8_t{1} << (i % 8);
    msg.bits = n;
    return msg;
}

std::vector<uint8_t> bitmap_to_vector(const ProtocolMessage& msg, uint32_t n) {
    if (msg.bytes.size() != (n + 7) / 8) throw format_error("stub message has wrong length");
    std::vector<uint8_t> x(n, 0);
    for (uint32_t i = 0; i < n; ++i) x[i] = (msg.bytes[i / 8] >> (i % 8)) & 1;
    return x;
}

// min{k, .} smallest indices where x and y differ.
std::vector<uint32_t> oracle_answer(const std::vector<uint8_t>& x, const std::vector<uint8_t>& y,
                                    uint32_t k) {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < x.size() && out.size() < k; ++i)
        if (x[i] != y[i]) out.push_back(i);
    return out;
}

// The smallest index where x and y agree — a wrong answer whenever one
// exists; nullopt when x and y differ everywhere.
std::optional<std::vector<uint32_t>> wrong_answer(const std::vector<uint8_t>& x,
                                                  const std::vector<uint8_t>& y) {
    for (uint32_t i = 0; i < x.size(); ++i)
        if (x[i] == y[i]) return std::vector<uint32_t>{i};
    return std::nullopt;
}

} // namespace

ProtocolHandle make_protocol_handle(const ProtocolParams& params) {
    if (params.backend == SketchBackend::bucket) return make_bucket_handle(params);
    auto proto = std::make_shared<Protocol>(params);
    ProtocolHandle h;
    h.n = params.n;
    h.k = params.k;
    h.name = "sketch";
    h.alice = [proto](const std::vector<uint8_t>& x) {
        UrMessage m = proto->alice(x);
        ProtocolMessage msg;
        msg.bytes = pack_payload(m);
        msg.bits = m.payload_bits();
        return msg;
    };
    h.bob = [proto](const ProtocolMessage& msg, const std::vector<uint8_t>& y) {
        UrMessage m = unpack_payload(proto->params(), proto->m_rows(), msg.bytes);
        return proto->bob(m, y);
    };
    return h;
}

ProtocolHandle make_stub(StubKind kind, uint32_t n, uint32_t k, uint64_t seed,
                         double delta_syn) {
    if (n == 0) throw param_error("n must be positive");
    if (k < 1) throw param_error("k must be >= 1");
    if (delta_syn < 0.0 || delta_syn > 1.0) throw param_error("delta_syn must be in [0, 1]");

    ProtocolHandle h;
    h.n = n;
    h.k = k;
    h.alice = [n](const std::vector<uint8_t>& x) { return bitmap_message(x, n); };
    switch (kind) {
        case StubKind::oracle:
            h.name = "oracle";
            h.bob = [n, k](const ProtocolMessage& msg, const std::vector<uint8_t>& y)
                -> std::optional<std::vector<uint32_t>> {
                check_binary_vector(y, n, "bob");
                return oracle_answer(bitmap_to_vector(msg, n), y, k);
            };
            break;
        case StubKind::always_fail:
            h.name = "always_fail";
            h.bob = [n](const ProtocolMessage& msg, const std::vector<uint8_t>& y)
                -> std::optional<std::vector<uint32_t>> {
                check_binary_vector(y, n, "bob");
                return wrong_answer(bitmap_to_vector(msg, n), y);
            };
            break;
        case StubKind::iid_failure: {
            h.name = "iid_failure";
            // Threshold chosen so Pr(coin < threshold) = delta_syn up to 2^-64.
            uint64_t threshold = delta_syn >= 1.0
                                     ? UINT64_MAX
                                     : static_cast<uint64_t>(std::ldexp(delta_syn, 64));
            bool saturate = delta_syn >= 1.0;
            h.bob = [n, k, seed, threshold, saturate](const ProtocolMessage& msg,
                                                      const std::vector<uint8_t>& y)
                -> std::optional<std::vector<uint32_t>> {
                check_binary_vector(y, n, "bob");
                std::vector<uint8_t> x = bitmap_to_vector(msg, n);
                // One coin per distinct (message, y): replayed calls repeat it.
                uint64_t coin = prf64(seed, "iidcoin", fnv1a(msg.bytes.data(), msg.bytes.size()),
                                      fnv1a(y.data(), y.size()));
                if (saturate || coin < threshold) return wrong_answer(x, y);
                return oracle_answer(x, y, k);
            };
            break;
        }
    }
    return h;
}

} // namespace urk
