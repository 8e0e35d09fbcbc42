#include "urk/turnstile.hpp"

#include <algorithm>

#include "urk/bits.hpp"
#include "urk/errors.hpp"
#include "urk/prf.hpp"

namespace urk {

TurnstileSketch::TurnstileSketch(const ProtocolParams& params)
    : params_(params), proto_(std::make_shared<Protocol>(params)) {
    v_.assign(params_.levels() + 1, FieldVec(params_.q, proto_->m_rows()));
}

TurnstileSketch TurnstileSketch::from_message(const ProtocolParams& params,
                                              const UrMessage& msg) {
    TurnstileSketch s(params);
    if (msg.n != params.n || msg.k != params.k || msg.q != params.q ||
        msg.levels != params.levels() || msg.m_rows != s.proto_->m_rows() ||
        msg.seed != params.seed)
        throw param_error("message was produced under different parameters");
    if (msg.v.size() != s.v_.size()) throw param_error("message has wrong sketch count");
    s.v_ = msg.v;
    return s;
}

void TurnstileSketch::update(uint32_t index, int64_t delta) {
    if (index >= params_.n) throw param_error("index out of range");
    ++updates_;
    uint32_t c = to_field(delta, params_.q);
    if (c == 0) return;
    uint32_t jm = deepest_level(proto_->level_family(), index);
    for (uint32_t j = 0; j <= jm; ++j)
        vec_add_scaled_column(v_[j], proto_->scheme().matrix, index, c);
}

void TurnstileSketch::merge(const TurnstileSketch& other) {
    const ProtocolParams& a = params_;
    const ProtocolParams& b = other.params_;
    if (a.n != b.n || a.k != b.k || a.q != b.q || a.oversample != b.oversample ||
        a.slack != b.slack || a.seed != b.seed || a.backend != b.backend)
        throw param_error("cannot merge sketches with different parameters");
    for (size_t j = 0; j < v_.size(); ++j) v_[j] = vec_add(v_[j], other.v_[j]);
    updates_ += other.updates_;
}

UrMessage TurnstileSketch::to_message() const {
    UrMessage msg;
    msg.n = params_.n;
    msg.k = params_.k;
    msg.q = params_.q;
    msg.levels = params_.levels();
    msg.m_rows = proto_->m_rows();
    msg.seed = params_.seed;
    msg.v = v_;
    return msg;
}

std::optional<std::vector<uint32_t>> support_find_k(const TurnstileSketch& s) {
    std::vector<uint8_t> zero(s.params().n, 0);
    return s.protocol().bob(s.to_message(), zero);
}

std::optional<std::vector<uint32_t>> l0_sample_k(const TurnstileSketch& s,
                                                 uint64_t sample_seed) {
    const Protocol& p = s.protocol();
    UrMessage msg = s.to_message();
    uint32_t k = s.params().k;
    for (uint32_t j = msg.levels + 1; j-- > 0;) {
        std::optional<FieldVec> w = p.decode_level(j, msg.v[j]);
        if (!w) {
            if (j == 0) return std::nullopt; // Fail
            continue;
        }
        std::vector<uint32_t> supp = w->support();
        // A level holding fewer than k survivors (an empty one included)
        // only means the subsample was too thin; the elements are below.
        if (supp.size() < k && j > 0) continue;
        size_t take = std::min<size_t>(k, supp.size());
        PrfStream rng(sample_seed, "l0sample", j);
        for (size_t t = 0; t < take; ++t) {
            size_t pick = t + rng.next_below(supp.size() - t);
            std::swap(supp[t], supp[pick]);
        }
        supp.resize(take);
        std::sort(supp.begin(), supp.end());
        return supp;
    }
    return std::nullopt; // unreachable
}

// ---------------------------------------------------------------------------
// Exact reference algorithms. State formats are flat little-endian arrays;
// linear space is fine for fixtures.

namespace {

uint64_t read_u64(const std::vector<uint8_t>& state, size_t slot) {
    return get_u64le(state.data() + 8 * slot);
}

void write_u64(std::vector<uint8_t>& state, size_t slot, uint64_t v) {
    for (int i = 0; i < 8; ++i) state[8 * slot + i] = static_cast<uint8_t>(v >> (8 * i));
}

void check_state_size(const std::vector<uint8_t>& state, size_t want, const char* who) {
    if (state.size() != want) throw format_error(std::string(who) + ": state has wrong size");
}

} // namespace

StreamingFindup naive_findup(uint32_t n) {
    if (n == 0) throw param_error("n must be positive");
    StreamingFindup alg;
    alg.n = n;
    // State: n u64 occurrence counts.
    alg.init = [n]() { return std::vector<uint8_t>(8 * size_t{n}, 0); };
    alg.feed = [n](std::vector<uint8_t>& state, uint32_t index) {
        check_state_size(state, 8 * size_t{n}, "findup");
        if (index >= n) throw param_error("index out of range");
        write_u64(state, index, read_u64(state, index) + 1);
    };
    alg.answer = [n](const std::vector<uint8_t>& state) -> std::optional<uint32_t> {
        check_state_size(state, 8 * size_t{n}, "findup");
        for (uint32_t i = 0; i < n; ++i)
            if (read_u64(state, i) >= 2) return i;
        return std::nullopt;
    };
    return alg;
}

namespace {

// Shared body of the two count-vector oracles: state is n signed u64 slots.
std::vector<uint32_t> counts_support(const std::vector<uint8_t>& state, uint32_t n) {
    std::vector<uint32_t> supp;
    for (uint32_t i = 0; i < n; ++i)
        if (read_u64(state, i) != 0) supp.push_back(i);
    return supp;
}

void counts_update(std::vector<uint8_t>& state, uint32_t n, uint32_t index, int64_t delta,
                   const char* who) {
    check_state_size(state, 8 * size_t{n}, who);
    if (index >= n) throw param_error("index out of range");
    write_u64(state, index, read_u64(state, index) + static_cast<uint64_t>(delta));
}

} // namespace

StreamingSuppfind naive_suppfind(uint32_t n, uint32_t k) {
    if (n == 0 || k == 0) throw param_error("n and k must be positive");
    StreamingSuppfind alg;
    alg.n = n;
    alg.k = k;
    alg.init = [n]() { return std::vector<uint8_t>(8 * size_t{n}, 0); };
    alg.update = [n](std::vector<uint8_t>& state, uint32_t index, int64_t delta) {
        counts_update(state, n, index, delta, "suppfind");
    };
    alg.query = [n, k](const std::vector<uint8_t>& state)
        -> std::optional<std::vector<uint32_t>> {
        check_state_size(state, 8 * size_t{n}, "suppfind");
        std::vector<uint32_t> supp = counts_support(state, n);
        if (supp.size() > k) supp.resize(k);
        return supp;
    };
    return alg;
}

StreamingSampler naive_sampler(uint32_t n, uint32_t k) {
    if (n == 0 || k == 0) throw param_error("n and k must be positive");
    StreamingSampler alg;
    alg.n = n;
    alg.k = k;
    alg.init = [n]() { return std::vector<uint8_t>(8 * size_t{n}, 0); };
    alg.update = [n](std::vector<uint8_t>& state, uint32_t index, int64_t delta) {
        counts_update(state, n, index, delta, "sampler");
    };
    alg.query = [n, k](const std::vector<uint8_t>& state, uint64_t sample_seed)
        -> std::optional<std::vector<uint32_t>> {
        check_state_size(state, 8 * size_t{n}, "sampler");
        std::vector<uint32_t> supp = counts_support(state, n);
        size_t take = std::min<size_t>(k, supp.size());
        PrfStream rng(sample_seed, "naive-sampler");
        for (size_t t = 0; t < take; ++t) {
            size_t pick = t + rng.next_below(supp.size() - t);
            std::swap(supp[t], supp[pick]);
        }
        supp.resize(take);
        std::sort(supp.begin(), supp.end());
        return supp;
    };
    return alg;
}

StreamingSuppfind sketch_suppfind(const ProtocolParams& params) {
    StreamingSuppfind alg;
    alg.n = params.n;
    alg.k = params.k;
    alg.init = [params]() { return serialize(TurnstileSketch(params).to_message()); };
    alg.update = [params](std::vector<uint8_t>& state, uint32_t index, int64_t delta) {
        TurnstileSketch s = TurnstileSketch::from_message(params, deserialize(state));
        s.update(index, delta);
        state = serialize(s.to_message());
    };
    alg.query = [params](const std::vector<uint8_t>& state) {
        return support_find_k(TurnstileSketch::from_message(params, deserialize(state)));
    };
    return alg;
}

StreamingSampler sketch_sampler(const ProtocolParams& params) {
    StreamingSampler alg;
    alg.n = params.n;
    alg.k = params.k;
    alg.init = [params]() { return serialize(TurnstileSketch(params).to_message()); };
    alg.update = [params](std::vector<uint8_t>& state, uint32_t index, int64_t delta) {
        TurnstileSketch s = TurnstileSketch::from_message(params, deserialize(state));
        s.update(index, delta);
        state = serialize(s.to_message());
    };
    alg.query = [params](const std::vector<uint8_t>& state, uint64_t sample_seed) {
        return l0_sample_k(TurnstileSketch::from_message(params, deserialize(state)),
                           sample_seed);
    };
    return alg;
}

// ---------------------------------------------------------------------------
// Adapters

ProtocolHandle ur_from_findup(const StreamingFindup& alg) {
    uint32_t n = alg.n;
    if (n == 0) throw param_error("findup algorithm has no dimension");
    ProtocolHandle h;
    h.n = n;
    h.k = 1;
    h.name = "findup-adapter";
    h.alice = [alg, n](const std::vector<uint8_t>& x) {
        if (x.size() != n) throw param_error("alice: vector length does not match n");
        std::vector<uint8_t> state = alg.init();
        uint64_t fed = 0;
        for (uint32_t i = 0; i < n; ++i) {
            if (x[i] > 1) throw param_error("alice: entries must be 0 or 1");
            if (x[i]) {
                alg.feed(state, i);
                ++fed;
            }
        }
        // Message = fed-count prefix + algorithm state.
        ProtocolMessage msg;
        put_u64le(msg.bytes, fed);
        msg.bytes.insert(msg.bytes.end(), state.begin(), state.end());
        msg.bits = 8 * msg.bytes.size();
        return msg;
    };
    h.bob = [alg, n](const ProtocolMessage& msg, const std::vector<uint8_t>& y)
        -> std::optional<std::vector<uint32_t>> {
        if (y.size() != n) throw param_error("bob: vector length does not match n");
        if (msg.bytes.size() < 8) throw format_error("adapter message truncated");
        uint64_t fed = get_u64le(msg.bytes.data());
        if (fed > n) throw format_error("adapter message claims too many elements");
        std::vector<uint8_t> state(msg.bytes.begin() + 8, msg.bytes.end());

        // Feed n+1-fed fillers from outside support(y), smallest first.
        uint64_t need = n + 1 - fed;
        for (uint32_t i = 0; i < n && need > 0; ++i) {
            if (y[i] > 1) throw param_error("bob: entries must be 0 or 1");
            if (!y[i]) {
                alg.feed(state, i);
                --need;
            }
        }
        if (need > 0)
            throw param_error("not enough indices outside support(y) to complete the stream");
        std::optional<uint32_t> dup = alg.answer(state);
        if (!dup) return std::nullopt;
        return std::vector<uint32_t>{*dup};
    };
    return h;
}

ProtocolHandle ur_k_from_suppfind(const StreamingSuppfind& alg) {
    uint32_t n = alg.n;
    if (n == 0) throw param_error("suppfind algorithm has no dimension");
    ProtocolHandle h;
    h.n = n;
    h.k = alg.k;
    h.name = "suppfind-adapter";
    h.alice = [alg, n](const std::vector<uint8_t>& x) {
        if (x.size() != n) throw param_error("alice: vector length does not match n");
        std::vector<uint8_t> state = alg.init();
        for (uint32_t i = 0; i < n; ++i) {
            if (x[i] > 1) throw param_error("alice: entries must be 0 or 1");
            if (x[i]) alg.update(state, i, +1);
        }
        ProtocolMessage msg;
        msg.bytes = std::move(state);
        msg.bits = 8 * msg.bytes.size();
        return msg;
    };
    h.bob = [alg, n](const ProtocolMessage& msg, const std::vector<uint8_t>& y)
        -> std::optional<std::vector<uint32_t>> {
        if (y.size() != n) throw param_error("bob: vector length does not match n");
        std::vector<uint8_t> state = msg.bytes;
        for (uint32_t i = 0; i < n; ++i) {
            if (y[i] > 1) throw param_error("bob: entries must be 0 or 1");
            if (y[i]) alg.update(state, i, -1);
        }
        return alg.query(state);
    };
    return h;
}

StreamingSuppfind suppfind_from_sampler(const StreamingSampler& alg, uint64_t sample_seed) {
    StreamingSuppfind out;
    out.n = alg.n;
    out.k = alg.k;
    out.init = alg.init;
    out.update = alg.update;
    out.query = [alg, sample_seed](const std::vector<uint8_t>& state) {
        return alg.query(state, sample_seed);
    };
    return out;
}

} // namespace urk
