#include "urk.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "urk/errors.hpp"
#include "urk/experiments.hpp"
#include "urk/lb.hpp"
#include "urk/prf.hpp"
#include "urk/protocol.hpp"
#include "urk/turnstile.hpp"

namespace {

thread_local std::string g_last_error;

template <class F> urk_status guarded(F&& body) noexcept {
    try {
        body();
        g_last_error.clear();
        return URK_OK;
    } catch (const urk::param_error& e) {
        g_last_error = e.what();
        return URK_EPARAM;
    } catch (const urk::format_error& e) {
        g_last_error = e.what();
        return URK_EFORMAT;
    } catch (const urk::refusal_error& e) {
        g_last_error = e.what();
        return URK_EREFUSAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return URK_EINTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return URK_EINTERNAL;
    }
}

urk_status invalid(const char* what) {
    g_last_error = what;
    return URK_EINVAL;
}

uint32_t narrow_u32(uint64_t v, const char* name) {
    if (v > UINT32_MAX) throw urk::param_error(std::string(name) + " out of range");
    return static_cast<uint32_t>(v);
}

char* dup_cstring(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size() + 1);
    return p;
}

uint8_t* dup_bytes(const std::vector<uint8_t>& v) {
    uint8_t* p = static_cast<uint8_t*>(std::malloc(v.empty() ? 1 : v.size()));
    if (!p) throw std::bad_alloc();
    if (!v.empty()) std::memcpy(p, v.data(), v.size());
    return p;
}

urk::ProtocolParams make_params(uint64_t n, uint64_t k, uint64_t q, uint64_t oversample,
                                uint64_t slack, uint64_t seed) {
    urk::ProtocolParams p;
    p.n = narrow_u32(n, "n");
    p.k = narrow_u32(k, "k");
    p.q = narrow_u32(q, "q");
    p.oversample = narrow_u32(oversample, "oversample");
    p.slack = narrow_u32(slack, "slack");
    p.seed = seed;
    return p;
}

// Result copy-out shared by bob and the sketch queries: -1 = Fail.
void copy_answer(const std::optional<std::vector<uint32_t>>& ans, uint32_t* out, uint64_t cap,
                 int64_t* out_count) {
    if (!ans) {
        *out_count = -1;
        return;
    }
    if (ans->size() > cap) throw urk::param_error("output capacity too small");
    std::copy(ans->begin(), ans->end(), out);
    *out_count = static_cast<int64_t>(ans->size());
}

// The file harness derives everything from (n, log2_inv_delta, handle, seed):
// the round parameters, the handle, and the encoded set itself, so encode and
// decode agree without a side channel.
struct LbSetup {
    urk::LbParams params;
    urk::ProtocolHandle handle;
    std::vector<uint32_t> S;
};

LbSetup lb_setup(uint64_t n64, uint64_t l2id64, const char* handle, double delta_syn,
                 uint64_t seed) {
    uint32_t n = narrow_u32(n64, "n");
    uint32_t l2id = narrow_u32(l2id64, "log2_inv_delta");
    LbSetup s{urk::lb_params(n, l2id, seed),
              urk::make_named_handle(handle, n, 1, urk::prf64(seed, "handle-seed"), delta_syn),
              {}};
    s.S = urk::seeded_permutation(seed, "lb-set", n);
    s.S.resize(s.params.m);
    std::sort(s.S.begin(), s.S.end());
    return s;
}

std::string lb_summary(const urk::EncoderOutput& out, const urk::LbParams& params, uint32_t n) {
    uint64_t sum_b = 0;
    for (uint8_t b : out.b) sum_b += b;
    return "n=" + std::to_string(n) + ",m=" + std::to_string(params.m) +
           ",R=" + std::to_string(params.R) + ",sum_b=" + std::to_string(sum_b) +
           ",b_card=" + std::to_string(out.coded_set.size()) +
           ",message_bits=" + std::to_string(out.message_bits) +
           ",total_bits=" + std::to_string(urk::encoding_bit_length(out, n));
}

} // namespace

struct urk_protocol {
    urk::Protocol impl;
};
struct urk_sketch {
    urk::TurnstileSketch impl;
};

extern "C" {

const char* urk_last_error(void) { return g_last_error.c_str(); }
void urk_buffer_free(uint8_t* p) { std::free(p); }
void urk_string_free(char* p) { std::free(p); }

urk_status urk_protocol_create(uint64_t n, uint64_t k, uint64_t q, uint64_t oversample,
                               uint64_t slack, uint64_t seed, urk_protocol** out) {
    if (!out) return invalid("out is null");
    *out = nullptr;
    return guarded([&] {
        *out = new urk_protocol{urk::Protocol(make_params(n, k, q, oversample, slack, seed))};
    });
}

void urk_protocol_destroy(urk_protocol* p) { delete p; }

urk_status urk_protocol_alice(const urk_protocol* p, const uint8_t* x, uint64_t n, uint8_t** msg,
                              uint64_t* msg_len, uint64_t* payload_bits) {
    if (!p || !x || !msg || !msg_len || !payload_bits) return invalid("null argument");
    return guarded([&] {
        if (n != p->impl.params().n) throw urk::param_error("x length does not match n");
        urk::UrMessage m = p->impl.alice(std::vector<uint8_t>(x, x + n));
        std::vector<uint8_t> wire = urk::serialize(m);
        *payload_bits = m.payload_bits();
        *msg = dup_bytes(wire);
        *msg_len = wire.size();
    });
}

urk_status urk_protocol_bob(const urk_protocol* p, const uint8_t* msg, uint64_t msg_len,
                            const uint8_t* y, uint64_t n, uint32_t* out, uint64_t cap,
                            int64_t* out_count) {
    if (!p || !msg || !y || !out || !out_count) return invalid("null argument");
    return guarded([&] {
        if (n != p->impl.params().n) throw urk::param_error("y length does not match n");
        urk::UrMessage m = urk::deserialize(std::vector<uint8_t>(msg, msg + msg_len));
        copy_answer(p->impl.bob(m, std::vector<uint8_t>(y, y + n)), out, cap, out_count);
    });
}

urk_status urk_sketch_create(uint64_t n, uint64_t k, uint64_t q, uint64_t oversample,
                             uint64_t slack, uint64_t seed, urk_sketch** out) {
    if (!out) return invalid("out is null");
    *out = nullptr;
    return guarded([&] {
        *out =
            new urk_sketch{urk::TurnstileSketch(make_params(n, k, q, oversample, slack, seed))};
    });
}

void urk_sketch_destroy(urk_sketch* s) { delete s; }

urk_status urk_sketch_update(urk_sketch* s, uint64_t index, int64_t delta) {
    if (!s) return invalid("sketch is null");
    return guarded([&] { s->impl.update(narrow_u32(index, "index"), delta); });
}

urk_status urk_sketch_merge(urk_sketch* dst, const urk_sketch* src) {
    if (!dst || !src) return invalid("null argument");
    return guarded([&] { dst->impl.merge(src->impl); });
}

urk_status urk_sketch_serialize(const urk_sketch* s, uint8_t** bytes, uint64_t* len) {
    if (!s || !bytes || !len) return invalid("null argument");
    return guarded([&] {
        std::vector<uint8_t> wire = urk::serialize(s->impl.to_message());
        *bytes = dup_bytes(wire);
        *len = wire.size();
    });
}

urk_status urk_sketch_support_find(const urk_sketch* s, uint32_t* out, uint64_t cap,
                                   int64_t* out_count) {
    if (!s || !out || !out_count) return invalid("null argument");
    return guarded([&] { copy_answer(urk::support_find_k(s->impl), out, cap, out_count); });
}

urk_status urk_sketch_l0_sample(const urk_sketch* s, uint64_t sample_seed, uint32_t* out,
                                uint64_t cap, int64_t* out_count) {
    if (!s || !out || !out_count) return invalid("null argument");
    return guarded(
        [&] { copy_answer(urk::l0_sample_k(s->impl, sample_seed), out, cap, out_count); });
}

urk_status urk_lb_encode_file(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                              double delta_syn, uint64_t seed, const char* path, char** summary) {
    if (!handle || !path || !summary) return invalid("null argument");
    *summary = nullptr;
    return guarded([&] {
        LbSetup s = lb_setup(n, log2_inv_delta, handle, delta_syn, seed);
        urk::EncoderOutput out = urk::enc(s.S, s.handle, s.params);
        std::vector<uint8_t> bytes =
            urk::encode_output_bytes(out, s.params.n, s.params.m, s.params.R);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw urk::format_error(std::string("cannot open for writing: ") + path);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) throw urk::format_error(std::string("write failed: ") + path);
        *summary = dup_cstring(lb_summary(out, s.params, s.params.n));
    });
}

urk_status urk_lb_decode_file(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                              double delta_syn, uint64_t seed, const char* path, char** summary) {
    if (!handle || !path || !summary) return invalid("null argument");
    *summary = nullptr;
    return guarded([&] {
        LbSetup s = lb_setup(n, log2_inv_delta, handle, delta_syn, seed);
        std::ifstream f(path, std::ios::binary);
        if (!f) throw urk::format_error(std::string("cannot open for reading: ") + path);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
        urk::DecodedOutputFile file = urk::decode_output_bytes(bytes);
        if (file.n != s.params.n || file.m != s.params.m || file.R != s.params.R)
            throw urk::format_error("file header does not match the given parameters");
        std::vector<uint32_t> got = urk::dec(file.out, s.handle, s.params);
        *summary = dup_cstring(lb_summary(file.out, s.params, s.params.n) +
                               (got == s.S ? ",ok" : ",mismatch"));
    });
}

urk_status urk_exp_failure_rate(uint64_t n, uint64_t k, uint64_t q, uint64_t slack,
                                const uint64_t* oversamples, uint64_t oversample_count,
                                uint64_t trials, uint64_t seed, char** csv) {
    if (!oversamples || !csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        std::vector<uint32_t> os;
        for (uint64_t i = 0; i < oversample_count; ++i)
            os.push_back(narrow_u32(oversamples[i], "oversample"));
        auto rep = urk::failure_rate_experiment(narrow_u32(n, "n"), narrow_u32(k, "k"),
                                                narrow_u32(q, "q"), narrow_u32(slack, "slack"),
                                                os, narrow_u32(trials, "trials"), seed);
        *csv = dup_cstring(rep.csv);
    });
}

urk_status urk_exp_message_size(const uint64_t* ns, uint64_t n_count, uint64_t k, uint64_t q,
                                uint64_t oversample, uint64_t slack, uint64_t seed, char** csv) {
    if (!ns || !csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        std::vector<uint32_t> sweep;
        for (uint64_t i = 0; i < n_count; ++i) sweep.push_back(narrow_u32(ns[i], "n"));
        auto rep = urk::message_size_experiment(sweep, narrow_u32(k, "k"), narrow_u32(q, "q"),
                                                narrow_u32(oversample, "oversample"),
                                                narrow_u32(slack, "slack"), seed);
        *csv = dup_cstring(rep.csv);
    });
}

urk_status urk_exp_uniformity(uint64_t n, uint64_t support_size, uint64_t q, uint64_t oversample,
                              uint64_t slack, uint64_t trials, uint64_t seed, char** csv) {
    if (!csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        auto rep = urk::uniformity_experiment(
            narrow_u32(n, "n"), narrow_u32(support_size, "support_size"), narrow_u32(q, "q"),
            narrow_u32(oversample, "oversample"), narrow_u32(slack, "slack"),
            narrow_u32(trials, "trials"), seed);
        *csv = dup_cstring(rep.csv);
    });
}

urk_status urk_exp_savings(uint64_t n, uint64_t log2_inv_delta, const char* handle,
                           double delta_syn, uint64_t trials, uint64_t seed, char** csv) {
    if (!handle || !csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        auto rep = urk::savings_experiment(narrow_u32(n, "n"),
                                           narrow_u32(log2_inv_delta, "log2_inv_delta"), handle,
                                           delta_syn, narrow_u32(trials, "trials"), seed);
        *csv = dup_cstring(rep.csv);
    });
}

urk_status urk_exp_adaptivity(uint64_t n, uint64_t t, uint64_t trials, uint64_t seed, char** csv) {
    if (!csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        auto rep = urk::adaptivity_experiment(narrow_u32(n, "n"), narrow_u32(t, "t"), trials, seed);
        *csv = dup_cstring(rep.csv);
    });
}

urk_status urk_exp_pochhammer(uint64_t kmax, char** csv) {
    if (!csv) return invalid("null argument");
    *csv = nullptr;
    return guarded([&] {
        auto rep = urk::pochhammer_experiment(narrow_u32(kmax, "kmax"));
        *csv = dup_cstring(rep.csv);
    });
}

} // extern "C"
