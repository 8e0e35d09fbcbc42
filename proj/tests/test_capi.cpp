#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "urk.h"
#include "urk/errors.hpp"
#include "urk/prf.hpp"
#include "urk/protocol.hpp"
#include "urk/subsample.hpp"
#include "urk/turnstile.hpp"

namespace {

std::vector<uint8_t> indicator(uint32_t n, const std::vector<uint32_t>& ones) {
    std::vector<uint8_t> v(n, 0);
    for (uint32_t i : ones) v[i] = 1;
    return v;
}

} // namespace

TEST_CASE("status codes map the error taxonomy") {
    urk_protocol* p = nullptr;
    CHECK(urk_protocol_create(64, 1, 4, 4, 10, 0, &p) == URK_EPARAM); // q not prime
    CHECK(std::strlen(urk_last_error()) > 0);
    CHECK(urk_protocol_create(64, 0, 3, 4, 10, 0, &p) == URK_EPARAM); // k = 0
    CHECK(urk_protocol_create(64, 1, 3, 4, 10, 0, nullptr) == URK_EINVAL);
    CHECK(urk_protocol_create(uint64_t{1} << 40, 1, 3, 4, 10, 0, &p) == URK_EPARAM);

    REQUIRE(urk_protocol_create(64, 1, 3, 4, 10, 0, &p) == URK_OK);
    uint32_t out[1];
    int64_t count = 0;
    std::vector<uint8_t> y(64, 0);
    const uint8_t garbage[8] = {'X', 'X', 'X', 'X', 0, 0, 0, 0};
    CHECK(urk_protocol_bob(p, garbage, sizeof garbage, y.data(), 64, out, 1, &count) ==
          URK_EFORMAT);
    CHECK(urk_protocol_bob(p, nullptr, 0, y.data(), 64, out, 1, &count) == URK_EINVAL);
    urk_protocol_destroy(p);
    urk_protocol_destroy(nullptr); // no-op
    urk_buffer_free(nullptr);
    urk_string_free(nullptr);
}

TEST_CASE("protocol round-trip through the C surface matches the C++ core") {
    const uint64_t seed = 21;
    urk_protocol* p = nullptr;
    REQUIRE(urk_protocol_create(64, 2, 3, 4, 10, seed, &p) == URK_OK);

    urk::ProtocolParams params{.n = 64, .k = 2, .q = 3, .oversample = 4, .slack = 10,
                               .seed = seed};
    urk::Protocol core(params);

    std::vector<uint8_t> x = indicator(64, {3, 9, 17, 40});
    std::vector<uint8_t> y = indicator(64, {3, 40});

    uint8_t* msg = nullptr;
    uint64_t msg_len = 0, payload_bits = 0;
    REQUIRE(urk_protocol_alice(p, x.data(), 64, &msg, &msg_len, &payload_bits) == URK_OK);

    urk::UrMessage direct = core.alice(x);
    std::vector<uint8_t> wire = urk::serialize(direct);
    CHECK(payload_bits == direct.payload_bits());
    REQUIRE(msg_len == wire.size());
    CHECK(std::memcmp(msg, wire.data(), wire.size()) == 0);

    uint32_t out[2];
    int64_t count = -2;
    REQUIRE(urk_protocol_bob(p, msg, msg_len, y.data(), 64, out, 2, &count) == URK_OK);
    auto core_ans = core.bob(direct, y);
    REQUIRE(core_ans.has_value());
    REQUIRE(count == static_cast<int64_t>(core_ans->size()));
    for (int64_t i = 0; i < count; ++i) CHECK(out[i] == (*core_ans)[i]);

    // Too little output capacity is a parameter error, not a truncation.
    CHECK(urk_protocol_bob(p, msg, msg_len, y.data(), 64, out, 1, &count) == URK_EPARAM);

    urk_buffer_free(msg);
    urk_protocol_destroy(p);
}

TEST_CASE("a receiver failure is reported as count -1") {
    // With recovery sparsity 1, two indices whose deepest levels coincide are
    // never isolated: every level holds both or neither, so no level decodes.
    const uint64_t seed = 4;
    urk::ProtocolParams params{.n = 64, .k = 1, .q = 3, .oversample = 1, .slack = 10,
                               .seed = seed};
    urk::Protocol core(params);
    const urk::LevelFamily& fam = core.level_family();
    uint32_t i1 = 64, i2 = 64;
    for (uint32_t a = 0; a < 64 && i2 == 64; ++a) {
        if (urk::deepest_level(fam, a) != 0) continue;
        (i1 == 64 ? i1 : i2) = a;
    }
    REQUIRE(i2 < 64); // half of all indices stop at level 0

    urk_sketch* s = nullptr;
    REQUIRE(urk_sketch_create(64, 1, 3, 1, 10, seed, &s) == URK_OK);
    REQUIRE(urk_sketch_update(s, i1, 1) == URK_OK);
    REQUIRE(urk_sketch_update(s, i2, 1) == URK_OK);
    uint32_t out[1];
    int64_t count = 0;
    REQUIRE(urk_sketch_support_find(s, out, 1, &count) == URK_OK);
    CHECK(count == -1);
    urk_sketch_destroy(s);
}

TEST_CASE("sketch operations mirror the C++ turnstile layer") {
    const uint64_t seed = 33;
    urk_sketch* s = nullptr;
    REQUIRE(urk_sketch_create(64, 2, 3, 8, 10, seed, &s) == URK_OK);

    urk::ProtocolParams params{.n = 64, .k = 2, .q = 3, .oversample = 8, .slack = 10,
                               .seed = seed};
    urk::TurnstileSketch core(params);

    for (auto [i, d] : std::vector<std::pair<uint32_t, int64_t>>{{5, 1}, {9, 1}, {30, -1},
                                                                 {9, -1}, {44, 1}}) {
        REQUIRE(urk_sketch_update(s, i, d) == URK_OK);
        core.update(i, d);
    }
    CHECK(urk_sketch_update(s, 64, 1) == URK_EPARAM);

    uint8_t* bytes = nullptr;
    uint64_t len = 0;
    REQUIRE(urk_sketch_serialize(s, &bytes, &len) == URK_OK);
    std::vector<uint8_t> wire = urk::serialize(core.to_message());
    REQUIRE(len == wire.size());
    CHECK(std::memcmp(bytes, wire.data(), len) == 0);
    urk_buffer_free(bytes);

    uint32_t out[2];
    int64_t count = 0;
    REQUIRE(urk_sketch_support_find(s, out, 2, &count) == URK_OK);
    auto core_supp = urk::support_find_k(core);
    REQUIRE(core_supp.has_value());
    REQUIRE(count == static_cast<int64_t>(core_supp->size()));
    for (int64_t i = 0; i < count; ++i) CHECK(out[i] == (*core_supp)[i]);

    REQUIRE(urk_sketch_l0_sample(s, 77, out, 2, &count) == URK_OK);
    auto core_sample = urk::l0_sample_k(core, 77);
    REQUIRE(core_sample.has_value());
    REQUIRE(count == static_cast<int64_t>(core_sample->size()));
    for (int64_t i = 0; i < count; ++i) CHECK(out[i] == (*core_sample)[i]);

    // Merge parity: C merge against a second sketch == C++ merge.
    urk_sketch* s2 = nullptr;
    REQUIRE(urk_sketch_create(64, 2, 3, 8, 10, seed, &s2) == URK_OK);
    REQUIRE(urk_sketch_update(s2, 12, 1) == URK_OK);
    urk::TurnstileSketch core2(params);
    core2.update(12, 1);
    REQUIRE(urk_sketch_merge(s, s2) == URK_OK);
    core.merge(core2);
    REQUIRE(urk_sketch_serialize(s, &bytes, &len) == URK_OK);
    wire = urk::serialize(core.to_message());
    REQUIRE(len == wire.size());
    CHECK(std::memcmp(bytes, wire.data(), len) == 0);
    urk_buffer_free(bytes);

    // Mismatched parameters cannot merge.
    urk_sketch* s3 = nullptr;
    REQUIRE(urk_sketch_create(64, 2, 3, 8, 10, seed + 1, &s3) == URK_OK);
    CHECK(urk_sketch_merge(s, s3) == URK_EPARAM);
    urk_sketch_destroy(s3);
    urk_sketch_destroy(s2);
    urk_sketch_destroy(s);
}

TEST_CASE("encoding harness files round-trip with a verdict") {
    const char* path = "/tmp/urk_capi_lb.bin";
    char* summary = nullptr;
    REQUIRE(urk_lb_encode_file(4096, 64, "oracle", 0.0, 11, path, &summary) == URK_OK);
    std::string enc_line = summary;
    urk_string_free(summary);
    CHECK(enc_line.find("n=4096") != std::string::npos);
    CHECK(enc_line.find("sum_b=20") != std::string::npos);
    CHECK(enc_line.find("b_card=492") != std::string::npos);

    summary = nullptr;
    REQUIRE(urk_lb_decode_file(4096, 64, "oracle", 0.0, 11, path, &summary) == URK_OK);
    std::string dec_line = summary;
    urk_string_free(summary);
    CHECK(dec_line.size() > 3);
    CHECK(dec_line.substr(dec_line.size() - 3) == ",ok");

    // Decoding under different randomness must never report ok: either the
    // replay contradicts the recorded rounds (format error) or the recovered
    // set differs (mismatch verdict).
    summary = nullptr;
    urk_status wrong_seed = urk_lb_decode_file(4096, 64, "oracle", 0.0, 12, path, &summary);
    if (wrong_seed == URK_OK) {
        std::string other = summary;
        urk_string_free(summary);
        REQUIRE(other.size() > 9);
        CHECK(other.substr(other.size() - 9) == ",mismatch");
    } else {
        CHECK(wrong_seed == URK_EFORMAT);
    }

    CHECK(urk_lb_encode_file(2048, 32, "oracle", 0.0, 0, path, nullptr) == URK_EINVAL);
    summary = nullptr;
    CHECK(urk_lb_encode_file(2048, 32, "oracle", 0.0, 0, path, &summary) == URK_EPARAM);
    CHECK(urk_lb_decode_file(4096, 64, "oracle", 0.0, 11, "/tmp/no_such_urk_file.bin",
                             &summary) == URK_EFORMAT);
    CHECK(urk_lb_encode_file(4096, 64, "no-such-handle", 0.0, 0, path, &summary) == URK_EPARAM);
}

TEST_CASE("experiment wrappers hand back CSV text") {
    char* csv = nullptr;
    REQUIRE(urk_exp_pochhammer(4, &csv) == URK_OK);
    std::string text = csv;
    urk_string_free(csv);
    CHECK(text.rfind("# exp=pochhammer", 0) == 0);
    CHECK(text.find("\nK,") != std::string::npos);
    CHECK(text.find("\n1,") != std::string::npos);
    CHECK(text.find("\n4,") != std::string::npos);

    csv = nullptr;
    REQUIRE(urk_exp_adaptivity(256, 2, 1000, 9, &csv) == URK_OK);
    std::string a1 = csv;
    urk_string_free(csv);
    csv = nullptr;
    REQUIRE(urk_exp_adaptivity(256, 2, 1000, 9, &csv) == URK_OK);
    std::string a2 = csv;
    urk_string_free(csv);
    CHECK(a1 == a2); // identical config, identical bytes
    CHECK(a1.rfind("# exp=adaptivity", 0) == 0);

    CHECK(urk_exp_adaptivity(100, 2, 1000, 9, &csv) == URK_EPARAM); // n not a power of two
    CHECK(urk_exp_pochhammer(4, nullptr) == URK_EINVAL);

    uint64_t oversamples[2] = {2, 4};
    csv = nullptr;
    REQUIRE(urk_exp_failure_rate(32, 1, 3, 10, oversamples, 2, 20, 5, &csv) == URK_OK);
    std::string fr = csv;
    urk_string_free(csv);
    CHECK(fr.find("oversample,trials,failures,failure_rate") != std::string::npos);
}
