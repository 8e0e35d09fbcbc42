#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "urk/errors.hpp"
#include "urk/lb.hpp"
#include "urk/prf.hpp"
#include "urk/subsetcode.hpp"

using namespace urk;

namespace {

std::vector<uint32_t> sample_set(uint64_t seed, uint32_t n, uint32_t m) {
    std::vector<uint32_t> perm = seeded_permutation(seed, "lb-test-set", n);
    perm.resize(m);
    std::sort(perm.begin(), perm.end());
    return perm;
}

// Disjoint-union check over the per-round snapshots of encoder and decoder.
void check_lockstep(const std::vector<uint32_t>& S, const LbTrace& enc_t, const LbTrace& dec_t) {
    REQUIRE(enc_t.sets.size() == dec_t.sets.size());
    for (size_t r = 0; r < enc_t.sets.size(); ++r) {
        std::vector<uint32_t> joined = enc_t.sets[r];
        joined.insert(joined.end(), dec_t.sets[r].begin(), dec_t.sets[r].end());
        std::sort(joined.begin(), joined.end());
        CHECK(joined == S);
    }
}

} // namespace

TEST_CASE("single-index parameters on pinned inputs") {
    LbParams p = lb_params(4096, 64, 1);
    CHECK(p.m == 512);
    CHECK(p.K == 4);
    CHECK(p.R == 20);
    REQUIRE(p.n_seq.size() == 21);
    CHECK(p.n_seq[0] == 512);
    CHECK(p.n_seq[4] == 256);  // v^4 <= 2^32
    CHECK(p.n_seq[10] == 90);  // 90^4 = 65610000 <= 2^26 < 91^4
    CHECK(p.n_seq[20] == 16);  // v^4 <= 2^16
    for (uint32_t r = 1; r <= p.R; ++r) CHECK(p.n_seq[r - 1] >= p.n_seq[r] + 2);

    REQUIRE(p.pi.size() == 4096);
    std::vector<bool> hit(4096, false);
    for (uint32_t v : p.pi) {
        REQUIRE(v < 4096);
        CHECK_FALSE(hit[v]);
        hit[v] = true;
    }

    LbParams big = lb_params(65536, 64, 0);
    CHECK(big.m == 2048);
    CHECK(big.K == 4);
    CHECK(big.R == 28);
}

TEST_CASE("single-index parameter constraints name their bounds") {
    CHECK_THROWS_AS(lb_params(4096, 32, 0), param_error);
    CHECK_THROWS_AS(lb_params(2048, 64, 0), param_error); // n/64 = 32 < 64
    try {
        lb_params(2048, 32, 0);
        FAIL("expected param_error");
    } catch (const param_error& e) {
        CHECK(std::string(e.what()).find("64 ≤ log 1/δ ≤ n/64") != std::string::npos);
    }
}

TEST_CASE("oracle handle converts every round into a savings bit") {
    LbParams params = lb_params(4096, 64, 2);
    ProtocolHandle oracle = make_stub(StubKind::oracle, 4096, 1, 2);
    std::vector<uint32_t> S = sample_set(99, 4096, params.m);

    LbTrace enc_trace, dec_trace;
    EncoderOutput out = enc(S, oracle, params, &enc_trace);
    CHECK(out.message_bits == 4096); // the stub ships its support bitmap
    CHECK(std::count(out.b.begin(), out.b.end(), 1) == 20);
    CHECK(out.coded_set.size() == 492);

    CHECK(encoding_bit_length(out, 4096) ==
          4096 + 20 + 12 + subset_code_bits(4096, 492));

    CHECK(dec(out, oracle, params, &dec_trace) == S);
    check_lockstep(S, enc_trace, dec_trace);
}

TEST_CASE("always-fail handle earns nothing but still round-trips") {
    LbParams params = lb_params(4096, 64, 3);
    ProtocolHandle fail = make_stub(StubKind::always_fail, 4096, 1, 3);
    std::vector<uint32_t> S = sample_set(7, 4096, params.m);

    LbTrace enc_trace, dec_trace;
    EncoderOutput out = enc(S, fail, params, &enc_trace);
    CHECK(std::count(out.b.begin(), out.b.end(), 1) == 0);
    CHECK(out.coded_set.size() == params.m);
    CHECK(dec(out, fail, params, &dec_trace) == S);
    check_lockstep(S, enc_trace, dec_trace);
}

TEST_CASE("iid handle round-trips and earns bits at its success rate") {
    double total_b = 0;
    const int runs = 1000;
    for (int t = 0; t < runs; ++t) {
        uint64_t ts = prf64(7, "lb-iid-mean", t);
        LbParams params = lb_params(4096, 64, ts);
        ProtocolHandle h =
            make_stub(StubKind::iid_failure, 4096, 1, prf64(ts, "handle-seed"), 0.25);
        std::vector<uint32_t> S = sample_set(ts, 4096, params.m);
        EncoderOutput out = enc(S, h, params);
        total_b += std::count(out.b.begin(), out.b.end(), 1);
        if (t < 25) CHECK(dec(out, h, params) == S);
    }
    // Sum of R=20 Bernoulli(3/4) rounds: mean 15, and the mean of 1000 runs
    // has sigma = sqrt(20 * 3/16 / 1000) = 0.0612; allow 3 sigma.
    double mean = total_b / runs;
    CHECK(mean > 15.0 - 0.19);
    CHECK(mean < 15.0 + 0.19);
}

TEST_CASE("encoder validates its inputs") {
    LbParams params = lb_params(4096, 64, 4);
    ProtocolHandle oracle = make_stub(StubKind::oracle, 4096, 1, 4);

    std::vector<uint32_t> S = sample_set(1, 4096, params.m);
    std::vector<uint32_t> short_S(S.begin(), S.end() - 1);
    CHECK_THROWS_AS(enc(short_S, oracle, params), param_error);

    std::vector<uint32_t> unsorted = S;
    std::swap(unsorted[0], unsorted[1]);
    CHECK_THROWS_AS(enc(unsorted, oracle, params), param_error);

    ProtocolHandle wrong_n = make_stub(StubKind::oracle, 2048, 1, 4);
    CHECK_THROWS_AS(enc(S, wrong_n, params), param_error);

    ProtocolHandle wrong_k = make_stub(StubKind::oracle, 4096, 2, 4);
    CHECK_THROWS_AS(enc(S, wrong_k, params), param_error);
}

TEST_CASE("decoder rejects streams that contradict the replay") {
    LbParams params = lb_params(4096, 64, 5);
    ProtocolHandle oracle = make_stub(StubKind::oracle, 4096, 1, 5);
    ProtocolHandle fail = make_stub(StubKind::always_fail, 4096, 1, 5);
    std::vector<uint32_t> S = sample_set(2, 4096, params.m);

    // A recorded success downgraded to a failure starves the final set.
    EncoderOutput good = enc(S, oracle, params);
    EncoderOutput tampered = good;
    tampered.b[5] = 0;
    CHECK_THROWS_AS(dec(tampered, oracle, params), format_error);

    // A recorded failure upgraded to a success pulls in a foreign element.
    EncoderOutput nothing = enc(S, fail, params);
    EncoderOutput lied = nothing;
    lied.b[0] = 1;
    CHECK_THROWS_AS(dec(lied, fail, params), format_error);

    EncoderOutput short_b = good;
    short_b.b.pop_back();
    CHECK_THROWS_AS(dec(short_b, oracle, params), format_error);

    EncoderOutput bad_set = good;
    std::swap(bad_set.coded_set[0], bad_set.coded_set[1]);
    CHECK_THROWS_AS(dec(bad_set, oracle, params), format_error);
}

TEST_CASE("k-index parameters on pinned inputs") {
    LbParamsK p = lb_params_k(4096, 4, 3);
    CHECK(p.m == 128);
    CHECK(p.R == 3);
    REQUIRE(p.exit_round.size() == 4096);
    uint32_t in_t1 = 0;
    for (uint32_t a = 0; a < 4096; ++a) {
        REQUIRE(p.exit_round[a] >= 1);
        REQUIRE(p.exit_round[a] <= p.R + 1);
        CHECK(p.in_t(a, 0));
        if (p.in_t(a, 2)) CHECK(p.in_t(a, 1)); // retention sets are nested
        in_t1 += p.in_t(a, 1);
    }
    // Each index survives round 1 with probability 1/2 (sigma = 32).
    CHECK(in_t1 > 2048 - 192);
    CHECK(in_t1 < 2048 + 192);

    CHECK(lb_params_k(1024, 1, 0).R == 3);
    CHECK_THROWS_AS(lb_params_k(4096, 8, 0), param_error); // k > n/2^10
    CHECK_THROWS_AS(lb_params_k(1023, 1, 0), param_error);
    CHECK_THROWS_AS(lb_params_k(4096, 0, 0), param_error);
}

TEST_CASE("k-index encoder and decoder run in lockstep") {
    LbParamsK params = lb_params_k(4096, 4, 6);
    std::vector<uint32_t> S = sample_set(3, 4096, params.m);

    ProtocolHandle oracle = make_stub(StubKind::oracle, 4096, 4, 6);
    LbTrace enc_trace, dec_trace;
    EncoderOutput out = enc_k(S, oracle, params, &enc_trace);
    CHECK(dec_k(out, oracle, params, &dec_trace) == S);
    check_lockstep(S, enc_trace, dec_trace);

    // The remainder set misses exactly the valid answers that exited on cue.
    for (uint32_t a : S) {
        bool in_b = std::binary_search(out.coded_set.begin(), out.coded_set.end(), a);
        if (!in_b) CHECK(params.exit_round[a] <= params.R);
    }

    for (uint64_t t = 0; t < 20; ++t) {
        uint64_t ts = prf64(8, "lb-k-iid", t);
        LbParamsK ps = lb_params_k(4096, 4, ts);
        ProtocolHandle h =
            make_stub(StubKind::iid_failure, 4096, 4, prf64(ts, "handle-seed"), 0.25);
        std::vector<uint32_t> St = sample_set(ts, 4096, ps.m);
        LbTrace et, dt;
        EncoderOutput o = enc_k(St, h, ps, &et);
        CHECK(dec_k(o, h, ps, &dt) == St);
        check_lockstep(St, et, dt);
    }
}

TEST_CASE("colex subset codec on pinned inputs") {
    CHECK(subset_rank(6, {2, 4, 5}) == 18); // C(2,1) + C(4,2) + C(5,3)
    CHECK(subset_rank(6, {}) == 0);
    CHECK(subset_rank(6, {0, 1, 2}) == 0);
    CHECK(subset_code_bits(6, 3) == 5); // C(6,3) = 20 fits in 5 bits
    CHECK(subset_code_bits(6, 0) == 0);
    CHECK(subset_code_bits(6, 6) == 0);

    // Full enumeration of C(6,3) = 20 subsets in colex order.
    std::vector<std::vector<uint32_t>> all;
    for (uint32_t a = 0; a < 6; ++a)
        for (uint32_t b = a + 1; b < 6; ++b)
            for (uint32_t c = b + 1; c < 6; ++c) all.push_back({a, b, c});
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        for (int i = 2; i >= 0; --i)
            if (x[i] != y[i]) return x[i] < y[i];
        return false;
    });
    REQUIRE(all.size() == 20);
    for (size_t r = 0; r < all.size(); ++r) {
        CHECK(subset_rank(6, all[r]) == r);
        CHECK(subset_unrank(6, 3, bigint(r)) == all[r]);
    }

    CHECK_THROWS_AS(subset_rank(6, {4, 2}), param_error);
    CHECK_THROWS_AS(subset_rank(6, {2, 6}), param_error);
    CHECK_THROWS_AS(subset_unrank(6, 3, bigint(20)), param_error);
    CHECK_THROWS_AS(subset_unrank(6, 7, bigint(0)), param_error);
}

TEST_CASE("subset codec round-trips random sets") {
    PrfStream rng(14, "subset-roundtrip");
    for (int rep = 0; rep < 10000; ++rep) {
        uint32_t n = 1 + static_cast<uint32_t>(rng.next_below(300));
        uint32_t w = static_cast<uint32_t>(rng.next_below(std::min(n, 12u) + 1));
        std::vector<uint32_t> pool(n);
        for (uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (uint32_t i = 0; i < w; ++i)
            std::swap(pool[i], pool[i + rng.next_below(n - i)]);
        std::vector<uint32_t> set(pool.begin(), pool.begin() + w);
        std::sort(set.begin(), set.end());

        bigint rank = subset_rank(n, set);
        CHECK(rank >= 0);
        CHECK(rank < binomial(n, w));
        CHECK(subset_unrank(n, w, rank) == set);
    }
}

TEST_CASE("encoder output survives the file round-trip") {
    LbParams params = lb_params(4096, 64, 9);
    ProtocolHandle oracle = make_stub(StubKind::oracle, 4096, 1, 9);
    std::vector<uint32_t> S = sample_set(31, 4096, params.m);
    EncoderOutput out = enc(S, oracle, params);

    std::vector<uint8_t> bytes = encode_output_bytes(out, 4096, params.m, params.R);
    DecodedOutputFile f = decode_output_bytes(bytes);
    CHECK(f.n == 4096);
    CHECK(f.m == params.m);
    CHECK(f.R == params.R);
    CHECK(f.out.message_bits == out.message_bits);
    CHECK(f.out.message == out.message);
    CHECK(f.out.b == out.b);
    CHECK(f.out.coded_set == out.coded_set);
    CHECK(dec(f.out, oracle, params) == S);
}

TEST_CASE("the file decoder rejects corrupted bytes") {
    // Hand-sized instance: n=50, m=5, R=3; the bit block holds 3 round bits
    // plus a 6-bit cardinality in two bytes with seven padding bits.
    EncoderOutput out;
    out.message_bits = 5;
    out.message = {0x1f};
    out.b = {1, 0, 1};
    out.coded_set = {0, 2, 5};
    std::vector<uint8_t> bytes = encode_output_bytes(out, 50, 5, 3);
    REQUIRE(bytes.size() == 32 + 1 + 2 + 2);

    DecodedOutputFile f = decode_output_bytes(bytes);
    CHECK(f.out.message_bits == 5);
    CHECK(f.out.b == out.b);
    CHECK(f.out.coded_set == out.coded_set);

    auto corrupt = bytes;
    corrupt.pop_back();
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    corrupt = bytes;
    corrupt.push_back(0);
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    // Nonzero padding in the bit block.
    corrupt = bytes;
    corrupt[34] |= 0x80;
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    // Cardinality rewritten to 6 > m.
    corrupt = bytes;
    corrupt[33] = (corrupt[33] & 0x07) | (6 << 3);
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    // Rank too large for C(50,3) = 19600.
    corrupt = bytes;
    corrupt[35] = 0xff;
    corrupt[36] = 0xff;
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    // Degenerate header.
    corrupt = bytes;
    corrupt[0] = 0;
    CHECK_THROWS_AS(decode_output_bytes(corrupt), format_error);

    // Oversized coded set is rejected on the encode side too.
    EncoderOutput fat = out;
    fat.coded_set = {0, 1, 2, 3, 4, 5};
    CHECK_THROWS_AS(encode_output_bytes(fat, 50, 5, 3), param_error);
}

TEST_CASE("total bit length accounts every field exactly") {
    EncoderOutput out;
    out.message_bits = 10;
    out.message = {0xff, 0x03};
    out.b = {1, 0, 1};
    out.coded_set = {3, 14, 159, 2653, 3589};
    uint64_t want = 10 + 3 + ceil_log2(bigint(4096)) + subset_code_bits(4096, 5);
    CHECK(encoding_bit_length(out, 4096) == want);
    CHECK(ceil_log2(bigint(4096)) == 12);
}
