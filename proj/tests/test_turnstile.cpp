#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "doctest.h"
#include "urk/errors.hpp"
#include "urk/prf.hpp"
#include "urk/turnstile.hpp"

using namespace urk;

namespace {

const ProtocolParams kSmall{.n = 64, .k = 1, .q = 3, .oversample = 4, .slack = 10, .seed = 11};

std::vector<uint8_t> indicator(uint32_t n, const std::vector<uint32_t>& ones) {
    std::vector<uint8_t> v(n, 0);
    for (uint32_t i : ones) v[i] = 1;
    return v;
}

} // namespace

TEST_CASE("sketch state equals the sender's message bit for bit") {
    std::vector<uint32_t> support{3, 9, 17, 40, 63};
    TurnstileSketch sk(kSmall);
    // Shuffled updates plus a canceling pair on a non-support index.
    for (uint32_t i : {40u, 3u, 63u, 9u, 17u}) sk.update(i, 1);
    sk.update(22, 1);
    sk.update(22, -1);
    CHECK(sk.update_count() == 7);

    UrMessage direct = alice(kSmall, indicator(64, support));
    CHECK(serialize(sk.to_message()) == serialize(direct));
}

TEST_CASE("updates commute and merge is concatenation") {
    TurnstileSketch fwd(kSmall), rev(kSmall), a(kSmall), b(kSmall), all(kSmall);
    std::vector<StreamUpdate> updates{{5, 1}, {9, -1}, {13, 1}, {5, -1}, {44, 1}};
    for (const auto& u : updates) {
        fwd.update(u);
        all.update(u);
    }
    for (auto it = updates.rbegin(); it != updates.rend(); ++it) rev.update(*it);
    CHECK(serialize(fwd.to_message()) == serialize(rev.to_message()));

    a.update(updates[0]);
    a.update(updates[1]);
    b.update(updates[2]);
    b.update(updates[3]);
    b.update(updates[4]);
    a.merge(b);
    CHECK(serialize(a.to_message()) == serialize(all.to_message()));
}

TEST_CASE("a shipped sketch resumes exactly") {
    TurnstileSketch first(kSmall);
    first.update(7, 1);
    first.update(30, 1);
    TurnstileSketch resumed = TurnstileSketch::from_message(kSmall, first.to_message());
    resumed.update(7, -1);
    first.update(7, -1);
    CHECK(serialize(resumed.to_message()) == serialize(first.to_message()));

    ProtocolParams other = kSmall;
    other.seed = 12;
    CHECK_THROWS_AS(TurnstileSketch::from_message(other, first.to_message()), param_error);
}

TEST_CASE("update and merge validate their inputs") {
    TurnstileSketch sk(kSmall);
    CHECK_THROWS_AS(sk.update(64, 1), param_error);
    ProtocolParams other = kSmall;
    other.seed = 99;
    TurnstileSketch mismatched(other);
    CHECK_THROWS_AS(sk.merge(mismatched), param_error);
}

TEST_CASE("support-find reports difference indices of a +-1 stream") {
    ProtocolParams p = kSmall;
    p.k = 2;
    TurnstileSketch sk(p);
    sk.update(5, 1);
    sk.update(9, -1);
    sk.update(17, 1);
    auto ans = support_find_k(sk);
    REQUIRE(ans.has_value());
    CHECK(ans->size() == 2);
    CHECK(std::is_sorted(ans->begin(), ans->end()));
    for (uint32_t i : *ans) CHECK((i == 5 || i == 9 || i == 17));

    // The empty aggregate has empty support.
    TurnstileSketch empty(p);
    auto none = support_find_k(empty);
    REQUIRE(none.has_value());
    CHECK(none->empty());
}

TEST_CASE("sampling is seed-deterministic and stays on the support") {
    ProtocolParams p = kSmall;
    p.oversample = 16;
    TurnstileSketch sk(p);
    std::set<uint32_t> support{2, 11, 19, 23, 37, 41, 50, 61};
    for (uint32_t i : support) sk.update(i, 1);

    for (uint64_t s = 0; s < 30; ++s) {
        auto once = l0_sample_k(sk, s);
        auto again = l0_sample_k(sk, s);
        CHECK(once == again);
        REQUIRE(once.has_value());
        REQUIRE(once->size() == 1);
        CHECK(support.count((*once)[0]) == 1);
    }

    // With k=1 the draw is decided by which element survives deepest, so the
    // spread comes from the level layout: rebuilding under fresh protocol
    // seeds must reach more than one support element.
    std::set<std::vector<uint32_t>> seen;
    for (uint64_t ps = 0; ps < 30; ++ps) {
        ProtocolParams pv = p;
        pv.seed = 1000 + ps;
        TurnstileSketch sv(pv);
        for (uint32_t i : support) sv.update(i, 1);
        auto got = l0_sample_k(sv, 7);
        REQUIRE(got.has_value());
        REQUIRE(got->size() == 1);
        CHECK(support.count((*got)[0]) == 1);
        seen.insert(*got);
    }
    CHECK(seen.size() >= 2);
}

TEST_CASE("naive reference algorithms are exact") {
    StreamingFindup fd = naive_findup(5);
    std::vector<uint8_t> st = fd.init();
    for (uint32_t i : {0u, 1u, 2u, 3u, 4u, 2u}) fd.feed(st, i);
    auto dup = fd.answer(st);
    REQUIRE(dup.has_value());
    CHECK(*dup == 2);
    CHECK_FALSE(fd.answer(fd.init()).has_value());

    StreamingSuppfind sf = naive_suppfind(10, 3);
    std::vector<uint8_t> ss = sf.init();
    sf.update(ss, 2, 1);
    sf.update(ss, 5, 1);
    sf.update(ss, 7, -1);
    sf.update(ss, 7, 1);
    auto supp = sf.query(ss);
    REQUIRE(supp.has_value());
    CHECK(*supp == std::vector<uint32_t>{2, 5});

    StreamingSampler sa = naive_sampler(10, 2);
    std::vector<uint8_t> sas = sa.init();
    for (uint32_t i : {1u, 4u, 6u, 8u}) sa.update(sas, i, 1);
    std::set<uint32_t> all{1, 4, 6, 8};
    std::set<std::vector<uint32_t>> distinct;
    for (uint64_t s = 0; s < 20; ++s) {
        auto got = sa.query(sas, s);
        REQUIRE(got.has_value());
        CHECK(got->size() == 2);
        for (uint32_t i : *got) CHECK(all.count(i) == 1);
        distinct.insert(*got);
    }
    CHECK(distinct.size() >= 2);
}

TEST_CASE("sketch-backed streaming algorithms match direct sketch calls") {
    ProtocolParams p = kSmall;
    p.k = 2;
    StreamingSuppfind sf = sketch_suppfind(p);
    StreamingSampler sa = sketch_sampler(p);
    std::vector<uint8_t> s1 = sf.init(), s2 = sa.init();
    TurnstileSketch direct(p);
    for (auto [i, d] : std::vector<std::pair<uint32_t, int64_t>>{{4, 1}, {9, 1}, {4, -1},
                                                                 {30, 1}, {55, 1}}) {
        sf.update(s1, i, d);
        sa.update(s2, i, d);
        direct.update(i, d);
    }
    CHECK(s1 == serialize(direct.to_message()));
    CHECK(sf.query(s1) == support_find_k(direct));
    CHECK(sa.query(s2, 7) == l0_sample_k(direct, 7));

    StreamingSuppfind via_sampler = suppfind_from_sampler(sa, 7);
    CHECK(via_sampler.query(s2) == l0_sample_k(direct, 7));
}

TEST_CASE("duplicate-finding solves the promise problem") {
    // Alice feeds support(x); Bob completes the stream to n+1 elements with
    // fillers outside support(y); any duplicate is a difference index.
    ProtocolHandle h = ur_from_findup(naive_findup(40));
    CHECK(h.k == 1);
    PrfStream rng(3, "findup-adapter-test");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<uint8_t> x(40, 0), y(40, 0);
        uint64_t wx = 1 + rng.next_below(20);
        std::vector<uint32_t> pool(40);
        for (uint32_t i = 0; i < 40; ++i) pool[i] = i;
        for (uint64_t i = 0; i < wx; ++i) std::swap(pool[i], pool[i + rng.next_below(40 - i)]);
        uint64_t forced = rng.next_below(wx);
        for (uint64_t i = 0; i < wx; ++i) {
            x[pool[i]] = 1;
            y[pool[i]] = (i != forced && (rng.next() & 1)) ? 1 : 0;
        }
        ProtocolMessage msg = h.alice(x);
        CHECK(msg.bytes.size() == (msg.bits + 7) / 8);
        auto ans = h.bob(msg, y);
        REQUIRE(ans.has_value());
        REQUIRE(ans->size() == 1);
        uint32_t i = (*ans)[0];
        CHECK(x[i] == 1);
        CHECK(y[i] == 0);
    }
}

TEST_CASE("support-finding solves the k-index problem exactly") {
    ProtocolHandle h = ur_k_from_suppfind(naive_suppfind(30, 3));
    std::vector<uint8_t> x = indicator(30, {1, 4, 9, 16, 25});
    std::vector<uint8_t> y = indicator(30, {4, 16});
    auto ans = h.bob(h.alice(x), y);
    REQUIRE(ans.has_value());
    CHECK(*ans == std::vector<uint32_t>{1, 9, 25});

    // x = y leaves the aggregate empty.
    auto none = h.bob(h.alice(y), y);
    REQUIRE(none.has_value());
    CHECK(none->empty());
}

TEST_CASE("sketch-instantiated adapter equals the direct protocol") {
    ProtocolParams p = kSmall;
    p.k = 2;
    ProtocolHandle adapted = ur_k_from_suppfind(sketch_suppfind(p));
    Protocol proto(p);
    PrfStream rng(8, "adapter-vs-direct");
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<uint8_t> x(64, 0), y(64, 0);
        for (uint32_t i = 0; i < 64; ++i) {
            x[i] = rng.next() & 1;
            y[i] = x[i] ? (rng.next() & 1) : 0;
        }
        ProtocolMessage msg = adapted.alice(x);
        CHECK(msg.bytes == serialize(proto.alice(x)));
        CHECK(adapted.bob(msg, y) == proto.bob(proto.alice(x), y));
    }
}
