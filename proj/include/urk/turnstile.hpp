#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "urk/protocol.hpp"

// Strict-turnstile streaming layer over the protocol's linear sketches:
// update ingestion, support reporting, l0 sampling, and the adapters that
// turn streaming algorithms into one-way protocol handles (and back).

namespace urk {

struct StreamUpdate {
    uint32_t index = 0;
    int64_t delta = 0;
};

// Linear sketch of the aggregate z: after any update sequence the state
// equals alice(params, z mod q). Entries of z must stay within the centered
// embedding range |z_i| <= (q-1)/2 — the caller's strict-turnstile promise;
// the sketch cannot check it in sublinear space.
class TurnstileSketch {
  public:
    TurnstileSketch() = default;
    explicit TurnstileSketch(const ProtocolParams& params);

    // State identical to having applied the message's updates; params echo
    // must match. Used to resume a shipped sketch.
    static TurnstileSketch from_message(const ProtocolParams& params, const UrMessage& msg);

    void update(uint32_t index, int64_t delta);
    void update(const StreamUpdate& u) { update(u.index, u.delta); }

    // Entrywise sum; other must have identical params (including seed).
    void merge(const TurnstileSketch& other);

    const ProtocolParams& params() const { return params_; }
    const Protocol& protocol() const { return *proto_; }
    uint64_t update_count() const { return updates_; }

    UrMessage to_message() const;

  private:
    ProtocolParams params_;
    std::shared_ptr<const Protocol> proto_; // shared decode tables
    std::vector<FieldVec> v_;               // per-level accumulators
    uint64_t updates_ = 0;
};

// Report min{k, ||z||_0} support indices of the aggregate (any indices):
// runs the protocol's receiver against the accumulated message with y = 0.
// nullopt = Fail.
std::optional<std::vector<uint32_t>> support_find_k(const TurnstileSketch& s);

// Report min{k, ||z||_0} support indices sampled uniformly without
// replacement from the deepest decodable level holding at least k support
// elements (level 0 if none does), using sample_seed. Deterministic given
// (sketch state, sample_seed). nullopt = Fail.
std::optional<std::vector<uint32_t>> l0_sample_k(const TurnstileSketch& s, uint64_t sample_seed);

// ---------------------------------------------------------------------------
// Streaming-algorithm interfaces with explicit byte-serializable state, so a
// one-way protocol can ship the state as its message. All three are plain
// bundles of closures; state flows through the caller.

// Duplicate finding: after feeding n+1 elements of [0, n) there is a
// duplicate; answer() names one (nullopt = the algorithm failed).
struct StreamingFindup {
    uint32_t n = 0;
    std::function<std::vector<uint8_t>()> init;
    std::function<void(std::vector<uint8_t>& state, uint32_t index)> feed;
    std::function<std::optional<uint32_t>(const std::vector<uint8_t>& state)> answer;
};

// Support finding over +-delta updates; query returns min{k, ||z||_0}
// support indices, sorted (nullopt = Fail).
struct StreamingSuppfind {
    uint32_t n = 0;
    uint32_t k = 1;
    std::function<std::vector<uint8_t>()> init;
    std::function<void(std::vector<uint8_t>& state, uint32_t index, int64_t delta)> update;
    std::function<std::optional<std::vector<uint32_t>>(const std::vector<uint8_t>& state)> query;
};

// As StreamingSuppfind but sampling uniformly without replacement.
struct StreamingSampler {
    uint32_t n = 0;
    uint32_t k = 1;
    std::function<std::vector<uint8_t>()> init;
    std::function<void(std::vector<uint8_t>& state, uint32_t index, int64_t delta)> update;
    std::function<std::optional<std::vector<uint32_t>>(const std::vector<uint8_t>& state,
                                                       uint64_t sample_seed)>
        query;
};

// Exact reference algorithms (linear space); adapter test fixtures.
StreamingFindup naive_findup(uint32_t n);
StreamingSuppfind naive_suppfind(uint32_t n, uint32_t k);
StreamingSampler naive_sampler(uint32_t n, uint32_t k);

// TurnstileSketch-backed instances; state is the serialized message.
StreamingSuppfind sketch_suppfind(const ProtocolParams& params);
StreamingSampler sketch_sampler(const ProtocolParams& params);

// Reduction: a duplicate finder solves the k=1 problem under the promise
// support(y) ⊂ support(x). Alice feeds support(x); Bob resumes the state on
// n+1-||x||_0 fillers taken from [0,n) \ support(y) in ascending order, and
// any duplicate is an index where x and y differ. param_error when the
// filler pool is too small (possible only if the promise is violated).
ProtocolHandle ur_from_findup(const StreamingFindup& alg);

// Reduction: a support finder solves the k-index problem — Alice applies +1
// on support(x), Bob applies -1 on support(y), and z = x - y is exactly the
// indicator of the differing indices.
ProtocolHandle ur_k_from_suppfind(const StreamingSuppfind& alg);

// A sampler is only a harder interface: forget the distribution, keep the
// support guarantee. sample_seed is bound at wrap time.
StreamingSuppfind suppfind_from_sampler(const StreamingSampler& alg, uint64_t sample_seed);

} // namespace urk
