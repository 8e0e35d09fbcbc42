#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "urk/gfq.hpp"
#include "urk/recovery.hpp"
#include "urk/subsample.hpp"

// The one-way public-coin protocol: Alice compresses her binary vector x into
// per-level sparse-recovery sketches; Bob, holding y, descends levels and
// recovers up to k indices where x and y differ. Both sides derive the sketch
// matrix and the level family from the shared seed, so the message carries
// only the sketch payloads.

namespace urk {

// Backend for a handle's message representation. `exhaustive` ships GF(q)
// sketches decoded by the exact sparse decoder (desk scale); `bucket` ships
// count/keysum/fingerprint cells peeled in linear time (harness scale).
enum class SketchBackend { exhaustive, bucket };

struct ProtocolParams {
    uint32_t n = 0;
    uint32_t k = 1;
    uint32_t q = 3;
    uint32_t oversample = 16; // recovery sparsity = oversample * k
    uint32_t slack = 10;      // extra sketch rows
    uint64_t seed = 0;        // the public random string
    SketchBackend backend = SketchBackend::exhaustive;
    uint32_t buckets_per_level = 0; // bucket backend; 0 = 3 * sparsity

    uint32_t sparsity() const { return oversample * k; }
    // L = floor(log2(n/k)); levels 0..L.
    uint32_t levels() const;

    // Throws param_error unless 1 <= k <= n/2, q is an odd prime, and the
    // recovery sparsity satisfies 1 <= oversample*k <= n/2.
    void validate() const;
};

// Alice's message: one sketch per level. The params echo makes serialized
// messages self-describing; payload accounting covers only the sketches.
struct UrMessage {
    uint32_t n = 0;
    uint32_t k = 1;
    uint32_t q = 3;
    uint32_t levels = 0; // L
    uint32_t m_rows = 0;
    uint64_t seed = 0;
    std::vector<FieldVec> v; // v_0..v_L, each of length m_rows

    // Exact payload bit count: (L+1) * ceil(m_rows * log2 q).
    uint64_t payload_bits() const;
};

// Protocol instance with the derived scheme and level family built once;
// reuse across calls amortizes decoder table construction.
class Protocol {
  public:
    explicit Protocol(ProtocolParams params);

    const ProtocolParams& params() const { return params_; }
    const RecoveryScheme& scheme() const { return scheme_; }
    const LevelFamily& level_family() const { return levels_; }
    uint32_t m_rows() const { return scheme_.m_rows(); }

    // x in {0,1}^n, one byte per coordinate. Throws param_error on length or
    // non-binary entries.
    UrMessage alice(const std::vector<uint8_t>& x) const;

    // Level-descending recovery: for j = L..0 subtract the y-sketch, decode
    // at the recovery sparsity; on a decodable level with ||w||_0 >= k (or
    // j = 0) return the min{k, ||w||_0} smallest support indices, sorted.
    // Levels j >= 1 decode over the restriction of the matrix to that
    // level's surviving columns — the residual provably lives there — which
    // keeps deep levels cheap at any n. A level whose exact decode would
    // exceed the search limits counts as undecodable: the receiver gives up
    // rather than guess. nullopt = Fail (level 0 undecodable). When x = y
    // every level decodes to zero and the result is the empty set.
    std::optional<std::vector<uint32_t>> bob(const UrMessage& msg,
                                             const std::vector<uint8_t>& y) const;

    // One level of bob's descent, exposed for the streaming layer: exact
    // decode of a level-j residual sketch over that level's surviving
    // columns, mapped back to full-domain coordinates. nullopt when the
    // level has no sparse preimage or its search is unaffordable.
    std::optional<FieldVec> decode_level(uint32_t j, const FieldVec& residual) const;

  private:
    void ensure_level_schemes() const;

    ProtocolParams params_;
    RecoveryScheme scheme_;
    LevelFamily levels_;
    // Built on first bob call (alice never needs them): the surviving
    // columns of each level j >= 1 and the matrix restricted to them.
    mutable std::once_flag sub_once_;
    mutable std::vector<std::vector<uint32_t>> level_members_;
    mutable std::vector<RecoveryScheme> level_schemes_;
};

// One-shot conveniences (construct a Protocol internally).
UrMessage alice(const ProtocolParams& params, const std::vector<uint8_t>& x);
std::optional<std::vector<uint32_t>> bob(const ProtocolParams& params, const UrMessage& msg,
                                         const std::vector<uint8_t>& y);

// Wire format: "URK1", then n, k, q, L, m_rows, seed as unsigned 64-bit
// little-endian, then the packed sketches back to back, zero-padded to a
// byte. Round-trip exact; deserialize rejects bad magic, truncation,
// trailing bytes, nonzero padding, and out-of-range packed values.
std::vector<uint8_t> serialize(const UrMessage& msg);
UrMessage deserialize(const std::vector<uint8_t>& bytes);

// ---------------------------------------------------------------------------
// Pluggable protocol interface for the encoding harness.

// A handle's message: exact transport bytes plus the accounted bit length.
// bytes.size() == ceil(bits/8) always.
struct ProtocolMessage {
    std::vector<uint8_t> bytes;
    uint64_t bits = 0;
};

// bob must be a pure deterministic function of (message, y, seed): the
// harness decoder replays the encoder's calls and relies on identical
// answers. nullopt = Fail; otherwise sorted distinct indices.
struct ProtocolHandle {
    uint32_t n = 0;
    uint32_t k = 1;
    std::string name;
    std::function<ProtocolMessage(const std::vector<uint8_t>& x)> alice;
    std::function<std::optional<std::vector<uint32_t>>(const ProtocolMessage& msg,
                                                       const std::vector<uint8_t>& y)>
        bob;
};

// The real protocol as a handle. Exhaustive backend: message = sketch
// payload bits (params are shared context). Bucket backend: message =
// serialized cells. The Protocol instance is shared by both closures.
ProtocolHandle make_protocol_handle(const ProtocolParams& params);

// Synthetic handles for the harness. All ship x's support bitmap (n bits) as
// the message, honestly realizing the "hidden access to x" the stubs need.
//   oracle      — the min{k, .} smallest indices of support(x-y); never fails.
//   always_fail — the smallest index with x_i == y_i (a wrong answer);
//                 nullopt when x and y differ everywhere.
//   iid_failure — wrong answer with probability delta_syn per distinct call,
//                 derived from (seed, message, y); replaying a call repeats
//                 its coin, as the harness requires.
enum class StubKind { oracle, always_fail, iid_failure };
ProtocolHandle make_stub(StubKind kind, uint32_t n, uint32_t k, uint64_t seed,
                         double delta_syn = 0.0);

} // namespace urk
