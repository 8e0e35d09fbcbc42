#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "urk/bigint.hpp"
#include "urk/protocol.hpp"

// The encoding harness: a compressor for m-subsets of [0, n) that spends a
// protocol message plus an explicit remainder set B, with a coin cost of R
// correctness bits. Decoding replays the encoder's protocol calls against a
// deterministic handle, so dec(enc(S)) = S unconditionally — for any handle
// behavior, any seed. The savings (elements removed from B) measure protocol
// quality; correctness never depends on it.

namespace urk {

// Single-index variant: round budget R with shrinking working-set sizes
// n_0 > n_1 > ... > n_R enforcing n_r - n_{r+1} >= 2.
struct LbParams {
    uint32_t n = 0;
    uint32_t log2_inv_delta = 0;
    uint32_t m = 0; // floor(sqrt(n * log2(1/delta)))
    uint32_t K = 0; // floor(log2(1/delta) / 16)
    uint32_t R = 0; // floor(K * log2(m / 4K))
    std::vector<uint32_t> n_seq; // n_0..n_R, n_r = floor(m * 2^(-r/K))
    uint64_t seed = 0;
    std::vector<uint32_t> pi; // shared random permutation; pi[a] = position
};

// Validates 64 <= log2(1/delta) <= n/64 and the n_r gap property; all
// formulas evaluated in exact integer arithmetic (n_r is the largest v with
// v^K * 2^r <= m^K).
LbParams lb_params(uint32_t n, uint32_t log2_inv_delta, uint64_t seed);

// k-index variant: nested retention sets T_0 = [n] ⊇ T_1 ⊇ ... ⊇ T_R where
// each index survives a round with probability 1/2.
struct LbParamsK {
    uint32_t n = 0;
    uint32_t k = 0;
    uint32_t m = 0; // floor(sqrt(n*k))
    uint32_t R = 0; // floor(log2(n/k)/2 - 2)
    uint64_t seed = 0;
    // First round in 1..R whose coin evicts the index; R+1 = survives all.
    // a ∈ T_r iff exit_round[a] > r.
    std::vector<uint32_t> exit_round;

    bool in_t(uint32_t a, uint32_t r) const { return exit_round[a] > r; }
};

// Validates 1 <= k <= n/2^10 (which forces R >= 3).
LbParamsK lb_params_k(uint32_t n, uint32_t k, uint64_t seed);

// Encoder output: everything the decoder receives beyond shared randomness.
struct EncoderOutput {
    uint64_t message_bits = 0;
    std::vector<uint8_t> message;    // ceil(message_bits/8) bytes
    std::vector<uint8_t> b;          // round bits, b[r-1] for round r, values 0/1
    std::vector<uint32_t> coded_set; // B = S \ A, sorted
};

// Per-round set snapshots for the lockstep partition check: sets[r] is the
// encoder's S_r (respectively the decoder's C_r) after round r, r = 0..R.
struct LbTrace {
    std::vector<std::vector<uint32_t>> sets;
};

// enc: message = P.alice(1_S); each round asks P.bob for an element of the
// current working set (valid answers join A and are recorded b_r = 1), then
// trims the working set to n_r by evicting the smallest-pi elements.
// S must be a sorted m-subset of [0, n); P must have k == 1 and matching n.
EncoderOutput enc(const std::vector<uint32_t>& S, const ProtocolHandle& P,
                  const LbParams& params, LbTrace* trace = nullptr);

// dec replays: C_r mirrors S \ S_r; on b_r = 1 it repeats the encoder's
// protocol call (identical inputs -> identical answer), then re-derives the
// trimmed elements as the smallest-pi elements of B \ C_r. Returns S.
std::vector<uint32_t> dec(const EncoderOutput& out, const ProtocolHandle& P,
                          const LbParams& params, LbTrace* trace = nullptr);

// k-index variant: round r asks for up to k elements of S ∩ T_{r-1}; answers
// that exit T at exactly round r join A. The decoder recovers the rest of
// S \ T_r from B via the shared exit rounds. P must have k == params.k.
EncoderOutput enc_k(const std::vector<uint32_t>& S, const ProtocolHandle& P,
                    const LbParamsK& params, LbTrace* trace = nullptr);

std::vector<uint32_t> dec_k(const EncoderOutput& out, const ProtocolHandle& P,
                            const LbParamsK& params, LbTrace* trace = nullptr);

// Exact total cost in bits: message_bits + R + ceil(log2 n) (the |B| field)
// + ceil(log2 C(n, |B|)) (the colex rank).
uint64_t encoding_bit_length(const EncoderOutput& out, uint32_t n);

// On-disk form: n, m, R as u64 LE; message_bits u64 LE; message bytes; then
// a bit stream (LSB-first) of the R round bits and |B| in ceil(log2 n) bits,
// zero-padded to a byte; then the colex rank of B, big-endian, in exactly
// ceil(ceil(log2 C(n,|B|)) / 8) bytes. decode validates every field.
std::vector<uint8_t> encode_output_bytes(const EncoderOutput& out, uint32_t n, uint32_t m,
                                         uint32_t R);

struct DecodedOutputFile {
    uint32_t n = 0;
    uint32_t m = 0;
    uint32_t R = 0;
    EncoderOutput out;
};
DecodedOutputFile decode_output_bytes(const std::vector<uint8_t>& bytes);

} // namespace urk
