#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urk/protocol.hpp"

// Statistical experiments behind the `exp` CLI subcommands. Each returns a
// structured report plus a rendered CSV (one '#' config comment line, then a
// header row, then data rows) that is byte-identical for identical inputs.

namespace urk {

// Resolve a protocol handle by CLI name: "oracle", "always-fail", "iid"
// (synthetic failure rate delta_syn), or "sketch" (the bucket-backend
// protocol). Throws param_error on an unknown name.
ProtocolHandle make_named_handle(const std::string& name, uint32_t n, uint32_t k, uint64_t seed,
                                 double delta_syn);

// --- failure rate ----------------------------------------------------------
// Random promise instances (support(y) ⊂ support(x), forced difference) at
// each oversample value with paired per-trial seeds: trial t uses one
// instance and one protocol seed across all oversample values, so a wider
// recovery window sees exactly the same level subsampling.
struct FailureRateRow {
    uint32_t oversample = 0;
    uint32_t trials = 0;
    uint32_t failures = 0;
    double failure_rate = 0.0;
};
struct FailureRateReport {
    std::vector<FailureRateRow> rows;
    std::string csv;
};
FailureRateReport failure_rate_experiment(uint32_t n, uint32_t k, uint32_t q, uint32_t slack,
                                          const std::vector<uint32_t>& oversamples,
                                          uint32_t trials, uint64_t seed);

// --- message size ----------------------------------------------------------
// Builds one real message per n and checks the serialized payload bit count
// against the closed form (L+1) * ceil(m_rows * log2 q), with
// m_rows = 2s + ceil(log_q C(n,2s)) + slack. ratio normalizes by
// k * log2(n/k)^2, the protocol's target growth rate.
struct MessageSizeRow {
    uint32_t n = 0, k = 0, q = 0, oversample = 0, levels = 0, m_rows = 0;
    uint64_t payload_bits = 0;
    uint64_t closed_form_bits = 0;
    bool exact_match = false;
    double ratio = 0.0;
};
struct MessageSizeReport {
    std::vector<MessageSizeRow> rows;
    std::string csv;
};
MessageSizeReport message_size_experiment(const std::vector<uint32_t>& ns, uint32_t k, uint32_t q,
                                          uint32_t oversample, uint32_t slack, uint64_t seed);

// --- l0-sampling uniformity -------------------------------------------------
// Fixed support of the given size; each trial builds a sketch with a fresh
// protocol seed, draws one sample with a fresh sample seed, and tallies it.
// Chi-square goodness of fit against the uniform distribution on the support.
struct UniformityReport {
    std::vector<uint32_t> support;
    std::vector<uint64_t> counts; // aligned with support
    double expected = 0.0;        // per-cell expectation
    double chi2 = 0.0;
    double p_value = 0.0;
    uint32_t trials = 0;
    uint32_t failures = 0; // sampler Fail results (excluded from counts)
    std::string csv;
};
UniformityReport uniformity_experiment(uint32_t n, uint32_t support_size, uint32_t q,
                                       uint32_t oversample, uint32_t slack, uint32_t trials,
                                       uint64_t seed);

// --- encoding savings -------------------------------------------------------
// Runs the single-index encoder per trial (fresh shared randomness and set S)
// and accounts bits exactly. The per-trial inequality is
// log2 C(n,m) - log2 C(n,|B|) >= (m-|B|) * log2(n/m - 1).
struct SavingsRow {
    uint32_t trial = 0;
    uint32_t sum_b = 0;  // successful rounds
    uint32_t b_card = 0; // |B|
    uint32_t savings = 0; // m - |B|
    uint64_t message_bits = 0;
    uint64_t total_bits = 0;
    double lhs_bits = 0.0;
    double rhs_bits = 0.0;
    bool inequality_ok = false;
};
struct SavingsReport {
    std::vector<SavingsRow> rows;
    double mean_savings = 0.0;
    double mean_total_bits = 0.0;
    bool all_ok = false;
    std::string csv;
};
SavingsReport savings_experiment(uint32_t n, uint32_t log2_inv_delta, const std::string& handle,
                                 double delta_syn, uint32_t trials, uint64_t seed);

// --- adaptivity sharpness ----------------------------------------------------
// X uniform on [n] (n a power of two); Y copies X with probability
// t/log2(n), otherwise is an independent uniform draw; f(x,y) = 1[x = y].
// measured_p estimates Pr(f(X,Y)=1) ~ t/log2(n) + 1/n. analytic_rhs is
// (t + H2(1/n)) / log2(n): the information bound with the t bits the copy
// branch reveals in expectation. mi_exact_bits is the exact mutual
// information of the mixture (strictly below t — the uniform branch wastes
// some of the budget), reported alongside for reference as rhs_exact.
struct AdaptivityReport {
    uint32_t n = 0;
    uint32_t t = 0;
    uint64_t trials = 0;
    uint64_t hits = 0;
    double measured_p = 0.0;
    double analytic_rhs = 0.0;
    double mi_bits = 0.0;       // t, the modeled information budget
    double mi_exact_bits = 0.0; // closed-form mixture mutual information
    double h2_delta = 0.0;
    double delta = 0.0;
    double rhs_exact = 0.0;
    std::string csv;
};
AdaptivityReport adaptivity_experiment(uint32_t n, uint32_t t, uint64_t trials, uint64_t seed);

// --- partial-products bound ---------------------------------------------------
// For K = 1..kmax, the truncated product prod_{j=1..200K} 1/(1 - 2^(-j/K)),
// evaluated as a log2-domain sum in extended precision, against the 2^(5K)
// ceiling.
struct PochhammerRow {
    uint32_t K = 0;
    double product = 0.0; // may be astronomically large; exact in log2 below
    double log2_product = 0.0;
    double bound_log2 = 0.0; // 5K
    bool pass = false;
};
struct PochhammerReport {
    std::vector<PochhammerRow> rows;
    bool all_pass = false;
    std::string csv;
};
PochhammerReport pochhammer_experiment(uint32_t kmax);

} // namespace urk
