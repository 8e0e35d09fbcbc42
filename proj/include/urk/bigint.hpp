#pragma once

#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

// Exact integer arithmetic for parameter formulas and bit accounting. Every
// quantity that feeds a bit length or a loop bound is computed over big
// integers; floating point never decides a count.

namespace urk {

using bigint = boost::multiprecision::cpp_int;

// Binomial coefficient C(n, k), exact. C(n, k) = 0 for k > n.
bigint binomial(uint64_t n, uint64_t k);

// Number of bits in x's binary representation; bitlength(0) = 0.
unsigned bitlength(const bigint& x);

// ceil(log2(x)) for x >= 1, exact: the least t with 2^t >= x.
unsigned ceil_log2(const bigint& x);

// ceil(log_q(x)) for x >= 1, q >= 2, exact: the least t with q^t >= x.
unsigned ceil_log_base(uint64_t q, const bigint& x);

// floor(sqrt(x)) over integers.
uint64_t isqrt(uint64_t x);

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime_u64(uint64_t n);

} // namespace urk
