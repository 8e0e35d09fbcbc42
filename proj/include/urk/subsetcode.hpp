#pragma once

#include <cstdint>
#include <vector>

#include "urk/bigint.hpp"

// Colexicographic subset codec: the information-theoretically minimal
// ceil(log2 C(n,w))-bit encoding of a w-subset of [0, n) as its position in
// colex order (compare the largest differing element).

namespace urk {

// rank(B) = sum over sorted elements c_1 < ... < c_w of C(c_t, t).
// B must be sorted, distinct, all elements < n. The empty set ranks 0.
bigint subset_rank(uint32_t n, const std::vector<uint32_t>& b);

// Inverse: the rank-th w-subset of [0, n) in colex order, sorted ascending.
// Throws param_error when rank >= C(n, w).
std::vector<uint32_t> subset_unrank(uint32_t n, uint32_t w, const bigint& rank);

// Exact bit cost of the codec: ceil(log2 C(n, w)); 0 when C(n, w) = 1.
unsigned subset_code_bits(uint32_t n, uint32_t w);

} // namespace urk
