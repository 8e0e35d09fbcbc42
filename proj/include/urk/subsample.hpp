#pragma once

#include <cstdint>

#include "urk/gfq.hpp"

// Shared level functions h_0..h_L with Pr(h_j(i)=1) = 2^-j, realized as one
// uniform draw u(i) per index compared against nested thresholds: h_j(i)=1
// iff u(i) < 2^-j. Nested by construction; per-level marginals exact.

namespace urk {

struct LevelFamily {
    uint64_t seed = 0;
    uint32_t n = 0;
    uint32_t max_level = 0; // L
};

// True iff index i survives at level j (u(i) < 2^-j).
// Throws param_error when j > L or i >= n.
bool member(const LevelFamily& f, uint32_t j, uint32_t i);

// Largest j <= L with member(f, j, i). Because the levels are nested, the
// levels containing i are exactly 0..deepest_level(f, i) — the one-draw fast
// path for sketch updates.
uint32_t deepest_level(const LevelFamily& f, uint32_t i);

// Coordinate mask: out_i = x_i if member(f, j, i) else 0. Length preserved.
FieldVec restrict_level(const FieldVec& x, const LevelFamily& f, uint32_t j);

} // namespace urk
