#include "urk/subsample.hpp"

#include <bit>

#include "urk/errors.hpp"
#include "urk/prf.hpp"

namespace urk {

bool member(const LevelFamily& f, uint32_t j, uint32_t i) {
    if (j > f.max_level) throw param_error("level out of range");
    if (i >= f.n) throw param_error("index out of range");
    if (j == 0) return true; // threshold 2^0 = 1 keeps everything
    if (j >= 64) return false;
    // u(i) < 2^-j  <=>  the 64-bit draw < 2^(64-j).
    return prf64(f.seed, "level", i) < (uint64_t{1} << (64 - j));
}

uint32_t deepest_level(const LevelFamily& f, uint32_t i) {
    if (i >= f.n) throw param_error("index out of range");
    uint64_t u = prf64(f.seed, "level", i);
    // u < 2^(64-j)  <=>  j <= 64 - bit_width(u); levels >= 64 never match.
    uint32_t jm = u == 0 ? 63 : static_cast<uint32_t>(64 - std::bit_width(u));
    return jm < f.max_level ? jm : f.max_level;
}

FieldVec restrict_level(const FieldVec& x, const LevelFamily& f, uint32_t j) {
    if (j > f.max_level) throw param_error("level out of range");
    if (x.size() != f.n) throw param_error("vector length does not match family dimension");
    FieldVec out(x.q, x.size());
    for (uint32_t i = 0; i < f.n; ++i)
        if (x.e[i] != 0 && member(f, j, i)) out.e[i] = x.e[i];
    return out;
}

} // namespace urk
