#include "urk/subsetcode.hpp"

#include "urk/errors.hpp"

namespace urk {

bigint subset_rank(uint32_t n, const std::vector<uint32_t>& b) {
    bigint rank = 0;
    uint32_t t = 0;
    uint32_t prev = 0;
    for (uint32_t c : b) {
        ++t;
        if (c >= n) throw param_error("subset element out of range");
        if (t > 1 && c <= prev) throw param_error("subset must be sorted and distinct");
        prev = c;
        rank += binomial(c, t);
    }
    return rank;
}

std::vector<uint32_t> subset_unrank(uint32_t n, uint32_t w, const bigint& rank) {
    if (w > n) throw param_error("subset size exceeds ground set");
    if (rank < 0 || rank >= binomial(n, w)) throw param_error("rank out of range");
    // Greedy from the largest element down: c_t is the largest c with
    // C(c, t) <= remaining rank. C(c, t) is increasing in c, so binary
    // search; C(t-1, t) = 0 guarantees a feasible floor.
    std::vector<uint32_t> out(w);
    bigint rem = rank;
    uint32_t hi = n;
    for (uint32_t t = w; t >= 1; --t) {
        uint32_t lo = t - 1;         // C(lo, t) = 0 <= rem
        uint32_t too_big = hi;       // elements must stay below the previous one
        while (too_big - lo > 1) {
            uint32_t mid = lo + (too_big - lo) / 2;
            if (binomial(mid, t) <= rem)
                lo = mid;
            else
                too_big = mid;
        }
        rem -= binomial(lo, t);
        out[t - 1] = lo;
        hi = lo;
    }
    return out;
}

unsigned subset_code_bits(uint32_t n, uint32_t w) { return ceil_log2(binomial(n, w)); }

} // namespace urk
