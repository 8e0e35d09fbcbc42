#include "urk/prf.hpp"

#include <numeric>

namespace urk {

std::vector<uint32_t> seeded_permutation(uint64_t seed, std::string_view tag, uint32_t n) {
    std::vector<uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    PrfStream rng(seed, tag);
    for (uint32_t i = n; i > 1; --i) {
        uint32_t j = static_cast<uint32_t>(rng.next_below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

} // namespace urk
