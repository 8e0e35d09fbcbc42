#pragma once

#include <cstdint>
#include <vector>

namespace urk {

// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a), a > 0, x >= 0.
// Series expansion for x < a + 1, continued fraction otherwise; good to
// roughly 1e-12 relative accuracy, which is far tighter than any test here.
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of
// freedom: P(X >= chi2) = Q(df/2, chi2/2).
double chi_square_p(double chi2, uint32_t df);

// Pearson statistic for observed counts against per-cell expectations.
double chi_square_stat(const std::vector<uint64_t>& observed,
                       const std::vector<double>& expected);

} // namespace urk
