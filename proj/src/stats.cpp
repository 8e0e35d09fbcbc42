#include "urk/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "urk/errors.hpp"

namespace urk {

namespace {

// Q(a, x) by the series for the lower function P: P = gamser, Q = 1 - P.
double gamma_q_series(double a, double x) {
    double gln = std::lgamma(a);
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15)
            return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    throw std::runtime_error("incomplete gamma series failed to converge");
}

// Q(a, x) by Lentz's continued fraction, stable for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double gln = std::lgamma(a);
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15)
            return std::exp(-x + a * std::log(x) - gln) * h;
    }
    throw std::runtime_error("incomplete gamma continued fraction failed to converge");
}

} // namespace

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw param_error("gamma_q requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? gamma_q_series(a, x) : gamma_q_cf(a, x);
}

double chi_square_p(double chi2, uint32_t df) {
    if (df == 0) throw param_error("chi-square needs at least one degree of freedom");
    if (chi2 < 0.0) throw param_error("chi-square statistic cannot be negative");
    return gamma_q(df / 2.0, chi2 / 2.0);
}

double chi_square_stat(const std::vector<uint64_t>& observed,
                       const std::vector<double>& expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw param_error("observed and expected cell counts must match and be nonempty");
    double stat = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0)) throw param_error("expected cell counts must be positive");
        double d = static_cast<double>(observed[i]) - expected[i];
        stat += d * d / expected[i];
    }
    return stat;
}

} // namespace urk
