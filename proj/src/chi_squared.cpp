#include "propcoloc/chi_squared.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "propcoloc/errors.hpp"

namespace propcoloc {

namespace {

// Lower incomplete gamma by its power series; converges fast for x < a+1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by modified Lentz continued fraction; for x >= a+1.
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw input_error("gamma_p: require a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0 || !std::isfinite(a) || !std::isfinite(x))
        throw input_error("gamma_q: require a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi_sq_upper(int df, double x) {
    if (df < 1) throw input_error("chi_sq_upper: df must be >= 1");
    if (!std::isfinite(x) || x < 0.0)
        throw input_error("chi_sq_upper: x must be finite and >= 0");
    return gamma_q(0.5 * df, 0.5 * x);
}

double chi_sq_quantile(int df, double nu) {
    if (df < 1) throw input_error("chi_sq_quantile: df must be >= 1");
    if (!(nu > 0.0 && nu < 1.0))
        throw input_error("chi_sq_quantile: nu must be in (0,1)");
    // Bracket the root of chi_sq_upper(df, x) - nu, then bisect.
    double lo = 0.0;
    double hi = df + 10.0;
    while (chi_sq_upper(df, hi) > nu) {
        hi *= 2.0;
        if (hi > 1e12)
            throw input_error("chi_sq_quantile: failed to bracket quantile");
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (chi_sq_upper(df, mid) > nu)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace propcoloc
