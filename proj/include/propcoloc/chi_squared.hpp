#ifndef PROPCOLOC_CHI_SQUARED_HPP
#define PROPCOLOC_CHI_SQUARED_HPP

namespace propcoloc {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper-tail probability P(X > x) for X ~ chi^2 with df degrees of freedom.
double chi_sq_upper(int df, double x);

// (1-nu)-th quantile of the chi^2 distribution with df degrees of freedom,
// i.e. the x solving chi_sq_upper(df, x) = nu.
double chi_sq_quantile(int df, double nu);

} // namespace propcoloc

#endif
