#ifndef PROPCOLOC_GMM_HPP
#define PROPCOLOC_GMM_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propcoloc/joint_effects.hpp"

namespace propcoloc {

enum class test_method { full, naive, conditional, lm };

std::string method_name(test_method m);

struct test_result {
    test_method method = test_method::full;
    double statistic = 0.0;
    // Degrees of freedom for full/naive/lm; the Monte-Carlo conditional
    // critical value w* for the conditional test.
    double df_or_critical = 0.0;
    double p_value = 1.0;
    std::optional<double> eta_hat;
    bool reject = false;
    std::map<std::string, double> diagnostics;
};

// Moment problem for the proportionality constant: g(eta) = g0 - g1*eta with
// weight matrix Omega(eta) = s11 - (s12 + s12')*eta + s22*eta^2.
struct gmm_problem {
    Eigen::VectorXd g0; // gamma1-hat
    Eigen::VectorXd g1; // gamma2-hat
    Eigen::MatrixXd s11, s12, s22;
    long long n = 0;
    std::vector<int> variant_index_map;

    int num_moments() const { return static_cast<int>(g0.size()); }

    static gmm_problem from_joint_effects(const joint_effects& je);

    // Restriction to a subset of moment equations (e.g. the two lead
    // variants); indices are positions within this problem.
    gmm_problem restrict_to(const std::vector<int>& idx) const;
};

struct minimize_result {
    double eta_hat = 0.0;
    double q_min = 0.0;
    double bracket = 0.0;
    int bracket_doublings = 0;
    bool hit_bracket_edge = false;
    long long floored_inversions = 0;
};

Eigen::VectorXd estimating_function(const gmm_problem& p, double eta);

Eigen::MatrixXd omega(const gmm_problem& p, double eta);

// Continuously-updating criterion g(eta)' Omega(eta)^{-1} g(eta).
// Throws degeneracy_error when Omega(eta) is not positive definite.
double q_criterion(const gmm_problem& p, double eta);

// Global 1-D minimization of the criterion: coarse 2001-point grid over an
// adaptive bracket, golden-section refinement around every near-best local
// minimum.
minimize_result minimize_q(const gmm_problem& p);

// Full-panel proportional colocalization test: n*Q(eta-hat) vs chi^2_{J-1}.
test_result prop_coloc_full(const joint_effects& je, double nu);

} // namespace propcoloc

#endif
