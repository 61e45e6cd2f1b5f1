#ifndef PROPCOLOC_SELECTIVE_HPP
#define PROPCOLOC_SELECTIVE_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "propcoloc/gmm.hpp"
#include "propcoloc/joint_effects.hpp"

namespace propcoloc {

// Lead-variant selection state: the 2J t-statistic vector and the indices of
// the lead variant for trait 1 (j_star) and, excluding it, for trait 2
// (j_star_star).
struct selection_context {
    Eigen::VectorXd t_stats;     // 2J
    Eigen::VectorXd d_gamma;     // 2J diagonal scaling
    int j_star = -1;
    int j_star_star = -1;

    int num_variants() const { return static_cast<int>(t_stats.size()) / 2; }

    // 2 x J selector with unit rows at (0, j_star) and (1, j_star_star).
    Eigen::MatrixXd selector() const;
};

// Pieces of the conditional distribution of the selected-pair statistic:
// evaluated at a fixed eta (the fitted eta-hat in practice).
struct conditional_machinery {
    Eigen::Matrix2d omega_star;
    Eigen::Matrix2d omega_star_inv_sqrt;
    Eigen::Vector2d g_star_hat;   // -I* gamma2-hat
    Eigen::Matrix2d m_star;       // rank-1 idempotent projection
    Eigen::MatrixXd c_star;       // 2 x 2J covariance with the t-vector
    Eigen::VectorXd ell;          // 2J fitted sufficient statistic
};

enum class verdict {
    retain_proportional,
    reject_by_conditional,
    reject_no_trait1_signal,
};

std::string verdict_name(verdict v);

selection_context build_selection(const joint_effects& je);

// Two-lead-variant test against the chi^2_1 critical value, ignoring
// selection uncertainty.
test_result prop_coloc_naive(const joint_effects& je,
                             const selection_context& sel, double nu);

conditional_machinery build_conditional_machinery(const joint_effects& je,
                                                  const selection_context& sel,
                                                  double eta_eval);

// Selection-adjusted test: the observed two-variant statistic is compared to
// a Monte-Carlo critical value computed from draws restricted to the
// selection event. Deterministic given (draws, seed); draws are doubled
// adaptively until at least 500 are accepted (total capped at 1e6).
test_result prop_coloc_cond(const joint_effects& je, double nu,
                            long long draws, std::uint64_t seed);

// Score test of a zero proportionality constant at the selected variants.
test_result lm_test(const joint_effects& je, const selection_context& sel,
                    double nu);

// Combination rule: the conditional p-value counts only when the LM test
// finds evidence of a non-zero proportionality constant.
verdict combined_verdict(const test_result& cond, const test_result& lm,
                         double nu);

} // namespace propcoloc

#endif
