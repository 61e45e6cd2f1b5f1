#ifndef PROPCOLOC_CALIBRATION_HPP
#define PROPCOLOC_CALIBRATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propcoloc/gmm.hpp"
#include "propcoloc/joint_effects.hpp"
#include "propcoloc/rng.hpp"

namespace propcoloc {

struct calibration_check {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct calibration_report {
    std::vector<calibration_check> checks;
    bool all_pass() const;
    std::string to_text() const;
};

// Exact sampler from the summary model: gamma-hat ~ N(gamma, Sigma_gamma/n)
// with Sigma_gamma = Sigma_V (x) ld^{-1}. Independent of the reconstruction
// path; used as the oracle harness for the conditional machinery.
joint_effects draw_joint_effects(const Eigen::VectorXd& gamma1,
                                 const Eigen::VectorXd& gamma2,
                                 const Eigen::MatrixXd& ld,
                                 const Eigen::Matrix2d& sigma_v, long long n,
                                 rng_engine& rng);

// Brute-force grid argmin of the CUE criterion; the reference the optimizer
// is checked against.
std::pair<double, double> brute_force_minimize(const gmm_problem& p,
                                               double lo, double hi,
                                               long long points);

// Kolmogorov-Smirnov distance between the replicated full-test statistic and
// chi^2_{J-1} on a fixed H0 instance.
calibration_report chisq_suite(int j, long long n, int reps,
                               std::uint64_t seed);

// Monte-Carlo covariance oracle for C*: with fixed selection indices, the
// empirical covariance between the normalized moment and the t-vector must
// match c_star entrywise within 3 standard errors; the sufficient statistic
// must be empirically uncorrelated with the normalized moment.
calibration_report cstar_suite(std::uint64_t seed);

// Optimizer against the brute-force grid over random problems.
calibration_report optimizer_suite(int instances, std::uint64_t seed);

calibration_report run_suite(const std::string& suite, std::uint64_t seed);

} // namespace propcoloc

#endif
