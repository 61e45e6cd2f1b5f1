#ifndef PROPCOLOC_JOINT_EFFECTS_HPP
#define PROPCOLOC_JOINT_EFFECTS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propcoloc/summary_data.hpp"

namespace propcoloc {

// Multivariable effect estimates on the standardized scale and the joint
// covariance of sqrt(n)*(gamma1', gamma2')'. The covariance keeps its exact
// Kronecker structure Sigma_gamma = ld^{-1} (x) Sigma_V: the (k,l) trait
// block equals sigma_v(k,l) * ld_inv.
struct joint_effects {
    std::vector<std::string> variant_ids;
    Eigen::VectorXd gamma1;
    Eigen::VectorXd gamma2;
    Eigen::MatrixXd ld_inv;
    Eigen::Matrix2d sigma_v;
    long long n = 0;

    int num_variants() const { return static_cast<int>(gamma1.size()); }

    // J x J block Sigma_{gamma,kl} (k, l in {1,2}, 1-based as in the model).
    Eigen::MatrixXd sigma_block(int k, int l) const {
        return sigma_v(k - 1, l - 1) * ld_inv;
    }

    // Full 2J x 2J covariance of sqrt(n)*(gamma1', gamma2')'.
    Eigen::MatrixXd sigma_gamma() const;

    // 2J vector of t-statistics: D_gamma * sqrt(n) * (gamma1', gamma2')',
    // where D_gamma is the diagonal of (Sigma_{gamma,kk})_{jj}^{-1/2}.
    Eigen::VectorXd t_stats() const;
    Eigen::VectorXd d_gamma_diag() const;
};

// Reconstructs multivariable estimates from univariable summary data:
// b_kj = beta_kj / (se_kj * sqrt(n)), gamma_k = ld^{-1} b_k, with Sigma_V
// recovered from residual trait variance and projected to positive definite
// if needed. Throws degeneracy_error when ld is numerically singular.
joint_effects to_joint_effects(const summary_dataset& ds);

} // namespace propcoloc

#endif
