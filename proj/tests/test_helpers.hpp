#ifndef PROPCOLOC_TEST_HELPERS_HPP
#define PROPCOLOC_TEST_HELPERS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propcoloc/joint_effects.hpp"
#include "propcoloc/rng.hpp"
#include "propcoloc/summary_data.hpp"

namespace test_helpers {

inline propcoloc::summary_dataset make_dataset(
    const Eigen::Matrix<double, 2, Eigen::Dynamic>& beta,
    const Eigen::Matrix<double, 2, Eigen::Dynamic>& se,
    const Eigen::MatrixXd& ld, double trait_cor, long long n) {
    propcoloc::summary_dataset ds;
    const int j = static_cast<int>(beta.cols());
    for (int a = 0; a < j; ++a) ds.variant_ids.push_back("v" + std::to_string(a + 1));
    ds.beta = beta;
    ds.se = se;
    ds.ld = ld;
    ds.trait_cor = trait_cor;
    ds.n = n;
    return ds;
}

// joint_effects assembled directly from model quantities, bypassing the
// summary-statistic reconstruction.
inline propcoloc::joint_effects make_joint_effects(
    const Eigen::VectorXd& gamma1, const Eigen::VectorXd& gamma2,
    const Eigen::MatrixXd& ld, const Eigen::Matrix2d& sigma_v, long long n) {
    propcoloc::joint_effects je;
    const int j = static_cast<int>(gamma1.size());
    for (int a = 0; a < j; ++a) je.variant_ids.push_back("v" + std::to_string(a + 1));
    je.gamma1 = gamma1;
    je.gamma2 = gamma2;
    Eigen::MatrixXd inv = ld.inverse();
    je.ld_inv = (inv + inv.transpose()) * 0.5;
    je.sigma_v = sigma_v;
    je.n = n;
    return je;
}

inline Eigen::MatrixXd random_correlation(int j, propcoloc::rng_engine& rng) {
    Eigen::MatrixXd b = propcoloc::standard_normal_matrix(j, j + 3, rng);
    Eigen::MatrixXd s = b * b.transpose() +
                        0.5 * j * Eigen::MatrixXd::Identity(j, j);
    Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = d.asDiagonal() * s * d.asDiagonal();
    r = ((r + r.transpose()) * 0.5).eval();
    r.diagonal().setOnes();
    return r;
}

} // namespace test_helpers

#endif
