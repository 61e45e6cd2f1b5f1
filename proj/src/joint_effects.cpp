#include "propcoloc/joint_effects.hpp"

#include <cmath>

#include "propcoloc/errors.hpp"

namespace propcoloc {

Eigen::MatrixXd joint_effects::sigma_gamma() const {
    const int j = num_variants();
    Eigen::MatrixXd s(2 * j, 2 * j);
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
            s.block(k * j, l * j, j, j) = sigma_v(k, l) * ld_inv;
    return s;
}

Eigen::VectorXd joint_effects::d_gamma_diag() const {
    const int j = num_variants();
    Eigen::VectorXd d(2 * j);
    for (int a = 0; a < j; ++a) {
        d(a) = 1.0 / std::sqrt(sigma_v(0, 0) * ld_inv(a, a));
        d(j + a) = 1.0 / std::sqrt(sigma_v(1, 1) * ld_inv(a, a));
    }
    return d;
}

Eigen::VectorXd joint_effects::t_stats() const {
    const int j = num_variants();
    Eigen::VectorXd g(2 * j);
    g.head(j) = gamma1;
    g.tail(j) = gamma2;
    return std::sqrt(static_cast<double>(n)) * d_gamma_diag().cwiseProduct(g);
}

joint_effects to_joint_effects(const summary_dataset& ds) {
    const int j = ds.num_variants();
    const double sqrt_n = std::sqrt(static_cast<double>(ds.n));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ds.ld);
    if (es.info() != Eigen::Success)
        throw degeneracy_error("eigendecomposition of LD matrix failed");
    if (es.eigenvalues().minCoeff() <= 1e-8)
        throw degeneracy_error(
            "LD matrix is numerically singular (min eigenvalue <= 1e-8); "
            "prune correlated variants before testing");
    Eigen::MatrixXd ld_inv = es.eigenvectors() *
                             es.eigenvalues().cwiseInverse().asDiagonal() *
                             es.eigenvectors().transpose();
    ld_inv = ((ld_inv + ld_inv.transpose()) * 0.5).eval();

    // Standardized univariable coefficients b_kj ~ corr(X_k, Z_j).
    Eigen::VectorXd b1(j), b2(j);
    for (int a = 0; a < j; ++a) {
        b1(a) = ds.beta(0, a) / (ds.se(0, a) * sqrt_n);
        b2(a) = ds.beta(1, a) / (ds.se(1, a) * sqrt_n);
    }
    joint_effects je;
    je.variant_ids = ds.variant_ids;
    je.gamma1 = ld_inv * b1;
    je.gamma2 = ld_inv * b2;
    je.ld_inv = std::move(ld_inv);
    je.n = ds.n;

    // Residual trait covariance on the standardized scale, floored so that
    // noisy gamma-hat cannot push the diagonal to zero or below.
    Eigen::Matrix2d sv;
    sv(0, 0) = std::max(1.0 - je.gamma1.dot(ds.ld * je.gamma1), 0.01);
    sv(1, 1) = std::max(1.0 - je.gamma2.dot(ds.ld * je.gamma2), 0.01);
    sv(0, 1) = sv(1, 0) = ds.trait_cor - je.gamma1.dot(ds.ld * je.gamma2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> vs(sv);
    if (vs.eigenvalues().minCoeff() < 1e-6) {
        Eigen::Vector2d ev = vs.eigenvalues().cwiseMax(1e-6);
        sv = vs.eigenvectors() * ev.asDiagonal() * vs.eigenvectors().transpose();
        sv(0, 1) = sv(1, 0) = 0.5 * (sv(0, 1) + sv(1, 0));
    }
    je.sigma_v = sv;
    return je;
}

} // namespace propcoloc
