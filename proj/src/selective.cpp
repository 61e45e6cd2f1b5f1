#include "propcoloc/selective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "propcoloc/chi_squared.hpp"
#include "propcoloc/errors.hpp"
#include "propcoloc/rng.hpp"

namespace propcoloc {

namespace {

constexpr long long kMinAccepted = 500;
constexpr long long kMaxTotalDraws = 1000000;

Eigen::Matrix2d sym_inv_sqrt(const Eigen::Matrix2d& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw degeneracy_error(std::string(what) +
                               " is numerically singular; the selected lead "
                               "variants may be almost perfectly correlated");
    Eigen::Vector2d inv_sqrt_ev = es.eigenvalues().array().rsqrt();
    return es.eigenvectors() * inv_sqrt_ev.asDiagonal() *
           es.eigenvectors().transpose();
}

int argmax_abs(const Eigen::VectorXd& v, int skip = -1) {
    int best = -1;
    for (int i = 0; i < v.size(); ++i) {
        if (i == skip) continue;
        if (best < 0 || std::fabs(v(i)) > std::fabs(v(best))) best = i;
    }
    return best;
}

// Empirical (1-nu) quantile, nearest-rank on the sorted sample.
double upper_quantile(std::vector<double> vals, double nu) {
    std::sort(vals.begin(), vals.end());
    const auto m = static_cast<long long>(vals.size());
    long long k = static_cast<long long>(
        std::ceil((1.0 - nu) * static_cast<double>(m)));
    k = std::clamp<long long>(k, 1, m);
    return vals[k - 1];
}

} // namespace

std::string verdict_name(verdict v) {
    switch (v) {
        case verdict::retain_proportional:
            return "retain-proportional-colocalization";
        case verdict::reject_by_conditional:
            return "reject-by-conditional-test";
        case verdict::reject_no_trait1_signal:
            return "reject-no-trait1-signal";
    }
    return "?";
}

Eigen::MatrixXd selection_context::selector() const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, num_variants());
    s(0, j_star) = 1.0;
    s(1, j_star_star) = 1.0;
    return s;
}

selection_context build_selection(const joint_effects& je) {
    const int j = je.num_variants();
    if (j < 2) throw input_error("lead-variant selection needs J >= 2");
    selection_context sel;
    sel.t_stats = je.t_stats();
    sel.d_gamma = je.d_gamma_diag();
    if (!sel.t_stats.allFinite())
        throw degeneracy_error("non-finite t-statistic in selection");
    sel.j_star = argmax_abs(sel.t_stats.head(j));
    sel.j_star_star = argmax_abs(sel.t_stats.tail(j), sel.j_star);
    return sel;
}

test_result prop_coloc_naive(const joint_effects& je,
                             const selection_context& sel, double nu) {
    if (!(nu > 0.0 && nu < 1.0))
        throw input_error("test level nu must be in (0, 1)");
    gmm_problem p = gmm_problem::from_joint_effects(je);
    gmm_problem star = p.restrict_to({sel.j_star, sel.j_star_star});
    minimize_result m = minimize_q(star);

    test_result r;
    r.method = test_method::naive;
    r.statistic = static_cast<double>(je.n) * m.q_min;
    r.df_or_critical = 1.0;
    r.p_value = chi_sq_upper(1, r.statistic);
    r.eta_hat = m.eta_hat;
    r.reject = r.p_value < nu;
    r.diagnostics["j_star"] = sel.j_star;
    r.diagnostics["j_star_star"] = sel.j_star_star;
    r.diagnostics["bracket"] = m.bracket;
    return r;
}

conditional_machinery build_conditional_machinery(const joint_effects& je,
                                                  const selection_context& sel,
                                                  double eta_eval) {
    const int j = je.num_variants();
    gmm_problem p = gmm_problem::from_joint_effects(je);
    const std::vector<int> idx = {sel.j_star, sel.j_star_star};
    gmm_problem star = p.restrict_to(idx);

    conditional_machinery mach;
    mach.omega_star = omega(star, eta_eval);
    mach.omega_star_inv_sqrt = sym_inv_sqrt(mach.omega_star, "Omega*(eta)");

    mach.g_star_hat = -Eigen::Vector2d(je.gamma2(sel.j_star),
                                       je.gamma2(sel.j_star_star));
    if (mach.g_star_hat.norm() < 1e-10)
        throw degeneracy_error(
            "both selected trait-2 effects are numerically zero; the "
            "conditional projection is degenerate (consider the LM test)");

    Eigen::Vector2d u = mach.omega_star_inv_sqrt * mach.g_star_hat;
    mach.m_star =
        Eigen::Matrix2d::Identity() - (u * u.transpose()) / u.squaredNorm();

    // Covariance of the normalized moment with the full t-vector:
    // C = [S11 - S12'*eta, S12 - S22*eta], rows picked at the lead variants.
    Eigen::MatrixXd c(2, 2 * j);
    for (int r = 0; r < 2; ++r) {
        const int a = idx[r];
        c.row(r).head(j) = p.s11.row(a) - eta_eval * p.s12.col(a).transpose();
        c.row(r).tail(j) = p.s12.row(a) - eta_eval * p.s22.row(a);
    }
    mach.c_star = mach.omega_star_inv_sqrt * c * sel.d_gamma.asDiagonal();

    Eigen::Vector2d z_obs = mach.omega_star_inv_sqrt *
                            (std::sqrt(static_cast<double>(je.n)) *
                             estimating_function(star, eta_eval));
    mach.ell = sel.t_stats - mach.c_star.transpose() * z_obs;
    return mach;
}

test_result prop_coloc_cond(const joint_effects& je, double nu,
                            long long draws, std::uint64_t seed) {
    if (!(nu > 0.0 && nu < 1.0))
        throw input_error("test level nu must be in (0, 1)");
    if (draws < 1000) throw input_error("conditional test needs >= 1000 draws");

    const int j = je.num_variants();
    selection_context sel = build_selection(je);
    gmm_problem star = gmm_problem::from_joint_effects(je).restrict_to(
        {sel.j_star, sel.j_star_star});
    minimize_result m = minimize_q(star);
    const double s_obs = static_cast<double>(je.n) * m.q_min;

    conditional_machinery mach = build_conditional_machinery(je, sel, m.eta_hat);
    const Eigen::VectorXd c0 = mach.c_star.row(0).transpose();
    const Eigen::VectorXd c1 = mach.c_star.row(1).transpose();

    rng_engine rng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> accepted;
    long long total = 0;
    long long target = draws;
    Eigen::VectorXd lk(2 * j);
    while (true) {
        for (; total < target; ++total) {
            const double k0 = gauss(rng);
            const double k1 = gauss(rng);
            lk = mach.ell + c0 * k0 + c1 * k1;
            const double lead1 = std::fabs(lk(sel.j_star));
            bool ok = true;
            for (int a = 0; a < j && ok; ++a)
                if (std::fabs(lk(a)) > lead1) ok = false;
            if (!ok) continue;
            const double lead2 = std::fabs(lk(j + sel.j_star_star));
            for (int a = 0; a < j && ok; ++a)
                if (a != sel.j_star && std::fabs(lk(j + a)) > lead2) ok = false;
            if (!ok) continue;
            const Eigen::Vector2d k(k0, k1);
            accepted.push_back(k.dot(mach.m_star * k));
        }
        if (static_cast<long long>(accepted.size()) >= kMinAccepted ||
            total >= kMaxTotalDraws)
            break;
        target = std::min(2 * total, kMaxTotalDraws);
    }
    const auto n_acc = static_cast<long long>(accepted.size());
    const double acc_rate =
        static_cast<double>(n_acc) / static_cast<double>(total);
    if (n_acc < kMinAccepted)
        throw degeneracy_error(
            "conditional test accepted only " + std::to_string(n_acc) +
            " of " + std::to_string(total) + " draws (acceptance rate " +
            std::to_string(acc_rate) + "); selection event too unlikely");

    const double w_star = upper_quantile(accepted, nu);
    long long exceed = 0;
    for (double v : accepted)
        if (v >= s_obs) ++exceed;

    test_result r;
    r.method = test_method::conditional;
    r.statistic = s_obs;
    r.df_or_critical = w_star;
    r.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + n_acc);
    r.eta_hat = m.eta_hat;
    r.reject = s_obs > w_star;
    r.diagnostics["j_star"] = sel.j_star;
    r.diagnostics["j_star_star"] = sel.j_star_star;
    r.diagnostics["accepted_draws"] = static_cast<double>(n_acc);
    r.diagnostics["total_draws"] = static_cast<double>(total);
    r.diagnostics["acceptance_rate"] = acc_rate;
    return r;
}

test_result lm_test(const joint_effects& je, const selection_context& sel,
                    double nu) {
    if (!(nu > 0.0 && nu < 1.0))
        throw input_error("test level nu must be in (0, 1)");
    gmm_problem star = gmm_problem::from_joint_effects(je).restrict_to(
        {sel.j_star, sel.j_star_star});
    Eigen::Matrix2d om0 = omega(star, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(om0);
    if (es.eigenvalues().minCoeff() <=
        1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw degeneracy_error("Omega*(0) is numerically singular");
    Eigen::Vector2d g_hat = -star.g1; // G* estimate
    Eigen::Vector2d g0 = star.g0;     // g*(0)
    Eigen::Matrix2d om0_inv = om0.inverse();
    const double denom = g_hat.dot(om0_inv * g_hat);
    if (denom < 1e-20)
        throw degeneracy_error(
            "no trait-2 signal at the selected variants; LM test degenerate");
    const double score = g_hat.dot(om0_inv * g0);
    test_result r;
    r.method = test_method::lm;
    r.statistic = static_cast<double>(je.n) * score * score / denom;
    r.df_or_critical = 1.0;
    r.p_value = chi_sq_upper(1, r.statistic);
    r.reject = r.p_value < nu;
    r.diagnostics["j_star"] = sel.j_star;
    r.diagnostics["j_star_star"] = sel.j_star_star;
    return r;
}

verdict combined_verdict(const test_result& cond, const test_result& lm,
                         double nu) {
    if (lm.p_value >= nu) return verdict::reject_no_trait1_signal;
    if (cond.p_value < nu) return verdict::reject_by_conditional;
    return verdict::retain_proportional;
}

} // namespace propcoloc
