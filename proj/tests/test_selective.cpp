#include <doctest.h>

#include <cmath>

#include "propcoloc/calibration.hpp"
#include "propcoloc/chi_squared.hpp"
#include "propcoloc/errors.hpp"
#include "propcoloc/rng.hpp"
#include "propcoloc/selective.hpp"
#include "propcoloc/sim.hpp"
#include "test_helpers.hpp"

using namespace propcoloc;
using test_helpers::make_joint_effects;

namespace {

// joint_effects with identity LD and unit Sigma_V whose t-vector equals the
// requested values, so selection outcomes can be scripted exactly.
joint_effects from_t_stats(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                           long long n = 10000) {
    Eigen::Matrix2d sv = Eigen::Matrix2d::Identity();
    const double root_n = std::sqrt(static_cast<double>(n));
    return make_joint_effects(t1 / root_n, t2 / root_n,
                              Eigen::MatrixXd::Identity(t1.size(), t1.size()),
                              sv, n);
}

joint_effects random_joint_effects(int j, rng_engine& rng,
                                   double spread = 0.4) {
    Eigen::MatrixXd ld = test_helpers::random_correlation(j, rng);
    std::uniform_real_distribution<double> unif(-0.4, 0.4);
    Eigen::Matrix2d sv;
    const double c = unif(rng);
    sv << 1.0, c, c, 1.0;
    return make_joint_effects(spread * standard_normal_vector(j, rng),
                              spread * standard_normal_vector(j, rng), ld, sv,
                              5000);
}

} // namespace

TEST_CASE("selection picks the trait-1 lead, then the trait-2 lead among the rest") {
    Eigen::VectorXd t1(3), t2(3);
    t1 << 5, 4, 1;
    t2 << 6, 2, 3;
    selection_context sel = build_selection(from_t_stats(t1, t2));
    CHECK(sel.j_star == 0);
    CHECK(sel.j_star_star == 2); // variant 0 is taken even though |t2| peaks there

    // Signs are ignored.
    t1 << -5, 4, 1;
    t2 << 6, 2, -3;
    sel = build_selection(from_t_stats(t1, t2));
    CHECK(sel.j_star == 0);
    CHECK(sel.j_star_star == 2);

    // Ties resolve to the lowest index.
    t1 << 4, 4, 1;
    t2 << 1, 3, 3;
    sel = build_selection(from_t_stats(t1, t2));
    CHECK(sel.j_star == 0);
    CHECK(sel.j_star_star == 1);

    Eigen::MatrixXd s = sel.selector();
    CHECK(s.rows() == 2);
    CHECK(s.cols() == 3);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
    CHECK(s.sum() == 2.0);
}

TEST_CASE("selection refuses a single variant") {
    Eigen::VectorXd t1(1), t2(1);
    t1 << 3;
    t2 << 2;
    CHECK_THROWS_AS(build_selection(from_t_stats(t1, t2)), input_error);
}

TEST_CASE("naive test equals the full test when J = 2") {
    rng_engine rng = make_engine(101);
    for (int trial = 0; trial < 10; ++trial) {
        joint_effects je = random_joint_effects(2, rng);
        selection_context sel = build_selection(je);
        test_result naive = prop_coloc_naive(je, sel, 0.05);
        test_result full = prop_coloc_full(je, 0.05);
        CHECK(naive.statistic == doctest::Approx(full.statistic).epsilon(1e-8));
        CHECK(*naive.eta_hat == doctest::Approx(*full.eta_hat).epsilon(1e-6));
        CHECK(naive.df_or_critical == 1.0);
    }
}

TEST_CASE("conditional machinery invariants hold on random problems") {
    rng_engine rng = make_engine(103);
    std::uniform_real_distribution<double> unif(-1.5, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        const int j = 2 + static_cast<int>(rng() % 7);
        joint_effects je = random_joint_effects(j, rng);
        selection_context sel = build_selection(je);
        const double eta = unif(rng);
        conditional_machinery mach;
        try {
            mach = build_conditional_machinery(je, sel, eta);
        } catch (const degeneracy_error&) {
            continue; // singular Omega*(eta) for an unlucky eta is legitimate
        }

        // Omega*^{-1/2} really is the inverse square root.
        Eigen::Matrix2d recon = mach.omega_star_inv_sqrt * mach.omega_star *
                                mach.omega_star_inv_sqrt;
        CHECK(recon.isApprox(Eigen::Matrix2d::Identity(), 1e-10));

        // M* is a symmetric idempotent rank-one-deficient projection that
        // annihilates the normalized Jacobian direction.
        CHECK(mach.m_star.isApprox(mach.m_star.transpose(), 1e-12));
        CHECK((mach.m_star * mach.m_star).isApprox(mach.m_star, 1e-10));
        CHECK(mach.m_star.trace() == doctest::Approx(1.0).epsilon(1e-10));
        Eigen::Vector2d u = mach.omega_star_inv_sqrt * mach.g_star_hat;
        CHECK((mach.m_star * u).norm() < 1e-10 * u.norm());

        CHECK(mach.c_star.rows() == 2);
        CHECK(mach.c_star.cols() == 2 * j);
        CHECK(mach.c_star.allFinite());
        CHECK(mach.ell.allFinite());
        CHECK(mach.ell.size() == 2 * j);
    }
}

TEST_CASE("conditional test is bit-reproducible for a fixed seed") {
    // A simulated locus with a genuine lead pair, so the selection event has
    // workable acceptance probability.
    sim_config config;
    config.j = 6;
    config.n = 800;
    config.rho0 = 0.5;
    config.xi = 0.4;
    config.eta0 = 0.5;
    rng_engine rng = make_engine(107);
    joint_effects je = to_joint_effects(gen_dataset(config, rng).first);
    test_result a = prop_coloc_cond(je, 0.05, 5000, 77);
    test_result b = prop_coloc_cond(je, 0.05, 5000, 77);
    CHECK(a.p_value == b.p_value);
    CHECK(a.df_or_critical == b.df_or_critical);
    CHECK(a.diagnostics.at("accepted_draws") == b.diagnostics.at("accepted_draws"));
    CHECK(a.diagnostics.at("total_draws") == b.diagnostics.at("total_draws"));

    // A different seed moves the Monte-Carlo answer only slightly at 1e5 draws.
    test_result c = prop_coloc_cond(je, 0.05, 100000, 78);
    test_result d = prop_coloc_cond(je, 0.05, 100000, 79);
    CHECK(std::fabs(c.p_value - d.p_value) < 0.02);
}

TEST_CASE("conditional test rejects too few draws") {
    rng_engine rng = make_engine(109);
    joint_effects je = random_joint_effects(4, rng);
    CHECK_THROWS_AS(prop_coloc_cond(je, 0.05, 999, 1), input_error);
}

TEST_CASE("overwhelming leads make conditioning vacuous") {
    // With the lead t-statistics around 20 and everything else near zero the
    // selection event has probability about one, so the conditional critical
    // value collapses to the unadjusted chi^2_1 quantile.
    Eigen::VectorXd t1 = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd t2 = Eigen::VectorXd::Zero(6);
    t1(1) = 20.0;
    t1(4) = 0.3;
    t2(1) = 8.0;  // proportional to t1 at the selected pair (eta = 2.5)
    t2(4) = 0.12;
    joint_effects je = from_t_stats(t1, t2, 10000);
    test_result r = prop_coloc_cond(je, 0.05, 200000, 11);
    CHECK(r.diagnostics.at("j_star") == 1.0);
    CHECK(r.diagnostics.at("j_star_star") == 4.0);
    CHECK(r.diagnostics.at("acceptance_rate") > 0.99);
    CHECK(*r.eta_hat == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(r.statistic < 1e-8);
    CHECK(std::fabs(r.df_or_critical - chi_sq_quantile(1, 0.05)) < 0.15);
}

TEST_CASE("LM test reduces to the squared lead t-statistic in the clean case") {
    // Identity LD, unit Sigma_V, trait-2 signal only at the trait-1 lead:
    // the score statistic collapses to t1(j_star)^2.
    const long long n = 4000;
    Eigen::VectorXd t1(3), t2(3);
    t1 << 3.1, 1.0, 0.5;
    t2 << 5.0, 0.0, 0.0;
    joint_effects je = from_t_stats(t1, t2, n);
    selection_context sel = build_selection(je);
    REQUIRE(sel.j_star == 0);
    test_result r = lm_test(je, sel, 0.05);
    CHECK(r.statistic == doctest::Approx(t1(0) * t1(0)).epsilon(1e-10));
    CHECK(r.p_value ==
          doctest::Approx(chi_sq_upper(1, t1(0) * t1(0))).epsilon(1e-10));
    CHECK(r.reject);
}

TEST_CASE("LM test degenerates without trait-2 signal") {
    Eigen::VectorXd t1(3), t2(3);
    t1 << 3.0, 1.0, 0.5;
    t2 << 0.0, 0.0, 0.0;
    joint_effects je = from_t_stats(t1, t2);
    selection_context sel = build_selection(je);
    CHECK_THROWS_AS(lm_test(je, sel, 0.05), degeneracy_error);
}

TEST_CASE("combined verdict") {
    test_result cond, lm;

    lm.p_value = 0.50; // no evidence of trait-1 signal through eta
    cond.p_value = 0.001;
    CHECK(combined_verdict(cond, lm, 0.05) == verdict::reject_no_trait1_signal);

    lm.p_value = 0.001;
    cond.p_value = 0.01;
    CHECK(combined_verdict(cond, lm, 0.05) == verdict::reject_by_conditional);

    cond.p_value = 0.40;
    CHECK(combined_verdict(cond, lm, 0.05) == verdict::retain_proportional);
}

TEST_CASE("verdict names are stable") {
    CHECK(verdict_name(verdict::retain_proportional) ==
          "retain-proportional-colocalization");
    CHECK(verdict_name(verdict::reject_by_conditional) ==
          "reject-by-conditional-test");
    CHECK(verdict_name(verdict::reject_no_trait1_signal) ==
          "reject-no-trait1-signal");
}
