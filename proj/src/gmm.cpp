#include "propcoloc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "propcoloc/chi_squared.hpp"
#include "propcoloc/errors.hpp"

namespace propcoloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kGridPoints = 2001;
constexpr double kGoldenTol = 1e-8;
constexpr double kNearBest = 1e-6;
constexpr int kMaxBracketDoublings = 3;

// Criterion evaluation that reports singularity instead of throwing; the
// grid search treats singular points as +inf.
double eval_q(const gmm_problem& p, double eta, long long* floored) {
    Eigen::MatrixXd om = omega(p, eta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(om);
    if (es.info() != Eigen::Success) return kInf;
    const double max_ev = es.eigenvalues().maxCoeff();
    if (!(max_ev > 0.0)) return kInf;
    if (es.eigenvalues().minCoeff() <= 1e-10 * max_ev) return kInf;
    const double floor = 1e-12 * max_ev;
    Eigen::VectorXd g = estimating_function(p, eta);
    Eigen::VectorXd proj = es.eigenvectors().transpose() * g;
    double q = 0.0;
    for (int i = 0; i < proj.size(); ++i) {
        double ev = es.eigenvalues()(i);
        if (ev < floor) {
            ev = floor;
            if (floored) ++(*floored);
        }
        q += proj(i) * proj(i) / ev;
    }
    return q;
}

// Golden-section minimization on [a, b]; assumes a locally unimodal stretch.
std::pair<double, double> golden_section(const gmm_problem& p, double a,
                                         double b, long long* floored) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = eval_q(p, x1, floored);
    double f2 = eval_q(p, x2, floored);
    while (b - a > kGoldenTol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval_q(p, x1, floored);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval_q(p, x2, floored);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace

std::string method_name(test_method m) {
    switch (m) {
        case test_method::full: return "full";
        case test_method::naive: return "naive";
        case test_method::conditional: return "cond";
        case test_method::lm: return "lm";
    }
    return "?";
}

gmm_problem gmm_problem::from_joint_effects(const joint_effects& je) {
    gmm_problem p;
    p.g0 = je.gamma1;
    p.g1 = je.gamma2;
    p.s11 = je.sigma_block(1, 1);
    p.s12 = je.sigma_block(1, 2);
    p.s22 = je.sigma_block(2, 2);
    p.n = je.n;
    p.variant_index_map.resize(je.num_variants());
    for (int i = 0; i < je.num_variants(); ++i) p.variant_index_map[i] = i;
    return p;
}

gmm_problem gmm_problem::restrict_to(const std::vector<int>& idx) const {
    const int m = static_cast<int>(idx.size());
    gmm_problem r;
    r.g0.resize(m);
    r.g1.resize(m);
    r.s11.resize(m, m);
    r.s12.resize(m, m);
    r.s22.resize(m, m);
    r.n = n;
    for (int i = 0; i < m; ++i) {
        r.g0(i) = g0(idx[i]);
        r.g1(i) = g1(idx[i]);
        r.variant_index_map.push_back(variant_index_map[idx[i]]);
        for (int j = 0; j < m; ++j) {
            r.s11(i, j) = s11(idx[i], idx[j]);
            r.s12(i, j) = s12(idx[i], idx[j]);
            r.s22(i, j) = s22(idx[i], idx[j]);
        }
    }
    return r;
}

Eigen::VectorXd estimating_function(const gmm_problem& p, double eta) {
    return p.g0 - p.g1 * eta;
}

Eigen::MatrixXd omega(const gmm_problem& p, double eta) {
    Eigen::MatrixXd om =
        p.s11 - (p.s12 + p.s12.transpose()) * eta + p.s22 * (eta * eta);
    return ((om + om.transpose()) * 0.5).eval();
}

double q_criterion(const gmm_problem& p, double eta) {
    double q = eval_q(p, eta, nullptr);
    if (!std::isfinite(q))
        throw degeneracy_error("Omega(eta) not positive definite at eta = " +
                               std::to_string(eta));
    return q;
}

minimize_result minimize_q(const gmm_problem& p) {
    const double g0_max = p.g0.cwiseAbs().maxCoeff();
    const double g1_max = p.g1.cwiseAbs().maxCoeff();
    double bracket = 10.0 * std::max(1.0, g0_max / std::max(1e-6, g1_max));

    minimize_result res;
    for (int attempt = 0;; ++attempt) {
        std::vector<double> xs(kGridPoints), qs(kGridPoints);
        int best = -1;
        for (int i = 0; i < kGridPoints; ++i) {
            xs[i] = -bracket + 2.0 * bracket * i / (kGridPoints - 1);
            qs[i] = eval_q(p, xs[i], &res.floored_inversions);
            if (std::isfinite(qs[i]) && (best < 0 || qs[i] < qs[best]))
                best = i;
        }
        if (best < 0)
            throw degeneracy_error(
                "criterion singular at every grid point; Omega(eta) never "
                "positive definite on the search bracket");

        const bool at_edge = (best == 0 || best == kGridPoints - 1);
        if (at_edge && attempt < kMaxBracketDoublings) {
            bracket *= 2.0;
            ++res.bracket_doublings;
            continue;
        }

        // Refine around every local minimum within kNearBest of the best
        // grid value; the CUE criterion can have several local minima.
        double best_eta = xs[best];
        double best_q = qs[best];
        for (int i = 0; i < kGridPoints; ++i) {
            if (!std::isfinite(qs[i]) || qs[i] > qs[best] + kNearBest) continue;
            const double left = (i > 0 && std::isfinite(qs[i - 1]))
                                    ? qs[i - 1]
                                    : kInf;
            const double right = (i + 1 < kGridPoints && std::isfinite(qs[i + 1]))
                                     ? qs[i + 1]
                                     : kInf;
            if (qs[i] > left || qs[i] > right) continue;
            const double a = (i > 0) ? xs[i - 1] : xs[i];
            const double b = (i + 1 < kGridPoints) ? xs[i + 1] : xs[i];
            auto [eta, q] = golden_section(p, a, b, &res.floored_inversions);
            if (q < best_q) {
                best_q = q;
                best_eta = eta;
            }
        }
        res.eta_hat = best_eta;
        res.q_min = best_q;
        res.bracket = bracket;
        res.hit_bracket_edge = at_edge;
        return res;
    }
}

test_result prop_coloc_full(const joint_effects& je, double nu) {
    if (!(nu > 0.0 && nu < 1.0))
        throw input_error("test level nu must be in (0, 1)");
    const int j = je.num_variants();
    if (j < 2)
        throw input_error("full test needs at least 2 variants (df = J - 1)");
    gmm_problem p = gmm_problem::from_joint_effects(je);
    minimize_result m = minimize_q(p);

    test_result r;
    r.method = test_method::full;
    r.statistic = static_cast<double>(je.n) * m.q_min;
    r.df_or_critical = j - 1;
    r.p_value = chi_sq_upper(j - 1, r.statistic);
    r.eta_hat = m.eta_hat;
    r.reject = r.p_value < nu;
    r.diagnostics["bracket"] = m.bracket;
    r.diagnostics["bracket_doublings"] = m.bracket_doublings;
    r.diagnostics["hit_bracket_edge"] = m.hit_bracket_edge ? 1.0 : 0.0;
    r.diagnostics["floored_inversions"] =
        static_cast<double>(m.floored_inversions);
    return r;
}

} // namespace propcoloc
