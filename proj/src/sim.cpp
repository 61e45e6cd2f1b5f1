#include "propcoloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "propcoloc/errors.hpp"
#include "propcoloc/joint_effects.hpp"
#include "propcoloc/selective.hpp"

namespace propcoloc {

namespace {

constexpr double kSimNu = 0.05;

std::string design_name(sim_design d) {
    return d == sim_design::single_causal ? "single_causal" : "multi_causal";
}

test_method method_from_name(const std::string& s) {
    if (s == "full") return test_method::full;
    if (s == "naive") return test_method::naive;
    if (s == "cond") return test_method::conditional;
    if (s == "lm") return test_method::lm;
    throw input_error("unknown method: " + s);
}

struct rep_outcome {
    bool failed = false;
    bool reject = false;
    double statistic = 0.0;
    double acceptance = std::numeric_limits<double>::quiet_NaN();
};

} // namespace

ld_draw gen_ld(const sim_config& config, rng_engine& rng) {
    const int j = config.j;
    if (j < 2) throw input_error("gen_ld: need at least 2 variants");
    if (!(config.rho0 >= 0.0 && config.rho0 < 1.0))
        throw input_error("gen_ld: rho0 must be in [0, 1)");
    if (!(config.xi >= 0.0 && config.xi <= 1.0))
        throw input_error("gen_ld: xi must be in [0, 1]");

    ld_draw out;
    std::uniform_int_distribution<int> pick(0, j - 1);
    out.j1 = pick(rng);
    if (config.xi == 1.0) {
        // Perfectly correlated causal variants are represented by a shared
        // index; a duplicated column would make the matrix singular.
        out.j2 = out.j1;
    } else {
        do {
            out.j2 = pick(rng);
        } while (out.j2 == out.j1);
    }

    std::uniform_real_distribution<double> unif(0.0, std::sqrt(config.rho0));
    for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::VectorXd a(j);
        for (int i = 0; i < j; ++i) a(i) = unif(rng);
        Eigen::MatrixXd ld = a * a.transpose();
        ld.diagonal().setOnes();
        if (out.j2 != out.j1) {
            ld(out.j1, out.j2) = config.xi;
            ld(out.j2, out.j1) = config.xi;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ld);
        if (es.eigenvalues().minCoeff() > 1e-6) {
            out.ld = std::move(ld);
            return out;
        }
    }
    throw input_error(
        "gen_ld: no positive-definite correlation matrix in 100 attempts "
        "(xi may be inconsistent with the rho0 geometry)");
}

void assign_effects(const sim_config& config, sim_truth& truth) {
    const int j = config.j;
    truth.gamma1 = Eigen::VectorXd::Zero(j);
    truth.gamma2 = Eigen::VectorXd::Zero(j);
    if (config.design == sim_design::single_causal) {
        // H0 (gamma1 = gamma2 * eta0) holds exactly when the causal variants
        // coincide (xi = 1); eta0 = 0 leaves trait 1 with no signal.
        truth.gamma1(truth.j1) = 0.5 * config.eta0;
        truth.gamma2(truth.j2) = 0.5;
    } else {
        if (truth.j1 == truth.j2)
            throw input_error("multi_causal design requires xi < 1");
        if (!(config.delta >= 0.0 && config.delta <= 1.0))
            throw input_error("delta must be in [0, 1]");
        truth.gamma2(truth.j1) = 0.5 * (1.0 - config.delta);
        truth.gamma2(truth.j2) = 0.5 * (1.0 + config.delta);
        truth.gamma1(truth.j1) = 0.5 * (1.0 + config.delta) * config.eta0;
        truth.gamma1(truth.j2) = 0.5 * (1.0 - config.delta) * config.eta0;
    }
}

std::pair<summary_dataset, sim_truth> gen_dataset(const sim_config& config,
                                                  rng_engine& rng) {
    sim_truth truth;
    ld_draw ld = gen_ld(config, rng);
    truth.j1 = ld.j1;
    truth.j2 = ld.j2;
    truth.ld_true = std::move(ld.ld);
    assign_effects(config, truth);
    return {gen_dataset_from_truth(config, truth, rng), std::move(truth)};
}

summary_dataset gen_dataset_from_truth(const sim_config& config,
                                       const sim_truth& truth,
                                       rng_engine& rng) {
    const int j = config.j;
    const auto n = static_cast<int>(config.n);
    if (n < 10) throw input_error("gen_dataset: sample size too small");

    // Individual-level data: Z ~ N(0, rho), V ~ N(0, Sigma_V), zero intercepts.
    Eigen::LLT<Eigen::MatrixXd> llt(truth.ld_true);
    if (llt.info() != Eigen::Success)
        throw degeneracy_error("gen_dataset: Cholesky of true LD failed");
    Eigen::MatrixXd z =
        standard_normal_matrix(n, j, rng) * llt.matrixL().transpose();

    Eigen::Matrix2d sigma_v;
    sigma_v << 1.0, config.cov_v, config.cov_v, 1.0;
    Eigen::LLT<Eigen::Matrix2d> vllt(sigma_v);
    Eigen::MatrixXd v =
        standard_normal_matrix(n, 2, rng) * vllt.matrixL().transpose();

    Eigen::VectorXd x1 = z * truth.gamma1 + v.col(0);
    Eigen::VectorXd x2 = z * truth.gamma2 + v.col(1);

    summary_dataset ds;
    ds.variant_ids.reserve(j);
    ds.beta.resize(2, j);
    ds.se.resize(2, j);
    char buf[32];
    for (int a = 0; a < j; ++a) {
        std::snprintf(buf, sizeof(buf), "v%03d", a + 1);
        ds.variant_ids.emplace_back(buf);
    }

    // Per-variant univariable regressions with intercept; homoscedastic SEs.
    Eigen::RowVectorXd z_mean = z.colwise().mean();
    Eigen::MatrixXd zc = z.rowwise() - z_mean;
    Eigen::VectorXd sxx = zc.colwise().squaredNorm();
    for (int trait = 0; trait < 2; ++trait) {
        const Eigen::VectorXd& x = trait == 0 ? x1 : x2;
        Eigen::VectorXd xc = x.array() - x.mean();
        const double syy = xc.squaredNorm();
        Eigen::VectorXd sxy = zc.transpose() * xc;
        for (int a = 0; a < j; ++a) {
            const double beta = sxy(a) / sxx(a);
            const double rss = syy - beta * sxy(a);
            ds.beta(trait, a) = beta;
            ds.se(trait, a) = std::sqrt(std::max(rss, 1e-300) /
                                        ((n - 2) * sxx(a)));
        }
    }

    // Sample correlation matrix of Z and sample trait correlation.
    Eigen::VectorXd z_sd = sxx.cwiseSqrt();
    ds.ld = (zc.transpose() * zc).eval();
    ds.ld.array() /= (z_sd * z_sd.transpose()).array();
    ds.ld = ((ds.ld + ds.ld.transpose()) * 0.5).eval();
    ds.ld.diagonal().setOnes();

    Eigen::VectorXd x1c = x1.array() - x1.mean();
    Eigen::VectorXd x2c = x2.array() - x2.mean();
    ds.trait_cor = x1c.dot(x2c) / (x1c.norm() * x2c.norm());
    ds.n = config.n;
    return validate(std::move(ds));
}

Eigen::MatrixXd wishart_draw(const Eigen::MatrixXd& ld_true, int lambda,
                             rng_engine& rng) {
    const int j = static_cast<int>(ld_true.rows());
    if (lambda <= j)
        throw input_error("wishart_draw: lambda <= J gives a rank-deficient "
                          "draw; need lambda >= J + 1");
    Eigen::LLT<Eigen::MatrixXd> llt(ld_true);
    if (llt.info() != Eigen::Success)
        throw degeneracy_error("wishart_draw: ld_true not positive definite");

    // Bartlett decomposition: W = L A A' L' / lambda has mean ld_true.
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(j, j);
    for (int r = 0; r < j; ++r) {
        std::chi_squared_distribution<double> chi(lambda - r);
        a(r, r) = std::sqrt(chi(rng));
        for (int c = 0; c < r; ++c) a(r, c) = gauss(rng);
    }
    Eigen::MatrixXd la = llt.matrixL() * a;
    return la * la.transpose() / static_cast<double>(lambda);
}

Eigen::MatrixXd wishart_perturb(const Eigen::MatrixXd& ld_true, int lambda,
                                rng_engine& rng) {
    Eigen::MatrixXd w = wishart_draw(ld_true, lambda, rng);
    Eigen::VectorXd d = w.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = d.asDiagonal() * w * d.asDiagonal();
    r = ((r + r.transpose()) * 0.5).eval();
    r.diagonal().setOnes();
    return r;
}

namespace {

rep_outcome run_one(const sim_config& config, std::size_t grid_index,
                    int rep, test_method method) {
    rep_outcome out;
    try {
        rng_engine rng = make_engine(config.seed, grid_index, rep);
        auto [ds, truth] = gen_dataset(config, rng);
        if (config.lambda)
            ds.ld = wishart_perturb(truth.ld_true, *config.lambda, rng);
        const std::uint64_t cond_seed = rng();
        if (config.prune_r2) ds = prune(ds, *config.prune_r2);
        if (config.top_k) ds = select_top_k(ds, *config.top_k);
        if (ds.num_variants() < 2) {
            // Preprocessing can collapse the panel under noisy LD; that is a
            // property of the replicate, not a configuration mistake.
            out.failed = true;
            return out;
        }
        joint_effects je = to_joint_effects(ds);

        test_result r;
        switch (method) {
            case test_method::full:
                r = prop_coloc_full(je, kSimNu);
                break;
            case test_method::naive:
                r = prop_coloc_naive(je, build_selection(je), kSimNu);
                break;
            case test_method::conditional:
                r = prop_coloc_cond(je, kSimNu, config.draws, cond_seed);
                out.acceptance = r.diagnostics.at("acceptance_rate");
                break;
            case test_method::lm:
                r = lm_test(je, build_selection(je), kSimNu);
                break;
        }
        out.reject = r.reject;
        out.statistic = r.statistic;
    } catch (const degeneracy_error&) {
        out.failed = true;
    }
    return out;
}

} // namespace

rejection_table run_experiment(const std::vector<sim_config>& grid,
                               const std::vector<test_method>& default_methods,
                               int parallelism) {
    if (grid.empty()) throw input_error("empty simulation grid");
    if (parallelism < 1) parallelism = 1;

    rejection_table table;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const sim_config& config = grid[gi];
        if (config.replicates < 1)
            throw input_error("replicates must be >= 1");
        const std::vector<test_method>& methods =
            config.methods.empty() ? default_methods : config.methods;
        if (methods.empty()) throw input_error("no methods requested");

        for (test_method method : methods) {
            std::vector<rep_outcome> outcomes(config.replicates);
            const int workers =
                std::min<int>(parallelism, config.replicates);
            if (workers <= 1) {
                for (int rep = 0; rep < config.replicates; ++rep)
                    outcomes[rep] = run_one(config, gi, rep, method);
            } else {
                std::vector<std::thread> pool;
                pool.reserve(workers);
                for (int w = 0; w < workers; ++w) {
                    pool.emplace_back([&, w] {
                        for (int rep = w; rep < config.replicates;
                             rep += workers)
                            outcomes[rep] = run_one(config, gi, rep, method);
                    });
                }
                for (auto& t : pool) t.join();
            }

            // Ordered reduction so the table is identical at any parallelism.
            rejection_row row;
            row.method = method_name(method);
            row.config = config;
            row.replicates = config.replicates;
            long long rejects = 0, ok = 0;
            double stat_sum = 0.0, acc_sum = 0.0;
            long long acc_count = 0;
            for (const auto& o : outcomes) {
                if (o.failed) {
                    ++row.failures;
                    continue;
                }
                ++ok;
                rejects += o.reject ? 1 : 0;
                stat_sum += o.statistic;
                if (std::isfinite(o.acceptance)) {
                    acc_sum += o.acceptance;
                    ++acc_count;
                }
            }
            row.rejection_rate =
                ok > 0 ? static_cast<double>(rejects) / ok : 0.0;
            row.mean_stat = ok > 0 ? stat_sum / ok : 0.0;
            if (acc_count > 0) row.mean_acceptance = acc_sum / acc_count;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string rejection_table::to_tsv() const {
    std::ostringstream os;
    os << "method\tdesign\tn\tJ\txi\teta0\tdelta\tlambda\trejection_rate\t"
          "replicates\tfailures\tmean_stat\tmean_acceptance\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        if (std::isnan(v)) return std::string("NA");
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        os << row.method << '\t' << design_name(row.config.design) << '\t'
           << row.config.n << '\t' << row.config.j << '\t'
           << fmt(row.config.xi) << '\t' << fmt(row.config.eta0) << '\t'
           << fmt(row.config.delta) << '\t'
           << (row.config.lambda ? std::to_string(*row.config.lambda)
                                 : std::string("NA"))
           << '\t' << fmt(row.rejection_rate) << '\t' << row.replicates
           << '\t' << row.failures << '\t' << fmt(row.mean_stat) << '\t'
           << fmt(row.mean_acceptance) << '\n';
    }
    return os.str();
}

const rejection_row& rejection_table::find(const std::string& method,
                                           std::size_t grid_index,
                                           std::size_t methods_per_config) const {
    const std::size_t base = grid_index * methods_per_config;
    for (std::size_t i = base; i < std::min(rows.size(), base + methods_per_config); ++i)
        if (rows[i].method == method) return rows[i];
    throw input_error("rejection_table: no row for method " + method);
}

std::vector<sim_config> parse_grid_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed grid JSON: ") + e.what());
    }
    if (!doc.is_array() || doc.empty())
        throw input_error("grid JSON must be a non-empty array of configs");

    std::vector<sim_config> grid;
    for (const auto& item : doc) {
        if (!item.is_object())
            throw input_error("grid entries must be JSON objects");
        sim_config c;
        try {
            if (item.contains("n")) c.n = item.at("n").get<long long>();
            if (item.contains("j")) c.j = item.at("j").get<int>();
            if (item.contains("rho0")) c.rho0 = item.at("rho0").get<double>();
            if (item.contains("xi")) c.xi = item.at("xi").get<double>();
            if (item.contains("eta0")) c.eta0 = item.at("eta0").get<double>();
            if (item.contains("delta")) c.delta = item.at("delta").get<double>();
            if (item.contains("cov_v")) c.cov_v = item.at("cov_v").get<double>();
            if (item.contains("lambda") && !item.at("lambda").is_null())
                c.lambda = item.at("lambda").get<int>();
            if (item.contains("replicates"))
                c.replicates = item.at("replicates").get<int>();
            if (item.contains("seed"))
                c.seed = item.at("seed").get<std::uint64_t>();
            if (item.contains("design")) {
                const auto d = item.at("design").get<std::string>();
                if (d == "single_causal")
                    c.design = sim_design::single_causal;
                else if (d == "multi_causal")
                    c.design = sim_design::multi_causal;
                else
                    throw input_error("unknown design: " + d);
            }
            if (item.contains("prune_r2") && !item.at("prune_r2").is_null())
                c.prune_r2 = item.at("prune_r2").get<double>();
            if (item.contains("top_k") && !item.at("top_k").is_null())
                c.top_k = item.at("top_k").get<int>();
            if (item.contains("draws"))
                c.draws = item.at("draws").get<long long>();
            if (item.contains("methods"))
                for (const auto& m : item.at("methods"))
                    c.methods.push_back(method_from_name(m.get<std::string>()));
        } catch (const nlohmann::json::exception& e) {
            throw input_error(std::string("bad grid entry: ") + e.what());
        }
        grid.push_back(std::move(c));
    }
    return grid;
}

std::vector<sim_config> load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open grid file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_grid_json(ss.str());
}

} // namespace propcoloc
