#include <doctest.h>

#include <cmath>

#include "propcoloc/errors.hpp"
#include "propcoloc/rng.hpp"
#include "propcoloc/sim.hpp"
#include "test_helpers.hpp"

using namespace propcoloc;

TEST_CASE("gen_ld geometry") {
    sim_config config;
    config.j = 12;

    SUBCASE("rho0 = 0 gives identity off the causal pair") {
        config.rho0 = 0.0;
        config.xi = 0.6;
        rng_engine rng = make_engine(201);
        ld_draw d = gen_ld(config, rng);
        CHECK(d.j1 != d.j2);
        for (int a = 0; a < config.j; ++a)
            for (int b = 0; b < config.j; ++b) {
                if (a == b)
                    CHECK(d.ld(a, b) == 1.0);
                else if ((a == d.j1 && b == d.j2) || (a == d.j2 && b == d.j1))
                    CHECK(d.ld(a, b) == 0.6);
                else
                    CHECK(d.ld(a, b) == 0.0);
            }
    }

    SUBCASE("rho0 = 0.8 keeps off-diagonals in [0, 0.8] and the matrix PD") {
        config.rho0 = 0.8;
        config.xi = 0.4;
        rng_engine rng = make_engine(202);
        for (int trial = 0; trial < 10; ++trial) {
            ld_draw d = gen_ld(config, rng);
            CHECK(d.ld.isApprox(d.ld.transpose()));
            CHECK((d.ld.diagonal().array() == 1.0).all());
            for (int a = 0; a < config.j; ++a)
                for (int b = a + 1; b < config.j; ++b) {
                    CHECK(d.ld(a, b) >= 0.0);
                    CHECK(d.ld(a, b) <= 0.8 + 1e-12);
                }
            CHECK(d.ld(d.j1, d.j2) == 0.4);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.ld);
            CHECK(es.eigenvalues().minCoeff() > 1e-6);
        }
    }

    SUBCASE("xi = 1 collapses the causal pair to one index") {
        config.xi = 1.0;
        rng_engine rng = make_engine(203);
        for (int trial = 0; trial < 5; ++trial) {
            ld_draw d = gen_ld(config, rng);
            CHECK(d.j1 == d.j2);
        }
    }

    SUBCASE("parameter validation") {
        rng_engine rng = make_engine(204);
        config.rho0 = 1.0;
        CHECK_THROWS_AS(gen_ld(config, rng), input_error);
        config.rho0 = 0.5;
        config.xi = 1.5;
        CHECK_THROWS_AS(gen_ld(config, rng), input_error);
    }
}

TEST_CASE("assign_effects encodes the null and the violation") {
    sim_config config;
    config.j = 8;
    sim_truth truth;
    truth.j1 = 2;
    truth.j2 = 5;

    SUBCASE("single-causal: proportional pattern, eta0 = 0 silences trait 1") {
        config.eta0 = 0.7;
        assign_effects(config, truth);
        CHECK(truth.gamma1(2) == 0.5 * 0.7);
        CHECK(truth.gamma2(5) == 0.5);
        CHECK(truth.gamma1.cwiseAbs().sum() == 0.5 * 0.7);
        CHECK(truth.gamma2.cwiseAbs().sum() == 0.5);

        config.eta0 = 0.0;
        assign_effects(config, truth);
        CHECK(truth.gamma1.isZero());
        CHECK(truth.gamma2(5) == 0.5);
    }

    SUBCASE("multi-causal: delta = 0 is exactly proportional") {
        config.design = sim_design::multi_causal;
        config.eta0 = 0.5;
        config.delta = 0.0;
        assign_effects(config, truth);
        CHECK(truth.gamma1.isApprox(config.eta0 * truth.gamma2, 1e-15));

        config.delta = 0.2;
        assign_effects(config, truth);
        CHECK(truth.gamma2(2) == 0.5 * 0.8);
        CHECK(truth.gamma2(5) == 0.5 * 1.2);
        CHECK(truth.gamma1(2) == 0.5 * 1.2 * 0.5);
        CHECK(truth.gamma1(5) == 0.5 * 0.8 * 0.5);
        // delta > 0 breaks proportionality.
        CHECK(truth.gamma1(2) / truth.gamma2(2) !=
              truth.gamma1(5) / truth.gamma2(5));
    }

    SUBCASE("multi-causal needs two distinct causal variants") {
        config.design = sim_design::multi_causal;
        truth.j2 = truth.j1;
        CHECK_THROWS_AS(assign_effects(config, truth), input_error);
    }
}

TEST_CASE("wishart draws center on the true LD and tighten with lambda") {
    rng_engine rng = make_engine(211);
    Eigen::MatrixXd ld = test_helpers::random_correlation(3, rng);

    const int reps = 2000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
    double err20 = 0.0, err200 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Eigen::MatrixXd w = wishart_draw(ld, 20, rng);
        mean += w;
        err20 += (w - ld).norm();
        err200 += (wishart_draw(ld, 200, rng) - ld).norm();
    }
    mean /= reps;
    CHECK((mean - ld).cwiseAbs().maxCoeff() < 0.03);
    CHECK(err200 < err20); // more degrees of freedom, less noise

    Eigen::MatrixXd p = wishart_perturb(ld, 50, rng);
    CHECK((p.diagonal().array() == 1.0).all());
    CHECK(p.isApprox(p.transpose()));

    CHECK_THROWS_AS(wishart_draw(ld, 3, rng), input_error);
}

TEST_CASE("run_experiment is invariant to the level of parallelism") {
    sim_config a;
    a.n = 400;
    a.j = 8;
    a.rho0 = 0.5;
    a.xi = 1.0;
    a.eta0 = 1.0;
    a.replicates = 24;
    a.seed = 2024;
    a.draws = 2000;

    sim_config b = a;
    b.xi = 0.4;
    b.eta0 = 0.5;
    b.prune_r2 = 0.6;
    b.seed = 2025;

    const std::vector<sim_config> grid = {a, b};
    const std::vector<test_method> methods = {
        test_method::full, test_method::naive, test_method::conditional,
        test_method::lm};
    rejection_table one = run_experiment(grid, methods, 1);
    rejection_table eight = run_experiment(grid, methods, 8);
    REQUIRE(one.rows.size() == 8);
    CHECK(one.to_tsv() == eight.to_tsv());

    const rejection_row& row = one.find("cond", 1, methods.size());
    CHECK(row.method == "cond");
    CHECK(row.config.xi == 0.4);
    CHECK(row.replicates == 24);
    CHECK_THROWS_AS(one.find("bogus", 0, methods.size()), input_error);
}

TEST_CASE("grid JSON parsing") {
    const std::string text = R"([
        {"n": 500, "j": 12, "rho0": 0.6, "xi": 0.3, "eta0": 0.5,
         "delta": 0.2, "design": "multi_causal", "replicates": 7,
         "seed": 99, "lambda": 80, "prune_r2": 0.1, "top_k": 10,
         "draws": 5000, "methods": ["full", "cond"]},
        {}
    ])";
    std::vector<sim_config> grid = parse_grid_json(text);
    REQUIRE(grid.size() == 2);
    CHECK(grid[0].n == 500);
    CHECK(grid[0].j == 12);
    CHECK(grid[0].rho0 == 0.6);
    CHECK(grid[0].xi == 0.3);
    CHECK(grid[0].eta0 == 0.5);
    CHECK(grid[0].delta == 0.2);
    CHECK(grid[0].design == sim_design::multi_causal);
    CHECK(grid[0].replicates == 7);
    CHECK(grid[0].seed == 99);
    REQUIRE(grid[0].lambda.has_value());
    CHECK(*grid[0].lambda == 80);
    REQUIRE(grid[0].prune_r2.has_value());
    CHECK(*grid[0].prune_r2 == 0.1);
    REQUIRE(grid[0].top_k.has_value());
    CHECK(*grid[0].top_k == 10);
    CHECK(grid[0].draws == 5000);
    REQUIRE(grid[0].methods.size() == 2);
    CHECK(grid[0].methods[0] == test_method::full);
    CHECK(grid[0].methods[1] == test_method::conditional);

    // The empty object takes every default.
    CHECK(grid[1].n == 1000);
    CHECK(grid[1].j == 40);
    CHECK_FALSE(grid[1].lambda.has_value());
    CHECK(grid[1].methods.empty());

    CHECK_THROWS_AS(parse_grid_json("not json"), input_error);
    CHECK_THROWS_AS(parse_grid_json("[]"), input_error);
    CHECK_THROWS_AS(parse_grid_json("{\"n\": 3}"), input_error);
    CHECK_THROWS_AS(parse_grid_json(R"([{"design": "x"}])"), input_error);
    CHECK_THROWS_AS(parse_grid_json(R"([{"methods": ["x"]}])"), input_error);
}
