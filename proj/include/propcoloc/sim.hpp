#ifndef PROPCOLOC_SIM_HPP
#define PROPCOLOC_SIM_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "propcoloc/gmm.hpp"
#include "propcoloc/rng.hpp"
#include "propcoloc/summary_data.hpp"

namespace propcoloc {

enum class sim_design { single_causal, multi_causal };

// One grid point of the size/power experiments.
struct sim_config {
    long long n = 1000;
    int j = 40;
    double rho0 = 0.8;   // LD strength: off-diagonals from aa', a ~ U[0, sqrt(rho0)]
    double xi = 1.0;     // correlation between the two causal variants
    double eta0 = 1.0;   // proportionality constant
    double delta = 0.0;  // non-proportionality (multi_causal only)
    double cov_v = 0.3;  // trait error covariance
    std::optional<int> lambda; // Wishart df for mis-measured LD; absent = exact
    int replicates = 1000;
    std::uint64_t seed = 0;
    sim_design design = sim_design::single_causal;
    // Optional preprocessing applied before testing.
    std::optional<double> prune_r2;
    std::optional<int> top_k;
    long long draws = 10000; // Monte-Carlo draws for the conditional test
    std::vector<test_method> methods; // empty = caller default
};

struct sim_truth {
    Eigen::VectorXd gamma1;
    Eigen::VectorXd gamma2;
    int j1 = -1;
    int j2 = -1;
    Eigen::MatrixXd ld_true;
};

struct ld_draw {
    Eigen::MatrixXd ld;
    int j1 = -1;
    int j2 = -1;
};

struct rejection_row {
    std::string method;
    sim_config config;
    double rejection_rate = 0.0;
    int replicates = 0; // configured replicate count
    int failures = 0;
    double mean_stat = 0.0;
    double mean_acceptance = std::numeric_limits<double>::quiet_NaN();
};

struct rejection_table {
    std::vector<rejection_row> rows;

    std::string to_tsv() const;

    const rejection_row& find(const std::string& method,
                              std::size_t grid_index,
                              std::size_t methods_per_config) const;
};

// Correlation matrix from the aa' construction with the causal-pair entry
// overwritten to xi; redraws a until the matrix is comfortably invertible.
ld_draw gen_ld(const sim_config& config, rng_engine& rng);

// Individual-level generation under the configured design, reduced to the
// summary statistics a GWAS would publish.
std::pair<summary_dataset, sim_truth> gen_dataset(const sim_config& config,
                                                  rng_engine& rng);

// Same generation with the LD matrix, causal indices and effect vectors held
// fixed (for distributional oracles over a fixed instance).
summary_dataset gen_dataset_from_truth(const sim_config& config,
                                       const sim_truth& truth,
                                       rng_engine& rng);

// Effect vectors implied by the design for given causal indices.
void assign_effects(const sim_config& config, sim_truth& truth);

// Bartlett-decomposition Wishart draw with scale ld_true/lambda and df
// lambda; its expectation is ld_true.
Eigen::MatrixXd wishart_draw(const Eigen::MatrixXd& ld_true, int lambda,
                             rng_engine& rng);

// Wishart noise around a true correlation matrix, rescaled back to unit
// diagonal so downstream code still sees a correlation matrix.
Eigen::MatrixXd wishart_perturb(const Eigen::MatrixXd& ld_true, int lambda,
                                rng_engine& rng);

// Runs every grid point for its configured replicate count, recording
// rejection frequencies at nu = 0.05. Deterministic for a fixed grid
// regardless of parallelism: every replicate draws from its own substream
// and results are reduced in replicate order.
rejection_table run_experiment(const std::vector<sim_config>& grid,
                               const std::vector<test_method>& default_methods,
                               int parallelism);

// Grid (de)serialization: JSON array of sim_config objects.
std::vector<sim_config> parse_grid_json(const std::string& text);
std::vector<sim_config> load_grid(const std::string& path);

} // namespace propcoloc

#endif
