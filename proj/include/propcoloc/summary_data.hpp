#ifndef PROPCOLOC_SUMMARY_DATA_HPP
#define PROPCOLOC_SUMMARY_DATA_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace propcoloc {

// Per-variant univariable association summaries for two traits, plus the
// variant correlation (LD) matrix and metadata. Row k of beta/se is trait k.
struct summary_dataset {
    std::vector<std::string> variant_ids;
    Eigen::Matrix<double, 2, Eigen::Dynamic> beta;
    Eigen::Matrix<double, 2, Eigen::Dynamic> se;
    Eigen::MatrixXd ld; // signed correlations, unit diagonal
    double trait_cor = 0.0;
    long long n = 0;

    int num_variants() const { return static_cast<int>(beta.cols()); }

    // |beta/se| for trait k (row index 0 or 1); monotone in the inverse of
    // the univariable p-value, so all rankings go through this.
    Eigen::VectorXd abs_z(int trait) const;

    // Largest |z| over the two traits, per variant.
    Eigen::VectorXd abs_z_max() const;

    summary_dataset subset(const std::vector<int>& keep) const;
};

// Validates invariants (dimensions, finiteness, se > 0, |ld| <= 1 + 1e-9,
// symmetry within 1e-6, unit diagonal), symmetrizes small asymmetry, and
// drops exact-duplicate variants (|r| = 1), keeping the first occurrence.
// Throws input_error on violation.
summary_dataset validate(summary_dataset ds);

// Reads the association TSV (header variant_id beta1 se1 beta2 se2) and the
// J x J LD matrix file (optional leading header row of variant ids).
summary_dataset load_summary(const std::string& path_assoc,
                             const std::string& path_ld, double trait_cor,
                             long long n);

// Writes the two files in the format load_summary reads, at full precision
// so that a write-then-read round trip is bit-identical.
void save_summary(const summary_dataset& ds, const std::string& path_assoc,
                  const std::string& path_ld);

// Greedy stepwise pruning: variants ranked by strongest univariable
// association over either trait; a variant is kept only if its squared
// correlation with every already-kept variant is <= r2_threshold.
// Output preserves original variant order.
summary_dataset prune(const summary_dataset& ds, double r2_threshold);

// Union of the k variants with smallest univariable p-values per trait.
summary_dataset select_top_k(const summary_dataset& ds, int k);

// Ensures the trait carrying the overall strongest association is trait 2.
// Returns the (possibly trait-swapped) dataset and whether a swap happened.
std::pair<summary_dataset, bool> order_traits(const summary_dataset& ds);

} // namespace propcoloc

#endif
