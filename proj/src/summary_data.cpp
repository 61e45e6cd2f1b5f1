#include "propcoloc/summary_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "propcoloc/errors.hpp"

namespace propcoloc {

namespace {

constexpr double kDuplicateTol = 1e-12; // |r| >= 1 - tol counts as duplicate

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream iss(line);
    std::vector<std::string> out;
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw input_error("");
        return v;
    } catch (...) {
        throw input_error("failed to parse " + what + ": '" + tok + "'");
    }
}

bool is_numeric_token(const std::string& tok) {
    std::size_t pos = 0;
    try {
        (void)std::stod(tok, &pos);
    } catch (...) {
        return false;
    }
    return pos == tok.size();
}

// Stable strongest-first ranking: larger |z| first, ties by lower index.
std::vector<int> rank_by_strength(const Eigen::VectorXd& abs_z) {
    std::vector<int> idx(abs_z.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return abs_z(a) > abs_z(b); });
    return idx;
}

} // namespace

Eigen::VectorXd summary_dataset::abs_z(int trait) const {
    return (beta.row(trait).array() / se.row(trait).array()).abs().transpose();
}

Eigen::VectorXd summary_dataset::abs_z_max() const {
    return abs_z(0).cwiseMax(abs_z(1));
}

summary_dataset summary_dataset::subset(const std::vector<int>& keep) const {
    summary_dataset out;
    const int m = static_cast<int>(keep.size());
    out.beta.resize(2, m);
    out.se.resize(2, m);
    out.ld.resize(m, m);
    out.variant_ids.reserve(m);
    for (int i = 0; i < m; ++i) {
        out.variant_ids.push_back(variant_ids[keep[i]]);
        out.beta.col(i) = beta.col(keep[i]);
        out.se.col(i) = se.col(keep[i]);
        for (int j = 0; j < m; ++j) out.ld(i, j) = ld(keep[i], keep[j]);
    }
    out.trait_cor = trait_cor;
    out.n = n;
    return out;
}

summary_dataset validate(summary_dataset ds) {
    const int j = ds.num_variants();
    if (j < 1) throw input_error("dataset has no variants");
    if (static_cast<int>(ds.variant_ids.size()) != j ||
        ds.se.cols() != j || ds.ld.rows() != j || ds.ld.cols() != j)
        throw input_error("dimension mismatch between beta/se/ld/variant_ids");
    if (ds.n <= 0) throw input_error("sample size n must be positive");
    if (!(ds.trait_cor > -1.0 && ds.trait_cor < 1.0))
        throw input_error("trait correlation must lie in (-1, 1)");
    if (!ds.beta.allFinite() || !ds.se.allFinite() || !ds.ld.allFinite())
        throw input_error("non-finite entries in beta/se/ld");
    if ((ds.se.array() <= 0.0).any())
        throw input_error("all standard errors must be strictly positive");
    for (int a = 0; a < j; ++a) {
        if (std::fabs(ds.ld(a, a) - 1.0) > 1e-6)
            throw input_error("ld diagonal must be 1 (variant " +
                              ds.variant_ids[a] + ")");
        for (int b = 0; b < j; ++b) {
            if (std::fabs(ds.ld(a, b)) > 1.0 + 1e-9)
                throw input_error("|ld| entry exceeds 1");
            if (std::fabs(ds.ld(a, b) - ds.ld(b, a)) > 1e-6)
                throw input_error("ld matrix asymmetric beyond tolerance");
        }
    }
    ds.ld = ((ds.ld + ds.ld.transpose()) * 0.5).eval();
    for (int a = 0; a < j; ++a) ds.ld(a, a) = 1.0;

    // Exact duplicates would make ld singular; keep the first occurrence.
    std::vector<int> keep;
    for (int a = 0; a < j; ++a) {
        bool dup = false;
        for (int b : keep) {
            if (std::fabs(ds.ld(a, b)) >= 1.0 - kDuplicateTol) {
                dup = true;
                break;
            }
        }
        if (!dup) keep.push_back(a);
    }
    if (static_cast<int>(keep.size()) < j) return ds.subset(keep);
    return ds;
}

summary_dataset load_summary(const std::string& path_assoc,
                             const std::string& path_ld, double trait_cor,
                             long long n) {
    std::ifstream assoc(path_assoc);
    if (!assoc) throw input_error("cannot open association file: " + path_assoc);
    std::string line;
    if (!std::getline(assoc, line))
        throw input_error("association file is empty: " + path_assoc);
    auto header = split_ws(line);
    const std::vector<std::string> expected = {"variant_id", "beta1", "se1",
                                              "beta2", "se2"};
    if (header != expected)
        throw input_error("association file header must be: variant_id beta1 "
                          "se1 beta2 se2");

    std::vector<std::string> ids;
    std::vector<double> b1, s1, b2, s2;
    while (std::getline(assoc, line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok.size() != 5)
            throw input_error("association row has " +
                              std::to_string(tok.size()) + " fields, want 5");
        ids.push_back(tok[0]);
        b1.push_back(parse_double(tok[1], "beta1"));
        s1.push_back(parse_double(tok[2], "se1"));
        b2.push_back(parse_double(tok[3], "beta2"));
        s2.push_back(parse_double(tok[4], "se2"));
    }
    const int j = static_cast<int>(ids.size());
    if (j == 0) throw input_error("association file has no data rows");

    std::ifstream ldf(path_ld);
    if (!ldf) throw input_error("cannot open LD file: " + path_ld);
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(ldf, line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (first && !tok.empty() && !is_numeric_token(tok[0])) {
            // Optional header row of variant ids.
            if (tok != ids)
                throw input_error("LD header ids do not match association "
                                  "file order");
            first = false;
            continue;
        }
        first = false;
        std::vector<double> row;
        row.reserve(tok.size());
        for (const auto& t : tok) row.push_back(parse_double(t, "ld entry"));
        rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != j)
        throw input_error("dimension mismatch: association file has " +
                          std::to_string(j) + " variants but LD file has " +
                          std::to_string(rows.size()) + " rows");
    summary_dataset ds;
    ds.variant_ids = std::move(ids);
    ds.beta.resize(2, j);
    ds.se.resize(2, j);
    ds.ld.resize(j, j);
    for (int a = 0; a < j; ++a) {
        ds.beta(0, a) = b1[a];
        ds.se(0, a) = s1[a];
        ds.beta(1, a) = b2[a];
        ds.se(1, a) = s2[a];
        if (static_cast<int>(rows[a].size()) != j)
            throw input_error("LD row " + std::to_string(a) + " has " +
                              std::to_string(rows[a].size()) +
                              " entries, want " + std::to_string(j));
        for (int b = 0; b < j; ++b) ds.ld(a, b) = rows[a][b];
    }
    ds.trait_cor = trait_cor;
    ds.n = n;
    return validate(std::move(ds));
}

void save_summary(const summary_dataset& ds, const std::string& path_assoc,
                  const std::string& path_ld) {
    std::ofstream assoc(path_assoc);
    if (!assoc) throw input_error("cannot write association file: " + path_assoc);
    assoc << "variant_id\tbeta1\tse1\tbeta2\tse2\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    const int j = ds.num_variants();
    for (int a = 0; a < j; ++a) {
        assoc << ds.variant_ids[a] << '\t' << fmt(ds.beta(0, a)) << '\t'
              << fmt(ds.se(0, a)) << '\t' << fmt(ds.beta(1, a)) << '\t'
              << fmt(ds.se(1, a)) << '\n';
    }
    std::ofstream ldf(path_ld);
    if (!ldf) throw input_error("cannot write LD file: " + path_ld);
    for (int a = 0; a < j; ++a) {
        for (int b = 0; b < j; ++b) {
            if (b) ldf << '\t';
            ldf << fmt(ds.ld(a, b));
        }
        ldf << '\n';
    }
}

summary_dataset prune(const summary_dataset& ds, double r2_threshold) {
    if (!(r2_threshold > 0.0 && r2_threshold <= 1.0))
        throw input_error("prune: r2 threshold must be in (0, 1]");
    auto order = rank_by_strength(ds.abs_z_max());
    std::vector<int> kept;
    for (int cand : order) {
        bool ok = true;
        for (int k : kept) {
            const double r = ds.ld(cand, k);
            if (r * r > r2_threshold || std::fabs(r) >= 1.0 - kDuplicateTol) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(cand);
    }
    std::sort(kept.begin(), kept.end());
    return ds.subset(kept);
}

summary_dataset select_top_k(const summary_dataset& ds, int k) {
    if (k < 2) throw input_error("select_top_k: k must be >= 2");
    const int j = ds.num_variants();
    std::vector<char> chosen(j, 0);
    for (int trait = 0; trait < 2; ++trait) {
        auto order = rank_by_strength(ds.abs_z(trait));
        for (int i = 0; i < std::min(k, j); ++i) chosen[order[i]] = 1;
    }
    std::vector<int> keep;
    for (int a = 0; a < j; ++a)
        if (chosen[a]) keep.push_back(a);
    if (static_cast<int>(keep.size()) < 2)
        throw input_error("select_top_k: fewer than 2 variants retained");
    return ds.subset(keep);
}

std::pair<summary_dataset, bool> order_traits(const summary_dataset& ds) {
    const double strongest1 = ds.abs_z(0).maxCoeff();
    const double strongest2 = ds.abs_z(1).maxCoeff();
    if (strongest1 <= strongest2) return {ds, false};
    summary_dataset out = ds;
    out.beta.row(0).swap(out.beta.row(1));
    out.se.row(0).swap(out.se.row(1));
    return {out, true};
}

} // namespace propcoloc
