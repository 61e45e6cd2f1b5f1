#ifndef PROPCOLOC_RNG_HPP
#define PROPCOLOC_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace propcoloc {

using rng_engine = std::mt19937_64;

// splitmix64 finalizer; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic substream seed for (master seed, grid index, replicate index).
// Each replicate gets its own engine so results do not depend on how
// replicates are scheduled across threads.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return s;
}

inline rng_engine make_engine(std::uint64_t master, std::uint64_t a = 0,
                              std::uint64_t b = 0) {
    return rng_engine(substream_seed(master, a, b));
}

inline Eigen::VectorXd standard_normal_vector(int n, rng_engine& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
}

inline Eigen::MatrixXd standard_normal_matrix(int rows, int cols, rng_engine& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

} // namespace propcoloc

#endif
