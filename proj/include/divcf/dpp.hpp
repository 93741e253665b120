#pragma once

#include <span>
#include <vector>

#include "divcf/linalg.hpp"
#include "divcf/rng.hpp"

namespace divcf {

inline constexpr double kDiagonalJitter = 1e-4;

// Per-candidate diagonal perturbations drawn from uniform(0, kDiagonalJitter).
inline std::vector<double> diagonal_jitter(std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> eps(k);
  for (auto& e : eps) e = kDiagonalJitter * rng.uniform();
  return eps;
}

// K_ij = 1 / (1 + dist(c_i, c_j)) with jitter added to the diagonal.
template <class Metric>
SquareMatrix dpp_kernel(std::span<const std::vector<double>> cands, const Metric& dist,
                        std::span<const double> jitter) {
  const std::size_t k = cands.size();
  SquareMatrix K(k);
  for (std::size_t i = 0; i < k; ++i) {
    K(i, i) = 1.0 + (jitter.empty() ? 0.0 : jitter[i]);
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = 1.0 / (1.0 + dist(cands[i], cands[j]));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

template <class Metric>
SquareMatrix dpp_kernel(std::span<const std::vector<double>> cands, const Metric& dist,
                        std::uint64_t seed) {
  const auto eps = diagonal_jitter(cands.size(), seed);
  return dpp_kernel(cands, dist, std::span<const double>(eps));
}

inline double dpp_diversity(const SquareMatrix& K) { return determinant(K); }

}  // namespace divcf
