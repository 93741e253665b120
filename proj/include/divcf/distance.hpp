#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "divcf/encoder.hpp"
#include "divcf/schema.hpp"
#include "divcf/stats.hpp"

namespace divcf {

// Mean MAD-normalized L1 distance over continuous features of two encoded
// vectors, in [0,1]-scaled units. Empty weights mean all ones.
inline double dist_cont(std::span<const double> c, std::span<const double> x,
                        const Encoder& enc, const FeatureStats& stats,
                        std::span<const double> feature_weights = {}) {
  const auto& schema = enc.schema();
  const std::size_t n = schema.num_continuous();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (const auto& b : enc.blocks()) {
    if (b.categorical) continue;
    const double w = feature_weights.empty() ? 1.0 : feature_weights[b.feature];
    s += w * std::abs(c[b.offset] - x[b.offset]) / stats[b.feature].mad_scaled;
  }
  return s / static_cast<double>(n);
}

// Same distance on raw rows with raw-unit MADs; used at evaluation time.
inline double dist_cont_raw(const Row& c, const Row& x, const DatasetSchema& schema,
                            const FeatureStats& stats) {
  const std::size_t n = schema.num_continuous();
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (schema.features[f].is_continuous()) s += std::abs(c[f] - x[f]) / stats[f].mad_raw;
  return s / static_cast<double>(n);
}

// Fraction of categorical features whose levels differ.
inline double dist_cat(const Row& c, const Row& x, const DatasetSchema& schema) {
  const std::size_t n = schema.num_categorical();
  if (n == 0) return 0.0;
  std::size_t diff = 0;
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (schema.features[f].is_categorical() && c[f] != x[f]) ++diff;
  return static_cast<double>(diff) / static_cast<double>(n);
}

// Weighted L1 over encoded coordinates that equals dist_cont plus the relaxed
// categorical distance (half the L1 gap of each one-hot block, averaged over
// blocks). On exact one-hot blocks the categorical part reduces to dist_cat.
class GenerationMetric {
public:
  GenerationMetric() = default;
  GenerationMetric(const Encoder& enc, const FeatureStats& stats,
                   std::span<const double> feature_weights = {}) {
    const auto& schema = enc.schema();
    const auto n_cont = static_cast<double>(schema.num_continuous());
    const auto n_cat = static_cast<double>(schema.num_categorical());
    coef_.assign(enc.width(), 0.0);
    for (const auto& b : enc.blocks()) {
      const double w = feature_weights.empty() ? 1.0 : feature_weights[b.feature];
      if (b.categorical) {
        for (std::size_t j = 0; j < b.width; ++j) coef_[b.offset + j] = w / (2.0 * n_cat);
      } else {
        coef_[b.offset] = w / (stats[b.feature].mad_scaled * n_cont);
      }
    }
  }

  double operator()(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j) s += coef_[j] * std::abs(a[j] - b[j]);
    return s;
  }

  const std::vector<double>& coefficients() const { return coef_; }

private:
  std::vector<double> coef_;
};

}  // namespace divcf
