#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "divcf/dataset.hpp"
#include "divcf/error.hpp"

namespace divcf {

inline constexpr double kMadFallback = 1.0;

struct ContinuousStats {
  double median = 0.0;
  double mad_raw = kMadFallback;
  double mad_scaled = 1.0;
  // Largest raw deviation the sparsity pass will try to undo.
  double restore_threshold = kMadFallback;
  bool mad_fallback = false;
};

// Indexed by feature; entries for categorical features are default-valued and unused.
struct FeatureStats {
  std::vector<ContinuousStats> features;

  const ContinuousStats& operator[](std::size_t feature) const { return features.at(feature); }
  bool any_fallback() const {
    return std::any_of(features.begin(), features.end(),
                       [](const ContinuousStats& s) { return s.mad_fallback; });
  }
};

inline double median_of(std::vector<double> values) {
  if (values.empty()) throw Undefined("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Nearest-rank percentile: the ceil(q * n)-th smallest element (1-based).
inline double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Undefined("percentile of empty set");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

inline ContinuousStats fit_continuous(const std::vector<double>& values, double range) {
  ContinuousStats s;
  s.median = median_of(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  std::vector<double> nonzero;
  for (double v : values) {
    const double d = std::abs(v - s.median);
    dev.push_back(d);
    if (v != s.median) nonzero.push_back(d);
  }
  s.mad_raw = median_of(dev);
  if (s.mad_raw <= 0.0) {
    s.mad_raw = kMadFallback;
    s.mad_fallback = true;
  }
  s.mad_scaled = s.mad_raw / range;
  s.restore_threshold =
      nonzero.empty() ? s.mad_raw
                      : std::min(s.mad_raw, nearest_rank_percentile(std::move(nonzero), 0.10));
  return s;
}

inline FeatureStats fit_stats(const Dataset& data) {
  if (data.empty()) throw Undefined("fit_stats needs a non-empty dataset");
  FeatureStats stats;
  stats.features.resize(data.schema.size());
  for (std::size_t f = 0; f < data.schema.size(); ++f) {
    const auto& feat = data.schema.features[f];
    if (!feat.is_continuous()) continue;
    std::vector<double> col;
    col.reserve(data.size());
    for (const auto& r : data.rows) col.push_back(r[f]);
    stats.features[f] = fit_continuous(col, feat.max - feat.min);
  }
  return stats;
}

}  // namespace divcf
