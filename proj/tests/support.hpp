#pragma once

// Small fixtures shared by the unit tests.

#include <cmath>
#include <string>
#include <vector>

#include "divcf/dataset.hpp"
#include "divcf/encoder.hpp"
#include "divcf/model.hpp"
#include "divcf/rng.hpp"
#include "divcf/schema.hpp"
#include "divcf/stats.hpp"

namespace divcf::testing {

inline FeatureSchema cont(std::string name, double lo, double hi, int decimals = 4) {
  FeatureSchema f;
  f.name = std::move(name);
  f.kind = FeatureKind::continuous;
  f.min = lo;
  f.max = hi;
  f.decimals = decimals;
  return f;
}

inline FeatureSchema cat(std::string name, std::vector<std::string> levels) {
  FeatureSchema f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  f.levels = std::move(levels);
  return f;
}

// Random schema with n_cont continuous and n_cat categorical features, interleaved.
inline DatasetSchema random_schema(Rng& rng, std::size_t n_cont, std::size_t n_cat) {
  DatasetSchema s;
  std::size_t c = 0, k = 0;
  while (c < n_cont || k < n_cat) {
    const bool pick_cont = k >= n_cat || (c < n_cont && rng.uniform() < 0.5);
    if (pick_cont) {
      const double lo = std::floor(rng.uniform(-50.0, 50.0));
      s.features.push_back(cont("c" + std::to_string(c++), lo, lo + 1.0 + std::floor(rng.uniform(0.0, 200.0)), 2));
    } else {
      std::vector<std::string> levels;
      const std::size_t n = 2 + rng.index(4);
      for (std::size_t l = 0; l < n; ++l) levels.push_back("L" + std::to_string(l));
      s.features.push_back(cat("k" + std::to_string(k++), levels));
    }
  }
  return s;
}

// Schema-conforming row with continuous values on the feature's decimal grid.
inline Row random_row(Rng& rng, const DatasetSchema& s) {
  Row r(s.size());
  for (std::size_t f = 0; f < s.size(); ++f) {
    const auto& feat = s.features[f];
    if (feat.is_categorical()) {
      r[f] = static_cast<double>(rng.index(feat.levels.size()));
    } else {
      const double scale = std::pow(10.0, feat.decimals);
      r[f] = std::clamp(std::round(rng.uniform(feat.min, feat.max) * scale) / scale, feat.min,
                        feat.max);
    }
  }
  return r;
}

inline Classifier random_linear(Rng& rng, std::size_t width, double spread = 2.0) {
  Classifier m(Architecture::linear(), width);
  for (auto& w : m.output_weights()) w = rng.uniform(-spread, spread);
  m.output_bias() = rng.uniform(-1.0, 1.0);
  return m;
}

inline Classifier random_ann(Rng& rng, std::size_t width, std::size_t hidden) {
  Classifier m(Architecture::one_hidden(hidden), width);
  for (auto& w : m.hidden_weights()) w = rng.uniform(-1.5, 1.5);
  for (auto& b : m.hidden_bias()) b = rng.uniform(-0.5, 0.5);
  for (auto& w : m.output_weights()) w = rng.uniform(-2.0, 2.0);
  m.output_bias() = rng.uniform(-0.5, 0.5);
  return m;
}

// Stats fitted on n random rows of the schema.
inline FeatureStats random_stats(Rng& rng, const DatasetSchema& s, std::size_t n = 200) {
  Dataset d;
  d.schema = s;
  for (std::size_t i = 0; i < n; ++i) {
    d.rows.push_back(random_row(rng, s));
    d.labels.push_back(static_cast<int>(i % 2));
  }
  return fit_stats(d);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace divcf::testing
