#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "divcf/distance.hpp"
#include "divcf/engine.hpp"

namespace divcf {

struct EvalReport {
  double percent_valid = 0.0;
  double cont_proximity = 0.0;
  double cat_proximity = 0.0;
  double sparsity = 0.0;
  // Absent when fewer than two examples take part in the pairwise average.
  std::optional<double> cont_diversity;
  std::optional<double> cat_diversity;
  std::optional<double> count_diversity;
  std::size_t k = 0;
  std::size_t num_unique_valid = 0;
};

struct EvalOptions {
  // Pairwise diversity over valid examples only instead of all k.
  bool diversity_valid_only = false;
};

inline std::size_t count_unique_valid(const CFSet& set, const Classifier& model,
                                      const Encoder& enc) {
  std::set<Row> unique;
  for (const auto& ex : set.examples)
    if (desired_probability(model, enc.encode(ex.values), set.desired_class) > 0.5)
      unique.insert(ex.values);
  return unique.size();
}

inline double percent_valid(const CFSet& set, const Classifier& model, const Encoder& enc) {
  if (set.examples.empty()) return 0.0;
  return static_cast<double>(count_unique_valid(set, model, enc)) /
         static_cast<double>(set.examples.size());
}

struct Proximity {
  double cont = 0.0;
  double cat = 1.0;
};

inline Proximity proximity(const CFSet& set, const Row& x, const DatasetSchema& schema,
                           const FeatureStats& stats) {
  Proximity p{0.0, 1.0};
  if (set.examples.empty()) return p;
  double cont = 0.0, cat = 0.0;
  for (const auto& ex : set.examples) {
    cont += dist_cont_raw(ex.values, x, schema, stats);
    cat += dist_cat(ex.values, x, schema);
  }
  const auto k = static_cast<double>(set.examples.size());
  p.cont = -cont / k;
  p.cat = 1.0 - cat / k;
  return p;
}

inline std::size_t count_changes(const Row& a, const Row& b) {
  std::size_t n = 0;
  for (std::size_t f = 0; f < a.size(); ++f) n += a[f] != b[f];
  return n;
}

inline double sparsity(const CFSet& set, const Row& x) {
  if (set.examples.empty()) return 1.0;
  std::size_t changed = 0;
  for (const auto& ex : set.examples) changed += count_changes(ex.values, x);
  return 1.0 - static_cast<double>(changed) /
                   static_cast<double>(set.examples.size() * x.size());
}

struct Diversity {
  std::optional<double> cont, cat, count;
};

inline Diversity diversity(const std::vector<Row>& rows, const DatasetSchema& schema,
                           const FeatureStats& stats) {
  Diversity out;
  const std::size_t k = rows.size();
  if (k < 2) return out;
  double cont = 0.0, cat = 0.0, count = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      cont += dist_cont_raw(rows[i], rows[j], schema, stats);
      cat += dist_cat(rows[i], rows[j], schema);
      count += static_cast<double>(count_changes(rows[i], rows[j]));
    }
  const double pairs = static_cast<double>(k * (k - 1) / 2);
  out.cont = cont / pairs;
  out.cat = cat / pairs;
  out.count = count / (pairs * static_cast<double>(schema.size()));
  return out;
}

inline Diversity diversity(const CFSet& set, const DatasetSchema& schema,
                           const FeatureStats& stats) {
  std::vector<Row> rows;
  for (const auto& ex : set.examples) rows.push_back(ex.values);
  return diversity(rows, schema, stats);
}

inline EvalReport evaluate(const CFSet& set, const Classifier& model, const Encoder& enc,
                           const FeatureStats& stats, const EvalOptions& opts = {}) {
  const auto& schema = enc.schema();
  EvalReport r;
  r.k = set.examples.size();
  r.num_unique_valid = count_unique_valid(set, model, enc);
  r.percent_valid = r.k ? static_cast<double>(r.num_unique_valid) / static_cast<double>(r.k) : 0.0;
  const auto prox = proximity(set, set.original, schema, stats);
  r.cont_proximity = prox.cont;
  r.cat_proximity = prox.cat;
  r.sparsity = sparsity(set, set.original);
  std::vector<Row> rows;
  for (const auto& ex : set.examples)
    if (!opts.diversity_valid_only ||
        desired_probability(model, enc.encode(ex.values), set.desired_class) > 0.5)
      rows.push_back(ex.values);
  const auto div = diversity(rows, schema, stats);
  r.cont_diversity = div.cont;
  r.cat_diversity = div.cat;
  r.count_diversity = div.count;
  return r;
}

}  // namespace divcf
