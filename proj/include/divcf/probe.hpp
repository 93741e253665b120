#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "divcf/distance.hpp"
#include "divcf/engine.hpp"
#include "divcf/rng.hpp"

namespace divcf {

struct ProbeConfig {
  std::vector<double> radii{0.5, 1.0, 2.0};  // multiples of each feature's MAD
  std::size_t samples_per_sphere = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (radii.empty()) throw ValidationError("probe needs at least one radius", "radii");
    for (double r : radii)
      if (!(r > 0.0)) throw ValidationError("radii must be positive", "radii");
    if (samples_per_sphere == 0)
      throw ValidationError("samples_per_sphere must be positive", "samples_per_sphere");
  }
};

struct RadiusResult {
  double radius = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0, false_positive = 0, false_negative = 0, true_negative = 0;
  std::size_t model_cf_class = 0;        // samples the model assigns to the CF class
  std::size_t model_original_class = 0;  // samples the model assigns to the other class
  double clamp_fraction = 0.0;           // samples with a coordinate clamped to range
};

struct ProbeReport {
  int original_class = 0;
  int cf_class = 1;
  std::size_t training_cfs = 0;
  std::vector<RadiusResult> radii;
};

struct SphereSample {
  std::vector<Row> rows;
  double clamp_fraction = 0.0;
};

// Continuous coordinates fill the Euclidean ball of radius r in MAD-scaled
// units around x, then get clamped to the schema range. Categorical features
// are drawn uniformly and independently over their levels.
inline SphereSample sample_sphere(const Row& x, double r, std::size_t n, const FeatureStats& stats,
                                  const DatasetSchema& schema, Rng& rng) {
  std::vector<std::size_t> cont;
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (schema.features[f].is_continuous()) cont.push_back(f);
  const auto m = static_cast<double>(cont.size());
  SphereSample out;
  out.rows.reserve(n);
  std::size_t clamped = 0;
  std::vector<double> dir(cont.size());
  for (std::size_t s = 0; s < n; ++s) {
    Row row = x;
    bool any_clamped = false;
    if (!cont.empty()) {
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& v : dir) {
          v = rng.normal();
          norm += v * v;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      const double rad = r * std::pow(rng.uniform(), 1.0 / m);
      for (std::size_t i = 0; i < cont.size(); ++i) {
        const auto f = cont[i];
        const auto& feat = schema.features[f];
        const double v = x[f] + rad * dir[i] / norm * stats[f].mad_raw;
        const double c = std::clamp(v, feat.min, feat.max);
        any_clamped = any_clamped || c != v;
        row[f] = c;
      }
    }
    for (std::size_t f = 0; f < schema.size(); ++f)
      if (schema.features[f].is_categorical())
        row[f] = static_cast<double>(rng.index(schema.features[f].levels.size()));
    clamped += any_clamped;
    out.rows.push_back(std::move(row));
  }
  out.clamp_fraction = n ? static_cast<double>(clamped) / static_cast<double>(n) : 0.0;
  return out;
}

struct LabeledRow {
  Row row;
  int label = 0;
};

// Nearest neighbour under dist_cont_raw + dist_cat. Equidistant points resolve
// to original_class.
inline int one_nn_predict(const std::vector<LabeledRow>& training, const Row& query,
                          const DatasetSchema& schema, const FeatureStats& stats,
                          int original_class) {
  if (training.empty()) throw Undefined("1-NN needs at least one training point");
  double best = std::numeric_limits<double>::infinity();
  int label = original_class;
  for (const auto& t : training) {
    const double d = dist_cont_raw(t.row, query, schema, stats) + dist_cat(t.row, query, schema);
    if (d < best) {
      best = d;
      label = t.label;
    } else if (d == best && t.label == original_class) {
      label = original_class;
    }
  }
  return label;
}

inline RadiusResult score_radius(double radius, const std::vector<Row>& samples,
                                 const std::vector<LabeledRow>& training, const Classifier& model,
                                 const Encoder& enc, const FeatureStats& stats, int original_class,
                                 int cf_class) {
  RadiusResult r;
  r.radius = radius;
  for (const auto& s : samples) {
    const bool truth = model.predict(enc.encode(s)) == cf_class;
    const bool pred = one_nn_predict(training, s, enc.schema(), stats, original_class) == cf_class;
    (truth ? r.model_cf_class : r.model_original_class)++;
    if (truth && pred) ++r.true_positive;
    else if (!truth && pred) ++r.false_positive;
    else if (truth && !pred) ++r.false_negative;
    else ++r.true_negative;
  }
  const auto tp = static_cast<double>(r.true_positive);
  const double pp = tp + static_cast<double>(r.false_positive);
  const double ap = tp + static_cast<double>(r.false_negative);
  r.precision = pp > 0 ? tp / pp : 0.0;
  r.recall = ap > 0 ? tp / ap : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

// Scores a 1-NN classifier over {x} and the valid CFs against the model on
// samples drawn from balls of growing radius around x.
inline ProbeReport probe(const Row& x, const CFSet& set, const Classifier& model,
                         const Encoder& enc, const FeatureStats& stats, const ProbeConfig& cfg) {
  cfg.validate();
  ProbeReport rep;
  rep.original_class = model.predict(enc.encode(x));
  rep.cf_class = set.desired_class;
  std::vector<LabeledRow> training{{x, rep.original_class}};
  for (const auto& ex : set.examples)
    if (desired_probability(model, enc.encode(ex.values), set.desired_class) > 0.5)
      training.push_back({ex.values, set.desired_class});
  rep.training_cfs = training.size() - 1;
  if (rep.training_cfs == 0) throw Undefined("probe needs at least one valid counterfactual");
  for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const auto sample =
        sample_sphere(x, cfg.radii[i], cfg.samples_per_sphere, stats, enc.schema(), rng);
    auto res = score_radius(cfg.radii[i], sample.rows, training, model, enc, stats,
                            rep.original_class, rep.cf_class);
    res.clamp_fraction = sample.clamp_fraction;
    rep.radii.push_back(res);
  }
  return rep;
}

}  // namespace divcf
