#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "divcf/dataset.hpp"
#include "divcf/encoder.hpp"
#include "divcf/rng.hpp"

namespace divcf {

// Bundled corpus: two continuous and two categorical features with a curved
// class boundary (quadratic in income) plus a small rate of flipped labels.
struct SyntheticSpec {
  std::size_t rows = 2000;
  double label_noise = 0.02;
  std::uint64_t seed = 7;
};

inline DatasetSchema synthetic_schema() {
  DatasetSchema s;
  FeatureSchema income{"income", FeatureKind::continuous, {}, 0.0, 100.0, 1, false};
  FeatureSchema hours{"hours", FeatureKind::continuous, {}, 0.0, 80.0, 1, false};
  FeatureSchema education{"education", FeatureKind::categorical,
                          {"HS-grad", "Bachelors", "Masters", "Doctorate"}, 0, 0, 0, true};
  FeatureSchema occupation{"occupation", FeatureKind::categorical,
                           {"Service", "Sales", "Professional", "Blue-Collar"}, 0, 0, 0, false};
  s.features = {income, hours, education, occupation};
  s.label_column = "approved";
  return s;
}

// Noise-free score of the generating process; class 1 iff positive.
inline double synthetic_score(const Row& r) {
  static constexpr std::array<double, 4> edu{0.0, 0.5, 0.8, 1.0};
  static constexpr std::array<double, 4> occ{0.0, 0.2, 0.6, -0.2};
  const double inc = r[0] / 100.0;
  const double hrs = r[1] / 80.0;
  return 3.0 * inc * inc + 1.5 * hrs + edu[static_cast<std::size_t>(r[2])] +
         occ[static_cast<std::size_t>(r[3])] - 2.0;
}

inline Dataset make_synthetic(const SyntheticSpec& spec = {}) {
  Dataset d;
  d.schema = synthetic_schema();
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    Row r(4);
    r[0] = round_to(rng.uniform(0.0, 100.0), 1);
    r[1] = round_to(std::clamp(40.0 + 12.0 * rng.normal(), 0.0, 80.0), 1);
    r[2] = static_cast<double>(rng.index(4));
    r[3] = static_cast<double>(rng.index(4));
    int label = synthetic_score(r) > 0.0 ? 1 : 0;
    if (rng.uniform() < spec.label_noise) label = 1 - label;
    d.rows.push_back(std::move(r));
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace divcf
