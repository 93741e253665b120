// Generate counterfactuals on a toy census-style table, then drop the ones
// that raise education without the person getting any older.
//
//   sample_constraints_filter [constraints.json]

#include <cstdio>
#include <iostream>

#include "divcf/causal.hpp"
#include "divcf/engine.hpp"
#include "divcf/json_io.hpp"
#include "divcf/train.hpp"

using namespace divcf;

namespace {

DatasetSchema census_schema() {
  DatasetSchema s;
  s.features = {
      {"age", FeatureKind::continuous, {}, 17.0, 90.0, 0, false},
      {"education", FeatureKind::categorical, {"HS-grad", "Bachelors", "Masters", "Doctorate"}, 0, 0, 0, true},
      {"hours", FeatureKind::continuous, {}, 1.0, 99.0, 0, false},
  };
  s.label_column = "income";
  return s;
}

Dataset census(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.schema = census_schema();
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Row r{std::round(rng.uniform(17, 90)), static_cast<double>(rng.index(4)), std::round(rng.uniform(1, 99))};
    const double score = (r[0] - 40) / 15 + r[1] * 0.8 + (r[2] - 40) / 20 - 1.0;
    d.rows.push_back(r);
    d.labels.push_back(score > 0 ? 1 : 0);
  }
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "samples/edu_age_constraints.json";
  const Dataset data = census(1500, 3);
  const Encoder enc(data.schema);
  TrainConfig cfg;
  cfg.epochs = 40;
  const Classifier model = train(data, enc, Architecture::linear(), cfg);
  const FeatureStats stats = fit_stats(data);

  CFRequest req;
  req.x = {28, 0, 35};  // young, HS-grad, part time
  req.k = 6;
  const CFSet set = generate(req, model, enc, stats);

  std::vector<CausalConstraint> constraints;
  try {
    constraints = io::constraints_from_json(io::read_json_file(path), data.schema);
  } catch (const std::exception& e) {
    std::cerr << "cannot load " << path << ": " << e.what() << "\n";
    return 1;
  }
  const FilterResult res = filter(set, constraints, data.schema);

  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    const Row& v = set.examples[i].values;
    std::printf("cf %zu  age %-4s education %-10s hours %-4s  ", i + 1, data.schema.format_value(0, v[0]).c_str(),
                data.schema.format_value(1, v[1]).c_str(), data.schema.format_value(2, v[2]).c_str());
    if (res.violations[i].empty()) std::printf("kept\n");
    for (const auto& viol : res.violations[i]) std::printf("dropped: %s\n", viol.description.c_str());
  }
  std::printf("%zu of %zu feasible\n", res.feasible.size(), set.examples.size());
  return 0;
}
