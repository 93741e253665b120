// Train a small network on the synthetic corpus and explain one rejection
// with four diverse counterfactuals.

#include <cstdio>

#include "divcf/engine.hpp"
#include "divcf/metrics.hpp"
#include "divcf/synth.hpp"
#include "divcf/train.hpp"

using namespace divcf;

int main() {
  const Dataset data = make_synthetic();
  Rng rng(1);
  auto [train_set, test_set] = train_test_split(data, 0.2, rng);

  const Encoder enc(data.schema);
  TrainConfig cfg;
  cfg.epochs = 60;
  const Classifier model = train(train_set, enc, Architecture::one_hidden(20), cfg);
  const FeatureStats stats = fit_stats(train_set);
  std::printf("test accuracy %.3f\n", accuracy(model, enc, test_set));

  // First held-out applicant the model turns down.
  std::size_t pick = 0;
  while (pick < test_set.size() && model.predict(enc.encode(test_set.rows[pick])) != 0) ++pick;
  if (pick == test_set.size()) return 1;

  CFRequest req;
  req.x = test_set.rows[pick];
  req.k = 4;
  req.frozen_features = {"occupation"};
  const CFSet set = generate(req, model, enc, stats);

  const auto& s = data.schema;
  std::printf("%-10s", "");
  for (const auto& f : s.features) std::printf("%-14s", f.name.c_str());
  std::printf("\n%-10s", "original");
  for (std::size_t f = 0; f < s.size(); ++f) std::printf("%-14s", s.format_value(f, req.x[f]).c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    std::printf("cf %-7zu", i + 1);
    for (std::size_t f = 0; f < s.size(); ++f) {
      const double v = set.examples[i].values[f];
      std::printf("%-14s", v == req.x[f] ? "-" : s.format_value(f, v).c_str());
    }
    std::printf("%s\n", set.examples[i].valid ? "" : "(invalid)");
  }

  const EvalReport rep = evaluate(set, model, enc, stats);
  std::printf("valid %.2f  proximity %.3f  sparsity %.3f\n", rep.percent_valid, rep.cont_proximity,
              rep.sparsity);
  return 0;
}
