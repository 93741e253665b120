#pragma once

#include <cmath>
#include <vector>

#include "divcf/dataset.hpp"
#include "divcf/encoder.hpp"
#include "divcf/error.hpp"
#include "divcf/model.hpp"
#include "divcf/rng.hpp"

namespace divcf {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool oversample_minority = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(step_size > 0.0)) throw ValidationError("step size must be positive", "step_size");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must be in [0,1)", "beta1");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must be in [0,1)", "beta2");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive", "epsilon");
    if (batch_size == 0) throw ValidationError("batch size must be positive", "batch_size");
  }
};

// One epoch's visiting order. With oversampling, the minority class is topped
// up by sampling with replacement until both classes appear equally often.
inline std::vector<std::size_t> epoch_order(const std::vector<int>& labels, bool oversample,
                                            Rng& rng) {
  std::vector<std::size_t> order;
  order.reserve(labels.size() * 2);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  order.insert(order.end(), pos.begin(), pos.end());
  order.insert(order.end(), neg.begin(), neg.end());
  if (oversample && !pos.empty() && !neg.empty() && pos.size() != neg.size()) {
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const std::size_t extra = std::max(pos.size(), neg.size()) - minority.size();
    for (std::size_t i = 0; i < extra; ++i) order.push_back(minority[rng.index(minority.size())]);
  }
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

namespace detail {

struct Adam {
  Adam(std::size_t n, const TrainConfig& c) : m(n, 0.0), v(n, 0.0), cfg(c) {}

  void step(std::vector<double*>& params, const std::vector<double>& grad) {
    ++t;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < grad.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      *params[i] -= cfg.step_size * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + cfg.epsilon);
    }
  }

  std::vector<double> m, v;
  TrainConfig cfg;
  std::size_t t = 0;
};

}  // namespace detail

// Minibatch Adam on the logistic (cross-entropy) loss over encoded rows.
inline Classifier train(const Dataset& data, const Encoder& encoder, Architecture arch,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Undefined("cannot train on an empty dataset");
  if (data.count_label(0) == 0 || data.count_label(1) == 0)
    throw Undefined("training data must contain both classes");

  const std::size_t d = encoder.width();
  std::vector<Vec> xs;
  xs.reserve(data.size());
  for (const auto& r : data.rows) xs.push_back(encoder.encode(r));

  Classifier model(arch, d);
  Rng rng(cfg.seed);
  if (!model.is_linear()) {
    const double lim1 = std::sqrt(6.0 / static_cast<double>(d + arch.hidden));
    for (auto& w : model.hidden_weights()) w = rng.uniform(-lim1, lim1);
    const double lim2 = std::sqrt(6.0 / static_cast<double>(arch.hidden + 1));
    for (auto& w : model.output_weights()) w = rng.uniform(-lim2, lim2);
  }

  std::vector<double*> params;
  for (auto& w : model.hidden_weights()) params.push_back(&w);
  for (auto& w : model.hidden_bias()) params.push_back(&w);
  for (auto& w : model.output_weights()) params.push_back(&w);
  params.push_back(&model.output_bias());
  const std::size_t nh = model.hidden_weights().size();
  const std::size_t nb = model.hidden_bias().size();
  const std::size_t no = model.output_weights().size();

  detail::Adam adam(params.size(), cfg);
  std::vector<double> grad(params.size());
  std::vector<double> pre(arch.hidden);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(data.labels, cfg.oversample_minority, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t s = start; s < end; ++s) {
        const Vec& x = xs[order[s]];
        const double err = (model.probability(x) - data.labels[order[s]]) * inv;
        if (model.is_linear()) {
          for (std::size_t j = 0; j < d; ++j) grad[j] += err * x[j];
        } else {
          for (std::size_t u = 0; u < arch.hidden; ++u) {
            pre[u] = model.hidden_pre(u, x);
            if (pre[u] <= 0.0) continue;
            const double back = err * model.output_weights()[u];
            for (std::size_t j = 0; j < d; ++j) grad[u * d + j] += back * x[j];
            grad[nh + u] += back;
            grad[nh + nb + u] += err * pre[u];
          }
        }
        grad[nh + nb + no] += err;
      }
      adam.step(params, grad);
    }
  }
  if (!model.finite()) throw Undefined("training diverged to non-finite parameters");
  model.set_encoder_fingerprint(encoder.fingerprint());
  return model;
}

inline double accuracy(const Classifier& model, const Encoder& encoder, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    hit += model.predict(encoder.encode(data.rows[i])) == data.labels[i];
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace divcf
