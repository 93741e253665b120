#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "divcf/distance.hpp"
#include "divcf/dpp.hpp"
#include "divcf/encoder.hpp"
#include "divcf/error.hpp"
#include "divcf/model.hpp"
#include "divcf/rng.hpp"
#include "divcf/stats.hpp"

namespace divcf {

enum class DiversityMode { dpp, off };
enum class InitMode { joint, independent_restarts };

struct BoxConstraint {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const BoxConstraint&) const = default;
};

inline constexpr double kOneHotPenalty = 100.0;
inline constexpr double kConvergenceTolerance = 1e-4;
inline constexpr std::size_t kConvergencePatience = 10;

struct CFRequest {
  Row x;
  std::size_t k = 4;
  std::optional<int> desired_class;  // default: opposite of the model's prediction on x
  double lambda1 = 0.5;
  double lambda2 = 1.0;
  std::map<std::string, double> feature_weights;  // missing features weigh 1
  std::set<std::string> frozen_features;
  std::map<std::string, BoxConstraint> box_constraints;  // raw units, continuous only
  double learning_rate = 0.05;
  std::size_t max_steps = 5000;
  std::uint64_t seed = 0;
  DiversityMode diversity_mode = DiversityMode::dpp;
  InitMode init_mode = InitMode::joint;
  bool post_hoc_sparsity = false;
  double onehot_penalty = kOneHotPenalty;

  bool operator==(const CFRequest&) const = default;

  void validate(const DatasetSchema& schema) const {
    if (k == 0) throw ValidationError("k must be at least 1", "k");
    if (!(lambda1 >= 0.0)) throw ValidationError("lambda1 must be non-negative", "lambda1");
    if (!(lambda2 >= 0.0)) throw ValidationError("lambda2 must be non-negative", "lambda2");
    if (!(learning_rate > 0.0))
      throw ValidationError("learning_rate must be positive", "learning_rate");
    if (!(onehot_penalty >= 0.0))
      throw ValidationError("onehot_penalty must be non-negative", "onehot_penalty");
    if (desired_class && *desired_class != 0 && *desired_class != 1)
      throw ValidationError("desired_class must be 0 or 1", "desired_class");
    try {
      schema.validate_row(x);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("instance: ") + e.what(), "x." + e.field());
    }
    for (const auto& name : frozen_features)
      if (!schema.index_of(name))
        throw ValidationError("frozen feature '" + name + "' not in schema", "frozen_features");
    for (const auto& [name, w] : feature_weights) {
      if (!schema.index_of(name))
        throw ValidationError("weighted feature '" + name + "' not in schema", "feature_weights");
      if (!(w > 0.0 && std::isfinite(w)))
        throw ValidationError("weight of '" + name + "' must be positive", "feature_weights");
    }
    for (const auto& [name, box] : box_constraints) {
      auto idx = schema.index_of(name);
      if (!idx) throw ValidationError("box on unknown feature '" + name + "'", "box_constraints");
      const auto& f = schema.features[*idx];
      if (!f.is_continuous())
        throw ValidationError("box on categorical feature '" + name + "'", "box_constraints");
      if (!(box.lo <= box.hi) || box.lo < f.min || box.hi > f.max)
        throw ValidationError("box for '" + name + "' must satisfy min <= lo <= hi <= max",
                              "box_constraints");
    }
  }
};

struct CFExample {
  Vec encoded;
  Row values;
  double desired_probability = 0.0;
  bool valid = false;
  bool operator==(const CFExample&) const = default;
};

struct LossBreakdown {
  double total = 0.0;
  double yloss = 0.0;      // mean hinge loss
  double proximity = 0.0;  // mean generation distance to x
  double diversity = 0.0;  // det of the jittered kernel
  double onehot = 0.0;     // sum of squared one-hot violations
  bool operator==(const LossBreakdown&) const = default;
};

struct Diagnostics {
  LossBreakdown loss;
  std::size_t steps = 0;
  bool converged = false;
  bool operator==(const Diagnostics&) const = default;
};

struct CFSet {
  Row original;
  int desired_class = 1;
  std::vector<CFExample> examples;
  Diagnostics diagnostics;
  bool operator==(const CFSet&) const = default;
};

inline double hinge_yloss(double logit_value, int y) {
  const double z = y == 1 ? 1.0 : -1.0;
  return std::max(0.0, 1.0 - z * logit_value);
}

inline double desired_probability(const Classifier& model, std::span<const double> enc, int y) {
  const double p = model.probability(enc);
  return y == 1 ? p : 1.0 - p;
}

inline int resolve_desired_class(const CFRequest& req, const Classifier& model,
                                 const Encoder& enc) {
  if (req.desired_class) return *req.desired_class;
  return 1 - model.predict(enc.encode(req.x));
}

// Everything combined_loss and loss_gradient need, resolved once per request.
class LossContext {
public:
  LossContext(const Classifier& model, const Encoder& enc, const FeatureStats& stats,
              const CFRequest& req, std::size_t k, std::span<const double> jitter)
      : model_(&model), enc_(&enc) {
    const auto& schema = enc.schema();
    x_ = enc.encode(req.x);
    y_ = resolve_desired_class(req, model, enc);
    lambda1_ = req.lambda1;
    lambda2_ = req.diversity_mode == DiversityMode::off ? 0.0 : req.lambda2;
    rho_ = req.onehot_penalty;
    std::vector<double> weights(schema.size(), 1.0);
    for (const auto& [name, w] : req.feature_weights) weights[schema.require_index(name)] = w;
    metric_ = GenerationMetric(enc, stats, weights);

    frozen_.assign(enc.width(), false);
    lower_.assign(enc.width(), 0.0);
    upper_.assign(enc.width(), 1.0);
    for (const auto& name : req.frozen_features) {
      const auto& b = enc.block(schema.require_index(name));
      for (std::size_t j = 0; j < b.width; ++j) frozen_[b.offset + j] = true;
    }
    for (const auto& [name, box] : req.box_constraints) {
      const auto f = schema.require_index(name);
      const auto& b = enc.block(f);
      lower_[b.offset] = std::max(0.0, enc.scale(f, box.lo));
      upper_[b.offset] = std::min(1.0, enc.scale(f, box.hi));
    }
    if (jitter.size() != k) throw ValidationError("jitter length must equal k");
    jitter_.assign(jitter.begin(), jitter.end());
  }

  const Classifier& model() const { return *model_; }
  const Encoder& encoder() const { return *enc_; }
  const Vec& x() const { return x_; }
  int desired_class() const { return y_; }
  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  double rho() const { return rho_; }
  const GenerationMetric& metric() const { return metric_; }
  const std::vector<bool>& frozen() const { return frozen_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<double>& jitter() const { return jitter_; }

  // Frozen coordinates pinned to x, the rest clamped to [0,1] and any box.
  void project(Vec& c) const {
    for (std::size_t j = 0; j < c.size(); ++j)
      c[j] = frozen_[j] ? x_[j] : std::clamp(c[j], lower_[j], upper_[j]);
  }

private:
  const Classifier* model_;
  const Encoder* enc_;
  Vec x_;
  int y_ = 1;
  double lambda1_ = 0.5, lambda2_ = 1.0, rho_ = kOneHotPenalty;
  GenerationMetric metric_;
  std::vector<bool> frozen_;
  std::vector<double> lower_, upper_;
  std::vector<double> jitter_;
};

inline LossBreakdown combined_loss(std::span<const Vec> cands, const LossContext& ctx) {
  const auto k = static_cast<double>(cands.size());
  LossBreakdown out;
  for (const auto& c : cands) {
    out.yloss += hinge_yloss(ctx.model().logit(c), ctx.desired_class());
    out.proximity += ctx.metric()(c, ctx.x());
    for (const auto& b : ctx.encoder().blocks()) {
      if (!b.categorical) continue;
      double s = -1.0;
      for (std::size_t j = 0; j < b.width; ++j) s += c[b.offset + j];
      out.onehot += s * s;
    }
  }
  out.yloss /= k;
  out.proximity /= k;
  out.diversity = dpp_diversity(dpp_kernel(cands, ctx.metric(), std::span(ctx.jitter())));
  out.total = out.yloss + ctx.lambda1() * out.proximity - ctx.lambda2() * out.diversity +
              ctx.rho() * out.onehot;
  return out;
}

namespace detail {
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace detail

// Analytic (sub)gradient of combined_loss with respect to every candidate.
inline std::vector<Vec> loss_gradient(std::span<const Vec> cands, const LossContext& ctx) {
  const std::size_t k = cands.size();
  const std::size_t d = ctx.x().size();
  const auto kd = static_cast<double>(k);
  const auto& coef = ctx.metric().coefficients();
  const double z = ctx.desired_class() == 1 ? 1.0 : -1.0;
  std::vector<Vec> grad(k, Vec(d, 0.0));

  for (std::size_t i = 0; i < k; ++i) {
    const Vec& c = cands[i];
    Vec& g = grad[i];
    if (1.0 - z * ctx.model().logit(c) > 0.0) {
      const Vec mg = ctx.model().input_gradient(c);
      for (std::size_t j = 0; j < d; ++j) g[j] -= z * mg[j] / kd;
    }
    const double prox_scale = ctx.lambda1() / kd;
    for (std::size_t j = 0; j < d; ++j)
      g[j] += prox_scale * coef[j] * detail::sign(c[j] - ctx.x()[j]);
    for (const auto& b : ctx.encoder().blocks()) {
      if (!b.categorical) continue;
      double s = -1.0;
      for (std::size_t j = 0; j < b.width; ++j) s += c[b.offset + j];
      for (std::size_t j = 0; j < b.width; ++j) g[b.offset + j] += 2.0 * ctx.rho() * s;
    }
  }

  if (ctx.lambda2() != 0.0 && k > 1) {
    const SquareMatrix K = dpp_kernel(cands, ctx.metric(), std::span(ctx.jitter()));
    const SquareMatrix adj = adjugate(K);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t l = i + 1; l < k; ++l) {
        // d det / d dist_il, through both K_il and K_li.
        const double ddet = -(adj(i, l) + adj(l, i)) * K(i, l) * K(i, l);
        const double scale = -ctx.lambda2() * ddet;
        for (std::size_t j = 0; j < d; ++j) {
          const double v = scale * coef[j] * detail::sign(cands[i][j] - cands[l][j]);
          grad[i][j] += v;
          grad[l][j] -= v;
        }
      }
  }

  for (auto& g : grad)
    for (std::size_t j = 0; j < d; ++j)
      if (ctx.frozen()[j]) g[j] = 0.0;
  return grad;
}

namespace detail {

inline CFExample finalize_candidate(const Vec& cand, const CFRequest& req, const Encoder& enc,
                                    const Classifier& model, int y) {
  const auto& schema = enc.schema();
  Vec proj = cand;
  enc.project_categorical(proj);
  Row row = enc.decode(proj);
  for (const auto& [name, box] : req.box_constraints) {
    const auto f = schema.require_index(name);
    row[f] = std::clamp(row[f], box.lo, box.hi);
  }
  for (const auto& name : req.frozen_features) {
    const auto f = schema.require_index(name);
    row[f] = req.x[f];
  }
  CFExample ex;
  ex.encoded = enc.encode(row);
  ex.values = std::move(row);
  ex.desired_probability = desired_probability(model, ex.encoded, y);
  ex.valid = ex.desired_probability > 0.5;
  return ex;
}

struct RunResult {
  std::vector<Vec> cands;
  std::size_t steps = 0;
  bool converged = false;
};

// Projected Adam over k candidates jointly. The first half of the step
// budget optimizes the relaxed encoding. Without convergence by then the
// categorical blocks get snapped to their argmax level and held there, and the
// continuous coordinates use the remaining steps.
inline RunResult optimize(const LossContext& ctx, std::size_t k, const CFRequest& req,
                          std::uint64_t init_seed) {
  const std::size_t d = ctx.x().size();
  const auto& enc = ctx.encoder();
  Rng rng(init_seed);
  RunResult run;
  run.cands.assign(k, Vec(d, 0.0));
  for (auto& c : run.cands) {
    for (auto& v : c) v = rng.uniform();
    ctx.project(c);
  }

  auto all_valid = [&] {
    for (const auto& c : run.cands) {
      Vec p = c;
      enc.project_categorical(p);
      if (!(desired_probability(ctx.model(), p, ctx.desired_class()) > 0.5)) return false;
    }
    return true;
  };

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<bool> held(d, false);
  const std::size_t relaxed_budget = req.max_steps - req.max_steps / 2;
  bool snapped = false;

  std::vector<Vec> m(k, Vec(d, 0.0)), v(k, Vec(d, 0.0));
  double prev = combined_loss(run.cands, ctx).total;
  std::size_t stable = 0;
  double b1t = 1.0, b2t = 1.0;

  for (std::size_t step = 1; step <= req.max_steps; ++step) {
    if (!snapped && step > relaxed_budget) {
      snapped = true;
      for (auto& c : run.cands) enc.project_categorical(c);
      for (const auto& b : enc.blocks())
        if (b.categorical)
          for (std::size_t j = 0; j < b.width; ++j) held[b.offset + j] = true;
      for (auto& row : m) std::fill(row.begin(), row.end(), 0.0);
      for (auto& row : v) std::fill(row.begin(), row.end(), 0.0);
      b1t = b2t = 1.0;
      prev = combined_loss(run.cands, ctx).total;
      stable = 0;
    }
    const auto grad = loss_gradient(run.cands, ctx);
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (held[j]) continue;
        const double g = grad[i][j];
        m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g;
        v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g * g;
        const double mh = m[i][j] / (1.0 - b1t);
        const double vh = v[i][j] / (1.0 - b2t);
        run.cands[i][j] -= req.learning_rate * mh / (std::sqrt(vh) + eps);
      }
      ctx.project(run.cands[i]);
    }
    run.steps = step;
    const double loss = combined_loss(run.cands, ctx).total;
    stable = std::abs(loss - prev) < kConvergenceTolerance ? stable + 1 : 0;
    prev = loss;
    if (stable >= kConvergencePatience && all_valid()) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace detail

// Greedily moves continuous features back to x's values, smallest raw
// deviation first, keeping each move only if the example stays valid.
// Only features whose deviation is below their restore threshold are tried.
inline CFExample enhance_sparsity(const CFExample& cf, const Row& x, const Classifier& model,
                                  const Encoder& enc, const FeatureStats& stats, int y) {
  if (!cf.valid) return cf;
  const auto& schema = enc.schema();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!schema.features[f].is_continuous()) continue;
    const double dev = std::abs(cf.values[f] - x[f]);
    if (dev > 0.0 && dev < stats[f].restore_threshold) order.emplace_back(dev, f);
  }
  std::sort(order.begin(), order.end());
  CFExample out = cf;
  for (const auto& [dev, f] : order) {
    Row trial = out.values;
    trial[f] = x[f];
    Vec enc_trial = enc.encode(trial);
    const double p = desired_probability(model, enc_trial, y);
    if (p > 0.5) {
      out.values = std::move(trial);
      out.encoded = std::move(enc_trial);
      out.desired_probability = p;
    }
  }
  out.valid = out.desired_probability > 0.5;
  return out;
}

inline void check_fingerprint(const Classifier& model, const Encoder& enc) {
  if (!model.encoder_fingerprint().empty() && model.encoder_fingerprint() != enc.fingerprint())
    throw FingerprintMismatch("model was trained with a different encoder (fingerprint " +
                              model.encoder_fingerprint() + " vs " + enc.fingerprint() + ")");
  if (model.input_width() != enc.width())
    throw FingerprintMismatch("model input width does not match encoder width");
}

// Generates k counterfactuals for req.x. Never throws on non-convergence;
// such candidates come back with valid=false and diagnostics.converged=false.
inline CFSet generate(const CFRequest& req, const Classifier& model, const Encoder& enc,
                      const FeatureStats& stats) {
  check_fingerprint(model, enc);
  req.validate(enc.schema());

  CFSet out;
  out.original = req.x;
  out.desired_class = resolve_desired_class(req, model, enc);

  std::vector<Vec> finals;
  if (req.init_mode == InitMode::joint) {
    const auto jitter = diagonal_jitter(req.k, derive_seed(req.seed, 1));
    LossContext ctx(model, enc, stats, req, req.k, jitter);
    auto run = detail::optimize(ctx, req.k, req, derive_seed(req.seed, 0));
    out.diagnostics.steps = run.steps;
    out.diagnostics.converged = run.converged;
    finals = std::move(run.cands);
  } else {
    // Independent single-candidate runs; restart 0 shares the joint-mode seed.
    CFRequest single = req;
    single.k = 1;
    single.diversity_mode = DiversityMode::off;
    const auto jitter = diagonal_jitter(1, derive_seed(req.seed, 1));
    LossContext ctx(model, enc, stats, single, 1, jitter);
    out.diagnostics.converged = true;
    for (std::size_t i = 0; i < req.k; ++i) {
      const auto init_seed =
          i == 0 ? derive_seed(req.seed, 0) : derive_seed(derive_seed(req.seed, 2), i);
      auto run = detail::optimize(ctx, 1, single, init_seed);
      out.diagnostics.steps = std::max(out.diagnostics.steps, run.steps);
      out.diagnostics.converged = out.diagnostics.converged && run.converged;
      finals.push_back(std::move(run.cands.front()));
    }
  }

  for (const auto& c : finals) {
    auto ex = detail::finalize_candidate(c, req, enc, model, out.desired_class);
    if (req.post_hoc_sparsity) ex = enhance_sparsity(ex, req.x, model, enc, stats, out.desired_class);
    out.examples.push_back(std::move(ex));
  }

  // Loss terms of the returned set, with the same kernel jitter as optimization.
  CFRequest diag_req = req;
  if (req.init_mode == InitMode::independent_restarts) diag_req.diversity_mode = DiversityMode::off;
  const auto jitter = diagonal_jitter(req.k, derive_seed(req.seed, 1));
  LossContext diag(model, enc, stats, diag_req, req.k, jitter);
  std::vector<Vec> encoded;
  for (const auto& ex : out.examples) encoded.push_back(ex.encoded);
  out.diagnostics.loss = combined_loss(encoded, diag);
  return out;
}

}  // namespace divcf
