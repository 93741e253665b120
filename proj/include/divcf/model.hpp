#pragma once

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "divcf/encoder.hpp"
#include "divcf/error.hpp"

namespace divcf {

struct Architecture {
  enum class Kind { linear, one_hidden };
  Kind kind = Kind::linear;
  std::size_t hidden = 0;  // one_hidden only; activation is ReLU

  static Architecture linear() { return {Kind::linear, 0}; }
  static Architecture one_hidden(std::size_t h) { return {Kind::one_hidden, h}; }

  bool operator==(const Architecture&) const = default;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary classifier over encoded vectors. The output is a single logit;
// P(class 1) = sigmoid(logit) and the predicted class is 1 iff P > 0.5.
class Classifier {
public:
  Classifier() = default;

  Classifier(Architecture arch, std::size_t input_width)
      : arch_(arch), input_width_(input_width) {
    if (input_width == 0) throw ValidationError("classifier input width must be positive");
    if (arch.kind == Architecture::Kind::one_hidden) {
      if (arch.hidden == 0) throw ValidationError("one_hidden needs at least one hidden unit");
      hidden_w_.assign(arch.hidden * input_width, 0.0);
      hidden_b_.assign(arch.hidden, 0.0);
      out_w_.assign(arch.hidden, 0.0);
    } else {
      out_w_.assign(input_width, 0.0);
    }
  }

  const Architecture& architecture() const { return arch_; }
  std::size_t input_width() const { return input_width_; }
  bool is_linear() const { return arch_.kind == Architecture::Kind::linear; }

  // Row-major hidden_units x input_width.
  std::vector<double>& hidden_weights() { return hidden_w_; }
  const std::vector<double>& hidden_weights() const { return hidden_w_; }
  std::vector<double>& hidden_bias() { return hidden_b_; }
  const std::vector<double>& hidden_bias() const { return hidden_b_; }
  std::vector<double>& output_weights() { return out_w_; }
  const std::vector<double>& output_weights() const { return out_w_; }
  double& output_bias() { return out_b_; }
  double output_bias() const { return out_b_; }

  const std::string& encoder_fingerprint() const { return fingerprint_; }
  void set_encoder_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

  double logit(std::span<const double> x) const {
    check_width(x.size());
    if (is_linear()) return dot(out_w_, x) + out_b_;
    double z = out_b_;
    for (std::size_t u = 0; u < arch_.hidden; ++u) {
      const double a = hidden_pre(u, x);
      if (a > 0.0) z += out_w_[u] * a;
    }
    return z;
  }

  double probability(std::span<const double> x) const { return sigmoid(logit(x)); }
  int predict(std::span<const double> x) const { return probability(x) > 0.5 ? 1 : 0; }

  // d logit / d x. ReLU units with pre-activation exactly 0 contribute nothing.
  Vec input_gradient(std::span<const double> x) const {
    check_width(x.size());
    if (is_linear()) return out_w_;
    Vec g(input_width_, 0.0);
    for (std::size_t u = 0; u < arch_.hidden; ++u) {
      if (hidden_pre(u, x) <= 0.0) continue;
      const double* row = &hidden_w_[u * input_width_];
      for (std::size_t j = 0; j < input_width_; ++j) g[j] += out_w_[u] * row[j];
    }
    return g;
  }

  // Smallest |pre-activation| over hidden units; infinity for linear models.
  double kink_margin(std::span<const double> x) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < arch_.hidden; ++u) m = std::min(m, std::abs(hidden_pre(u, x)));
    return m;
  }

  double hidden_pre(std::size_t unit, std::span<const double> x) const {
    return dot(std::span<const double>(&hidden_w_[unit * input_width_], input_width_), x) +
           hidden_b_[unit];
  }

  bool finite() const {
    auto ok = [](const std::vector<double>& v) {
      for (double d : v)
        if (!std::isfinite(d)) return false;
      return true;
    };
    return ok(hidden_w_) && ok(hidden_b_) && ok(out_w_) && std::isfinite(out_b_);
  }

private:
  static double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

  void check_width(std::size_t w) const {
    if (w != input_width_)
      throw ValidationError("input width " + std::to_string(w) + " does not match model width " +
                            std::to_string(input_width_));
  }

  Architecture arch_;
  std::size_t input_width_ = 0;
  std::vector<double> hidden_w_, hidden_b_, out_w_;
  double out_b_ = 0.0;
  std::string fingerprint_;
};

}  // namespace divcf
