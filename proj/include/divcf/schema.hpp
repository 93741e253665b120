#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "divcf/error.hpp"

namespace divcf {

enum class FeatureKind { continuous, categorical };

struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::vector<std::string> levels;  // categorical only
  double min = 0.0;                 // continuous only
  double max = 1.0;
  // Decoded continuous values are rounded to this many decimal places.
  int decimals = 4;
  bool monotone_increase_only = false;

  bool is_continuous() const { return kind == FeatureKind::continuous; }
  bool is_categorical() const { return kind == FeatureKind::categorical; }

  std::optional<std::size_t> level_index(const std::string& level) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == level) return i;
    return std::nullopt;
  }

  void validate() const {
    if (name.empty()) throw ValidationError("feature with empty name", "name");
    if (is_categorical()) {
      if (levels.empty())
        throw ValidationError("categorical feature '" + name + "' has no levels", name);
      std::set<std::string> seen(levels.begin(), levels.end());
      if (seen.size() != levels.size())
        throw ValidationError("categorical feature '" + name + "' has duplicate levels", name);
    } else {
      if (!(std::isfinite(min) && std::isfinite(max) && min < max))
        throw ValidationError("continuous feature '" + name + "' needs min < max", name);
      if (decimals < 0 || decimals > 12)
        throw ValidationError("feature '" + name + "' decimals must be in [0, 12]", name);
    }
  }
};

// A raw row holds one entry per schema feature: the value itself for continuous
// features, and the level index (an exact integer) for categorical features.
using Row = std::vector<double>;

struct DatasetSchema {
  std::vector<FeatureSchema> features;
  std::string label_column = "label";
  // Label cell value treated as class 1. When absent, 0/1 and true/false are accepted.
  std::optional<std::string> positive_label;

  std::size_t size() const { return features.size(); }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
      if (features[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t require_index(const std::string& name) const {
    auto idx = index_of(name);
    if (!idx) throw ValidationError("unknown feature '" + name + "'", name);
    return *idx;
  }

  std::size_t num_continuous() const {
    std::size_t n = 0;
    for (const auto& f : features) n += f.is_continuous();
    return n;
  }
  std::size_t num_categorical() const { return size() - num_continuous(); }

  void validate() const {
    if (features.empty()) throw ValidationError("schema has no features", "features");
    std::set<std::string> names;
    for (const auto& f : features) {
      f.validate();
      if (!names.insert(f.name).second)
        throw ValidationError("duplicate feature name '" + f.name + "'", f.name);
    }
    if (names.count(label_column))
      throw ValidationError("label column collides with a feature name", label_column);
  }

  // Throws naming the offending feature when a row does not conform.
  void validate_row(const Row& row) const {
    if (row.size() != features.size())
      throw ValidationError("row has " + std::to_string(row.size()) + " values, schema has " +
                            std::to_string(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      const double v = row[i];
      if (f.is_continuous()) {
        if (!std::isfinite(v) || v < f.min || v > f.max)
          throw ValidationError("value " + std::to_string(v) + " of feature '" + f.name +
                                    "' outside [" + std::to_string(f.min) + ", " +
                                    std::to_string(f.max) + "]",
                                f.name);
      } else {
        if (!(v >= 0.0 && v < static_cast<double>(f.levels.size()) && v == std::floor(v)))
          throw ValidationError("invalid level index for feature '" + f.name + "'", f.name);
      }
    }
  }

  std::string format_value(std::size_t feature, double v) const;
};

inline std::string format_number(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

inline std::string DatasetSchema::format_value(std::size_t feature, double v) const {
  const auto& f = features.at(feature);
  if (f.is_categorical()) return f.levels.at(static_cast<std::size_t>(v));
  return format_number(v, f.decimals);
}

}  // namespace divcf
