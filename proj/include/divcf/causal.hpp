#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "divcf/engine.hpp"
#include "divcf/error.hpp"
#include "divcf/schema.hpp"

namespace divcf {

// monotone_pair: raising `feature` (the cause) requires raising `effect`.
// no_decrease / no_increase: `feature` may only move in one direction.
struct CausalConstraint {
  enum class Kind { monotone_pair, no_decrease, no_increase };
  Kind kind = Kind::no_decrease;
  std::string feature;
  std::string effect;
  // Level order, lowest first, for every categorical feature referenced.
  std::map<std::string, std::vector<std::string>> orders;

  std::vector<std::string> features() const {
    if (kind == Kind::monotone_pair) return {feature, effect};
    return {feature};
  }

  std::string describe() const {
    switch (kind) {
      case Kind::monotone_pair: return feature + " increase requires " + effect + " increase";
      case Kind::no_decrease: return feature + " cannot decrease";
      case Kind::no_increase: return feature + " cannot increase";
    }
    return {};
  }
};

struct Violation {
  std::size_t constraint = 0;  // index into the constraint list
  std::string description;
  std::vector<std::string> features;
  bool operator==(const Violation&) const = default;
};

namespace detail {

// Position of a raw value on the constraint's ordering of that feature.
inline double causal_rank(const CausalConstraint& c, const DatasetSchema& schema,
                          std::size_t f, double raw) {
  const auto& feat = schema.features[f];
  if (feat.is_continuous()) return raw;
  auto it = c.orders.find(feat.name);
  if (it == c.orders.end())
    throw ValidationError("categorical feature '" + feat.name + "' needs a declared level order",
                          feat.name);
  const auto& level = feat.levels.at(static_cast<std::size_t>(raw));
  for (std::size_t i = 0; i < it->second.size(); ++i)
    if (it->second[i] == level) return static_cast<double>(i);
  throw ValidationError("level '" + level + "' missing from order of '" + feat.name + "'",
                        feat.name);
}

}  // namespace detail

inline void validate_constraint(const CausalConstraint& c, const DatasetSchema& schema) {
  for (const auto& name : c.features()) {
    const auto f = schema.require_index(name);
    const auto& feat = schema.features[f];
    if (!feat.is_categorical()) continue;
    auto it = c.orders.find(name);
    if (it == c.orders.end())
      throw ValidationError("categorical feature '" + name + "' needs a declared level order",
                            name);
    const std::set<std::string> declared(it->second.begin(), it->second.end());
    const std::set<std::string> levels(feat.levels.begin(), feat.levels.end());
    if (declared != levels || it->second.size() != feat.levels.size())
      throw ValidationError("order for '" + name + "' must list every level exactly once", name);
  }
}

inline void validate_constraints(const std::vector<CausalConstraint>& cs,
                                 const DatasetSchema& schema) {
  for (const auto& c : cs) validate_constraint(c, schema);
}

// Violations of cf relative to x. Depends on nothing but (cf, x, constraints).
inline std::vector<Violation> check(const Row& cf, const Row& x,
                                    const std::vector<CausalConstraint>& constraints,
                                    const DatasetSchema& schema) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& c = constraints[i];
    const auto f = schema.require_index(c.feature);
    const double before = detail::causal_rank(c, schema, f, x[f]);
    const double after = detail::causal_rank(c, schema, f, cf[f]);
    bool violated = false;
    switch (c.kind) {
      case CausalConstraint::Kind::no_decrease: violated = after < before; break;
      case CausalConstraint::Kind::no_increase: violated = after > before; break;
      case CausalConstraint::Kind::monotone_pair: {
        const auto e = schema.require_index(c.effect);
        const double e_before = detail::causal_rank(c, schema, e, x[e]);
        const double e_after = detail::causal_rank(c, schema, e, cf[e]);
        violated = after > before && !(e_after > e_before);
        break;
      }
    }
    if (violated) out.push_back({i, c.describe(), c.features()});
  }
  return out;
}

struct FeatureInfeasibility {
  std::size_t changed = 0;     // examples that change the feature
  std::size_t infeasible = 0;  // of those, examples violating any constraint
  double fraction() const {
    return changed ? static_cast<double>(infeasible) / static_cast<double>(changed) : 0.0;
  }
};

struct FilterResult {
  std::vector<CFExample> feasible;
  std::vector<std::size_t> feasible_indices;
  std::vector<std::size_t> infeasible_indices;
  std::vector<std::vector<Violation>> violations;  // per input example
  std::vector<std::size_t> violation_counts;       // per constraint
  std::map<std::string, FeatureInfeasibility> by_feature;  // constrained features only
};

inline FilterResult filter(const std::vector<CFExample>& examples, const Row& x,
                           const std::vector<CausalConstraint>& constraints,
                           const DatasetSchema& schema) {
  validate_constraints(constraints, schema);
  FilterResult r;
  r.violation_counts.assign(constraints.size(), 0);
  for (const auto& c : constraints)
    for (const auto& name : c.features()) r.by_feature[name];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto v = check(examples[i].values, x, constraints, schema);
    for (const auto& viol : v) ++r.violation_counts[viol.constraint];
    for (auto& [name, info] : r.by_feature) {
      const auto f = schema.require_index(name);
      if (examples[i].values[f] == x[f]) continue;
      ++info.changed;
      info.infeasible += !v.empty();
    }
    if (v.empty()) {
      r.feasible.push_back(examples[i]);
      r.feasible_indices.push_back(i);
    } else {
      r.infeasible_indices.push_back(i);
    }
    r.violations.push_back(std::move(v));
  }
  return r;
}

inline FilterResult filter(const CFSet& set, const std::vector<CausalConstraint>& constraints,
                           const DatasetSchema& schema) {
  return filter(set.examples, set.original, constraints, schema);
}

}  // namespace divcf
