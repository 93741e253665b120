#pragma once

// JSON documents for schemas, models, requests and results. Raw values are
// written as numbers for continuous features and level names for categorical
// ones; rows are objects keyed by feature name.

#include <fstream>
#include <string>

#include "json.hpp"

#include "divcf/causal.hpp"
#include "divcf/dataset.hpp"
#include "divcf/engine.hpp"
#include "divcf/metrics.hpp"
#include "divcf/model.hpp"
#include "divcf/probe.hpp"
#include "divcf/stats.hpp"
#include "divcf/train.hpp"

namespace divcf::io {

using nlohmann::json;

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type", key);
  }
}

template <class T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(std::string("missing field '") + key + "'", key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type", key);
  }
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'", "path");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what(), "path");
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'", "path");
  out << j.dump(2) << '\n';
}

// ---- schema ---------------------------------------------------------------

inline json to_json(const FeatureSchema& f) {
  json j{{"name", f.name}};
  if (f.is_categorical()) {
    j["kind"] = "categorical";
    j["levels"] = f.levels;
  } else {
    j["kind"] = "continuous";
    j["min"] = f.min;
    j["max"] = f.max;
    j["decimals"] = f.decimals;
  }
  if (f.monotone_increase_only) j["monotone_increase_only"] = true;
  return j;
}

inline FeatureSchema feature_from_json(const json& j) {
  FeatureSchema f;
  f.name = detail::require<std::string>(j, "name");
  const auto kind = detail::require<std::string>(j, "kind");
  if (kind == "categorical") {
    f.kind = FeatureKind::categorical;
    f.levels = detail::require<std::vector<std::string>>(j, "levels");
  } else if (kind == "continuous") {
    f.kind = FeatureKind::continuous;
    f.min = detail::require<double>(j, "min");
    f.max = detail::require<double>(j, "max");
    f.decimals = detail::get_or<int>(j, "decimals", 4);
  } else {
    throw ValidationError("feature '" + f.name + "' has unknown kind '" + kind + "'", "kind");
  }
  f.monotone_increase_only = detail::get_or<bool>(j, "monotone_increase_only", false);
  f.validate();
  return f;
}

inline json to_json(const DatasetSchema& s) {
  json feats = json::array();
  for (const auto& f : s.features) feats.push_back(to_json(f));
  json j{{"features", feats}, {"label_column", s.label_column}};
  if (s.positive_label) j["positive_label"] = *s.positive_label;
  return j;
}

inline DatasetSchema schema_from_json(const json& j) {
  DatasetSchema s;
  if (!j.is_object() || !j.contains("features") || !j.at("features").is_array())
    throw ValidationError("schema needs a 'features' array", "features");
  for (const auto& f : j.at("features")) s.features.push_back(feature_from_json(f));
  s.label_column = detail::get_or<std::string>(j, "label_column", "label");
  if (j.contains("positive_label") && !j.at("positive_label").is_null())
    s.positive_label = detail::require<std::string>(j, "positive_label");
  s.validate();
  return s;
}

// ---- rows -----------------------------------------------------------------

inline json row_to_json(const Row& row, const DatasetSchema& s) {
  json j = json::object();
  for (std::size_t f = 0; f < s.size(); ++f) {
    const auto& feat = s.features[f];
    if (feat.is_categorical())
      j[feat.name] = feat.levels.at(static_cast<std::size_t>(row[f]));
    else
      j[feat.name] = row[f];
  }
  return j;
}

inline double value_from_json(const json& v, const FeatureSchema& feat) {
  if (feat.is_categorical()) {
    if (!v.is_string())
      throw ValidationError("feature '" + feat.name + "' expects a level name", feat.name);
    auto idx = feat.level_index(v.get<std::string>());
    if (!idx)
      throw ValidationError("unknown level '" + v.get<std::string>() + "' for feature '" +
                                feat.name + "'",
                            feat.name);
    return static_cast<double>(*idx);
  }
  if (!v.is_number())
    throw ValidationError("feature '" + feat.name + "' expects a number", feat.name);
  return v.get<double>();
}

// Accepts an object keyed by feature name or an array in schema order.
inline Row row_from_json(const json& j, const DatasetSchema& s) {
  Row row(s.size(), 0.0);
  if (j.is_array()) {
    if (j.size() != s.size())
      throw ValidationError("instance array has " + std::to_string(j.size()) + " values, expected " +
                            std::to_string(s.size()));
    for (std::size_t f = 0; f < s.size(); ++f) row[f] = value_from_json(j[f], s.features[f]);
  } else if (j.is_object()) {
    for (const auto& [key, _] : j.items())
      if (!s.index_of(key)) throw ValidationError("unknown feature '" + key + "'", key);
    for (std::size_t f = 0; f < s.size(); ++f) {
      const auto& feat = s.features[f];
      if (!j.contains(feat.name))
        throw ValidationError("instance lacks feature '" + feat.name + "'", feat.name);
      row[f] = value_from_json(j.at(feat.name), feat);
    }
  } else {
    throw ValidationError("instance must be a JSON object or array");
  }
  s.validate_row(row);
  return row;
}

// ---- stats ----------------------------------------------------------------

inline json to_json(const FeatureStats& st, const DatasetSchema& s) {
  json j = json::object();
  for (std::size_t f = 0; f < s.size(); ++f) {
    if (!s.features[f].is_continuous()) continue;
    const auto& c = st[f];
    j[s.features[f].name] = {{"median", c.median},
                             {"mad_raw", c.mad_raw},
                             {"mad_scaled", c.mad_scaled},
                             {"restore_threshold", c.restore_threshold},
                             {"mad_fallback", c.mad_fallback}};
  }
  return j;
}

inline FeatureStats stats_from_json(const json& j, const DatasetSchema& s) {
  FeatureStats st;
  st.features.resize(s.size());
  for (std::size_t f = 0; f < s.size(); ++f) {
    if (!s.features[f].is_continuous()) continue;
    const auto& name = s.features[f].name;
    if (!j.contains(name)) throw ValidationError("stats lack feature '" + name + "'", name);
    const auto& c = j.at(name);
    auto& out = st.features[f];
    out.median = detail::require<double>(c, "median");
    out.mad_raw = detail::require<double>(c, "mad_raw");
    out.mad_scaled = detail::require<double>(c, "mad_scaled");
    out.restore_threshold = detail::require<double>(c, "restore_threshold");
    out.mad_fallback = detail::get_or<bool>(c, "mad_fallback", false);
    if (!(out.mad_raw > 0.0 && out.mad_scaled > 0.0))
      throw ValidationError("stats for '" + name + "' need positive MADs", name);
  }
  return st;
}

// ---- model ----------------------------------------------------------------

inline Architecture parse_architecture(const std::string& text) {
  if (text == "linear") return Architecture::linear();
  const std::string prefix = "one_hidden";
  if (text.rfind(prefix, 0) == 0) {
    std::string rest = text.substr(prefix.size());
    if (rest.empty()) return Architecture::one_hidden(20);
    if ((rest.front() == ':' || rest.front() == '(') && rest.size() > 1) {
      rest = rest.substr(1);
      if (!rest.empty() && rest.back() == ')') rest.pop_back();
      double h;
      if (parse_double(rest, h) && h >= 1 && h == std::floor(h))
        return Architecture::one_hidden(static_cast<std::size_t>(h));
    }
  }
  throw ValidationError("architecture must be 'linear' or 'one_hidden:<units>'", "arch");
}

inline std::string architecture_name(const Architecture& a) {
  return a.kind == Architecture::Kind::linear ? "linear"
                                              : "one_hidden:" + std::to_string(a.hidden);
}

inline json to_json(const Classifier& m) {
  json arch;
  if (m.is_linear()) {
    arch = {{"kind", "linear"}};
  } else {
    arch = {{"kind", "one_hidden"}, {"hidden", m.architecture().hidden}, {"activation", "relu"}};
  }
  json j{{"architecture", arch},
         {"input_width", m.input_width()},
         {"encoder_fingerprint", m.encoder_fingerprint()},
         {"output_weights", m.output_weights()},
         {"output_bias", m.output_bias()}};
  if (!m.is_linear()) {
    json rows = json::array();
    const std::size_t d = m.input_width();
    for (std::size_t u = 0; u < m.architecture().hidden; ++u)
      rows.push_back(std::vector<double>(m.hidden_weights().begin() + u * d,
                                         m.hidden_weights().begin() + (u + 1) * d));
    j["hidden_weights"] = rows;
    j["hidden_bias"] = m.hidden_bias();
  }
  return j;
}

inline Classifier classifier_from_json(const json& j) {
  const auto arch_j = detail::require<json>(j, "architecture");
  const auto kind = detail::require<std::string>(arch_j, "kind");
  Architecture arch;
  if (kind == "linear") {
    arch = Architecture::linear();
  } else if (kind == "one_hidden") {
    arch = Architecture::one_hidden(detail::require<std::size_t>(arch_j, "hidden"));
    const auto act = detail::get_or<std::string>(arch_j, "activation", "relu");
    if (act != "relu") throw ValidationError("only relu activation is supported", "activation");
  } else {
    throw ValidationError("unknown architecture kind '" + kind + "'", "architecture");
  }
  const auto d = detail::require<std::size_t>(j, "input_width");
  Classifier m(arch, d);
  m.set_encoder_fingerprint(detail::get_or<std::string>(j, "encoder_fingerprint", ""));
  auto ow = detail::require<std::vector<double>>(j, "output_weights");
  if (ow.size() != m.output_weights().size())
    throw ValidationError("output_weights has the wrong length", "output_weights");
  m.output_weights() = std::move(ow);
  m.output_bias() = detail::require<double>(j, "output_bias");
  if (!m.is_linear()) {
    const auto rows = detail::require<std::vector<std::vector<double>>>(j, "hidden_weights");
    if (rows.size() != arch.hidden)
      throw ValidationError("hidden_weights has the wrong number of rows", "hidden_weights");
    std::size_t u = 0;
    for (const auto& r : rows) {
      if (r.size() != d) throw ValidationError("hidden_weights row has the wrong width", "hidden_weights");
      std::copy(r.begin(), r.end(), m.hidden_weights().begin() + u * d);
      ++u;
    }
    auto hb = detail::require<std::vector<double>>(j, "hidden_bias");
    if (hb.size() != arch.hidden)
      throw ValidationError("hidden_bias has the wrong length", "hidden_bias");
    m.hidden_bias() = std::move(hb);
  }
  if (!m.finite()) throw ValidationError("model parameters must be finite");
  return m;
}

inline json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},       {"batch_size", c.batch_size},
          {"step_size", c.step_size}, {"beta1", c.beta1},
          {"beta2", c.beta2},         {"epsilon", c.epsilon},
          {"oversample_minority", c.oversample_minority},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  if (j.is_null()) return c;
  c.epochs = detail::get_or(j, "epochs", c.epochs);
  c.batch_size = detail::get_or(j, "batch_size", c.batch_size);
  c.step_size = detail::get_or(j, "step_size", c.step_size);
  c.beta1 = detail::get_or(j, "beta1", c.beta1);
  c.beta2 = detail::get_or(j, "beta2", c.beta2);
  c.epsilon = detail::get_or(j, "epsilon", c.epsilon);
  c.oversample_minority = detail::get_or(j, "oversample_minority", c.oversample_minority);
  c.seed = detail::get_or(j, "seed", c.seed);
  c.validate();
  return c;
}

// A trained model together with what is needed to explain with it: the
// schema it encodes, the training statistics, and the held-out split.
struct ModelBundle {
  Classifier model;
  DatasetSchema schema;
  FeatureStats stats;
  Dataset test;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

inline json to_json(const ModelBundle& b) {
  json rows = json::array();
  for (const auto& r : b.test.rows) rows.push_back(row_to_json(r, b.schema));
  return {{"model", to_json(b.model)},
          {"schema", to_json(b.schema)},
          {"stats", to_json(b.stats, b.schema)},
          {"test_rows", rows},
          {"test_labels", b.test.labels},
          {"train_accuracy", b.train_accuracy},
          {"test_accuracy", b.test_accuracy}};
}

inline ModelBundle bundle_from_json(const json& j) {
  ModelBundle b;
  b.schema = schema_from_json(detail::require<json>(j, "schema"));
  b.model = classifier_from_json(detail::require<json>(j, "model"));
  b.stats = stats_from_json(detail::require<json>(j, "stats"), b.schema);
  b.test.schema = b.schema;
  if (j.contains("test_rows"))
    for (const auto& r : j.at("test_rows")) b.test.rows.push_back(row_from_json(r, b.schema));
  b.test.labels = detail::get_or<std::vector<int>>(j, "test_labels", {});
  if (b.test.labels.size() != b.test.rows.size())
    throw ValidationError("test_rows and test_labels differ in length", "test_labels");
  b.train_accuracy = detail::get_or(j, "train_accuracy", 0.0);
  b.test_accuracy = detail::get_or(j, "test_accuracy", 0.0);
  check_fingerprint(b.model, Encoder(b.schema));
  return b;
}

// ---- requests and results -------------------------------------------------

inline json to_json(const CFRequest& r, const DatasetSchema& s) {
  json boxes = json::object();
  for (const auto& [name, b] : r.box_constraints) boxes[name] = {{"lo", b.lo}, {"hi", b.hi}};
  json j{{"x", row_to_json(r.x, s)},
         {"k", r.k},
         {"lambda1", r.lambda1},
         {"lambda2", r.lambda2},
         {"feature_weights", r.feature_weights},
         {"frozen_features", r.frozen_features},
         {"box_constraints", boxes},
         {"learning_rate", r.learning_rate},
         {"max_steps", r.max_steps},
         {"seed", r.seed},
         {"diversity_mode", r.diversity_mode == DiversityMode::dpp ? "dpp" : "off"},
         {"init_mode",
          r.init_mode == InitMode::joint ? "joint" : "independent_restarts"},
         {"post_hoc_sparsity", r.post_hoc_sparsity},
         {"onehot_penalty", r.onehot_penalty}};
  j["desired_class"] = r.desired_class ? json(*r.desired_class) : json(nullptr);
  return j;
}

inline CFRequest request_from_json(const json& j, const DatasetSchema& s) {
  if (!j.is_object()) throw ValidationError("request must be a JSON object");
  CFRequest r;
  if (j.contains("x")) r.x = row_from_json(j.at("x"), s);
  else if (j.contains("instance")) r.x = row_from_json(j.at("instance"), s);
  else throw ValidationError("request lacks 'x'", "x");
  r.k = detail::get_or(j, "k", r.k);
  if (j.contains("desired_class") && !j.at("desired_class").is_null())
    r.desired_class = detail::require<int>(j, "desired_class");
  r.lambda1 = detail::get_or(j, "lambda1", r.lambda1);
  r.lambda2 = detail::get_or(j, "lambda2", r.lambda2);
  r.feature_weights = detail::get_or(j, "feature_weights", r.feature_weights);
  r.frozen_features = detail::get_or(j, "frozen_features", r.frozen_features);
  if (j.contains("box_constraints")) {
    const auto& boxes = j.at("box_constraints");
    if (!boxes.is_object())
      throw ValidationError("box_constraints must be an object", "box_constraints");
    for (const auto& [name, b] : boxes.items()) {
      BoxConstraint box;
      if (b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number()) {
        box = {b[0].get<double>(), b[1].get<double>()};
      } else if (b.is_object()) {
        const auto idx = s.index_of(name);
        const double lo_default = idx ? s.features[*idx].min : 0.0;
        const double hi_default = idx ? s.features[*idx].max : 0.0;
        box = {detail::get_or(b, "lo", lo_default), detail::get_or(b, "hi", hi_default)};
      } else {
        throw ValidationError("box for '" + name + "' must be [lo, hi] or {lo, hi}",
                              "box_constraints");
      }
      r.box_constraints[name] = box;
    }
  }
  r.learning_rate = detail::get_or(j, "learning_rate", r.learning_rate);
  r.max_steps = detail::get_or(j, "max_steps", r.max_steps);
  r.seed = detail::get_or(j, "seed", r.seed);
  const auto dm = detail::get_or<std::string>(j, "diversity_mode", "dpp");
  if (dm == "dpp") r.diversity_mode = DiversityMode::dpp;
  else if (dm == "off") r.diversity_mode = DiversityMode::off;
  else throw ValidationError("diversity_mode must be 'dpp' or 'off'", "diversity_mode");
  const auto im = detail::get_or<std::string>(j, "init_mode", "joint");
  if (im == "joint") r.init_mode = InitMode::joint;
  else if (im == "independent_restarts") r.init_mode = InitMode::independent_restarts;
  else throw ValidationError("init_mode must be 'joint' or 'independent_restarts'", "init_mode");
  r.post_hoc_sparsity = detail::get_or(j, "post_hoc_sparsity", r.post_hoc_sparsity);
  r.onehot_penalty = detail::get_or(j, "onehot_penalty", r.onehot_penalty);
  r.validate(s);
  return r;
}

inline json to_json(const LossBreakdown& l) {
  return {{"total", l.total},
          {"yloss", l.yloss},
          {"proximity", l.proximity},
          {"diversity", l.diversity},
          {"onehot", l.onehot}};
}

inline json example_to_json(const CFExample& ex, const Row& x, const DatasetSchema& s) {
  json changed = json::object();
  for (std::size_t f = 0; f < s.size(); ++f) changed[s.features[f].name] = ex.values[f] != x[f];
  return {{"values", row_to_json(ex.values, s)},
          {"changed", changed},
          {"encoded", ex.encoded},
          {"desired_probability", ex.desired_probability},
          {"valid", ex.valid}};
}

inline json to_json(const CFSet& set, const DatasetSchema& s) {
  json examples = json::array();
  for (const auto& ex : set.examples) examples.push_back(example_to_json(ex, set.original, s));
  return {{"original", row_to_json(set.original, s)},
          {"desired_class", set.desired_class},
          {"examples", examples},
          {"diagnostics",
           {{"loss", to_json(set.diagnostics.loss)},
            {"steps", set.diagnostics.steps},
            {"converged", set.diagnostics.converged}}}};
}

// Rebuilds a CFSet from its JSON form. Encodings, probabilities and validity
// are recomputed from the decoded values with the given model.
inline CFSet cfset_from_json(const json& j, const Encoder& enc, const Classifier* model) {
  const auto& s = enc.schema();
  CFSet set;
  set.original = row_from_json(detail::require<json>(j, "original"), s);
  set.desired_class = detail::get_or(j, "desired_class", 1);
  if (set.desired_class != 0 && set.desired_class != 1)
    throw ValidationError("desired_class must be 0 or 1", "desired_class");
  const auto examples = detail::require<json>(j, "examples");
  if (!examples.is_array()) throw ValidationError("examples must be an array", "examples");
  for (const auto& e : examples) {
    CFExample ex;
    ex.values = row_from_json(e.contains("values") ? e.at("values") : e, s);
    ex.encoded = enc.encode(ex.values);
    if (model) {
      ex.desired_probability = desired_probability(*model, ex.encoded, set.desired_class);
    } else {
      ex.desired_probability = e.is_object() ? detail::get_or(e, "desired_probability", 0.0) : 0.0;
    }
    ex.valid = ex.desired_probability > 0.5;
    set.examples.push_back(std::move(ex));
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    set.diagnostics.steps = detail::get_or<std::size_t>(d, "steps", 0);
    set.diagnostics.converged = detail::get_or(d, "converged", false);
    if (d.contains("loss")) {
      const auto& l = d.at("loss");
      set.diagnostics.loss = {detail::get_or(l, "total", 0.0), detail::get_or(l, "yloss", 0.0),
                              detail::get_or(l, "proximity", 0.0),
                              detail::get_or(l, "diversity", 0.0),
                              detail::get_or(l, "onehot", 0.0)};
    }
  }
  return set;
}

inline json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json to_json(const EvalReport& r) {
  return {{"percent_valid", r.percent_valid},
          {"cont_proximity", r.cont_proximity},
          {"cat_proximity", r.cat_proximity},
          {"sparsity", r.sparsity},
          {"cont_diversity", optional_json(r.cont_diversity)},
          {"cat_diversity", optional_json(r.cat_diversity)},
          {"count_diversity", optional_json(r.count_diversity)},
          {"k", r.k},
          {"num_unique_valid", r.num_unique_valid}};
}

inline json to_json(const ProbeReport& p) {
  json radii = json::array();
  for (const auto& r : p.radii)
    radii.push_back({{"radius", r.radius},
                     {"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"true_positive", r.true_positive},
                     {"false_positive", r.false_positive},
                     {"false_negative", r.false_negative},
                     {"true_negative", r.true_negative},
                     {"model_cf_class", r.model_cf_class},
                     {"model_original_class", r.model_original_class},
                     {"samples", r.model_cf_class + r.model_original_class},
                     {"clamp_fraction", r.clamp_fraction}});
  return {{"original_class", p.original_class},
          {"cf_class", p.cf_class},
          {"training_cfs", p.training_cfs},
          {"radii", radii}};
}

inline ProbeConfig probe_config_from_json(const json& j) {
  ProbeConfig c;
  if (j.is_null()) return c;
  c.radii = detail::get_or(j, "radii", c.radii);
  c.samples_per_sphere = detail::get_or(j, "samples_per_sphere", c.samples_per_sphere);
  c.seed = detail::get_or(j, "seed", c.seed);
  c.validate();
  return c;
}

// ---- causal constraints ---------------------------------------------------

inline json to_json(const CausalConstraint& c) {
  json j;
  switch (c.kind) {
    case CausalConstraint::Kind::monotone_pair:
      j = {{"kind", "monotone_pair"}, {"cause", c.feature}, {"effect", c.effect}};
      break;
    case CausalConstraint::Kind::no_decrease:
      j = {{"kind", "no_decrease"}, {"feature", c.feature}};
      break;
    case CausalConstraint::Kind::no_increase:
      j = {{"kind", "no_increase"}, {"feature", c.feature}};
      break;
  }
  if (!c.orders.empty()) j["orders"] = c.orders;
  return j;
}

inline std::vector<CausalConstraint> constraints_from_json(const json& j,
                                                           const DatasetSchema& s) {
  const json& list = j.is_object() && j.contains("constraints") ? j.at("constraints") : j;
  if (!list.is_array()) throw ValidationError("constraints must be a JSON list", "constraints");
  std::vector<CausalConstraint> out;
  for (const auto& c : list) {
    CausalConstraint cc;
    const auto kind = detail::require<std::string>(c, "kind");
    if (kind == "monotone_pair") {
      cc.kind = CausalConstraint::Kind::monotone_pair;
      cc.feature = detail::require<std::string>(c, "cause");
      cc.effect = detail::require<std::string>(c, "effect");
    } else if (kind == "no_decrease" || kind == "no_increase") {
      cc.kind = kind == "no_decrease" ? CausalConstraint::Kind::no_decrease
                                      : CausalConstraint::Kind::no_increase;
      cc.feature = detail::require<std::string>(c, "feature");
    } else {
      throw ValidationError("unknown constraint kind '" + kind + "'", "kind");
    }
    cc.orders = detail::get_or(c, "orders", cc.orders);
    validate_constraint(cc, s);
    out.push_back(std::move(cc));
  }
  return out;
}

inline json to_json(const FilterResult& r, const CFSet& set,
                    const std::vector<CausalConstraint>& constraints, const DatasetSchema& s) {
  CFSet feasible = set;
  feasible.examples = r.feasible;
  json violations = json::array();
  for (std::size_t i = 0; i < r.violations.size(); ++i)
    for (const auto& v : r.violations[i])
      violations.push_back({{"example", i},
                            {"constraint", v.constraint},
                            {"description", v.description},
                            {"features", v.features}});
  json per_constraint = json::array();
  for (std::size_t c = 0; c < constraints.size(); ++c)
    per_constraint.push_back({{"constraint", to_json(constraints[c])},
                              {"description", constraints[c].describe()},
                              {"violations", r.violation_counts[c]}});
  json by_feature = json::object();
  for (const auto& [name, info] : r.by_feature)
    by_feature[name] = {{"changed", info.changed},
                        {"infeasible", info.infeasible},
                        {"fraction_infeasible", info.fraction()}};
  return {{"feasible", to_json(feasible, s)},
          {"feasible_indices", r.feasible_indices},
          {"infeasible_indices", r.infeasible_indices},
          {"violations", violations},
          {"stats", {{"per_constraint", per_constraint}, {"by_feature", by_feature}}}};
}

}  // namespace divcf::io
