#pragma once

// Request routing for the HTTP facade. Service::handle is transport-free so it
// can be driven directly in tests; http_server.hpp binds it to a socket.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>

#include "divcf/json_io.hpp"

namespace divcf::service {

using io::json;

struct Response {
  int status = 200;
  json body;
};

struct DatasetEntry {
  std::string id;
  std::string name;
  Dataset data;
  Encoder encoder;
  FeatureStats stats;
};

struct ModelEntry {
  std::string id;
  std::string dataset_id;
  io::ModelBundle bundle;
  Encoder encoder;
};

class NotFound : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline json api_description() {
  auto op = [](const char* summary, json request, json responses) {
    return json{{"summary", summary}, {"request", std::move(request)},
                {"responses", std::move(responses)}};
  };
  return {
      {"name", "divcf counterfactual service"},
      {"version", "1"},
      {"content_type", "application/json"},
      {"errors",
       {{"404", "unknown dataset or model id"},
        {"409", "model and encoder fingerprints differ"},
        {"422", "payload failed validation; body {error, field}"}}},
      {"endpoints",
       {{"GET /datasets", op("list datasets", nullptr,
                             {{"200", "[{id, name, schema, rows, class_balance}]"}})},
        {"POST /datasets",
         op("register a dataset from CSV text and a schema",
            {{"name", "string"}, {"csv", "string (header row + data)"}, {"schema", "schema"},
             {"label_column", "string, optional (defaults to schema.label_column)"}},
            {{"201", "{id, rows}"}, {"422", "error"}})},
        {"GET /api.json", op("this document", nullptr, {{"200", "API description"}})},
        {"GET /models", op("list models", nullptr, {{"200", "[{id, dataset_id, ...}]"}})},
        {"POST /models/train",
         op("train a classifier on a registered dataset",
            {{"dataset_id", "string"}, {"architecture", "'linear' | 'one_hidden:<h>'"},
             {"config", "TrainConfig"}, {"test_fraction", "number, default 0.2"},
             {"split_seed", "integer, default 0"}},
            {{"201", "{model_id, train_accuracy, test_accuracy}"}, {"404", "error"},
             {"422", "error"}})},
        {"POST /models",
         op("register a model bundle written by `divcf train`",
            {{"dataset_id", "string"}, {"bundle", "model bundle JSON"}},
            {{"201", "{model_id, train_accuracy, test_accuracy}"}, {"404", "error"},
             {"409", "error"}, {"422", "error"}})},
        {"POST /explain",
         op("generate counterfactuals",
            {{"model_id", "string"}, {"request", "CFRequest"},
             {"diversity_valid_only", "boolean, default false"}},
            {{"200", "{request, cfset, eval}"}, {"404", "error"}, {"409", "error"},
             {"422", "error"}})},
        {"POST /probe",
         op("score a 1-NN classifier over the instance and CFs",
            {{"model_id", "string"}, {"cfset", "CFSet, optional"},
             {"request", "CFRequest, used when cfset is absent"}, {"config", "ProbeConfig"}},
            {{"200", "ProbeReport"}, {"404", "error"}, {"422", "error"}})},
        {"POST /filter",
         op("drop CFs that violate causal constraints",
            {{"model_id", "string (or dataset_id)"}, {"cfset", "CFSet"},
             {"constraints", "[CausalConstraint]"}},
            {{"200", "{feasible, feasible_indices, infeasible_indices, violations, stats}"},
             {"404", "error"}, {"422", "error"}})}}}};
}

class Service {
public:
  explicit Service(std::filesystem::path data_dir = {}) : data_dir_(std::move(data_dir)) {
    if (!data_dir_.empty()) load_from_disk();
  }

  Response handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
      if (method == "GET" && path == "/datasets") return {200, list_datasets()};
      if (method == "GET" && path == "/models") return {200, list_models()};
      if (method == "GET" && path == "/api.json") return {200, api_description()};
      if (method != "POST") return error(404, "no route for " + method + " " + path);
      json payload;
      try {
        payload = json::parse(body);
      } catch (const json::parse_error& e) {
        return error(422, std::string("body is not valid JSON: ") + e.what());
      }
      if (!payload.is_object()) return error(422, "body must be a JSON object");
      if (path == "/datasets") return create_dataset(payload);
      if (path == "/models/train") return train_model(payload);
      if (path == "/models") return upload_model(payload);
      if (path == "/explain") return explain(payload);
      if (path == "/probe") return run_probe(payload);
      if (path == "/filter") return run_filter(payload);
      return error(404, "no route for POST " + path);
    } catch (const NotFound& e) {
      return error(404, e.what());
    } catch (const FingerprintMismatch& e) {
      return error(409, e.what());
    } catch (const ValidationError& e) {
      return error(422, e.what(), e.field());
    } catch (const Undefined& e) {
      return error(422, e.what());
    } catch (const json::exception& e) {
      return error(422, e.what());
    }
  }

  std::string add_dataset(std::string name, Dataset data) {
    data.validate();
    if (data.empty()) throw ValidationError("dataset has no rows", "csv");
    auto entry = std::make_shared<DatasetEntry>();
    entry->name = std::move(name);
    entry->encoder = Encoder(data.schema);
    entry->stats = fit_stats(data);
    entry->data = std::move(data);
    std::unique_lock lock(mutex_);
    entry->id = "ds-" + std::to_string(++dataset_counter_);
    datasets_[entry->id] = entry;
    persist_dataset(*entry);
    return entry->id;
  }

  std::string add_model(const std::string& dataset_id, io::ModelBundle bundle) {
    auto ds = dataset(dataset_id);
    Encoder enc(bundle.schema);
    check_fingerprint(bundle.model, ds->encoder);
    auto entry = std::make_shared<ModelEntry>();
    entry->dataset_id = dataset_id;
    entry->bundle = std::move(bundle);
    entry->encoder = std::move(enc);
    std::unique_lock lock(mutex_);
    entry->id = "m-" + std::to_string(++model_counter_);
    models_[entry->id] = entry;
    persist_model(*entry);
    return entry->id;
  }

  std::shared_ptr<const DatasetEntry> dataset(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw NotFound("unknown dataset id '" + id + "'");
    return it->second;
  }

  std::shared_ptr<const ModelEntry> model(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = models_.find(id);
    if (it == models_.end()) throw NotFound("unknown model id '" + id + "'");
    return it->second;
  }

private:
  static Response error(int status, const std::string& msg, const std::string& field = {}) {
    json body{{"error", msg}};
    if (!field.empty()) body["field"] = field;
    return {status, body};
  }

  static std::string require_string(const json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_string())
      throw ValidationError(std::string("missing string field '") + key + "'", key);
    return p.at(key).get<std::string>();
  }

  json list_datasets() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& [id, e] : datasets_)
      out.push_back({{"id", id},
                     {"name", e->name},
                     {"schema", io::to_json(e->data.schema)},
                     {"rows", e->data.size()},
                     {"class_balance", {{"0", e->data.count_label(0)}, {"1", e->data.count_label(1)}}}});
    return out;
  }

  json list_models() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& [id, e] : models_)
      out.push_back({{"id", id},
                     {"dataset_id", e->dataset_id},
                     {"architecture", io::architecture_name(e->bundle.model.architecture())},
                     {"train_accuracy", e->bundle.train_accuracy},
                     {"test_accuracy", e->bundle.test_accuracy},
                     {"encoder_fingerprint", e->bundle.model.encoder_fingerprint()}});
    return out;
  }

  Response create_dataset(const json& p) {
    const auto name = p.contains("name") && p.at("name").is_string()
                          ? p.at("name").get<std::string>()
                          : std::string("dataset");
    const auto csv_text = require_string(p, "csv");
    if (!p.contains("schema")) throw ValidationError("missing field 'schema'", "schema");
    auto schema = io::schema_from_json(p.at("schema"));
    const auto label = p.contains("label_column") && p.at("label_column").is_string()
                           ? p.at("label_column").get<std::string>()
                           : schema.label_column;
    std::istringstream in(csv_text);
    auto data = parse_csv(in, schema, label);
    const auto rows = data.size();
    const auto id = add_dataset(name, std::move(data));
    return {201, {{"id", id}, {"rows", rows}}};
  }

  Response train_model(const json& p) {
    auto ds = dataset(require_string(p, "dataset_id"));
    const auto arch = io::parse_architecture(
        p.contains("architecture") ? p.at("architecture").get<std::string>() : "one_hidden:20");
    const auto cfg = io::train_config_from_json(p.contains("config") ? p.at("config") : json());
    const double test_fraction = p.value("test_fraction", 0.2);
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
      throw ValidationError("test_fraction must be in [0, 1)", "test_fraction");
    Rng split_rng(p.value("split_seed", std::uint64_t{0}));
    auto [train_set, test_set] = train_test_split(ds->data, test_fraction, split_rng);
    io::ModelBundle b;
    b.schema = ds->data.schema;
    b.model = train(train_set, ds->encoder, arch, cfg);
    b.model.set_encoder_fingerprint(ds->encoder.fingerprint());
    b.stats = fit_stats(train_set);
    b.train_accuracy = accuracy(b.model, ds->encoder, train_set);
    b.test_accuracy = test_set.empty() ? b.train_accuracy : accuracy(b.model, ds->encoder, test_set);
    b.test = std::move(test_set);
    const double tr = b.train_accuracy, te = b.test_accuracy;
    const auto id = add_model(ds->id, std::move(b));
    return {201, {{"model_id", id}, {"train_accuracy", tr}, {"test_accuracy", te}}};
  }

  // Registers a bundle produced elsewhere (e.g. `divcf train`) against a dataset.
  Response upload_model(const json& p) {
    auto ds = dataset(require_string(p, "dataset_id"));
    if (!p.contains("bundle")) throw ValidationError("missing field 'bundle'", "bundle");
    auto b = io::bundle_from_json(p.at("bundle"));
    const double tr = b.train_accuracy, te = b.test_accuracy;
    const auto id = add_model(ds->id, std::move(b));
    return {201, {{"model_id", id}, {"train_accuracy", tr}, {"test_accuracy", te}}};
  }

  Response explain(const json& p) {
    auto m = model(require_string(p, "model_id"));
    if (!p.contains("request")) throw ValidationError("missing field 'request'", "request");
    const auto req = io::request_from_json(p.at("request"), m->encoder.schema());
    const auto set = generate(req, m->bundle.model, m->encoder, m->bundle.stats);
    EvalOptions opts;
    opts.diversity_valid_only = p.value("diversity_valid_only", false);
    const auto report = evaluate(set, m->bundle.model, m->encoder, m->bundle.stats, opts);
    return {200,
            {{"request", io::to_json(req, m->encoder.schema())},
             {"cfset", io::to_json(set, m->encoder.schema())},
             {"eval", io::to_json(report)}}};
  }

  Response run_probe(const json& p) {
    auto m = model(require_string(p, "model_id"));
    const auto cfg = io::probe_config_from_json(p.contains("config") ? p.at("config") : json());
    CFSet set;
    if (p.contains("cfset")) {
      set = io::cfset_from_json(p.at("cfset"), m->encoder, &m->bundle.model);
    } else if (p.contains("request")) {
      const auto req = io::request_from_json(p.at("request"), m->encoder.schema());
      set = generate(req, m->bundle.model, m->encoder, m->bundle.stats);
    } else {
      throw ValidationError("probe needs 'cfset' or 'request'", "cfset");
    }
    if (p.contains("instance")) set.original = io::row_from_json(p.at("instance"), m->encoder.schema());
    const auto rep = probe(set.original, set, m->bundle.model, m->encoder, m->bundle.stats, cfg);
    return {200, io::to_json(rep)};
  }

  Response run_filter(const json& p) {
    Encoder enc;
    const Classifier* clf = nullptr;
    std::shared_ptr<const ModelEntry> m;
    std::shared_ptr<const DatasetEntry> ds;
    if (p.contains("model_id")) {
      m = model(require_string(p, "model_id"));
      enc = m->encoder;
      clf = &m->bundle.model;
    } else if (p.contains("dataset_id")) {
      ds = dataset(require_string(p, "dataset_id"));
      enc = ds->encoder;
    } else {
      throw ValidationError("filter needs 'model_id' or 'dataset_id'", "model_id");
    }
    if (!p.contains("cfset")) throw ValidationError("missing field 'cfset'", "cfset");
    const auto set = io::cfset_from_json(p.at("cfset"), enc, clf);
    const auto constraints = io::constraints_from_json(
        p.contains("constraints") ? p.at("constraints") : json::array(), enc.schema());
    const auto res = filter(set, constraints, enc.schema());
    return {200, io::to_json(res, set, constraints, enc.schema())};
  }

  void persist_dataset(const DatasetEntry& e) const {
    if (data_dir_.empty()) return;
    const auto dir = data_dir_ / "datasets";
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / (e.id + ".csv"));
    write_csv(csv, e.data);
    io::write_json_file((dir / (e.id + ".json")).string(),
                        {{"name", e.name}, {"schema", io::to_json(e.data.schema)}});
  }

  void persist_model(const ModelEntry& e) const {
    if (data_dir_.empty()) return;
    const auto dir = data_dir_ / "models";
    std::filesystem::create_directories(dir);
    auto j = io::to_json(e.bundle);
    j["dataset_id"] = e.dataset_id;
    io::write_json_file((dir / (e.id + ".json")).string(), j);
  }

  static std::size_t id_number(const std::string& id) {
    const auto pos = id.find('-');
    return pos == std::string::npos ? 0 : std::stoul(id.substr(pos + 1));
  }

  void load_from_disk() {
    namespace fs = std::filesystem;
    const auto ds_dir = data_dir_ / "datasets";
    if (fs::exists(ds_dir)) {
      std::vector<fs::path> metas;
      for (const auto& f : fs::directory_iterator(ds_dir))
        if (f.path().extension() == ".json") metas.push_back(f.path());
      std::sort(metas.begin(), metas.end());
      for (const auto& meta_path : metas) {
        const auto meta = io::read_json_file(meta_path.string());
        auto entry = std::make_shared<DatasetEntry>();
        entry->id = meta_path.stem().string();
        entry->name = meta.value("name", entry->id);
        const auto schema = io::schema_from_json(meta.at("schema"));
        auto csv_path = meta_path;
        csv_path.replace_extension(".csv");
        entry->data = load_csv(csv_path.string(), schema);
        entry->encoder = Encoder(schema);
        entry->stats = fit_stats(entry->data);
        dataset_counter_ = std::max(dataset_counter_, id_number(entry->id));
        datasets_[entry->id] = entry;
      }
    }
    const auto m_dir = data_dir_ / "models";
    if (fs::exists(m_dir)) {
      std::vector<fs::path> files;
      for (const auto& f : fs::directory_iterator(m_dir))
        if (f.path().extension() == ".json") files.push_back(f.path());
      std::sort(files.begin(), files.end());
      for (const auto& path : files) {
        const auto j = io::read_json_file(path.string());
        auto entry = std::make_shared<ModelEntry>();
        entry->id = path.stem().string();
        entry->dataset_id = j.value("dataset_id", "");
        entry->bundle = io::bundle_from_json(j);
        entry->encoder = Encoder(entry->bundle.schema);
        model_counter_ = std::max(model_counter_, id_number(entry->id));
        models_[entry->id] = entry;
      }
    }
  }

  std::filesystem::path data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const DatasetEntry>> datasets_;
  std::map<std::string, std::shared_ptr<const ModelEntry>> models_;
  std::size_t dataset_counter_ = 0;
  std::size_t model_counter_ = 0;
};

}  // namespace divcf::service
