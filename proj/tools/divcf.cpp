// divcf command line: synthetic data, training, explanation and the batch
// experiments (evaluate / probe / filter), plus the HTTP service.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "divcf/http_server.hpp"
#include "divcf/json_io.hpp"
#include "divcf/metrics.hpp"
#include "divcf/probe.hpp"
#include "divcf/synth.hpp"

using namespace divcf;
using io::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// Writes to the named file, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'", "out");
  out << text;
}

json parse_json_arg(const std::string& text) {
  if (!text.empty() && text[0] == '@') return io::read_json_file(text.substr(1));
  return json::parse(text);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// A row index into the bundle's test split, a JSON object/array, or @file.
Row resolve_instance(const std::string& arg, const io::ModelBundle& b) {
  const bool is_index = !arg.empty() && std::all_of(arg.begin(), arg.end(), ::isdigit);
  if (is_index) {
    const auto i = std::stoul(arg);
    if (i >= b.test.size())
      throw ValidationError("instance index " + arg + " outside the " + std::to_string(b.test.size()) +
                                "-row test split",
                            "instance");
    return b.test.rows[i];
  }
  return io::row_from_json(parse_json_arg(arg), b.schema);
}

struct Mode {
  std::string name;
  DiversityMode diversity;
  InitMode init;
  bool single;
};

Mode parse_mode(const std::string& m) {
  if (m == "diverse") return {m, DiversityMode::dpp, InitMode::joint, false};
  if (m == "nodiv") return {m, DiversityMode::off, InitMode::joint, false};
  if (m == "restarts") return {m, DiversityMode::off, InitMode::independent_restarts, false};
  if (m == "single") return {m, DiversityMode::off, InitMode::joint, true};
  throw ValidationError("mode must be diverse, nodiv, restarts or single", "mode");
}

void apply_mode(CFRequest& r, const Mode& m) {
  r.diversity_mode = m.diversity;
  r.init_mode = m.init;
  if (m.single) r.k = 1;
}

std::string table(const CFSet& set, const DatasetSchema& s) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{""};
  for (const auto& f : s.features) head.push_back(f.name);
  head.push_back("p(desired)");
  head.push_back("valid");
  rows.push_back(head);
  std::vector<std::string> orig{"original"};
  for (std::size_t f = 0; f < s.size(); ++f) orig.push_back(s.format_value(f, set.original[f]));
  orig.push_back("");
  orig.push_back("");
  rows.push_back(orig);
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    const auto& ex = set.examples[i];
    std::vector<std::string> r{"cf " + std::to_string(i + 1)};
    for (std::size_t f = 0; f < s.size(); ++f)
      r.push_back(ex.values[f] == set.original[f] ? "—" : s.format_value(f, ex.values[f]));
    char p[16];
    std::snprintf(p, sizeof p, "%.3f", ex.desired_probability);
    r.push_back(p);
    r.push_back(ex.valid ? "yes" : "no");
    rows.push_back(r);
  }
  // Column widths in code points, so the dash counts as one.
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  std::vector<std::size_t> w(head.size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out += r[c];
      if (c + 1 < r.size()) out += std::string(w[c] - width(r[c]) + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

// Options shared by explain, evaluate and probe for building requests.
struct RequestFlags {
  std::string config;
  std::size_t k = 4;
  double lambda1 = 0.5, lambda2 = 1.0;
  std::string frozen, box;
  std::uint64_t seed = 0;
  bool sparsity = false;
  std::size_t max_steps = 5000;
  CLI::App* app = nullptr;

  void add(CLI::App* sub, bool with_k = true) {
    app = sub;
    sub->add_option("--request-config", config, "CFRequest JSON (or @file); flags override it");
    if (with_k) sub->add_option("--k", k, "number of counterfactuals")->check(CLI::PositiveNumber);
    sub->add_option("--lambda1", lambda1, "proximity weight");
    sub->add_option("--lambda2", lambda2, "diversity weight");
    sub->add_option("--frozen", frozen, "comma-separated features to keep fixed");
    sub->add_option("--box", box, "box constraints, e.g. income:0:60,hours:20:50");
    sub->add_option("--seed", seed, "random seed");
    sub->add_flag("--sparsity", sparsity, "apply post-hoc sparsity enhancement");
    sub->add_option("--max-steps", max_steps, "optimizer step budget");
  }

  bool given(const char* name) const {
    const auto* opt = app->get_option_no_throw(name);
    return opt && opt->count() > 0;
  }

  CFRequest build(const Row& x, const DatasetSchema& s) const {
    CFRequest r;
    if (!config.empty()) {
      json j = parse_json_arg(config);
      j["x"] = io::row_to_json(x, s);
      r = io::request_from_json(j, s);
    }
    r.x = x;
    if (given("--k") || config.empty()) r.k = k;
    if (given("--lambda1") || config.empty()) r.lambda1 = lambda1;
    if (given("--lambda2") || config.empty()) r.lambda2 = lambda2;
    if (given("--seed") || config.empty()) r.seed = seed;
    if (given("--max-steps") || config.empty()) r.max_steps = max_steps;
    if (sparsity) r.post_hoc_sparsity = true;
    for (const auto& f : split_list(frozen)) r.frozen_features.insert(f);
    for (const auto& b : split_list(box)) {
      const auto a = b.find(':'), c = b.rfind(':');
      if (a == std::string::npos || a == c)
        throw ValidationError("box '" + b + "' must look like name:lo:hi", "box_constraints");
      r.box_constraints[b.substr(0, a)] = {std::stod(b.substr(a + 1, c - a - 1)), std::stod(b.substr(c + 1))};
    }
    return r;
  }
};

io::ModelBundle load_bundle(const std::string& path) { return io::bundle_from_json(io::read_json_file(path)); }

// ---- subcommands ------------------------------------------------------------

void cmd_synth(std::size_t rows, std::uint64_t seed, double noise, const std::string& out,
               const std::string& schema_out) {
  SyntheticSpec spec;
  spec.rows = rows;
  spec.seed = seed;
  spec.label_noise = noise;
  const auto data = make_synthetic(spec);
  std::ostringstream csv;
  write_csv(csv, data);
  emit(out, csv.str());
  if (!schema_out.empty()) emit(schema_out, io::to_json(data.schema).dump(2) + "\n");
}

void cmd_train(const std::string& data_path, const std::string& schema_path, const std::string& arch,
               const std::string& config, double test_fraction, std::uint64_t split_seed,
               const std::string& out) {
  const auto schema = io::schema_from_json(io::read_json_file(schema_path));
  const auto data = load_csv(data_path, schema);
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ValidationError("test fraction must be in [0, 1)", "test_fraction");
  const auto cfg = io::train_config_from_json(config.empty() ? json() : parse_json_arg(config));
  Rng rng(split_seed);
  auto [tr, te] = train_test_split(data, test_fraction, rng);
  const Encoder enc(schema);
  io::ModelBundle b;
  b.schema = schema;
  b.model = train(tr, enc, io::parse_architecture(arch), cfg);
  b.stats = fit_stats(tr);
  b.train_accuracy = accuracy(b.model, enc, tr);
  b.test_accuracy = te.empty() ? b.train_accuracy : accuracy(b.model, enc, te);
  b.test = std::move(te);
  io::write_json_file(out, io::to_json(b));
  std::cout << "architecture " << io::architecture_name(b.model.architecture()) << "\n"
            << "train rows " << tr.size() << "  accuracy " << fmt(b.train_accuracy) << "\n"
            << "test rows " << b.test.size() << "  accuracy " << fmt(b.test_accuracy) << "\n";
  if (b.stats.any_fallback()) std::cout << "note: some features have zero MAD; fallback 1.0 used\n";
}

int cmd_explain(const std::string& model, const std::string& inst, const std::string& mode,
                const RequestFlags& rf, const std::string& out) {
  const auto b = load_bundle(model);
  const Encoder enc(b.schema);
  auto req = rf.build(resolve_instance(inst, b), b.schema);
  apply_mode(req, parse_mode(mode));
  const auto set = generate(req, b.model, enc, b.stats);
  const auto rep = evaluate(set, b.model, enc, b.stats);
  json j{{"request", io::to_json(req, b.schema)}, {"cfset", io::to_json(set, b.schema)}, {"eval", io::to_json(rep)}};
  if (!out.empty()) emit(out, j.dump(2) + "\n");
  std::cout << table(set, b.schema);
  std::cout << "valid " << rep.num_unique_valid << "/" << rep.k << "  steps " << set.diagnostics.steps
            << (set.diagnostics.converged ? "  converged" : "  not converged") << "\n";
  return 0;
}

struct Accum {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) { sum += v, ++n; }
  void add(const std::optional<double>& v) {
    if (v) add(*v);
  }
  std::optional<double> mean() const {
    if (!n) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

void cmd_evaluate(const std::string& model, std::size_t n_instances, const std::string& k_list,
                  const std::string& modes, const RequestFlags& rf, unsigned threads, const std::string& out) {
  const auto b = load_bundle(model);
  const Encoder enc(b.schema);
  if (b.test.empty()) throw ValidationError("model bundle has no test split to draw instances from", "model");
  std::vector<std::size_t> idx(b.test.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng pick(derive_seed(rf.seed, 99));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[pick.index(i)]);
  if (n_instances > idx.size()) {
    std::cerr << "note: only " << idx.size() << " test rows; using all of them\n";
    n_instances = idx.size();
  }
  idx.resize(n_instances);

  std::vector<std::size_t> ks;
  for (const auto& k : split_list(k_list)) ks.push_back(std::stoul(k));
  std::vector<Mode> ms;
  for (const auto& m : split_list(modes)) ms.push_back(parse_mode(m));
  if (ks.empty() || ms.empty()) throw ValidationError("need at least one k and one mode", "k-list");

  struct Job {
    std::size_t mode, k, instance;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < ms.size(); ++m)
    for (std::size_t k = 0; k < ks.size(); ++k)
      for (std::size_t i = 0; i < idx.size(); ++i) jobs.push_back({m, k, i});
  std::vector<EvalReport> reports(jobs.size());

  // Every job writes its own slot, so results do not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      try {
        const auto& job = jobs[j];
        auto req = rf.build(b.test.rows[idx[job.instance]], b.schema);
        req.k = ks[job.k];
        req.seed = derive_seed(rf.seed, job.instance);
        apply_mode(req, ms[job.mode]);
        reports[j] = evaluate(generate(req, b.model, enc, b.stats), b.model, enc, b.stats);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string csv =
      "mode,percent_valid,cont_proximity,cat_proximity,sparsity,cont_diversity,cat_diversity,"
      "count_diversity,k,num_unique_valid\n";
  std::size_t j = 0;
  for (std::size_t m = 0; m < ms.size(); ++m)
    for (std::size_t k = 0; k < ks.size(); ++k) {
      Accum pv, cp, kp, sp, cd, kd, nd, uv;
      std::size_t k_eff = 0;
      for (std::size_t i = 0; i < idx.size(); ++i, ++j) {
        const auto& r = reports[j];
        pv.add(r.percent_valid);
        cp.add(r.cont_proximity);
        kp.add(r.cat_proximity);
        sp.add(r.sparsity);
        cd.add(r.cont_diversity);
        kd.add(r.cat_diversity);
        nd.add(r.count_diversity);
        uv.add(static_cast<double>(r.num_unique_valid));
        k_eff = r.k;
      }
      csv += ms[m].name + "," + fmt(pv.mean()) + "," + fmt(cp.mean()) + "," + fmt(kp.mean()) + "," +
             fmt(sp.mean()) + "," + fmt(cd.mean()) + "," + fmt(kd.mean()) + "," + fmt(nd.mean()) + "," +
             std::to_string(k_eff) + "," + fmt(uv.mean()) + "\n";
    }
  emit(out, csv);
}

void cmd_probe(const std::string& model, const std::string& inst, const std::string& mode,
               const RequestFlags& rf, const std::string& radii, std::size_t samples, const std::string& out) {
  const auto b = load_bundle(model);
  const Encoder enc(b.schema);
  auto req = rf.build(resolve_instance(inst, b), b.schema);
  apply_mode(req, parse_mode(mode));
  const auto set = generate(req, b.model, enc, b.stats);
  ProbeConfig cfg;
  cfg.samples_per_sphere = samples;
  cfg.seed = derive_seed(rf.seed, 7);
  if (!radii.empty()) {
    cfg.radii.clear();
    for (const auto& r : split_list(radii)) cfg.radii.push_back(std::stod(r));
  }
  const auto rep = probe(req.x, set, b.model, enc, b.stats, cfg);
  std::string csv =
      "radius,precision,recall,f1,true_positive,false_positive,false_negative,true_negative,"
      "model_cf_class,model_original_class,clamp_fraction,training_cfs\n";
  for (const auto& r : rep.radii)
    csv += fmt(r.radius) + "," + fmt(r.precision) + "," + fmt(r.recall) + "," + fmt(r.f1) + "," +
           std::to_string(r.true_positive) + "," + std::to_string(r.false_positive) + "," +
           std::to_string(r.false_negative) + "," + std::to_string(r.true_negative) + "," +
           std::to_string(r.model_cf_class) + "," + std::to_string(r.model_original_class) + "," +
           fmt(r.clamp_fraction) + "," + std::to_string(rep.training_cfs) + "\n";
  emit(out, csv);
}

void cmd_filter(const std::string& model, const std::string& cfset_path, const std::string& constraints_path,
                const std::string& out) {
  const auto b = load_bundle(model);
  const Encoder enc(b.schema);
  auto j = io::read_json_file(cfset_path);
  if (j.contains("cfset")) j = j.at("cfset");  // accept explain output as is
  const auto set = io::cfset_from_json(j, enc, &b.model);
  const auto cs = io::constraints_from_json(io::read_json_file(constraints_path), b.schema);
  const auto res = filter(set, cs, b.schema);
  emit(out, io::to_json(res, set, cs, b.schema).dump(2) + "\n");
  std::cerr << res.feasible.size() << " of " << set.examples.size() << " counterfactuals feasible\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse counterfactual explanations for tabular classifiers"};
  app.require_subcommand(1);

  std::size_t rows = 2000;
  double noise = 0.02;
  std::uint64_t seed = 7, split_seed = 0;
  std::string out, schema_out;
  auto* synth = app.add_subcommand("synth", "write the bundled synthetic dataset");
  synth->add_option("--rows", rows, "number of rows");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--noise", noise, "label flip probability");
  synth->add_option("--out", out, "CSV output (default stdout)");
  synth->add_option("--schema-out", schema_out, "also write the schema JSON here");

  std::string data, schema, arch = "one_hidden:20", config, model_path;
  double test_fraction = 0.2;
  auto* tr = app.add_subcommand("train", "train a classifier and write a model bundle");
  tr->add_option("--data", data, "training CSV")->required();
  tr->add_option("--schema", schema, "schema JSON")->required();
  tr->add_option("--arch", arch, "linear | one_hidden:<h>");
  tr->add_option("--config", config, "TrainConfig JSON (or @file)");
  tr->add_option("--test-fraction", test_fraction, "held-out fraction");
  tr->add_option("--split-seed", split_seed, "seed of the train/test split");
  tr->add_option("--out", model_path, "model bundle output")->required();

  std::string instance, mode = "diverse", json_out;
  RequestFlags ex_flags;
  auto* ex = app.add_subcommand("explain", "generate counterfactuals for one instance");
  ex->add_option("--model", model_path, "model bundle")->required();
  ex->add_option("--instance", instance, "test-row index, JSON object, or @file")->required();
  ex->add_option("--mode", mode, "diverse | nodiv | restarts | single");
  ex->add_option("--out", json_out, "write request, CFSet and metrics as JSON");
  ex_flags.add(ex);

  std::size_t n_instances = 50;
  std::string k_list = "1,2,4,6,8,10", modes = "diverse,nodiv,restarts";
  unsigned threads = 0;
  RequestFlags ev_flags;
  auto* ev = app.add_subcommand("evaluate", "metric CSV per (mode, k) over random test instances");
  ev->add_option("--model", model_path, "model bundle")->required();
  ev->add_option("--instances", n_instances, "number of test instances");
  ev->add_option("--k-list", k_list, "comma-separated k values");
  ev->add_option("--modes", modes, "comma-separated modes");
  ev->add_option("--threads", threads, "worker threads (0 = all cores)");
  ev->add_option("--out", out, "CSV output (default stdout)");
  ev_flags.add(ev, false);

  std::string radii;
  std::size_t samples = 1000;
  RequestFlags pr_flags;
  auto* pr = app.add_subcommand("probe", "1-NN boundary probe CSV per radius");
  pr->add_option("--model", model_path, "model bundle")->required();
  pr->add_option("--instance", instance, "test-row index, JSON object, or @file")->required();
  pr->add_option("--mode", mode, "diverse | nodiv | restarts | single");
  pr->add_option("--radii", radii, "comma-separated MAD multiples (default 0.5,1,2)");
  pr->add_option("--samples", samples, "points per sphere");
  pr->add_option("--out", out, "CSV output (default stdout)");
  pr_flags.add(pr);

  std::string cfset_path, constraints_path;
  auto* fl = app.add_subcommand("filter", "drop counterfactuals that violate causal constraints");
  fl->add_option("--model", model_path, "model bundle (supplies the schema and model)")->required();
  fl->add_option("--cfset", cfset_path, "CFSet JSON, or the output of explain --out")->required();
  fl->add_option("--constraints", constraints_path, "constraints JSON")->required();
  fl->add_option("--out", out, "JSON output (default stdout)");

  service::ServerOptions sopts;
  std::string data_dir;
  auto* sv = app.add_subcommand("serve", "run the HTTP service");
  sv->add_option("--port", sopts.port, "listen port");
  sv->add_option("--host", sopts.host, "listen address");
  sv->add_option("--data-dir", data_dir, "persist datasets and models here");
  sv->add_option("--timeout", sopts.request_timeout_seconds, "request timeout in seconds");
  sv->add_option("--cors-origin", sopts.cors_origin, "Access-Control-Allow-Origin value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) cmd_synth(rows, seed, noise, out, schema_out);
    if (*tr) cmd_train(data, schema, arch, config, test_fraction, split_seed, model_path);
    if (*ex) return cmd_explain(model_path, instance, mode, ex_flags, json_out);
    if (*ev) cmd_evaluate(model_path, n_instances, k_list, modes, ev_flags, threads, out);
    if (*pr) cmd_probe(model_path, instance, mode, pr_flags, radii, samples, out);
    if (*fl) cmd_filter(model_path, cfset_path, constraints_path, out);
    if (*sv) {
      service::Service svc(data_dir);
      std::cerr << "listening on " << sopts.host << ":" << sopts.port << "\n";
      if (!service::serve(svc, sopts)) {
        std::cerr << "error: could not listen on " << sopts.host << ":" << sopts.port << "\n";
        return 1;
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << "\n";
    return 2;
  } catch (const FingerprintMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
