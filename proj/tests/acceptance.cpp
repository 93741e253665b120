// Acceptance run: one PASS / FAIL / SKIP line per criterion, nonzero exit on
// any FAIL. Thresholds live in the Limits block below.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "divcf/causal.hpp"
#include "divcf/distance.hpp"
#include "divcf/dpp.hpp"
#include "divcf/engine.hpp"
#include "divcf/json_io.hpp"
#include "divcf/linalg.hpp"
#include "divcf/metrics.hpp"
#include "divcf/probe.hpp"
#include "divcf/synth.hpp"
#include "divcf/train.hpp"
#include "support.hpp"

using namespace divcf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace limits {
constexpr int gradient_configs = 200;
constexpr std::size_t gradient_max_k = 4, gradient_max_d = 10;
constexpr double gradient_rel_err = 1e-4;
constexpr double gradient_seconds = 60;
constexpr int det_matrices = 1000;
constexpr double det_abs_err = 1e-10;
constexpr double min_test_accuracy = 0.9;
constexpr std::size_t validity_instances = 50;
constexpr double min_validity = 0.95;
constexpr double validity_seconds = 600;
constexpr double diversity_paired_share = 0.8;
constexpr std::size_t sparsity_cfs = 200;
constexpr std::size_t probe_instances = 20;
constexpr double probe_min_f1 = 0.5;
constexpr int causal_triples = 500;
constexpr double adult_accuracy = 0.82, adult_tolerance = 0.03;
}  // namespace limits

namespace {

struct Outcome {
  enum Status { pass, fail, skip } status;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  static const char* tag[] = {"PASS", "FAIL", "SKIP"};
  std::printf("%s %-22s %s\n", tag[o.status], name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (o.status == Outcome::fail) ++failures;
}

void run_check(const std::string& name, const std::function<Outcome()>& fn) {
  try {
    report(name, fn());
  } catch (const std::exception& e) {
    report(name, {Outcome::fail, std::string("exception: ") + e.what()});
  }
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---- gradient --------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  int checked = 0, tries = 0;
  double worst = 0.0;
  while (checked < limits::gradient_configs && tries < 100000) {
    ++tries;
    const std::size_t n_cont = 1 + rng.index(4), n_cat = 1 + rng.index(2);  // always mixed
    const auto schema = divcf::testing::random_schema(rng, n_cont, n_cat);
    const Encoder enc(schema);
    if (enc.width() > limits::gradient_max_d) continue;
    const auto stats = divcf::testing::random_stats(rng, schema);
    const bool ann = rng.uniform() < 0.7;
    const auto model = ann ? divcf::testing::random_ann(rng, enc.width(), 3 + rng.index(6))
                           : divcf::testing::random_linear(rng, enc.width());
    CFRequest req;
    req.x = divcf::testing::random_row(rng, schema);
    req.k = 1 + rng.index(limits::gradient_max_k);
    req.lambda1 = 0.5;
    req.lambda2 = 1.0;
    req.desired_class = static_cast<int>(rng.index(2));
    const auto jitter = diagonal_jitter(req.k, rng.next());
    std::vector<Vec> cands(req.k, Vec(enc.width()));
    for (auto& c : cands)
      for (auto& v : c) v = rng.uniform();
    LossContext ctx(model, enc, stats, req, req.k, jitter);

    // Skip configurations within finite-difference reach of a kink.
    const double h = 1e-6, margin = 1e-4;
    const double z = ctx.desired_class() == 1 ? 1 : -1;
    bool smooth = true;
    for (std::size_t i = 0; i < cands.size() && smooth; ++i) {
      if (std::abs(1 - z * model.logit(cands[i])) < 1e-3 || model.kink_margin(cands[i]) < 1e-3) smooth = false;
      for (std::size_t j = 0; j < enc.width() && smooth; ++j) {
        if (std::abs(cands[i][j] - ctx.x()[j]) < margin) smooth = false;
        for (std::size_t l = i + 1; l < cands.size(); ++l)
          if (std::abs(cands[i][j] - cands[l][j]) < margin) smooth = false;
      }
    }
    if (!smooth) continue;

    const auto g = loss_gradient(cands, ctx);
    for (std::size_t i = 0; i < cands.size(); ++i)
      for (std::size_t j = 0; j < enc.width(); ++j) {
        auto p = cands, q = cands;
        p[i][j] += h;
        q[i][j] -= h;
        const double fd = (combined_loss(p, ctx).total - combined_loss(q, ctx).total) / (2 * h);
        worst = std::max(worst, divcf::testing::rel_err(g[i][j], fd));
      }
    ++checked;
  }
  const double secs = seconds_since(t0);
  const bool ok = checked == limits::gradient_configs && worst < limits::gradient_rel_err &&
                  secs < limits::gradient_seconds;
  return {ok ? Outcome::pass : Outcome::fail,
          format("%d configs, max rel err %.2e (limit %.0e), %.1f s (limit %.0f s)", checked, worst,
                 limits::gradient_rel_err, secs, limits::gradient_seconds)};
}

// ---- determinant -----------------------------------------------------------

double cofactor_det(const SquareMatrix& m) {
  const std::size_t n = m.size();
  if (n == 1) return m(0, 0);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    s += (j % 2 ? -1.0 : 1.0) * m(0, j) * cofactor_det(m.minor_matrix(0, j));
  return s;
}

Outcome determinant_check() {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < limits::det_matrices; ++t) {
    const std::size_t n = 1 + rng.index(4);
    SquareMatrix m(n);
    if (t % 2) {
      // Kernel-shaped: unit-ish diagonal, symmetric entries in (0, 1].
      for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0 + rng.uniform(0.0, 1e-4);
        for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 1.0 / (1.0 + rng.uniform(0.0, 3.0));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    worst = std::max(worst, std::abs(dpp_diversity(m) - cofactor_det(m)));
  }
  return {worst <= limits::det_abs_err ? Outcome::pass : Outcome::fail,
          format("%d matrices k<=4, max abs err %.2e (limit %.0e)", limits::det_matrices, worst,
                 limits::det_abs_err)};
}

// ---- synthetic corpus experiments ------------------------------------------

struct Corpus {
  Dataset train, test;
  Encoder enc;
  FeatureStats stats;
  Classifier ann, linear;
  double ann_accuracy = 0, linear_accuracy = 0;
  std::vector<std::size_t> picks;  // test rows used as instances
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    const Dataset all = make_synthetic();
    Rng rng(1);
    std::tie(out.train, out.test) = train_test_split(all, 0.2, rng);
    out.enc = Encoder(all.schema);
    out.stats = fit_stats(out.train);
    TrainConfig cfg;
    cfg.epochs = 60;
    out.ann = train(out.train, out.enc, Architecture::one_hidden(20), cfg);
    out.linear = train(out.train, out.enc, Architecture::linear(), cfg);
    out.ann_accuracy = accuracy(out.ann, out.enc, out.test);
    out.linear_accuracy = accuracy(out.linear, out.enc, out.test);
    std::vector<std::size_t> idx(out.test.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng pick(5);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[pick.index(i)]);
    idx.resize(limits::validity_instances);
    out.picks = idx;
    return out;
  }();
  return c;
}

struct Runs {
  // [instance][k index] for DiverseCF at k = 2, 4, 8; plus NoDiversityCF at k = 4.
  std::vector<std::array<CFSet, 3>> diverse;
  std::vector<CFSet> nodiv4;
  double diverse_seconds = 0;
};

constexpr std::array<std::size_t, 3> kValidityK{2, 4, 8};

const Runs& runs() {
  static const Runs r = [] {
    const auto& c = corpus();
    Runs out;
    out.diverse.resize(c.picks.size());
    out.nodiv4.resize(c.picks.size());
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < c.picks.size(); ++i)
      for (std::size_t kk = 0; kk < kValidityK.size(); ++kk) {
        CFRequest req;
        req.x = c.test.rows[c.picks[i]];
        req.k = kValidityK[kk];
        req.seed = derive_seed(100, i);
        out.diverse[i][kk] = generate(req, c.ann, c.enc, c.stats);
      }
    out.diverse_seconds = seconds_since(t0);
    for (std::size_t i = 0; i < c.picks.size(); ++i) {
      CFRequest req;
      req.x = c.test.rows[c.picks[i]];
      req.k = 4;
      req.seed = derive_seed(100, i);
      req.diversity_mode = DiversityMode::off;
      out.nodiv4[i] = generate(req, c.ann, c.enc, c.stats);
    }
    return out;
  }();
  return r;
}

Outcome accuracy_check() {
  const auto& c = corpus();
  return {c.ann_accuracy >= limits::min_test_accuracy ? Outcome::pass : Outcome::fail,
          format("ANN(1,20) test accuracy %.3f (need >= %.2f); linear %.3f", c.ann_accuracy,
                 limits::min_test_accuracy, c.linear_accuracy)};
}

Outcome validity_check() {
  const auto& c = corpus();
  const auto& r = runs();
  std::string detail;
  bool ok = r.diverse_seconds < limits::validity_seconds;
  for (std::size_t kk = 0; kk < kValidityK.size(); ++kk) {
    double sum = 0;
    for (const auto& inst : r.diverse) sum += percent_valid(inst[kk], c.ann, c.enc);
    const double mean = sum / static_cast<double>(r.diverse.size());
    ok = ok && mean >= limits::min_validity;
    detail += format("k=%zu %.3f  ", kValidityK[kk], mean);
  }
  detail += format("(need >= %.2f over %zu instances), %.0f s (limit %.0f s)", limits::min_validity,
                   r.diverse.size(), r.diverse_seconds, limits::validity_seconds);
  return {ok ? Outcome::pass : Outcome::fail, detail};
}

Outcome diversity_check() {
  const auto& c = corpus();
  const auto& r = runs();
  const auto& schema = c.enc.schema();
  std::size_t wins = 0;
  double sum_d = 0, sum_n = 0;
  for (std::size_t i = 0; i < r.nodiv4.size(); ++i) {
    const double d = diversity(r.diverse[i][1], schema, c.stats).cont.value_or(0.0);
    const double n = diversity(r.nodiv4[i], schema, c.stats).cont.value_or(0.0);
    sum_d += d;
    sum_n += n;
    wins += d > n;
  }
  const double share = static_cast<double>(wins) / static_cast<double>(r.nodiv4.size());
  const double nn = static_cast<double>(r.nodiv4.size());
  const bool ok = sum_d / nn > sum_n / nn && share >= limits::diversity_paired_share;
  return {ok ? Outcome::pass : Outcome::fail,
          format("k=4 mean cont diversity DPP %.3f vs none %.3f; DPP higher on %.0f%% of instances (need >= "
                 "%.0f%%)",
                 sum_d / nn, sum_n / nn, 100 * share, 100 * limits::diversity_paired_share)};
}

Outcome sparsity_check() {
  const auto& c = corpus();
  const auto& r = runs();
  std::size_t seen = 0, invalid = 0, worse = 0;
  for (std::size_t i = 0; i < r.diverse.size() && seen < limits::sparsity_cfs; ++i)
    for (std::size_t kk = 1; kk < 3 && seen < limits::sparsity_cfs; ++kk) {
      const CFSet& set = r.diverse[i][kk];
      for (const auto& ex : set.examples) {
        if (!ex.valid || seen >= limits::sparsity_cfs) continue;
        ++seen;
        const CFExample out = enhance_sparsity(ex, set.original, c.ann, c.enc, c.stats, set.desired_class);
        invalid += desired_probability(c.ann, c.enc.encode(out.values), set.desired_class) <= 0.5;
        CFSet before, after;
        before.original = after.original = set.original;
        before.examples = {ex};
        after.examples = {out};
        worse += sparsity(after, set.original) < sparsity(before, set.original);
      }
    }
  const bool ok = seen == limits::sparsity_cfs && invalid == 0 && worse == 0;
  return {ok ? Outcome::pass : Outcome::fail,
          format("%zu valid CFs: %zu became invalid, %zu lost sparsity (0 allowed)", seen, invalid, worse)};
}

Outcome probe_check() {
  const auto& c = corpus();
  ProbeConfig cfg;
  cfg.radii = {1.0};
  double f4 = 0, f1 = 0, share = 0;
  std::size_t n = 0, undefined = 0;
  for (std::size_t i = 0; i < limits::probe_instances; ++i) {
    const Row& x = c.test.rows[c.picks[i]];
    double f[2] = {0, 0};
    for (int which = 0; which < 2; ++which) {
      CFRequest req;
      req.x = x;
      req.k = which == 0 ? 4 : 1;
      req.seed = derive_seed(300, i);
      const CFSet set = generate(req, c.linear, c.enc, c.stats);
      cfg.seed = derive_seed(400, i);
      try {
        const auto r = probe(x, set, c.linear, c.enc, c.stats, cfg).radii[0];
        f[which] = r.f1;
        if (which == 0) share += static_cast<double>(r.model_cf_class) / static_cast<double>(cfg.samples_per_sphere);
      } catch (const Undefined&) {
        ++undefined;  // no valid CF to train on; scored as zero
      }
    }
    f4 += f[0];
    f1 += f[1];
    ++n;
  }
  f4 /= static_cast<double>(n);
  f1 /= static_cast<double>(n);
  share /= static_cast<double>(n);
  const bool ok = f4 > limits::probe_min_f1 && f4 >= f1;
  return {ok ? Outcome::pass : Outcome::fail,
          format("linear model, r=1: mean F1 k=4 %.3f (need > %.1f), k=1 %.3f, %zu instances, %zu without "
                 "valid CFs; CF class covers %.0f%% of the ball on average",
                 f4, limits::probe_min_f1, f1, n, undefined, 100 * share)};
}

// ---- causal filter ---------------------------------------------------------

Outcome causal_check() {
  DatasetSchema s;
  s.features = {divcf::testing::cont("age", 17, 90, 0),
                divcf::testing::cat("education", {"Masters", "HS-grad", "Doctorate", "Bachelors"}),
                divcf::testing::cont("hours", 1, 99, 0)};
  const std::vector<std::string> order{"HS-grad", "Bachelors", "Masters", "Doctorate"};
  auto level = [&](std::size_t rank) { return static_cast<double>(*s.features[1].level_index(order[rank])); };
  Rng rng(9);
  std::size_t mismatches = 0, violating = 0;
  for (int t = 0; t < limits::causal_triples; ++t) {
    CausalConstraint c;
    c.orders["education"] = order;
    const std::size_t rx = rng.index(4);
    Row x{std::round(rng.uniform(20, 70)), level(rx), std::round(rng.uniform(10, 80))};
    Row cf = x;
    const bool violate = rng.uniform() < 0.5;
    bool expected = false;
    switch (t % 4) {
      case 0: {  // education can only go up
        c.kind = CausalConstraint::Kind::no_decrease;
        c.feature = "education";
        if (violate && rx > 0) cf[1] = level(rng.index(rx));
        else cf[1] = level(rx + rng.index(4 - rx));
        expected = violate && rx > 0;
        break;
      }
      case 1: {  // hours can only go down
        c.kind = CausalConstraint::Kind::no_increase;
        c.feature = "hours";
        cf[2] = x[2] + (violate ? 1.0 + rng.index(10) : -static_cast<double>(rng.index(10)));
        expected = violate;
        break;
      }
      case 2: {  // age can only go up
        c.kind = CausalConstraint::Kind::no_decrease;
        c.feature = "age";
        cf[0] = x[0] + (violate ? -1.0 - rng.index(5) : static_cast<double>(rng.index(5)));
        expected = violate;
        break;
      }
      default: {  // more education needs a strictly higher age
        c.kind = CausalConstraint::Kind::monotone_pair;
        c.feature = "education";
        c.effect = "age";
        const bool raise = rx < 3 && rng.uniform() < 0.7;
        cf[1] = raise ? level(rx + 1 + rng.index(3 - rx)) : level(rng.index(rx + 1));
        const double dage = violate ? -static_cast<double>(rng.index(3)) : 1.0 + rng.index(5);
        cf[0] = x[0] + dage;
        expected = raise && dage <= 0;
        break;
      }
    }
    cf[2] += t % 4 == 1 ? 0.0 : std::round(rng.uniform(-5, 5));  // noise on an unconstrained feature
    const auto v = check(cf, x, {c}, s);
    violating += expected;
    const bool got = !v.empty();
    if (got != expected || (got && (v.size() != 1 || v[0].constraint != 0))) ++mismatches;
  }
  return {mismatches == 0 ? Outcome::pass : Outcome::fail,
          format("%d triples (%zu violating), %zu mismatches (0 allowed)", limits::causal_triples, violating,
                 mismatches)};
}

// ---- Adult (optional) ------------------------------------------------------

DatasetSchema adult_schema() {
  auto c = [](std::string n, std::vector<std::string> l) { return divcf::testing::cat(std::move(n), std::move(l)); };
  DatasetSchema s;
  s.features = {divcf::testing::cont("age", 17, 90, 0),
                c("workclass", {"Government", "Other/Unknown", "Private", "Self-Employed"}),
                c("education", {"Assoc", "Bachelors", "Doctorate", "HS-grad", "Masters", "Prof-school", "School",
                                "Some-college"}),
                c("marital_status", {"Divorced", "Married", "Separated", "Single", "Widowed"}),
                c("occupation", {"Blue-Collar", "Other/Unknown", "Professional", "Sales", "Service", "White-Collar"}),
                c("race", {"Other", "White"}),
                c("gender", {"Female", "Male"}),
                divcf::testing::cont("hours_per_week", 1, 99, 0)};
  s.label_column = "income";
  return s;
}

Outcome adult_check() {
  const char* csv = std::getenv("DIVCF_ADULT_CSV");
  if (!csv || !*csv) return {Outcome::skip, "set DIVCF_ADULT_CSV (and optionally DIVCF_ADULT_SCHEMA) to run"};
  const char* schema_path = std::getenv("DIVCF_ADULT_SCHEMA");
  const DatasetSchema s =
      schema_path && *schema_path ? io::schema_from_json(io::read_json_file(schema_path)) : adult_schema();
  const Dataset data = load_csv(csv, s);
  Rng rng(0);
  auto [tr, te] = train_test_split(data, 0.2, rng);
  const Encoder enc(s);
  TrainConfig cfg;
  cfg.epochs = 40;
  const Classifier m = train(tr, enc, Architecture::one_hidden(20), cfg);
  const double acc = accuracy(m, enc, te);
  const bool ok = std::abs(acc - limits::adult_accuracy) <= limits::adult_tolerance;
  return {ok ? Outcome::pass : Outcome::fail,
          format("ANN(1,20) test accuracy %.3f on %zu rows (need %.2f +/- %.2f)", acc, te.size(),
                 limits::adult_accuracy, limits::adult_tolerance)};
}

// ---- CLI determinism -------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_check() {
  const fs::path root = fs::temp_directory_path() / ("divcf_accept_" + std::to_string(::getpid()));
  std::vector<std::string> compared;
  std::string first_diff;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path d = root / std::to_string(pass);
    fs::create_directories(d);
    {
      std::ofstream cs(d / "constraints.json");
      cs << R"({"constraints": [{"kind": "no_decrease", "feature": "education",
                "orders": {"education": ["HS-grad", "Bachelors", "Masters", "Doctorate"]}}]})";
    }
    auto q = [&](const char* name) { return "\"" + (d / name).string() + "\""; };
    const std::string cli = std::string("\"") + DIVCF_CLI_PATH + "\" ";
    const std::vector<std::pair<std::string, std::string>> steps{
        {"synth", "synth --rows 600 --seed 4 --out " + q("data.csv") + " --schema-out " + q("schema.json")},
        {"train", "train --data " + q("data.csv") + " --schema " + q("schema.json") +
                      " --arch one_hidden:10 --config '{\"epochs\": 30, \"seed\": 3}' --out " + q("model.json")},
        {"explain", "explain --model " + q("model.json") + " --instance 3 --k 4 --seed 8 --sparsity --out " +
                        q("cf.json")},
        {"evaluate", "evaluate --model " + q("model.json") +
                         " --instances 5 --k-list 1,2,4 --modes diverse,nodiv,restarts --max-steps 1000 --seed 2"
                         " --out " +
                         q("eval.csv")},
        {"probe", "probe --model " + q("model.json") + " --instance 3 --k 4 --samples 300 --seed 8 --out " +
                      q("probe.csv")},
        {"filter", "filter --model " + q("model.json") + " --cfset " + q("cf.json") + " --constraints " +
                       q("constraints.json") + " --out " + q("filter.json")},
    };
    for (const auto& [name, args] : steps) {
      const std::string cmd = cli + args + " >" + q((name + ".stdout").c_str()) + " 2>&1";
      const int st = std::system(cmd.c_str());
      if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) {
        fs::remove_all(root);
        return {Outcome::fail, name + " exited with status " + std::to_string(st)};
      }
    }
  }
  const char* outputs[] = {"data.csv", "schema.json", "model.json", "cf.json", "eval.csv", "probe.csv",
                           "filter.json", "train.stdout", "explain.stdout"};
  std::size_t differing = 0;
  for (const char* f : outputs) {
    const bool same = slurp(root / "0" / f) == slurp(root / "1" / f);
    if (!same) {
      ++differing;
      if (first_diff.empty()) first_diff = f;
    }
  }
  fs::remove_all(root);
  const std::size_t total = std::size(outputs);
  return {differing == 0 ? Outcome::pass : Outcome::fail,
          format("synth/train/explain/evaluate/probe/filter run twice: %zu of %zu outputs identical%s%s",
                 total - differing, total, first_diff.empty() ? "" : ", first diff in ", first_diff.c_str())};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  run_check("gradient_fd", gradient_check);
  run_check("determinant_oracle", determinant_check);
  run_check("synthetic_accuracy", accuracy_check);
  run_check("validity_k2_4_8", validity_check);
  run_check("diversity_ordering", diversity_check);
  run_check("sparsity_enhancement", sparsity_check);
  run_check("probe_sanity", probe_check);
  run_check("causal_filter_oracle", causal_check);
  run_check("adult_accuracy", adult_check);
  run_check("cli_determinism", cli_check);
  std::printf("%s: %d failing, %.0f s total\n", failures ? "FAILED" : "OK", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
