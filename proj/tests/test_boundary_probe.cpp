#include <gtest/gtest.h>

#include "divcf/engine.hpp"
#include "divcf/probe.hpp"
#include "support.hpp"

using namespace divcf;
using divcf::testing::cat;
using divcf::testing::cont;

namespace {

struct Plane {
  DatasetSchema schema;
  Encoder enc;
  FeatureStats stats;
  Classifier model;
};

// Two continuous features with MAD 10 and 5; class 1 iff a > 50.
Plane plane() {
  Plane p;
  p.schema.features = {cont("a", 0, 100, 4), cont("b", 0, 100, 4)};
  p.enc = Encoder(p.schema);
  p.stats.features.resize(2);
  p.stats.features[0].mad_raw = 10;
  p.stats.features[1].mad_raw = 5;
  p.model = Classifier(Architecture::linear(), 2);
  p.model.output_weights() = {100, 0};
  p.model.output_bias() = -50;
  return p;
}

CFSet set_of(const Plane& p, const Row& x, const std::vector<Row>& rows) {
  CFSet s;
  s.original = x;
  s.desired_class = 1 - p.model.predict(p.enc.encode(x));
  for (const auto& r : rows) {
    CFExample ex;
    ex.values = r;
    ex.encoded = p.enc.encode(r);
    ex.desired_probability = desired_probability(p.model, ex.encoded, s.desired_class);
    ex.valid = ex.desired_probability > 0.5;
    s.examples.push_back(ex);
  }
  return s;
}

}  // namespace

TEST(SampleSphere, ZeroRadiusStaysAtX) {
  auto p = plane();
  Rng rng(1);
  Row x{40, 60};
  auto s = sample_sphere(x, 1e-12, 200, p.stats, p.schema, rng);
  ASSERT_EQ(s.rows.size(), 200u);
  for (const auto& r : s.rows) {
    EXPECT_NEAR(r[0], x[0], 1e-9);
    EXPECT_NEAR(r[1], x[1], 1e-9);
  }
  EXPECT_EQ(s.clamp_fraction, 0.0);
}

TEST(SampleSphere, SingleFeatureBallContainment) {
  DatasetSchema s;
  s.features = {cont("v", 0, 100), cat("c", {"a", "b"})};
  FeatureStats st;
  st.features.resize(2);
  st.features[0].mad_raw = 7;
  Rng rng(2);
  auto out = sample_sphere({50, 0}, 1.0, 5000, st, s, rng);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : out.rows) {
    EXPECT_LE(std::abs(r[0] - 50), 7.0);
    lo = std::min(lo, r[0]);
    hi = std::max(hi, r[0]);
  }
  EXPECT_LT(lo, 44.0);  // and the ball is actually filled
  EXPECT_GT(hi, 56.0);
}

TEST(SampleSphere, EuclideanBallInMadUnits) {
  auto p = plane();
  Rng rng(3);
  Row x{50, 50};
  auto out = sample_sphere(x, 2.0, 4000, p.stats, p.schema, rng);
  std::size_t inner = 0;
  for (const auto& r : out.rows) {
    const double u = (r[0] - 50) / 10, v = (r[1] - 50) / 5;
    const double rad = std::sqrt(u * u + v * v);
    EXPECT_LE(rad, 2.0 + 1e-9);
    inner += rad < std::sqrt(2.0);  // half the area of the 2-ball
  }
  EXPECT_NEAR(static_cast<double>(inner) / 4000, 0.5, 0.04);
}

TEST(SampleSphere, CategoricalLevelsAreUniform) {
  DatasetSchema s;
  s.features = {cat("c", {"a", "b", "c", "d"}), cont("v", 0, 1)};
  FeatureStats st;
  st.features.resize(2);
  Rng rng(4);
  auto out = sample_sphere({2, 0.5}, 1.0, 4000, st, s, rng);
  std::vector<int> freq(4, 0);
  for (const auto& r : out.rows) freq[static_cast<std::size_t>(r[0])]++;
  for (int f : freq) {
    EXPECT_GE(f, 850);
    EXPECT_LE(f, 1150);
  }
}

TEST(SampleSphere, ClampsAndReportsFraction) {
  auto p = plane();
  Rng rng(5);
  auto out = sample_sphere({0, 100}, 1.0, 1000, p.stats, p.schema, rng);
  for (const auto& r : out.rows) {
    EXPECT_GE(r[0], 0.0);
    EXPECT_LE(r[1], 100.0);
  }
  EXPECT_GT(out.clamp_fraction, 0.5);
  EXPECT_LE(out.clamp_fraction, 1.0);
}

TEST(OneNN, ZeroDistanceCases) {
  auto p = plane();
  Row x{40, 50}, cf{60, 50};
  std::vector<LabeledRow> training{{x, 0}, {cf, 1}};
  EXPECT_EQ(one_nn_predict(training, x, p.schema, p.stats, 0), 0);
  EXPECT_EQ(one_nn_predict(training, cf, p.schema, p.stats, 0), 1);
  // Equidistant query goes to the original class, whatever the order.
  std::vector<LabeledRow> reversed{{cf, 1}, {x, 0}};
  EXPECT_EQ(one_nn_predict(reversed, {50, 50}, p.schema, p.stats, 0), 0);
  EXPECT_THROW(one_nn_predict({}, x, p.schema, p.stats, 0), Undefined);
}

TEST(OneNN, AgreesWithLinearScan) {
  DatasetSchema s;
  s.features = {cont("a", 0, 10), cat("c", {"p", "q", "r"}), cont("b", 0, 10)};
  FeatureStats st;
  st.features.resize(3);
  st.features[0].mad_raw = 2;
  st.features[2].mad_raw = 0.5;
  Rng rng(6);
  for (int t = 0; t < 2000; ++t) {
    Row x = divcf::testing::random_row(rng, s), cf = divcf::testing::random_row(rng, s);
    Row q = divcf::testing::random_row(rng, s);
    auto d = [&](const Row& a) {
      return (std::abs(a[0] - q[0]) / 2 + std::abs(a[2] - q[2]) / 0.5) / 2 + (a[1] != q[1] ? 1.0 : 0.0);
    };
    const int want = d(cf) < d(x) ? 1 : 0;
    ASSERT_EQ(one_nn_predict({{x, 0}, {cf, 1}}, q, s, st, 0), want);
  }
}

TEST(Probe, MirroredCfAcrossAxisAlignedPlane) {
  auto p = plane();
  Row x{47.5, 50};  // a quarter MAD below the boundary
  auto set = set_of(p, x, {{52.5, 50}});
  ASSERT_TRUE(set.examples[0].valid);
  ProbeConfig cfg;
  cfg.radii = {0.5};
  auto rep = probe(x, set, p.model, p.enc, p.stats, cfg);
  ASSERT_EQ(rep.radii.size(), 1u);
  EXPECT_GT(rep.radii[0].f1, 0.98);
  EXPECT_EQ(rep.training_cfs, 1u);
}

TEST(Probe, MirroredBeatsParallelPlacement) {
  // Oblique boundary a/10 + b/5 = 10 in MAD units; x sits just below it.
  auto p = plane();
  p.model.output_weights() = {10, 20};  // logit over [0,1]-scaled inputs = a/10 + b/5 - 10
  p.model.output_bias() = -10;
  Row x{45, 26};  // u = 4.5, v = 5.2, u + v = 9.7
  // Reflection across the plane is (+0.3, +0.3) in MAD units; the misplaced CF
  // moves the same distance along the plane instead.
  Row mirrored{x[0] + 0.3 * 10, x[1] + 0.3 * 5};
  Row parallel{x[0] + 0.3 * 10, x[1] - 0.3 * 5};
  const std::vector<LabeledRow> good{{x, 0}, {mirrored, 1}}, bad{{x, 0}, {parallel, 1}};
  Rng rng(7);
  auto sample = sample_sphere(x, 0.5, 4000, p.stats, p.schema, rng);
  auto a = score_radius(0.5, sample.rows, good, p.model, p.enc, p.stats, 0, 1);
  auto b = score_radius(0.5, sample.rows, bad, p.model, p.enc, p.stats, 0, 1);
  EXPECT_GT(a.f1, b.f1);
}

TEST(Probe, CfInsideOriginalRegionHasZeroRecall) {
  auto p = plane();
  Row x{45, 50};
  Rng rng(8);
  auto sample = sample_sphere(x, 1.0, 1000, p.stats, p.schema, rng);
  auto r = score_radius(1.0, sample.rows, {{x, 0}, {x, 1}}, p.model, p.enc, p.stats, 0, 1);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_GT(r.model_cf_class, 0u);
}

TEST(Probe, DeterministicAndWellFormed) {
  auto p = plane();
  Row x{44, 30};
  auto set = set_of(p, x, {{56, 30}, {53, 40}, {20, 30}});
  ProbeConfig cfg;
  cfg.seed = 12;
  auto a = probe(x, set, p.model, p.enc, p.stats, cfg);
  auto b = probe(x, set, p.model, p.enc, p.stats, cfg);
  ASSERT_EQ(a.radii.size(), 3u);
  EXPECT_EQ(a.training_cfs, 2u);  // the invalid third CF is left out
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = a.radii[i];
    EXPECT_EQ(r.f1, b.radii[i].f1);
    EXPECT_EQ(r.true_positive, b.radii[i].true_positive);
    EXPECT_EQ(r.true_positive + r.false_positive + r.false_negative + r.true_negative, 1000u);
    EXPECT_EQ(r.model_cf_class + r.model_original_class, 1000u);
    for (double m : {r.precision, r.recall, r.f1}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
    const double hm = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0;
    EXPECT_NEAR(r.f1, hm, 1e-12);
  }
}

TEST(Probe, NeedsAValidCounterfactual) {
  auto p = plane();
  Row x{40, 30};
  auto set = set_of(p, x, {{45, 30}});
  EXPECT_THROW(probe(x, set, p.model, p.enc, p.stats, {}), Undefined);
  ProbeConfig bad;
  bad.radii = {0.5, -1};
  auto ok = set_of(p, x, {{60, 30}});
  EXPECT_THROW(probe(x, ok, p.model, p.enc, p.stats, bad), ValidationError);
  bad = {};
  bad.samples_per_sphere = 0;
  EXPECT_THROW(probe(x, ok, p.model, p.enc, p.stats, bad), ValidationError);
}
