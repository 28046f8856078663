#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace vss;

namespace {

const Mesh& reference() {
  static const Mesh m = bench::make_reference_scene();
  return m;
}

}  // namespace

TEST(ReferenceScene, DeterministicAndValid) {
  const Mesh& a = reference();
  const Mesh b = bench::make_reference_scene();
  EXPECT_EQ(a.triangles, b.triangles);
  EXPECT_EQ(a.vertices, b.vertices);
  ASSERT_TRUE(a.attribute.has_value());
  EXPECT_NO_THROW(a.validate());
  const auto [lo, hi] = std::minmax_element(a.attribute->begin(), a.attribute->end());
  EXPECT_EQ(*lo, 0.0);
  EXPECT_EQ(*hi, 1.0);
  EXPECT_NE(bench::make_reference_scene(8).vertices, a.vertices);
}

TEST(ReferenceScene, PresetsCrossBorderAsIntended) {
  const auto presets = bench::reference_presets(reference(), 320, 180);
  ASSERT_EQ(presets.size(), 3u);
  std::vector<int> crossings;
  for (const auto& p : presets)
    crossings.push_back(bench::border_crossings(foreground_mask(rasterize(reference(), p.camera))));
  EXPECT_EQ(crossings[0], 0);
  EXPECT_GE(crossings[1], 1);
  EXPECT_GT(crossings[2], crossings[1]);
}

TEST(BorderCrossings, Runs) {
  Mask m(6, 4);
  EXPECT_EQ(bench::border_crossings(m), 0);
  m(2, 0) = m(3, 0) = 1;
  EXPECT_EQ(bench::border_crossings(m), 1);
  m(5, 2) = 1;
  EXPECT_EQ(bench::border_crossings(m), 2);
  m(0, 0) = m(0, 1) = 1;  // corner run, separate from the top one
  EXPECT_EQ(bench::border_crossings(m), 3);
  EXPECT_EQ(bench::border_crossings(Mask(4, 4, 1)), 1);
}

TEST(Quartiles, Basic) {
  const auto q = bench::quartiles({5, 1, 3, 2, 4});
  EXPECT_EQ(q.median, 3.0);
  EXPECT_EQ(q.iqr, 2.0);
  EXPECT_EQ(bench::quartiles({7}).median, 7.0);
  EXPECT_EQ(bench::quartiles({7}).iqr, 0.0);
}

TEST(Benchmark, OneStepColumnPerPreset) {
  const auto presets = bench::reference_presets(reference(), 160, 90);
  bench::BenchOptions opts;
  opts.steps = {1};
  opts.repeats = 1;
  const auto report = bench::run_benchmark(reference(), presets, opts);
  ASSERT_EQ(report.presets.size(), 3u);
  for (const auto& p : report.presets) {
    ASSERT_EQ(p.steps.size(), 1u);
    EXPECT_EQ(p.steps[0].step, 1);
    EXPECT_GT(p.regions, 0u);
    EXPECT_GT(p.max_samples, 0u);
    EXPECT_GE(p.steps[0].interp_median_ms, 0.0);
  }
  const auto j = report.to_json();
  EXPECT_TRUE(j.contains("far"));
  EXPECT_TRUE(j["far"].contains("regions"));
  EXPECT_TRUE(j["far"].contains("max_samples"));
  EXPECT_TRUE(j["far"]["steps"].contains("1"));
  EXPECT_TRUE(j["far"]["steps"]["1"].contains("median_ms"));
  EXPECT_EQ(j["far"]["steps"].size(), 1u);
}

TEST(Benchmark, WarnsOnSilhouetteMismatch) {
  // A far preset so close that the scene crosses the border.
  auto presets = bench::reference_presets(reference(), 96, 54);
  presets[0].camera = presets[2].camera;
  bench::BenchOptions opts;
  opts.steps = {3};
  opts.repeats = 1;
  const auto report = bench::run_benchmark(reference(), {presets[0]}, opts);
  EXPECT_FALSE(report.presets[0].warning.empty());
  EXPECT_TRUE(report.to_json()["far"].contains("warning"));
  EXPECT_EQ(report.presets[0].steps.size(), 1u);
}

TEST(StepArtifacts, SelfComparisonIsZeroAndGrowsWithStep) {
  const auto presets = bench::reference_presets(reference(), 240, 135);
  const DepthImage lin = rasterize(reference(), presets[0].camera);
  const auto d = bench::compare_step_artifacts(lin, {1, 3, 10});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].mean_abs, 0.0);
  EXPECT_EQ(d[0].max_abs, 0.0);
  EXPECT_GT(d[1].mean_abs, 0.0);
  EXPECT_LE(d[1].mean_abs, d[2].mean_abs);
  const auto j = bench::to_json(d);
  EXPECT_TRUE(j.contains("3"));
}
