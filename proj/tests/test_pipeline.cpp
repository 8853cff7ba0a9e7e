#include <gtest/gtest.h>

#include <cmath>

#include "posefuse/pipeline.hpp"

using namespace posefuse;

TEST(Simulate, SeedLayoutMatchesManualChain) {
  const SimulationConfig sim = SimulationConfig::benchmark();
  const std::uint64_t seed = 12;
  TrajectorySpec spec = sim.trajectory;
  spec.seed = seed;
  const auto gt = generate_gt(spec);
  const auto manual = make_stream(gt, corrupt_apr(gt, sim.apr, derive_seed(seed, 1)),
                                  corrupt_vio(gt, sim.vio, derive_seed(seed, 2)), spec.interval);
  EXPECT_EQ(simulate(sim, seed), manual);
  EXPECT_EQ(simulate(sim, seed), simulate(sim, seed));
  EXPECT_NE(simulate(sim, seed), simulate(sim, seed + 1));
}

TEST(Simulate, ZeroFramesGiveEmptyStream) {
  SimulationConfig sim = SimulationConfig::benchmark();
  sim.trajectory.frames = 0;
  EXPECT_TRUE(simulate(sim, 1).empty());
}

TEST(Simulate, ValidatesModels) {
  SimulationConfig sim = SimulationConfig::benchmark();
  sim.apr.outlier_prob = 1.5;
  EXPECT_THROW(simulate(sim, 1), SynthError);
}

TEST(Evaluate, PerfectEstimatesScoreZero) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::CircularArc;
  spec.frames = 40;
  const auto gt = generate_gt(spec);
  const auto stream = make_stream(gt, gt, gt, 1.0);
  const auto outputs = run_fusion(FusionConfig{}, stream);
  const Evaluation ev = evaluate(stream, outputs);
  ASSERT_TRUE(ev.fused.has_value());
  EXPECT_EQ(ev.fused->overall.mean_ape, 0.0);
  EXPECT_EQ(ev.fused->overall.median_aoe, 0.0);
  EXPECT_EQ(ev.fused->overall.pct_high, 100.0);
  EXPECT_EQ(ev.fused->pending_frames, 2u);
  EXPECT_EQ(ev.raw_apr.mean_ape, 0.0);
}

TEST(Evaluate, NoEstimateAtAll) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::StraightLine;
  spec.frames = 2;
  const auto gt = generate_gt(spec);
  const auto stream = make_stream(gt, gt, gt, 1.0);
  const Evaluation ev = evaluate(stream, run_fusion(FusionConfig{}, stream));
  EXPECT_FALSE(ev.fused.has_value());
  EXPECT_EQ(ev.raw_apr.count, 2u);
}

TEST(CountAlignments, CountsRunCompletions) {
  const auto stream = simulate(SimulationConfig::benchmark(), 2);
  FusionEngine engine{FusionConfig{}};
  const auto outputs = run_fusion(engine, stream);
  EXPECT_EQ(count_alignments(outputs), engine.alignments_completed());
}

TEST(Bench, RowMatchesManuallyChainedSteps) {
  const SimulationConfig sim = SimulationConfig::benchmark();
  const FusionConfig fusion;
  const std::uint64_t seed = 4;
  const BenchRow row = bench_seed(sim, fusion, seed);
  const auto stream = simulate(sim, seed);
  const auto outputs = run_fusion(fusion, stream);
  const Evaluation ev = evaluate(stream, outputs);
  EXPECT_EQ(row.seed, seed);
  EXPECT_EQ(row.frames, stream.size());
  EXPECT_EQ(row.raw_ape, ev.raw_apr.mean_ape);
  EXPECT_EQ(row.fused_ape, ev.fused->overall.mean_ape);
  EXPECT_EQ(row.fused_aoe, ev.fused->overall.mean_aoe);
  EXPECT_EQ(row.fused_miss_pct, ev.fused->overall.pct_miss());
  EXPECT_EQ(row.raw_miss_pct, ev.raw_apr.pct_miss());
  EXPECT_EQ(row.pending, ev.fused->pending_frames);
  EXPECT_EQ(row.ape_ratio(), row.fused_ape / row.raw_ape);
}

TEST(Bench, SingleSeedReducesToPipelineAndThreadsDoNotMatter) {
  const SimulationConfig sim = SimulationConfig::benchmark();
  const FusionConfig fusion;
  const auto one = run_bench(sim, fusion, 8, 1, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].fused_ape, bench_seed(sim, fusion, 8).fused_ape);

  const auto serial = run_bench(sim, fusion, 0, 10, 1);
  const auto parallel = run_bench(sim, fusion, 0, 10, 4);
  ASSERT_EQ(serial.size(), 10u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].seed, i);
    EXPECT_EQ(serial[i].fused_ape, parallel[i].fused_ape);
    EXPECT_EQ(serial[i].fused_aoe, parallel[i].fused_aoe);
    EXPECT_EQ(serial[i].alignments, parallel[i].alignments);
  }
}

TEST(Bench, NoEstimateGivesNaN) {
  SimulationConfig sim = SimulationConfig::benchmark();
  sim.trajectory.frames = 2;
  const BenchRow row = bench_seed(sim, FusionConfig{}, 1);
  EXPECT_TRUE(std::isnan(row.fused_ape));
}
