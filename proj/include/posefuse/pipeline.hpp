#pragma once

// simulate -> fuse -> evaluate, shared by the CLI subcommands and the
// benchmark harness.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "posefuse/fusion.hpp"
#include "posefuse/io.hpp"
#include "posefuse/metrics.hpp"
#include "posefuse/synth.hpp"

namespace posefuse {

struct SimulationConfig {
  TrajectorySpec trajectory;
  AprNoiseModel apr;
  VioDriftModel vio;

  /// Default benchmark: 300-frame random-waypoint path in a 50 x 40 m area,
  /// AprNoiseModel::benchmark(), VioDriftModel::benchmark().
  static SimulationConfig benchmark();
  void validate() const;
};

/// Seed layout: trajectory derive_seed(seed, 0) (inside generate_gt), APR
/// derive_seed(seed, 1), VIO derive_seed(seed, 2).  The trajectory's own seed
/// field is overridden by `seed`.  Zero frames give an empty stream.
std::vector<FrameObservation> simulate(const SimulationConfig& config, std::uint64_t seed);

/// Number of completed alignments recorded in a fusion log.
std::size_t count_alignments(std::span<const FusionOutput> outputs);

struct Evaluation {
  /// Unset when the run produced no estimate at all.
  std::optional<EvaluationReport> fused;
  ErrorStats raw_apr;
};

/// Requires ground truth on every observation and at least one observation.
Evaluation evaluate(std::span<const FrameObservation> observations, std::span<const FusionOutput> outputs);

struct BenchRow {
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  std::size_t alignments = 0;
  std::size_t pending = 0;
  double raw_ape = 0.0;
  double raw_aoe = 0.0;
  double raw_miss_pct = 0.0;
  /// NaN when the run produced no estimate.
  double fused_ape = 0.0;
  double fused_aoe = 0.0;
  double fused_miss_pct = 0.0;

  double ape_ratio() const noexcept { return fused_ape / raw_ape; }
  double aoe_ratio() const noexcept { return fused_aoe / raw_aoe; }
  /// NaN when the raw APR never leaves the low-accuracy bucket.
  double miss_ratio() const noexcept { return fused_miss_pct / raw_miss_pct; }
};

BenchRow bench_seed(const SimulationConfig& sim, const FusionConfig& fusion, std::uint64_t seed);

/// Runs seeds first_seed .. first_seed + count - 1 on up to `threads` worker
/// threads (0 = hardware concurrency).  Rows are ordered by seed and do not
/// depend on the thread count.
std::vector<BenchRow> run_bench(const SimulationConfig& sim, const FusionConfig& fusion, std::uint64_t first_seed,
                                std::size_t count, std::size_t threads = 0);

}  // namespace posefuse
