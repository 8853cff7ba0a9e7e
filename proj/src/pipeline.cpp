#include "posefuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace posefuse {

SimulationConfig SimulationConfig::benchmark() {
  SimulationConfig c;
  c.trajectory = TrajectorySpec{};
  c.apr = AprNoiseModel::benchmark();
  c.vio = VioDriftModel::benchmark();
  return c;
}

void SimulationConfig::validate() const {
  if (trajectory.frames > 0) trajectory.validate();
  apr.validate();
  vio.validate();
}

std::vector<FrameObservation> simulate(const SimulationConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.trajectory.frames == 0) return {};
  TrajectorySpec spec = config.trajectory;
  spec.seed = seed;
  const std::vector<Pose> gt = generate_gt(spec);
  const std::vector<Pose> apr = corrupt_apr(gt, config.apr, derive_seed(seed, 1));
  const std::vector<Pose> vio = corrupt_vio(gt, config.vio, derive_seed(seed, 2));
  return make_stream(gt, apr, vio, spec.interval);
}

std::size_t count_alignments(std::span<const FusionOutput> outputs) {
  return static_cast<std::size_t>(std::count_if(outputs.begin(), outputs.end(), [](const FusionOutput& o) {
    return o.stage == Stage::Alignment && o.category == Category::ReliableDirect;
  }));
}

Evaluation evaluate(std::span<const FrameObservation> observations, std::span<const FusionOutput> outputs) {
  Evaluation ev;
  ev.raw_apr = summarize(raw_errors(observations, RawSource::Apr));
  const std::vector<FrameError> errors = frame_errors(outputs, observations);
  if (!errors.empty()) {
    ev.fused = aggregate(errors, outputs.size() - errors.size());
  }
  return ev;
}

BenchRow bench_seed(const SimulationConfig& sim, const FusionConfig& fusion, std::uint64_t seed) {
  const std::vector<FrameObservation> stream = simulate(sim, seed);
  const std::vector<FusionOutput> outputs = run_fusion(fusion, stream);
  const Evaluation ev = evaluate(stream, outputs);

  BenchRow row;
  row.seed = seed;
  row.frames = stream.size();
  row.alignments = count_alignments(outputs);
  row.raw_ape = ev.raw_apr.mean_ape;
  row.raw_aoe = ev.raw_apr.mean_aoe;
  row.raw_miss_pct = ev.raw_apr.pct_miss();
  if (ev.fused) {
    row.pending = ev.fused->pending_frames;
    row.fused_ape = ev.fused->overall.mean_ape;
    row.fused_aoe = ev.fused->overall.mean_aoe;
    row.fused_miss_pct = ev.fused->overall.pct_miss();
  } else {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    row.pending = stream.size();
    row.fused_ape = row.fused_aoe = row.fused_miss_pct = nan;
  }
  return row;
}

std::vector<BenchRow> run_bench(const SimulationConfig& sim, const FusionConfig& fusion, std::uint64_t first_seed,
                                std::size_t count, std::size_t threads) {
  fusion.validate();
  sim.validate();
  std::vector<BenchRow> rows(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        rows[i] = bench_seed(sim, fusion, first_seed + i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace posefuse
