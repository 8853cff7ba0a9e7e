#include "posefuse/metrics.hpp"

#include <algorithm>
#include <string>

namespace posefuse {

namespace {

bool within(const FrameError& e, const BucketThreshold& t) noexcept { return e.ape <= t.ape && e.aoe <= t.aoe; }

double lower_median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

FrameError error_of(std::int64_t frame_id, const Pose& estimate, const Pose& gt) {
  return {frame_id, relative_translation(estimate, gt), relative_rotation_deg(estimate, gt), std::nullopt};
}

}  // namespace

Bucket bucket(const FrameError& e) noexcept {
  if (within(e, kHighAccuracy)) return Bucket::High;
  if (within(e, kMediumAccuracy)) return Bucket::Medium;
  if (within(e, kLowAccuracy)) return Bucket::Low;
  return Bucket::None;
}

std::vector<FrameError> frame_errors(std::span<const FusionOutput> outputs,
                                     std::span<const FrameObservation> observations) {
  if (outputs.size() != observations.size()) {
    throw MetricsError("output count " + std::to_string(outputs.size()) + " differs from observation count " +
                       std::to_string(observations.size()));
  }
  std::vector<FrameError> errors;
  errors.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const FusionOutput& out = outputs[i];
    const FrameObservation& obs = observations[i];
    if (out.frame_id != obs.frame_id) {
      throw MetricsError("frame id mismatch: output " + std::to_string(out.frame_id) + " vs observation " +
                         std::to_string(obs.frame_id));
    }
    if (!obs.gt) {
      throw MetricsError("frame " + std::to_string(obs.frame_id) + " has no ground truth");
    }
    if (!out.pose) {
      continue;
    }
    FrameError e = error_of(out.frame_id, *out.pose, *obs.gt);
    e.category = out.category;
    errors.push_back(e);
  }
  return errors;
}

std::vector<FrameError> raw_errors(std::span<const FrameObservation> observations, RawSource source) {
  std::vector<FrameError> errors;
  errors.reserve(observations.size());
  for (const FrameObservation& obs : observations) {
    if (!obs.gt) {
      throw MetricsError("frame " + std::to_string(obs.frame_id) + " has no ground truth");
    }
    errors.push_back(error_of(obs.frame_id, source == RawSource::Apr ? obs.apr : obs.vio, *obs.gt));
  }
  return errors;
}

ErrorStats summarize(std::span<const FrameError> errors) {
  if (errors.empty()) {
    throw MetricsError("cannot summarize an empty error set");
  }
  ErrorStats s;
  s.count = errors.size();
  std::vector<double> apes;
  std::vector<double> aoes;
  apes.reserve(errors.size());
  aoes.reserve(errors.size());
  std::size_t high = 0, medium = 0, low = 0;
  for (const FrameError& e : errors) {
    apes.push_back(e.ape);
    aoes.push_back(e.aoe);
    switch (bucket(e)) {
      case Bucket::High: ++high; [[fallthrough]];
      case Bucket::Medium: ++medium; [[fallthrough]];
      case Bucket::Low: ++low; break;
      case Bucket::None: break;
    }
  }
  // Sum in sorted order so the result does not depend on input order.
  std::sort(apes.begin(), apes.end());
  std::sort(aoes.begin(), aoes.end());
  const double n = static_cast<double>(errors.size());
  double sum_ape = 0.0, sum_aoe = 0.0;
  for (double v : apes) sum_ape += v;
  for (double v : aoes) sum_aoe += v;
  s.mean_ape = sum_ape / n;
  s.mean_aoe = sum_aoe / n;
  s.median_ape = lower_median(std::move(apes));
  s.median_aoe = lower_median(std::move(aoes));
  s.pct_high = 100.0 * static_cast<double>(high) / n;
  s.pct_medium = 100.0 * static_cast<double>(medium) / n;
  s.pct_low = 100.0 * static_cast<double>(low) / n;
  return s;
}

EvaluationReport aggregate(std::span<const FrameError> errors, std::size_t pending_frames) {
  if (errors.empty()) {
    throw MetricsError("cannot aggregate an empty error set");
  }
  EvaluationReport report;
  report.overall = summarize(errors);
  report.pending_frames = pending_frames;
  report.total_frames = errors.size() + pending_frames;

  std::map<Category, std::vector<FrameError>> by_category;
  std::vector<FrameError> reliable_and_optimized;
  for (const FrameError& e : errors) {
    if (!e.category) continue;
    by_category[*e.category].push_back(e);
    if (*e.category == Category::ReliableDirect || *e.category == Category::OptimizedFromVio) {
      reliable_and_optimized.push_back(e);
    }
  }
  for (const auto& [category, items] : by_category) {
    report.per_category.emplace(category, summarize(items));
  }
  if (!reliable_and_optimized.empty()) {
    report.reliable_and_optimized = summarize(reliable_and_optimized);
  }

  const double total = static_cast<double>(report.total_frames);
  for (Category c : {Category::ReliableDirect, Category::OptimizedFromVio, Category::AlignmentBridge}) {
    const auto it = by_category.find(c);
    const std::size_t count = it == by_category.end() ? 0 : it->second.size();
    report.category_pct[c] = 100.0 * static_cast<double>(count) / total;
  }
  report.category_pct[Category::AlignmentPending] = 100.0 * static_cast<double>(pending_frames) / total;
  return report;
}

}  // namespace posefuse
