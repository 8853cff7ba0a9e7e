#pragma once

// Absolute error metrics against ground truth and their per-sequence
// aggregation.  Accuracy buckets are nested and inclusive:
//   High   ape <= 0.25 m and aoe <= 2 deg
//   Medium ape <= 0.5 m  and aoe <= 5 deg
//   Low    ape <= 5 m    and aoe <= 10 deg

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "posefuse/fusion.hpp"

namespace posefuse {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FrameError {
  std::int64_t frame_id = 0;
  double ape = 0.0;  // meters
  double aoe = 0.0;  // degrees
  /// Fusion category of the estimate; unset for raw sources (APR, VIO).
  std::optional<Category> category;

  friend bool operator==(const FrameError&, const FrameError&) = default;
};

enum class Bucket { High, Medium, Low, None };

struct BucketThreshold {
  double ape;
  double aoe;
};
inline constexpr BucketThreshold kHighAccuracy{0.25, 2.0};
inline constexpr BucketThreshold kMediumAccuracy{0.5, 5.0};
inline constexpr BucketThreshold kLowAccuracy{5.0, 10.0};

/// Tightest bucket containing `e`.
Bucket bucket(const FrameError& e) noexcept;

/// Errors of the fused estimates.  AlignmentPending frames carry no estimate
/// and are skipped.  Throws MetricsError when an observation lacks ground
/// truth or the frame ids of `outputs` and `observations` disagree.
std::vector<FrameError> frame_errors(std::span<const FusionOutput> outputs,
                                     std::span<const FrameObservation> observations);

enum class RawSource { Apr, Vio };

/// Errors of an unfused source, one per observation.
std::vector<FrameError> raw_errors(std::span<const FrameObservation> observations, RawSource source);

/// Summary statistics of one partition.  Medians of even-sized samples take
/// the lower middle element.
struct ErrorStats {
  std::size_t count = 0;
  double mean_ape = 0.0;
  double median_ape = 0.0;
  double mean_aoe = 0.0;
  double median_aoe = 0.0;
  double pct_high = 0.0;  // percent of frames in the High bucket
  double pct_medium = 0.0;
  double pct_low = 0.0;

  /// Percent of frames outside the Low bucket.
  double pct_miss() const noexcept { return 100.0 - pct_low; }

  friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

/// Throws MetricsError on empty input.
ErrorStats summarize(std::span<const FrameError> errors);

struct EvaluationReport {
  /// Every emitted estimate (ReliableDirect, OptimizedFromVio, AlignmentBridge).
  ErrorStats overall;
  /// ReliableDirect and OptimizedFromVio only.
  std::optional<ErrorStats> reliable_and_optimized;
  /// Per-category statistics; categories without frames are absent.
  std::map<Category, ErrorStats> per_category;
  /// Percent of all frames (including pending ones) in each category.
  std::map<Category, double> category_pct;
  std::size_t total_frames = 0;
  std::size_t pending_frames = 0;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Aggregates frame errors.  `pending_frames` counts the frames that produced
/// no estimate; they only enter the category ratios.  Errors without a
/// category only enter `overall`.  Throws MetricsError on empty input.
EvaluationReport aggregate(std::span<const FrameError> errors, std::size_t pending_frames = 0);

}  // namespace posefuse
