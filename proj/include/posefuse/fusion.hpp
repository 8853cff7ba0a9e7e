#pragma once

// Streaming APR + VIO pose fusion.
//
// The engine alternates between two stages:
//
//   Alignment         collect a run of consecutive frames whose APR odometry
//                     agrees with the VIO odometry (RPE <= d_th, ROE <= o_th);
//                     once the run holds n_pairs passing pairs, average the
//                     APR and VIO poses of the run into reference poses and
//                     derive the VIO-to-world transform.
//   PoseOptimization  pass agreeing APR predictions through unchanged and
//                     replace the others by the transformed VIO pose.  Each
//                     passed prediction is compared with its transformed VIO
//                     counterpart; drift_streak consecutive scores <= gamma
//                     send the engine back to Alignment.
//
// While re-aligning, the last transform keeps bridging VIO poses into the
// world frame.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "posefuse/geometry.hpp"

namespace posefuse {

struct FusionConfig {
  double d_th = 0.4;    // meters
  double o_th = 4.0;    // degrees
  std::size_t n_pairs = 2;
  double gamma = 0.99;
  /// Consecutive low-similarity reliable predictions that trigger
  /// realignment.  Unset means "same as n_pairs"; kNeverRealign disables
  /// drift detection.
  std::optional<std::size_t> drift_streak;

  static constexpr std::size_t kNeverRealign = std::numeric_limits<std::size_t>::max();

  std::size_t effective_drift_streak() const noexcept { return drift_streak.value_or(n_pairs); }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejected input to the engine (ordering violations).
class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameObservation {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  Pose apr;
  Pose vio;
  std::optional<Pose> gt;

  friend bool operator==(const FrameObservation&, const FrameObservation&) = default;
};

enum class Stage { Alignment, PoseOptimization };

enum class Category {
  ReliableDirect,    // APR prediction passed the odometry check and is output as is
  OptimizedFromVio,  // APR prediction rejected; transformed VIO pose output
  AlignmentBridge,   // re-aligning; VIO pose bridged through the previous transform
  AlignmentPending,  // no transform exists yet; no estimate
};

std::string_view to_string(Stage stage) noexcept;
std::string_view to_string(Category category) noexcept;
std::optional<Stage> stage_from_string(std::string_view text) noexcept;
std::optional<Category> category_from_string(std::string_view text) noexcept;

struct FusionOutput {
  std::int64_t frame_id = 0;
  std::optional<Pose> pose;
  Category category = Category::AlignmentPending;
  /// Similarity of the passed prediction to its transformed VIO pose; set on
  /// ReliableDirect frames handled in PoseOptimization.
  std::optional<double> similarity;
  /// Set when the similarity fell back to a unit translation cosine because a
  /// position was at the world origin.
  bool similarity_degenerate = false;
  /// Stage that handled this frame (before any transition it triggered).
  Stage stage = Stage::Alignment;

  friend bool operator==(const FusionOutput&, const FusionOutput&) = default;
};

/// Reported to the alignment observer every time an Alignment completes.
struct AlignmentEvent {
  std::int64_t frame_id = 0;
  Pose ref_apr;
  Pose ref_vio;
  RigidTransform transform;
};

/// True when the APR odometry of (prev -> cur) agrees with the VIO odometry
/// within the configured thresholds (inclusive).
bool odometry_consistent(const FusionConfig& config, const FrameObservation& prev,
                         const FrameObservation& cur);

class FusionEngine {
 public:
  using AlignmentObserver = std::function<void(const AlignmentEvent&)>;

  /// Throws ConfigError if `config` is invalid.
  explicit FusionEngine(FusionConfig config);

  /// Processes one observation.  Throws StreamError if its frame_id does not
  /// exceed the previous one or its timestamp decreases.
  FusionOutput step(const FrameObservation& obs);

  const FusionConfig& config() const noexcept { return config_; }
  Stage stage() const noexcept { return stage_; }
  const std::optional<RigidTransform>& transform() const noexcept { return transform_; }
  std::size_t candidate_count() const noexcept { return candidates_.size(); }
  std::size_t low_similarity_streak() const noexcept { return streak_; }
  std::size_t alignments_completed() const noexcept { return alignments_; }

  void set_alignment_observer(AlignmentObserver observer) { observer_ = std::move(observer); }

 private:
  FusionOutput step_alignment(const FrameObservation& obs);
  FusionOutput step_optimization(const FrameObservation& obs);
  void complete_alignment(std::int64_t frame_id);

  FusionConfig config_;
  Stage stage_ = Stage::Alignment;
  std::vector<FrameObservation> candidates_;
  std::optional<RigidTransform> transform_;
  std::size_t streak_ = 0;
  std::size_t alignments_ = 0;
  std::optional<FrameObservation> previous_;
  AlignmentObserver observer_;
};

/// Folds FusionEngine::step over `stream`.  Engine errors are rethrown as
/// StreamError carrying the offending frame id.
std::vector<FusionOutput> run_fusion(FusionEngine& engine, std::span<const FrameObservation> stream);
std::vector<FusionOutput> run_fusion(const FusionConfig& config, std::span<const FrameObservation> stream);

}  // namespace posefuse
