#include "posefuse/fusion.hpp"

#include <cmath>
#include <sstream>

namespace posefuse {

void FusionConfig::validate() const {
  if (!(d_th > 0.0) || !std::isfinite(d_th)) {
    throw ConfigError("d_th must be a positive finite distance (got " + std::to_string(d_th) + ")");
  }
  if (!(o_th > 0.0) || !std::isfinite(o_th)) {
    throw ConfigError("o_th must be a positive finite angle (got " + std::to_string(o_th) + ")");
  }
  if (n_pairs < 1) {
    throw ConfigError("n_pairs must be >= 1");
  }
  if (!(gamma >= -0.5 && gamma <= 1.0)) {
    throw ConfigError("gamma must lie in [-0.5, 1] (got " + std::to_string(gamma) + ")");
  }
  if (drift_streak && *drift_streak < 1) {
    throw ConfigError("drift_streak must be >= 1");
  }
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Alignment: return "Alignment";
    case Stage::PoseOptimization: return "PoseOptimization";
  }
  return "?";
}

std::string_view to_string(Category category) noexcept {
  switch (category) {
    case Category::ReliableDirect: return "ReliableDirect";
    case Category::OptimizedFromVio: return "OptimizedFromVio";
    case Category::AlignmentBridge: return "AlignmentBridge";
    case Category::AlignmentPending: return "AlignmentPending";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view text) noexcept {
  for (Stage s : {Stage::Alignment, Stage::PoseOptimization}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<Category> category_from_string(std::string_view text) noexcept {
  for (Category c : {Category::ReliableDirect, Category::OptimizedFromVio, Category::AlignmentBridge,
                     Category::AlignmentPending}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

bool odometry_consistent(const FusionConfig& config, const FrameObservation& prev,
                         const FrameObservation& cur) {
  const Odometry u_apr = odometry(prev.apr, cur.apr);
  const Odometry u_vio = odometry(prev.vio, cur.vio);
  return rpe(u_apr, u_vio) <= config.d_th && roe(u_apr, u_vio) <= config.o_th;
}

FusionEngine::FusionEngine(FusionConfig config) : config_(std::move(config)) {
  config_.validate();
  candidates_.reserve(config_.n_pairs + 1);
}

FusionOutput FusionEngine::step(const FrameObservation& obs) {
  if (previous_) {
    if (obs.frame_id <= previous_->frame_id) {
      throw StreamError("frame_id " + std::to_string(obs.frame_id) + " does not follow frame_id " +
                        std::to_string(previous_->frame_id));
    }
    if (obs.timestamp < previous_->timestamp) {
      throw StreamError("timestamp decreases at frame_id " + std::to_string(obs.frame_id));
    }
  }
  FusionOutput out = stage_ == Stage::Alignment ? step_alignment(obs) : step_optimization(obs);
  previous_ = obs;
  return out;
}

FusionOutput FusionEngine::step_alignment(const FrameObservation& obs) {
  FusionOutput out;
  out.frame_id = obs.frame_id;
  out.stage = Stage::Alignment;

  // The buffer always ends with the previous frame while aligning, except
  // right after a loop-back where the run starts fresh.
  if (!candidates_.empty() && odometry_consistent(config_, candidates_.back(), obs)) {
    candidates_.push_back(obs);
  } else {
    candidates_.clear();
    candidates_.push_back(obs);
  }

  if (candidates_.size() == config_.n_pairs + 1) {
    complete_alignment(obs.frame_id);
    out.category = Category::ReliableDirect;
    out.pose = obs.apr;
    return out;
  }

  if (transform_) {
    out.category = Category::AlignmentBridge;
    out.pose = apply_transform(*transform_, obs.vio);
  } else {
    out.category = Category::AlignmentPending;
  }
  return out;
}

void FusionEngine::complete_alignment(std::int64_t frame_id) {
  std::vector<Pose> apr;
  std::vector<Pose> vio;
  apr.reserve(candidates_.size());
  vio.reserve(candidates_.size());
  for (const FrameObservation& c : candidates_) {
    apr.push_back(c.apr);
    vio.push_back(c.vio);
  }
  const Pose ref_apr = average_pose(apr);
  const Pose ref_vio = average_pose(vio);
  transform_ = compute_rigid_transform(ref_apr, ref_vio);
  candidates_.clear();
  streak_ = 0;
  stage_ = Stage::PoseOptimization;
  ++alignments_;
  if (observer_) {
    observer_(AlignmentEvent{frame_id, ref_apr, ref_vio, *transform_});
  }
}

FusionOutput FusionEngine::step_optimization(const FrameObservation& obs) {
  FusionOutput out;
  out.frame_id = obs.frame_id;
  out.stage = Stage::PoseOptimization;

  const Pose v2w = apply_transform(*transform_, obs.vio);
  if (!odometry_consistent(config_, *previous_, obs)) {
    out.category = Category::OptimizedFromVio;
    out.pose = v2w;
    return out;
  }

  out.category = Category::ReliableDirect;
  out.pose = obs.apr;
  const Similarity s = similarity(obs.apr, v2w);
  out.similarity = s.score;
  out.similarity_degenerate = s.degenerate_translation;
  streak_ = s.score <= config_.gamma ? streak_ + 1 : 0;
  if (streak_ >= config_.effective_drift_streak()) {
    stage_ = Stage::Alignment;
    candidates_.clear();
    streak_ = 0;
  }
  return out;
}

std::vector<FusionOutput> run_fusion(FusionEngine& engine, std::span<const FrameObservation> stream) {
  std::vector<FusionOutput> outputs;
  outputs.reserve(stream.size());
  for (const FrameObservation& obs : stream) {
    try {
      outputs.push_back(engine.step(obs));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "frame " << obs.frame_id << ": " << e.what();
      throw StreamError(msg.str());
    }
  }
  return outputs;
}

std::vector<FusionOutput> run_fusion(const FusionConfig& config, std::span<const FrameObservation> stream) {
  FusionEngine engine(config);
  return run_fusion(engine, stream);
}

}  // namespace posefuse
