#pragma once

// Shared helpers for the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "posefuse/fusion.hpp"
#include "posefuse/geometry.hpp"
#include "posefuse/synth.hpp"

namespace posefuse::testing {

inline Vec3 random_vec3(std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  const double x = d(gen);
  const double y = d(gen);
  const double z = d(gen);
  return {x, y, z};
}

/// Uniformly distributed unit quaternion (Shoemake).
inline Quat random_quat(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double u1 = d(gen);
  const double u2 = d(gen);
  const double u3 = d(gen);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Quat(a * std::sin(2 * kPi * u2), a * std::cos(2 * kPi * u2), b * std::sin(2 * kPi * u3),
              b * std::cos(2 * kPi * u3));
}

inline Pose random_pose(std::mt19937_64& gen, double extent = 10.0) {
  return Pose(random_vec3(gen, -extent, extent), random_quat(gen));
}

/// Rotation angle in degrees from the rotation matrix trace, independent of
/// the library's quaternion formula.  Accurate away from 0 and 180 degrees.
inline double trace_angle_deg(const Quat& a, const Quat& b) {
  const Mat3 r = a.toRotationMatrix() * b.toRotationMatrix().transpose();
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * kRadToDeg;
}

inline double sum_of_distances(std::span<const Vec3> points, const Vec3& x) {
  double s = 0.0;
  for (const Vec3& p : points) s += (x - p).norm();
  return s;
}

// Geometric median by coarse grid search followed by Newton steps on the
// gradient of the sum of distances.
inline Vec3 brute_force_median(std::span<const Vec3> points) {
  Vec3 lo = points[0];
  Vec3 hi = points[0];
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 best = lo;
  double best_f = INFINITY;
  for (int round = 0; round < 12; ++round) {
    const int n = 20;
    const Vec3 step = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        for (int k = 0; k <= n; ++k) {
          const Vec3 x = lo + Vec3(i * step.x(), j * step.y(), k * step.z());
          const double f = sum_of_distances(points, x);
          if (f < best_f) {
            best_f = f;
            best = x;
          }
        }
      }
    }
    lo = best - 2.0 * step;
    hi = best + 2.0 * step;
  }
  for (int it = 0; it < 50; ++it) {
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    bool at_vertex = false;
    for (const Vec3& p : points) {
      const Vec3 d = best - p;
      const double r = d.norm();
      if (r < 1e-12) {
        at_vertex = true;
        break;
      }
      const Vec3 u = d / r;
      g += u;
      h += (Mat3::Identity() - u * u.transpose()) / r;
    }
    if (at_vertex || g.norm() < 1e-15) break;
    const Vec3 dir = h.ldlt().solve(g);
    double t = 1.0;
    while (t > 1e-12 && !(sum_of_distances(points, best - t * dir) < best_f)) t *= 0.5;
    if (t <= 1e-12) break;
    best -= t * dir;
    best_f = sum_of_distances(points, best);
  }
  for (const Vec3& p : points) {
    if (sum_of_distances(points, p) <= best_f) {
      best = p;
      best_f = sum_of_distances(points, p);
    }
  }
  return best;
}

/// Random fusion stream with a mix of agreeing and disagreeing APR frames and
/// a drifting VIO, for exercising every engine transition.
inline std::vector<FrameObservation> random_fusion_stream(std::uint64_t seed, std::size_t frames) {
  std::mt19937_64 gen(seed);
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::RandomWaypoint;
  spec.frames = frames;
  spec.extent = Vec3(30.0, 30.0, 2.0);
  spec.seed = seed;
  const auto gt = generate_gt(spec);

  AprNoiseModel apr;
  apr.trans_sigma = std::uniform_real_distribution<double>(0.05, 0.6)(gen);
  apr.rot_sigma = std::uniform_real_distribution<double>(0.5, 3.0)(gen);
  apr.outlier_prob = std::uniform_real_distribution<double>(0.0, 0.3)(gen);
  apr.outlier_trans_min = 2.0;
  apr.outlier_trans_max = 8.0;
  apr.outlier_rot_min = 5.0;
  apr.outlier_rot_max = 30.0;

  VioDriftModel vio;
  vio.trans_noise_sigma = 0.01;
  vio.rot_noise_sigma = 0.1;
  vio.trans_bias_walk_sigma = std::uniform_real_distribution<double>(0.0, 0.2)(gen);
  vio.rot_bias_walk_sigma = std::uniform_real_distribution<double>(0.0, 0.5)(gen);
  vio.initial_offset = RigidTransform(random_quat(gen), random_vec3(gen, -20.0, 20.0));

  return make_stream(gt, corrupt_apr(gt, apr, derive_seed(seed, 1)), corrupt_vio(gt, vio, derive_seed(seed, 2)),
                     1.0);
}

/// Random configuration covering short and long runs, strict and loose
/// similarity floors, and disabled realignment.
inline FusionConfig random_fusion_config(std::mt19937_64& gen) {
  FusionConfig c;
  c.d_th = std::uniform_real_distribution<double>(0.2, 1.0)(gen);
  c.o_th = std::uniform_real_distribution<double>(2.0, 8.0)(gen);
  c.n_pairs = std::uniform_int_distribution<std::size_t>(1, 4)(gen);
  const double gammas[] = {0.9, 0.99, 0.999, 0.9999};
  c.gamma = gammas[std::uniform_int_distribution<int>(0, 3)(gen)];
  switch (std::uniform_int_distribution<int>(0, 3)(gen)) {
    case 0:
      break;
    case 1:
      c.drift_streak = FusionConfig::kNeverRealign;
      break;
    default:
      c.drift_streak = std::uniform_int_distribution<std::size_t>(1, 4)(gen);
  }
  return c;
}

/// Deliberately naive reference engine.  The output of frame i is derived
/// from the whole prefix [0, i] without any carried state: the stage
/// boundaries are rediscovered by scanning from frame 0 every time, and the
/// candidate run is found by walking backwards from the frame.
class ReferenceFusion {
 public:
  ReferenceFusion(FusionConfig config, std::span<const FrameObservation> stream)
      : config_(config), stream_(stream) {}

  FusionOutput output(std::size_t i) const {
    const std::size_t streak_limit = config_.drift_streak.value_or(config_.n_pairs);
    bool optimizing = false;
    std::size_t entry = 0;  // first frame of the current stage
    std::optional<RigidTransform> transform;
    std::size_t streak = 0;
    FusionOutput out;
    for (std::size_t j = 0; j <= i; ++j) {
      out = FusionOutput{};
      out.frame_id = stream_[j].frame_id;
      if (!optimizing) {
        out.stage = Stage::Alignment;
        std::size_t start = j;
        while (start > entry && passes(start - 1, start)) --start;
        if (j - start == config_.n_pairs) {
          std::vector<Pose> apr;
          std::vector<Pose> vio;
          for (std::size_t k = start; k <= j; ++k) {
            apr.push_back(stream_[k].apr);
            vio.push_back(stream_[k].vio);
          }
          transform = compute_rigid_transform(average_pose(apr), average_pose(vio));
          out.category = Category::ReliableDirect;
          out.pose = stream_[j].apr;
          optimizing = true;
          entry = j + 1;
          streak = 0;
        } else if (transform) {
          out.category = Category::AlignmentBridge;
          out.pose = apply_transform(*transform, stream_[j].vio);
        } else {
          out.category = Category::AlignmentPending;
        }
      } else {
        out.stage = Stage::PoseOptimization;
        const Pose v2w = apply_transform(*transform, stream_[j].vio);
        if (passes(j - 1, j)) {
          const Similarity s = similarity(stream_[j].apr, v2w);
          out.category = Category::ReliableDirect;
          out.pose = stream_[j].apr;
          out.similarity = s.score;
          out.similarity_degenerate = s.degenerate_translation;
          streak = s.score <= config_.gamma ? streak + 1 : 0;
          if (streak >= streak_limit) {
            optimizing = false;
            entry = j + 1;
            streak = 0;
          }
        } else {
          out.category = Category::OptimizedFromVio;
          out.pose = v2w;
        }
      }
    }
    return out;
  }

  std::vector<FusionOutput> run() const {
    std::vector<FusionOutput> all;
    for (std::size_t i = 0; i < stream_.size(); ++i) all.push_back(output(i));
    return all;
  }

 private:
  bool passes(std::size_t a, std::size_t b) const {
    const Odometry ua = odometry(stream_[a].apr, stream_[b].apr);
    const Odometry uv = odometry(stream_[a].vio, stream_[b].vio);
    return std::abs(ua.d_trans - uv.d_trans) <= config_.d_th && std::abs(ua.d_rot - uv.d_rot) <= config_.o_th;
  }

  FusionConfig config_;
  std::span<const FrameObservation> stream_;
};

/// Largest translation/rotation gap between two optional poses; infinite when
/// exactly one is present.
inline double pose_gap(const std::optional<Pose>& a, const std::optional<Pose>& b) {
  if (a.has_value() != b.has_value()) return INFINITY;
  if (!a) return 0.0;
  const double dt = (a->translation() - b->translation()).cwiseAbs().maxCoeff();
  const Eigen::Vector4d qa = a->rotation().coeffs();
  const Eigen::Vector4d qb = b->rotation().coeffs();
  const double dq = std::min((qa - qb).cwiseAbs().maxCoeff(), (qa + qb).cwiseAbs().maxCoeff());
  return std::max(dt, dq);
}

}  // namespace posefuse::testing
