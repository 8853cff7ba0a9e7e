#pragma once

// Seeded synthetic benchmark streams.
//
// Ground-truth trajectories are corrupted by two sensor models:
//   * APR: independent per-frame noise with occasional gross outliers
//     (noisy, drift-free).
//   * VIO: the ground-truth motion re-composed with a per-frame drift step
//     whose accumulation is a random walk, plus non-accumulating jitter, all
//     expressed in a VIO frame offset from the world (smooth, drifting).
//
// Reproducibility contract: every random draw comes from Rng below, which is
// std::mt19937_64 with fixed conversions, so streams are bit-identical for a
// given seed on any conforming implementation.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "posefuse/fusion.hpp"
#include "posefuse/geometry.hpp"

namespace posefuse {

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// mt19937_64 with documented conversions:
///   uniform01() = (next() >> 11) * 2^-53            in [0, 1)
///   gaussian()  = sqrt(-2 ln(1 - u1)) cos(2 pi u2)  (Box-Muller, two draws)
///   unit_vector() normalizes three gaussians, redrawing on norm < 1e-12.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  double gaussian();
  Vec3 gaussian_vec3(double sigma);
  Vec3 unit_vector();

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer of seed + stream * golden ratio.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

struct AprNoiseModel {
  double trans_sigma = 0.0;  // meters, per axis
  double rot_sigma = 0.0;    // degrees, angle about a uniform random axis
  double outlier_prob = 0.0;
  double outlier_trans_min = 0.0;  // meters
  double outlier_trans_max = 0.0;
  double outlier_rot_min = 0.0;  // degrees
  double outlier_rot_max = 0.0;

  /// Benchmark calibration: raw APR mean APE of roughly 2 m.
  static AprNoiseModel benchmark();
  void validate() const;

  friend bool operator==(const AprNoiseModel&, const AprNoiseModel&) = default;
};

struct VioDriftModel {
  double trans_noise_sigma = 0.0;      // meters per frame, non-accumulating jitter
  double rot_noise_sigma = 0.0;        // degrees per frame, non-accumulating jitter
  double trans_bias_walk_sigma = 0.0;  // meters per frame, accumulating drift step
  double rot_bias_walk_sigma = 0.0;    // degrees per frame, accumulating drift step
  /// World-from-VIO transform: apply_transform(initial_offset, vio) expresses
  /// a drift-free VIO pose in world coordinates.
  RigidTransform initial_offset;

  static VioDriftModel benchmark();
  void validate() const;
};

enum class TrajectoryKind { RandomWaypoint, CircularArc, StraightLine };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::RandomWaypoint;
  std::size_t frames = 300;
  double interval = 1.0;  // seconds between frames
  double speed = 1.0;     // meters per second
  /// Bounding box edge lengths in meters.  Random-waypoint paths stay inside
  /// the box centered on the world origin; arcs use radius 0.4 min(x, y).
  Vec3 extent = Vec3(50.0, 40.0, 2.0);
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic ground truth.  Positions are C1-smooth, orientations follow
/// the heading (yaw only; frame 0 of a straight line is the identity), and
/// consecutive frames are speed * interval meters apart along the path.
std::vector<Pose> generate_gt(const TrajectorySpec& spec);

std::vector<Pose> corrupt_apr(std::span<const Pose> gt, const AprNoiseModel& model, std::uint64_t seed);

/// Draw order per increment k, all twelve drawn even for zero sigmas:
/// translation jitter, rotation jitter,
/// translation drift step, rotation drift step, three gaussians each.  The
/// jitter of frame 0 comes from an initial set of six draws.
std::vector<Pose> corrupt_vio(std::span<const Pose> gt, const VioDriftModel& model, std::uint64_t seed);

/// Zips the sequences with frame ids 0..n-1 and timestamps i * interval.
/// `gt` may be empty (no ground truth) or match the others in length.
std::vector<FrameObservation> make_stream(std::span<const Pose> gt, std::span<const Pose> apr,
                                          std::span<const Pose> vio, double interval);

}  // namespace posefuse
