#pragma once

// Pose algebra shared by the fusion engine, the simulator and the metrics.
//
// Conventions used throughout the library:
//   * A Pose holds the camera position in its reference frame (meters) and a
//     unit quaternion that rotates reference-frame coordinates into the camera
//     frame.  Quaternion components are logically ordered (w, x, y, z); Eigen's
//     storage order is an implementation detail.
//   * Angles exposed by the API are in degrees.
//   * A RigidTransform maps VIO-frame poses into world-frame poses.

#include <span>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace posefuse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kRadToDeg = 180.0 / kPi;
inline constexpr double kDegToRad = kPi / 180.0;

/// Thrown when a geometric value would violate its invariants (non-finite
/// components, zero-norm quaternion, empty input set, ...).
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Position plus unit-quaternion orientation.  The constructor normalizes the
/// quaternion and rejects non-finite input, so every live Pose satisfies
/// |q| = 1 and is finite.
class Pose {
 public:
  Pose() = default;
  Pose(const Vec3& translation, const Quat& rotation);

  const Vec3& translation() const noexcept { return translation_; }
  const Quat& rotation() const noexcept { return rotation_; }

  friend bool operator==(const Pose& a, const Pose& b) noexcept {
    return a.translation_ == b.translation_ && a.rotation_.coeffs() == b.rotation_.coeffs();
  }

 private:
  Vec3 translation_ = Vec3::Zero();
  Quat rotation_ = Quat::Identity();
};

/// Normalizes `q`, throwing GeometryError when it is non-finite or its norm is
/// too small to define a direction.
Quat normalized_quat(const Quat& q);

/// Quaternion for a rotation of `angle_deg` about `axis` (axis need not be unit).
Quat quat_from_axis_angle(const Vec3& axis, double angle_deg);

/// Inter-frame motion magnitudes of one pose source.
struct Odometry {
  double d_trans = 0.0;  // meters, >= 0
  double d_rot = 0.0;    // degrees, [0, 180]
};

/// ||a.x - b.x||
double relative_translation(const Pose& a, const Pose& b);

/// Rotation angle between the two orientations in degrees, in [0, 180].
/// Invariant to the sign of either quaternion.
double rotation_angle_deg(const Quat& a, const Quat& b);
double relative_rotation_deg(const Pose& a, const Pose& b);

/// Motion magnitudes between consecutive poses of one source.
Odometry odometry(const Pose& from, const Pose& to);

/// Scalar differences of motion magnitudes between two sources.
double rpe(const Odometry& u1, const Odometry& u2);
double roe(const Odometry& u1, const Odometry& u2);

struct WeiszfeldOptions {
  double tol = 1e-9;
  int max_iter = 200;
};

/// Geometric median (minimizer of the sum of Euclidean distances) by
/// Weiszfeld iteration started from the centroid.  If an iterate lands within
/// `tol` of an input point, that point is returned.
Vec3 weiszfeld_median(std::span<const Vec3> points, const WeiszfeldOptions& options = {});

/// Sign-aligned, renormalized arithmetic mean of unit quaternions.  Every
/// quaternion is flipped into the hemisphere of the first before summation.
Quat quaternion_mean(std::span<const Quat> quats);

/// Reference pose of a set of poses: geometric median of the positions and
/// chordal mean of the orientations.
Pose average_pose(std::span<const Pose> poses);

/// VIO-to-world rigid transform.  `q_rel` and `R` describe the same rotation;
/// applying the transform maps x -> R x + T and q -> q q_rel^-1.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Quat& q_rel, const Vec3& t);

  static RigidTransform identity() { return {}; }

  const Quat& q_rel() const noexcept { return q_rel_; }
  const Mat3& rotation_matrix() const noexcept { return r_; }
  const Vec3& translation() const noexcept { return t_; }

  /// Transform that undoes this one: apply(inverse(), apply(*this, p)) == p.
  RigidTransform inverse() const;

 private:
  Quat q_rel_ = Quat::Identity();
  Mat3 r_ = Mat3::Identity();
  Vec3 t_ = Vec3::Zero();
};

/// Builds the transform that carries `ref_vio` exactly onto `ref_apr`:
/// q_rel = q_apr^-1 q_vio, R = R(q_rel), T = x_apr - R x_vio.
RigidTransform compute_rigid_transform(const Pose& ref_apr, const Pose& ref_vio);

/// Re-expresses a VIO pose in world coordinates.
Pose apply_transform(const RigidTransform& transform, const Pose& p_vio);

/// Direction/orientation agreement score between an APR pose and a
/// transformed VIO pose, in [-0.5, 1].
struct Similarity {
  double score = 1.0;
  /// True when a translation norm was below kSimilarityMinNorm and the
  /// translation cosine was taken as 1.
  bool degenerate_translation = false;
};

inline constexpr double kSimilarityMinNorm = 1e-9;

Similarity similarity(const Pose& p_hat, const Pose& p_v2w);

}  // namespace posefuse
