#include "posefuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace posefuse {

Quat normalized_quat(const Quat& q) {
  if (!q.coeffs().allFinite()) {
    throw GeometryError("quaternion has non-finite components");
  }
  const double n2 = q.squaredNorm();
  if (std::abs(n2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) {
    return q;
  }
  const double n = std::sqrt(n2);
  if (n < 1e-12) {
    throw GeometryError("quaternion norm is zero");
  }
  return Quat(q.coeffs() / n);
}

Pose::Pose(const Vec3& translation, const Quat& rotation)
    : translation_(translation), rotation_(normalized_quat(rotation)) {
  if (!translation_.allFinite()) {
    throw GeometryError("pose translation has non-finite components");
  }
}

Quat quat_from_axis_angle(const Vec3& axis, double angle_deg) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle_deg)) {
    throw GeometryError("axis-angle needs a nonzero finite axis and a finite angle");
  }
  return Quat(Eigen::AngleAxisd(angle_deg * kDegToRad, axis / n));
}

double relative_translation(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

double rotation_angle_deg(const Quat& a, const Quat& b) {
  // 2 acos(|w|) of b^-1 a, evaluated as 2 atan2(|v|, |w|).
  const Quat d = b.conjugate() * a;
  const double w = std::min(std::abs(d.w()), 1.0);
  const double v = d.vec().norm();
  return 2.0 * std::atan2(v, w) * kRadToDeg;
}

double relative_rotation_deg(const Pose& a, const Pose& b) {
  return rotation_angle_deg(a.rotation(), b.rotation());
}

Odometry odometry(const Pose& from, const Pose& to) {
  return {relative_translation(to, from), relative_rotation_deg(to, from)};
}

double rpe(const Odometry& u1, const Odometry& u2) { return std::abs(u1.d_trans - u2.d_trans); }

double roe(const Odometry& u1, const Odometry& u2) { return std::abs(u1.d_rot - u2.d_rot); }

namespace {

// A data point p_k is the geometric median iff the summed unit vectors from
// it towards all other points have norm <= 1 (its own multiplicity counts
// towards the bound).
bool vertex_is_median(std::span<const Vec3> points, const Vec3& candidate) {
  Vec3 pull = Vec3::Zero();
  int multiplicity = 0;
  for (const Vec3& p : points) {
    const Vec3 d = p - candidate;
    const double n = d.norm();
    if (n == 0.0) {
      ++multiplicity;
    } else {
      pull += d / n;
    }
  }
  return pull.norm() <= static_cast<double>(multiplicity);
}

}  // namespace

Vec3 weiszfeld_median(std::span<const Vec3> points, const WeiszfeldOptions& options) {
  if (points.empty()) {
    throw GeometryError("geometric median of an empty point set");
  }
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw GeometryError("weiszfeld_median needs tol > 0 and max_iter >= 1");
  }
  if (points.size() == 1) {
    return points.front();
  }

  Vec3 y = Vec3::Zero();
  for (const Vec3& p : points) y += p;
  y /= static_cast<double>(points.size());

  for (int iter = 0; iter < options.max_iter; ++iter) {
    Vec3 num = Vec3::Zero();
    double den = 0.0;
    for (const Vec3& p : points) {
      const double d = (p - y).norm();
      if (d < options.tol) {
        return p;
      }
      num += p / d;
      den += 1.0 / d;
    }
    const Vec3 next = num / den;
    const double step = (next - y).norm();
    y = next;
    if (step < options.tol) {
      break;
    }
  }

  // Weiszfeld crawls sublinearly towards a median that sits on a data point;
  // settle that case exactly.
  const auto nearest = std::min_element(points.begin(), points.end(), [&](const Vec3& a, const Vec3& b) {
    return (a - y).squaredNorm() < (b - y).squaredNorm();
  });
  if (vertex_is_median(points, *nearest)) {
    return *nearest;
  }
  return y;
}

Quat quaternion_mean(std::span<const Quat> quats) {
  if (quats.empty()) {
    throw GeometryError("mean of an empty quaternion set");
  }
  const Eigen::Vector4d ref = quats.front().coeffs();
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  for (const Quat& q : quats) {
    sum += q.coeffs().dot(ref) < 0.0 ? Eigen::Vector4d(-q.coeffs()) : Eigen::Vector4d(q.coeffs());
  }
  sum /= static_cast<double>(quats.size());
  const double n = sum.norm();
  if (n < 1e-9) {
    throw GeometryError("quaternion mean is degenerate (antipodal set)");
  }
  return Quat(sum / n);
}

Pose average_pose(std::span<const Pose> poses) {
  if (poses.empty()) {
    throw GeometryError("average of an empty pose set");
  }
  std::vector<Vec3> positions;
  std::vector<Quat> rotations;
  positions.reserve(poses.size());
  rotations.reserve(poses.size());
  for (const Pose& p : poses) {
    positions.push_back(p.translation());
    rotations.push_back(p.rotation());
  }
  return Pose(weiszfeld_median(positions), quaternion_mean(rotations));
}

RigidTransform::RigidTransform(const Quat& q_rel, const Vec3& t)
    : q_rel_(normalized_quat(q_rel)), r_(q_rel_.toRotationMatrix()), t_(t) {
  if (!t_.allFinite()) {
    throw GeometryError("rigid transform translation has non-finite components");
  }
}

RigidTransform RigidTransform::inverse() const {
  return RigidTransform(q_rel_.conjugate(), -(r_.transpose() * t_));
}

RigidTransform compute_rigid_transform(const Pose& ref_apr, const Pose& ref_vio) {
  const Quat q_rel = normalized_quat(ref_apr.rotation().conjugate() * ref_vio.rotation());
  const Mat3 r = q_rel.toRotationMatrix();
  return RigidTransform(q_rel, ref_apr.translation() - r * ref_vio.translation());
}

Pose apply_transform(const RigidTransform& transform, const Pose& p_vio) {
  return Pose(transform.rotation_matrix() * p_vio.translation() + transform.translation(),
              p_vio.rotation() * transform.q_rel().conjugate());
}

Similarity similarity(const Pose& p_hat, const Pose& p_v2w) {
  Similarity out;
  const double na = p_hat.translation().norm();
  const double nb = p_v2w.translation().norm();
  double cos_t = 1.0;
  if (na < kSimilarityMinNorm || nb < kSimilarityMinNorm) {
    out.degenerate_translation = true;
  } else {
    cos_t = std::clamp(p_hat.translation().dot(p_v2w.translation()) / (na * nb), -1.0, 1.0);
  }
  const Quat& qa = p_hat.rotation();
  const Quat& qb = p_v2w.rotation();
  const double cos_q =
      std::clamp(std::abs(qa.coeffs().dot(qb.coeffs())) / (qa.norm() * qb.norm()), 0.0, 1.0);
  out.score = 0.5 * (cos_t + cos_q);
  return out;
}

}  // namespace posefuse
