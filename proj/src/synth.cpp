#include "posefuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace posefuse {

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * kPi * u2);
}

Vec3 Rng::gaussian_vec3(double sigma) {
  const double x = gaussian();
  const double y = gaussian();
  const double z = gaussian();
  return Vec3(x, y, z) * sigma;
}

Vec3 Rng::unit_vector() {
  for (;;) {
    const Vec3 v = gaussian_vec3(1.0);
    const double n = v.norm();
    if (n >= 1e-12) return v / n;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Models

AprNoiseModel AprNoiseModel::benchmark() {
  AprNoiseModel m;
  m.trans_sigma = 0.8;
  m.rot_sigma = 3.0;
  m.outlier_prob = 0.15;
  m.outlier_trans_min = 3.0;
  m.outlier_trans_max = 10.0;
  m.outlier_rot_min = 10.0;
  m.outlier_rot_max = 40.0;
  return m;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw SynthError(message);
}

bool nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void AprNoiseModel::validate() const {
  require(nonneg(trans_sigma), "apr trans_sigma must be >= 0");
  require(nonneg(rot_sigma), "apr rot_sigma must be >= 0");
  require(std::isfinite(outlier_prob) && outlier_prob >= 0.0 && outlier_prob <= 1.0,
          "apr outlier_prob must lie in [0, 1]");
  require(nonneg(outlier_trans_min) && nonneg(outlier_trans_max) && outlier_trans_min <= outlier_trans_max,
          "apr outlier translation range must be ordered and >= 0");
  require(nonneg(outlier_rot_min) && nonneg(outlier_rot_max) && outlier_rot_min <= outlier_rot_max,
          "apr outlier rotation range must be ordered and >= 0");
}

VioDriftModel VioDriftModel::benchmark() {
  VioDriftModel m;
  m.trans_noise_sigma = 0.01;
  m.rot_noise_sigma = 0.1;
  m.trans_bias_walk_sigma = 0.005;
  m.rot_bias_walk_sigma = 0.02;
  m.initial_offset = RigidTransform(quat_from_axis_angle(Vec3::UnitZ(), 35.0), Vec3(-12.0, 7.0, 0.3));
  return m;
}

void VioDriftModel::validate() const {
  require(nonneg(trans_noise_sigma), "vio trans_noise_sigma must be >= 0");
  require(nonneg(rot_noise_sigma), "vio rot_noise_sigma must be >= 0");
  require(nonneg(trans_bias_walk_sigma), "vio trans_bias_walk_sigma must be >= 0");
  require(nonneg(rot_bias_walk_sigma), "vio rot_bias_walk_sigma must be >= 0");
}

void TrajectorySpec::validate() const {
  require(frames >= 1, "trajectory needs at least one frame");
  require(std::isfinite(interval) && interval > 0.0, "frame interval must be > 0");
  require(nonneg(speed), "speed must be >= 0");
  require(extent.allFinite() && extent.x() > 0.0 && extent.y() > 0.0 && extent.z() >= 0.0,
          "extent must be positive in x and y and non-negative in z");
  require(speed * interval <= std::min(extent.x(), extent.y()) / 10.0,
          "per-frame motion speed * interval exceeds a tenth of the extent");
}

// ---------------------------------------------------------------------------
// Ground truth

namespace {

// World-to-camera orientation of a level camera heading along yaw.
Quat heading_quat(double yaw_rad) { return Quat(Eigen::AngleAxisd(-yaw_rad, Vec3::UnitZ())); }

struct CatmullRom {
  Vec3 p0, p1, p2, p3;

  Vec3 point(double t) const {
    const double t2 = t * t, t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3);
  }
  Vec3 tangent(double t) const {
    const double t2 = t * t;
    return 0.5 * ((p2 - p0) + 2.0 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t +
                  3.0 * (3.0 * p1 - p0 - 3.0 * p2 + p3) * t2);
  }
};

std::vector<Pose> random_waypoint(const TrajectorySpec& spec) {
  constexpr int kSamplesPerSegment = 64;
  Rng rng(derive_seed(spec.seed, 0));
  const Vec3 half = spec.extent / 2.0;
  const double min_gap = 0.25 * std::min(spec.extent.x(), spec.extent.y());
  const double step = spec.speed * spec.interval;
  const double needed = step * static_cast<double>(spec.frames - 1);

  auto draw_waypoint = [&] {
    const double x = rng.uniform(-half.x(), half.x());
    const double y = rng.uniform(-half.y(), half.y());
    const double z = rng.uniform(-half.z(), half.z());
    return Vec3(x, y, z);
  };

  // Arc-length table over the usable spline segments (waypoints i..i+1 for
  // i >= 1, each needing one neighbour on either side).
  std::vector<Vec3> waypoints{draw_waypoint()};
  std::vector<CatmullRom> segments;
  std::vector<double> lut_s{0.0};  // cumulative length at each dense sample
  double length = 0.0;
  while (segments.empty() || length <= needed) {
    while (waypoints.size() < segments.size() + 4) {
      Vec3 w = draw_waypoint();
      while ((w - waypoints.back()).norm() < min_gap) w = draw_waypoint();
      waypoints.push_back(w);
    }
    const std::size_t i = segments.size() + 1;
    const CatmullRom seg{waypoints[i - 1], waypoints[i], waypoints[i + 1], waypoints[i + 2]};
    Vec3 prev = seg.point(0.0);
    for (int k = 1; k <= kSamplesPerSegment; ++k) {
      const Vec3 p = seg.point(static_cast<double>(k) / kSamplesPerSegment);
      length += (p - prev).norm();
      lut_s.push_back(length);
      prev = p;
    }
    segments.push_back(seg);
  }

  std::vector<Pose> poses;
  poses.reserve(spec.frames);
  double last_yaw = 0.0;
  bool have_yaw = false;
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double s = step * static_cast<double>(f);
    while (cursor + 1 < lut_s.size() - 1 && lut_s[cursor + 1] < s) ++cursor;
    const double span = lut_s[cursor + 1] - lut_s[cursor];
    const double frac = span > 0.0 ? std::clamp((s - lut_s[cursor]) / span, 0.0, 1.0) : 0.0;
    const double u = (static_cast<double>(cursor) + frac) / kSamplesPerSegment;
    const std::size_t seg_index = std::min(static_cast<std::size_t>(u), segments.size() - 1);
    const double t = u - static_cast<double>(seg_index);
    const CatmullRom& seg = segments[seg_index];
    const Vec3 d = seg.tangent(t);
    if (std::hypot(d.x(), d.y()) > 1e-9 || !have_yaw) {
      last_yaw = std::atan2(d.y(), d.x());
      have_yaw = true;
    }
    poses.emplace_back(seg.point(t), heading_quat(last_yaw));
  }
  return poses;
}

}  // namespace

std::vector<Pose> generate_gt(const TrajectorySpec& spec) {
  spec.validate();
  const double step = spec.speed * spec.interval;
  std::vector<Pose> poses;
  poses.reserve(spec.frames);
  switch (spec.kind) {
    case TrajectoryKind::StraightLine:
      for (std::size_t f = 0; f < spec.frames; ++f) {
        poses.emplace_back(Vec3(step * static_cast<double>(f), 0.0, 0.0), Quat::Identity());
      }
      return poses;
    case TrajectoryKind::CircularArc: {
      const double radius = 0.4 * std::min(spec.extent.x(), spec.extent.y());
      for (std::size_t f = 0; f < spec.frames; ++f) {
        const double theta = step * static_cast<double>(f) / radius;
        poses.emplace_back(Vec3(radius * std::cos(theta), radius * std::sin(theta), 0.0),
                           heading_quat(theta + kPi / 2.0));
      }
      return poses;
    }
    case TrajectoryKind::RandomWaypoint:
      return random_waypoint(spec);
  }
  return poses;
}

// ---------------------------------------------------------------------------
// Sensor corruption

std::vector<Pose> corrupt_apr(std::span<const Pose> gt, const AprNoiseModel& model, std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  std::vector<Pose> out;
  out.reserve(gt.size());
  for (const Pose& p : gt) {
    Vec3 offset;
    Vec3 axis;
    double angle = 0.0;
    if (rng.uniform01() < model.outlier_prob) {
      offset = rng.unit_vector();
      offset *= rng.uniform(model.outlier_trans_min, model.outlier_trans_max);
      axis = rng.unit_vector();
      angle = rng.uniform(model.outlier_rot_min, model.outlier_rot_max);
    } else {
      offset = rng.gaussian_vec3(model.trans_sigma);
      axis = rng.unit_vector();
      angle = model.rot_sigma * rng.gaussian();
    }
    out.emplace_back(p.translation() + offset, quat_from_axis_angle(axis, angle) * p.rotation());
  }
  return out;
}

namespace {

// Rotation by the rotation vector `v` given in degrees.
Quat quat_from_rotvec_deg(const Vec3& v) {
  const double angle = v.norm();
  if (angle == 0.0) return Quat::Identity();
  return quat_from_axis_angle(v, angle);
}

}  // namespace

std::vector<Pose> corrupt_vio(std::span<const Pose> gt, const VioDriftModel& model, std::uint64_t seed) {
  model.validate();
  std::vector<Pose> out;
  if (gt.empty()) return out;
  out.reserve(gt.size());
  Rng rng(seed);
  const RigidTransform world_to_vio = model.initial_offset.inverse();

  // Drifting chain (y, r) in world-aligned coordinates, then per-frame jitter.
  Vec3 y = gt[0].translation();
  Quat r = gt[0].rotation();
  auto emit = [&](const Vec3& jitter_t, const Vec3& jitter_r) {
    const Vec3 position = y + r.conjugate() * jitter_t;
    const Quat rotation = quat_from_rotvec_deg(jitter_r) * r;
    out.push_back(apply_transform(world_to_vio, Pose(position, rotation)));
  };

  {
    const Vec3 jt = rng.gaussian_vec3(model.trans_noise_sigma);
    const Vec3 jr = rng.gaussian_vec3(model.rot_noise_sigma);
    emit(jt, jr);
  }
  for (std::size_t k = 0; k + 1 < gt.size(); ++k) {
    const Vec3 jt = rng.gaussian_vec3(model.trans_noise_sigma);
    const Vec3 jr = rng.gaussian_vec3(model.rot_noise_sigma);
    const Vec3 wt = rng.gaussian_vec3(model.trans_bias_walk_sigma);
    const Vec3 wr = rng.gaussian_vec3(model.rot_bias_walk_sigma);

    // Ground-truth increment expressed in camera frame k.
    const Quat& qk = gt[k].rotation();
    const Quat delta_q = gt[k + 1].rotation() * qk.conjugate();
    const Vec3 delta_x = qk * (gt[k + 1].translation() - gt[k].translation());

    y += r.conjugate() * (delta_x + wt);
    r = normalized_quat(quat_from_rotvec_deg(wr) * delta_q * r);
    emit(jt, jr);
  }
  return out;
}

std::vector<FrameObservation> make_stream(std::span<const Pose> gt, std::span<const Pose> apr,
                                          std::span<const Pose> vio, double interval) {
  if (apr.size() != vio.size() || (!gt.empty() && gt.size() != apr.size())) {
    throw SynthError("stream length mismatch: gt " + std::to_string(gt.size()) + ", apr " +
                     std::to_string(apr.size()) + ", vio " + std::to_string(vio.size()));
  }
  std::vector<FrameObservation> stream;
  stream.reserve(apr.size());
  for (std::size_t i = 0; i < apr.size(); ++i) {
    FrameObservation obs;
    obs.frame_id = static_cast<std::int64_t>(i);
    obs.timestamp = static_cast<double>(i) * interval;
    obs.apr = apr[i];
    obs.vio = vio[i];
    if (!gt.empty()) obs.gt = gt[i];
    stream.push_back(obs);
  }
  return stream;
}

}  // namespace posefuse
