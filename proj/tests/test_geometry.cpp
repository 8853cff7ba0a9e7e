#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "posefuse/geometry.hpp"
#include "support.hpp"

using namespace posefuse;
using posefuse::testing::random_pose;
using posefuse::testing::random_quat;
using posefuse::testing::random_vec3;

using posefuse::testing::brute_force_median;
using posefuse::testing::sum_of_distances;

TEST(Pose, NormalizesQuaternionAndRejectsNonFinite) {
  const Pose p(Vec3(1, 2, 3), Quat(2, 0, 0, 0));
  EXPECT_DOUBLE_EQ(p.rotation().norm(), 1.0);
  EXPECT_THROW(Pose(Vec3(NAN, 0, 0), Quat::Identity()), GeometryError);
  EXPECT_THROW(Pose(Vec3::Zero(), Quat(0, 0, 0, 0)), GeometryError);
  EXPECT_THROW(Pose(Vec3::Zero(), Quat(INFINITY, 0, 0, 0)), GeometryError);
}

TEST(RelativeMotion, TranslationAndRotationExamples) {
  const Pose a(Vec3(0, 0, 0), Quat::Identity());
  const Pose b(Vec3(3, 4, 0), quat_from_axis_angle(Vec3::UnitZ(), 30.0));
  EXPECT_DOUBLE_EQ(relative_translation(a, b), 5.0);
  EXPECT_NEAR(relative_rotation_deg(a, b), 30.0, 1e-12);
  EXPECT_NEAR(relative_rotation_deg(a, Pose(Vec3::Zero(), quat_from_axis_angle(Vec3(1, 1, 0), 180.0))), 180.0,
              1e-9);
  EXPECT_EQ(relative_rotation_deg(a, a), 0.0);
}

TEST(RelativeMotion, RotationMatchesTraceFormulaOnRandomPairs) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 2000; ++i) {
    const Quat a = random_quat(gen);
    const Quat b = random_quat(gen);
    const double expected = posefuse::testing::trace_angle_deg(a, b);
    if (expected < 1.0 || expected > 179.0) continue;
    EXPECT_NEAR(rotation_angle_deg(a, b), expected, 1e-6);
  }
}

TEST(RelativeMotion, SignInvarianceAndSymmetry) {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 1000; ++i) {
    const Quat a = random_quat(gen);
    const Quat b = random_quat(gen);
    const Quat na(-a.w(), -a.x(), -a.y(), -a.z());
    const Quat nb(-b.w(), -b.x(), -b.y(), -b.z());
    const double ab = rotation_angle_deg(a, b);
    EXPECT_NEAR(rotation_angle_deg(na, b), ab, 1e-9);
    EXPECT_NEAR(rotation_angle_deg(a, nb), ab, 1e-9);
    EXPECT_NEAR(rotation_angle_deg(na, nb), ab, 1e-9);
    EXPECT_NEAR(rotation_angle_deg(b, a), ab, 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 180.0);
    EXPECT_LT(rotation_angle_deg(a, na), 1e-7);
  }
}

TEST(RelativeMotion, ZeroOnlyForEqualRotations) {
  const Quat q = quat_from_axis_angle(Vec3(1, 2, 3), 17.0);
  EXPECT_LT(rotation_angle_deg(q, q), 1e-7);
  const Quat tiny = quat_from_axis_angle(Vec3(0, 0, 1), 1e-5) * q;
  EXPECT_NEAR(rotation_angle_deg(q, tiny), 1e-5, 1e-12);
}

TEST(Odometry, RpeRoeAreMagnitudeDifferences) {
  const Pose a0(Vec3(0, 0, 0), Quat::Identity());
  const Pose a1(Vec3(5, 0, 0), quat_from_axis_angle(Vec3::UnitZ(), 10.0));
  const Pose v0(Vec3(1, 1, 1), Quat::Identity());
  const Pose v1(Vec3(1.1, 1, 1), quat_from_axis_angle(Vec3::UnitX(), 4.0));
  const Odometry ua = odometry(a0, a1);
  const Odometry uv = odometry(v0, v1);
  EXPECT_NEAR(rpe(ua, uv), 4.9, 1e-12);
  EXPECT_NEAR(roe(ua, uv), 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(rpe(ua, uv), rpe(uv, ua));
}

TEST(Weiszfeld, CollinearOddCountGivesMiddlePoint) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {10, 0, 0}};
  EXPECT_LT((weiszfeld_median(pts) - Vec3(1, 0, 0)).norm(), 1e-9);
}

TEST(Weiszfeld, SinglePointAndDuplicates) {
  const std::vector<Vec3> one{{3, -2, 7}};
  EXPECT_EQ(weiszfeld_median(one), one[0]);
  const std::vector<Vec3> same(4, Vec3(1, 2, 3));
  EXPECT_LT((weiszfeld_median(same) - Vec3(1, 2, 3)).norm(), 1e-12);
}

TEST(Weiszfeld, MajorityVertexIsTheMedian) {
  const std::vector<Vec3> pts{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {9, 0, 0}, {-4, 6, 2}};
  EXPECT_LT((weiszfeld_median(pts) - Vec3(1, 1, 1)).norm(), 1e-9);
}

TEST(Weiszfeld, RobustToSingleOutlier) {
  const std::vector<Vec3> pts{{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}, {0.1, 0.1, 0}, {100, 100, 0}};
  const Vec3 m = weiszfeld_median(pts);
  EXPECT_LT(m.norm(), 0.2);
}

TEST(Weiszfeld, EmptyInputThrows) {
  EXPECT_THROW(weiszfeld_median(std::span<const Vec3>{}), GeometryError);
}

TEST(Weiszfeld, MatchesBruteForceOracle) {
  std::mt19937_64 gen(2024);
  for (int instance = 0; instance < 30; ++instance) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(random_vec3(gen, -10.0, 10.0));
    const Vec3 m = weiszfeld_median(pts);
    const Vec3 oracle = brute_force_median(pts);
    EXPECT_LT((m - oracle).norm(), 1e-6) << "instance " << instance;
    EXPECT_LE(sum_of_distances(pts, m), sum_of_distances(pts, oracle) + 1e-6);
  }
}

TEST(Weiszfeld, ObjectiveNeverAboveOracleForVariedSizes) {
  std::mt19937_64 gen(77);
  for (int instance = 0; instance < 40; ++instance) {
    const int n = std::uniform_int_distribution<int>(2, 9)(gen);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.push_back(random_vec3(gen, -10.0, 10.0));
    const Vec3 m = weiszfeld_median(pts);
    EXPECT_LE(sum_of_distances(pts, m), sum_of_distances(pts, brute_force_median(pts)) + 1e-6);
  }
}

TEST(QuaternionMean, IdentityAndQuarterTurnGiveEighthTurn) {
  const std::vector<Quat> qs{Quat::Identity(), quat_from_axis_angle(Vec3::UnitZ(), 90.0)};
  const Quat m = quaternion_mean(qs);
  EXPECT_LT(rotation_angle_deg(m, quat_from_axis_angle(Vec3::UnitZ(), 45.0)), 1e-7);
}

TEST(QuaternionMean, SignAlignedAndUnit) {
  const Quat a = quat_from_axis_angle(Vec3(1, 0, 1), 20.0);
  const Quat b = quat_from_axis_angle(Vec3(1, 0, 1), 40.0);
  const Quat nb(-b.w(), -b.x(), -b.y(), -b.z());
  const std::vector<Quat> qs{a, nb};
  const Quat m = quaternion_mean(qs);
  EXPECT_NEAR(m.norm(), 1.0, 1e-15);
  EXPECT_LT(rotation_angle_deg(m, quat_from_axis_angle(Vec3(1, 0, 1), 30.0)), 1e-7);
  EXPECT_THROW(quaternion_mean(std::span<const Quat>{}), GeometryError);
}

TEST(RigidTransform, IdentityAndPureOffset) {
  std::mt19937_64 gen(5);
  const Pose p = random_pose(gen);
  const RigidTransform id = compute_rigid_transform(p, p);
  EXPECT_LT(rotation_angle_deg(id.q_rel(), Quat::Identity()), 1e-7);
  EXPECT_LT(id.translation().norm(), 1e-12);
  const Pose q = apply_transform(RigidTransform::identity(), p);
  EXPECT_LT((q.translation() - p.translation()).norm(), 1e-15);
  EXPECT_LT(relative_rotation_deg(q, p), 1e-7);

  const Pose shifted(p.translation() + Vec3(1, 2, 3), p.rotation());
  const RigidTransform t = compute_rigid_transform(shifted, p);
  EXPECT_LT((t.rotation_matrix() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((t.translation() - Vec3(1, 2, 3)).norm(), 1e-12);
}

TEST(RigidTransform, RoundTripsOnRandomPairs) {
  std::mt19937_64 gen(6);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(gen, 50.0);
    const Pose b = random_pose(gen, 50.0);
    const RigidTransform t = compute_rigid_transform(a, b);
    const Pose mapped = apply_transform(t, b);
    EXPECT_LT((mapped.translation() - a.translation()).norm(), 1e-9);
    EXPECT_LT(relative_rotation_deg(mapped, a), 1e-7);

    const Pose p = random_pose(gen, 50.0);
    const Pose back = apply_transform(t, apply_transform(t.inverse(), p));
    EXPECT_LT((back.translation() - p.translation()).norm(), 1e-9);
    EXPECT_LT(relative_rotation_deg(back, p), 1e-7);
    EXPECT_LT((t.rotation_matrix() - t.q_rel().toRotationMatrix()).norm(), 1e-12);
  }
}

TEST(RigidTransform, PreservesRelativeOdometry) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform t(random_quat(gen), random_vec3(gen, -30.0, 30.0));
    const Pose p = random_pose(gen);
    const Pose q = random_pose(gen);
    const Pose tp = apply_transform(t, p);
    const Pose tq = apply_transform(t, q);
    EXPECT_NEAR(relative_translation(tp, tq), relative_translation(p, q), 1e-9);
    EXPECT_NEAR(relative_rotation_deg(tp, tq), relative_rotation_deg(p, q), 1e-7);
  }
}

TEST(Similarity, AnalyticValues) {
  const Pose a(Vec3(1, 2, 3), quat_from_axis_angle(Vec3::UnitY(), 25.0));
  EXPECT_NEAR(similarity(a, a).score, 1.0, 1e-15);

  const Pose anti(Vec3(-1, -2, -3), a.rotation());
  EXPECT_NEAR(similarity(a, anti).score, 0.0, 1e-15);

  // A 180-degree turn has a quaternion orthogonal to the original.
  const Pose orth(Vec3(-1, -2, -3), a.rotation() * quat_from_axis_angle(Vec3::UnitX(), 180.0));
  EXPECT_NEAR(similarity(a, orth).score, -0.5, 1e-15);
}

TEST(Similarity, DegenerateTranslationIsFlagged) {
  const Pose origin(Vec3::Zero(), Quat::Identity());
  const Pose other(Vec3(4, 0, 0), Quat::Identity());
  const Similarity s = similarity(origin, other);
  EXPECT_TRUE(s.degenerate_translation);
  EXPECT_DOUBLE_EQ(s.score, 1.0);
  EXPECT_FALSE(similarity(other, other).degenerate_translation);
}

TEST(Similarity, InvariancesAndBounds) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const Pose a = random_pose(gen);
    const Pose b = random_pose(gen);
    const double s = similarity(a, b).score;
    EXPECT_GE(s, -0.5);
    EXPECT_LE(s, 1.0);

    const Quat qa = a.rotation();
    const Quat qb = b.rotation();
    const Pose na(a.translation(), Quat(-qa.w(), -qa.x(), -qa.y(), -qa.z()));
    const Pose nb(b.translation(), Quat(-qb.w(), -qb.x(), -qb.y(), -qb.z()));
    EXPECT_NEAR(similarity(na, nb).score, s, 1e-12);

    const double k = scale(gen);
    EXPECT_NEAR(similarity(Pose(k * a.translation(), qa), Pose(k * b.translation(), qb)).score, s, 1e-12);
  }
}

TEST(AveragePose, CombinesMedianAndMean) {
  const std::vector<Pose> poses{Pose(Vec3(0, 0, 0), Quat::Identity()),
                                Pose(Vec3(1, 0, 0), quat_from_axis_angle(Vec3::UnitZ(), 2.0)),
                                Pose(Vec3(10, 0, 0), quat_from_axis_angle(Vec3::UnitZ(), 4.0))};
  const Pose avg = average_pose(poses);
  EXPECT_LT((avg.translation() - Vec3(1, 0, 0)).norm(), 1e-9);
  EXPECT_LT(rotation_angle_deg(avg.rotation(), quat_from_axis_angle(Vec3::UnitZ(), 2.0)), 1e-7);
}
