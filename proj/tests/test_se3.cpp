#include <gtest/gtest.h>

#include <random>

#include "psflo/cp_forms.hpp"
#include "psflo/psf.hpp"
#include "psflo/se3.hpp"
#include "test_helpers.hpp"

using namespace psflo;
using namespace psflo::testing;

TEST(Pose, ComposeIdentityAndInverse) {
  std::mt19937 rng(7);
  const Pose t = random_pose(rng);
  const Pose i = Pose::identity();

  EXPECT_LT((compose(i, t).matrix() - t.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((compose(t, invert(t)).matrix() - i.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((invert(invert(t)).matrix() - t.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pose, ComposeMatchesMatrixProduct) {
  const Pose quarter = rot_z(M_PI / 2.0);
  const Pose half = compose(quarter, quarter);
  EXPECT_LT((half.matrix() - rot_z(M_PI).matrix()).cwiseAbs().maxCoeff(), 1e-12);

  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    // associativity
    const Pose c = random_pose(rng);
    EXPECT_LT((((a * b) * c).matrix() - (a * (b * c)).matrix()).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Pose, InvertTranslation) {
  const Pose t = translation_pose(Vec3(1, 2, 3));
  EXPECT_LT((invert(t).translation - Vec3(-1, -2, -3)).norm(), 1e-15);
  EXPECT_TRUE(invert(t).rotation.isIdentity(1e-15));
}

TEST(Pose, ValidityInvariant) {
  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_TRUE(random_pose(rng).is_valid());
}

TEST(PlaneCP, IdentityAndTranslationAlongNormal) {
  const PlaneCP plane{Vec3(0, 0, 2)};
  EXPECT_LT((transform_plane_cp(plane, Pose::identity()).coefficients - Vec3(0, 0, 2)).norm(),
            1e-15);
  const Pose lift = translation_pose(Vec3(0, 0, 1));
  EXPECT_LT((transform_plane_cp(plane, lift).coefficients - Vec3(0, 0, 3)).norm(), 1e-12);
}

TEST(PlaneCP, RotationMatchesThreePointRefit) {
  const PlaneCP plane{Vec3(1, 0, 0)};
  const Pose rot = rot_z(M_PI / 2.0);
  const Vec3 got = transform_plane_cp(plane, rot).coefficients;
  EXPECT_LT((got - Vec3(0, 1, 0)).norm(), 1e-12);

  // oracle: move three points of the plane, refit
  const Vec3 a(1, 0, 0), b(1, 1, 0), c(1, 0, 1);
  const Vec3 refit = plane_cp_from_points(rot.apply(a), rot.apply(b), rot.apply(c));
  EXPECT_LT((got - refit).norm(), 1e-12);
}

TEST(PlaneCP, RandomIncidenceProperty) {
  std::mt19937 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const PlaneCP plane = random_plane(rng);
    const Pose pose = random_pose(rng);
    const double d = plane.coefficients.norm();
    const Vec3 n = plane.coefficients / d;

    const Vec3 transformed = transform_plane_cp(plane, pose).coefficients;
    const double d_out = transformed.norm();
    const Vec3 n_out = transformed / d_out;

    // any point on the source plane, moved by the pose, satisfies the
    // transformed plane equation
    Vec3 tangent = n.cross(Vec3::UnitX());
    if (tangent.norm() < 1e-3) tangent = n.cross(Vec3::UnitY());
    tangent.normalize();
    for (int k = 0; k < 3; ++k) {
      const Vec3 p = d * n + (k - 1) * 3.7 * tangent + k * 1.3 * n.cross(tangent);
      EXPECT_NEAR(n_out.dot(pose.apply(p)), d_out, 1e-9);
    }

    // round trip
    const Vec3 back = transform_plane_cp(PlaneCP{transformed}, invert(pose)).coefficients;
    EXPECT_LT((back - plane.coefficients).norm(), 1e-9);
  }
}

TEST(PlaneCP, DegenerateThroughOrigin) {
  EXPECT_THROW(transform_plane_cp(PlaneCP{Vec3::Zero()}, Pose::identity()), DegeneratePlane);
  EXPECT_THROW(PlaneCP{Vec3(0, 0, 1e-9)}.distance(), DegeneratePlane);
}

TEST(LineCPN, IdentityAndReprojection) {
  const LineCPN line = make_line_cpn(Vec3(1, 0, 0), Vec3(0, 0, 1));
  const LineCPN same = transform_line_cpn(line, Pose::identity());
  EXPECT_LT((same.point - line.point).norm(), 1e-15);
  EXPECT_LT((same.direction - line.direction).norm(), 1e-15);

  // shifting a vertical line along z leaves its closest point unchanged
  const LineCPN lifted = transform_line_cpn(line, translation_pose(Vec3(0, 0, 5)));
  EXPECT_LT((lifted.point - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((lifted.point - closest_point_to_origin(Vec3(1, 0, 5), Vec3(0, 0, 1))).norm(), 1e-12);
}

TEST(LineCPN, RotationMatchesPointTransform) {
  const LineCPN line = make_line_cpn(Vec3(1, 0, 0), Vec3(0, 0, 1));
  const LineCPN got = transform_line_cpn(line, rot_z(M_PI / 2.0));
  EXPECT_LT((got.point - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_LT((got.direction - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(LineCPN, DirectionCanonicalization) {
  const LineCPN down = make_line_cpn(Vec3(3, 4, 0), Vec3(0, 0, -1));
  EXPECT_GT(down.direction.z(), 0.99);
  const LineCPN tie = make_line_cpn(Vec3(0, 0, 2), Vec3(-1, 0, 0));
  EXPECT_GT(tie.direction.x(), 0.99);
}

TEST(LineCPN, RandomIncidenceProperty) {
  std::mt19937 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const LineCPN line = random_line(rng);
    const Pose pose = random_pose(rng);
    const LineCPN out = transform_line_cpn(line, pose);

    // closest-point orthogonality
    EXPECT_LT(std::abs(out.point.dot(out.direction)), 1e-9);
    EXPECT_NEAR(out.direction.norm(), 1.0, 1e-9);

    // sample points of the source line, transformed, lie on the output line
    for (double s : {-4.0, 0.0, 2.5}) {
      const Vec3 moved = pose.apply(line.point + s * line.direction);
      const Vec3 perp = (moved - out.point) - (moved - out.point).dot(out.direction) * out.direction;
      EXPECT_LT(perp.norm(), 1e-9);
    }
  }
}

TEST(LineCP, WorkedConversion) {
  const LineCP cp = cpn_to_cp(make_line_cpn(Vec3(1, 0, 0), Vec3(0, 0, 1)));
  EXPECT_NEAR(cp.distance, 1.0, 1e-12);
  const Mat3 rot = cp.orientation.toRotationMatrix();
  EXPECT_LT((rot.col(0) - Vec3(0, 1, 0)).norm(), 1e-9);
  EXPECT_LT((rot.col(1) - Vec3(0, 0, 1)).norm(), 1e-9);
  EXPECT_LT((rot.col(2) - Vec3(1, 0, 0)).norm(), 1e-9);

  EXPECT_NEAR(cpn_to_cp(make_line_cpn(Vec3(0, 2, 0), Vec3(0, 0, 1))).distance, 2.0, 1e-12);
}

TEST(LineCP, DistanceEqualsClosestPointNorm) {
  std::mt19937 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const LineCPN line = random_line(rng);
    EXPECT_NEAR(cpn_to_cp(line).distance, line.point.norm(), 1e-9);
  }
}

TEST(LineCP, DegenerateThroughOrigin) {
  EXPECT_THROW(cpn_to_cp(LineCPN{Vec3::Zero(), Vec3::UnitZ()}), DegenerateLine);
}

TEST(Quaternion, CanonicalSign) {
  std::mt19937 rng(29);
  for (int i = 0; i < 100; ++i) {
    Eigen::Quaterniond q(random_pose(rng).rotation);
    const auto canon = canonical_quaternion(q);
    EXPECT_GE(canon.w(), 0.0);
    const auto flipped = canonical_quaternion(Eigen::Quaterniond(-q.coeffs()));
    EXPECT_LT((canon.coeffs() - flipped.coeffs()).norm(), 1e-12);
  }
}

TEST(Psf, TransformPreservesWeightAndLabel) {
  Psf psf;
  psf.coefficients = PlaneCP{Vec3(0, 0, 2)};
  psf.weight = 0.7;
  psf.label = PsfLabel::road;
  psf.center = Vec3(1, 1, 2);
  psf.outline = {Vec3(0, 0, 2), Vec3(1, 0, 2), Vec3(1, 1, 2), Vec3(0, 1, 2)};

  const Psf same = transform_psf(psf, Pose::identity());
  EXPECT_EQ(same.weight, psf.weight);
  EXPECT_EQ(same.label, psf.label);
  EXPECT_LT((same.center - psf.center).norm(), 1e-15);

  const Pose shift = translation_pose(Vec3(3, -2, 0));
  const Psf moved = transform_psf(psf, shift);
  EXPECT_LT((moved.center - (psf.center + Vec3(3, -2, 0))).norm(), 1e-12);
  EXPECT_EQ(moved.weight, psf.weight);
  for (std::size_t k = 0; k < psf.outline.size(); ++k)
    EXPECT_LT((moved.outline[k] - (psf.outline[k] + Vec3(3, -2, 0))).norm(), 1e-12);
}

TEST(Psf, TransformIsCompositionCompatible) {
  std::mt19937 rng(31);
  for (int i = 0; i < 200; ++i) {
    Psf psf;
    if (i % 2 == 0) {
      psf.coefficients = random_plane(rng);
      psf.label = PsfLabel::building;
    } else {
      psf.coefficients = random_line(rng);
      psf.label = PsfLabel::pole;
    }
    psf.center = random_vec(rng);
    psf.outline = {random_vec(rng), random_vec(rng)};

    const Pose a = random_pose(rng), b = random_pose(rng);
    const Psf chained = transform_psf(transform_psf(psf, b), a);
    const Psf direct = transform_psf(psf, a * b);

    EXPECT_LT((chained.center - direct.center).norm(), 1e-9);
    if (is_planar(psf.label)) {
      EXPECT_LT((chained.plane().coefficients - direct.plane().coefficients).norm(), 1e-9);
    } else {
      EXPECT_LT((chained.line().point - direct.line().point).norm(), 1e-9);
      EXPECT_LT((chained.line().direction - direct.line().direction).norm(), 1e-9);
    }
  }
}
