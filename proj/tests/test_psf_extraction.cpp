#include <gtest/gtest.h>

#include <random>

#include "psflo/psf_extraction.hpp"
#include "test_helpers.hpp"

using namespace psflo;
using namespace psflo::testing;

namespace {

std::vector<Vec3> plane_patch(const Vec3& origin, const Vec3& u, const Vec3& v, int nu, int nv,
                              double du, double dv, double noise = 0.0,
                              unsigned noise_seed = 99) {
  std::mt19937 rng(noise_seed);
  std::normal_distribution<double> n(0.0, noise);
  const Vec3 normal = u.cross(v).normalized();
  std::vector<Vec3> pts;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      Vec3 p = origin + i * du * u + j * dv * v;
      if (noise > 0) p += n(rng) * normal;
      pts.push_back(p);
    }
  return pts;
}

std::vector<Vec3> pole_points(const Vec3& base, const Vec3& dir, double height, int count,
                              double radius = 0.02, unsigned seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-radius, radius);
  const Vec3 d = dir.normalized();
  Vec3 side = d.cross(Vec3::UnitX());
  if (side.norm() < 1e-3) side = d.cross(Vec3::UnitY());
  side.normalize();
  const Vec3 side2 = d.cross(side);
  std::vector<Vec3> pts;
  for (int i = 0; i < count; ++i)
    pts.push_back(base + (height * i / (count - 1)) * d + u(rng) * side + u(rng) * side2);
  return pts;
}

PsfExtractionConfig default_cfg() { return PsfExtractionConfig{}; }

}  // namespace

TEST(PlaneRansac, NoiselessPlane) {
  const auto pts = plane_patch(Vec3(0, 0, 2), Vec3::UnitX(), Vec3::UnitY(), 10, 10, 0.5, 0.5);
  const PlaneFit fit = fit_plane_ransac(pts, RansacConfig{}, 1);
  EXPECT_LT((fit.plane.coefficients - Vec3(0, 0, 2)).norm(), 1e-6);
  EXPECT_DOUBLE_EQ(fit.weight, 1.0);
  EXPECT_EQ(fit.inliers.size(), pts.size());
}

TEST(PlaneRansac, InlierRatioCountsOutliers) {
  auto pts = plane_patch(Vec3(0, 0, 2), Vec3::UnitX(), Vec3::UnitY(), 10, 5, 0.5, 0.5);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) pts.push_back(Vec3(u(rng), u(rng), u(rng) + 10.0));
  const PlaneFit fit = fit_plane_ransac(pts, RansacConfig{}, 2);
  EXPECT_NEAR(fit.weight, 0.5, 0.1);
  EXPECT_DOUBLE_EQ(fit.weight, static_cast<double>(fit.inliers.size()) / pts.size());
}

TEST(PlaneRansac, TooFewPointsAndNoModel) {
  EXPECT_THROW(fit_plane_ransac({Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)}, RansacConfig{}, 1),
               TooFewPoints);

  // uniform noise: no plane reaches the consensus ratio
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<Vec3> noise;
  for (int i = 0; i < 200; ++i) noise.push_back(Vec3(u(rng), u(rng), u(rng)));
  EXPECT_THROW(fit_plane_ransac(noise, RansacConfig{}, 3), NoModel);
}

TEST(LineRansac, VerticalPole) {
  const auto pts = pole_points(Vec3(3, 4, 0), Vec3::UnitZ(), 5.0, 40, 0.0);
  const LineFit fit = fit_line_ransac(pts, RansacConfig{}, 1);
  // closest-point arithmetic oracle
  const Vec3 expect = closest_point_to_origin(Vec3(3, 4, 2.5), Vec3::UnitZ());
  EXPECT_LT((fit.line.point - expect).norm(), 1e-9);
  EXPECT_LT((fit.line.direction - Vec3(0, 0, 1)).norm(), 1e-9);
  EXPECT_DOUBLE_EQ(fit.weight, 1.0);
}

TEST(LineRansac, DirectionCanonicalized) {
  // points listed top-down; direction estimate must still point up
  auto pts = pole_points(Vec3(1, 1, 5), -Vec3::UnitZ(), 5.0, 30, 0.0);
  const LineFit fit = fit_line_ransac(pts, RansacConfig{}, 2);
  EXPECT_GT(fit.line.direction.z(), 0.99);
}

TEST(LineRansac, TooFewPoints) {
  EXPECT_THROW(fit_line_ransac({Vec3(0, 0, 0), Vec3(0, 0, 1)}, RansacConfig{}, 1), TooFewPoints);
}

TEST(RoadExtraction, GroundThroughOriginIsRejected) {
  // sensor at road height: every cell plane passes through the origin
  const auto pts = plane_patch(Vec3(-15, -15, 0), Vec3::UnitX(), Vec3::UnitY(), 40, 40, 0.75, 0.75);
  const auto psfs = extract_road_psfs(pts, road_grid(default_cfg()), default_cfg(), 1);
  EXPECT_TRUE(psfs.empty());
}

TEST(RoadExtraction, GroundAtSensorHeight) {
  const auto pts =
      plane_patch(Vec3(-15, -15, -1.73), Vec3::UnitX(), Vec3::UnitY(), 40, 40, 0.75, 0.75);
  const auto cfg = default_cfg();
  const auto psfs = extract_road_psfs(pts, road_grid(cfg), cfg, 1);
  ASSERT_GE(psfs.size(), 4u);
  for (const Psf& psf : psfs) {
    EXPECT_EQ(psf.label, PsfLabel::road);
    EXPECT_NEAR(psf.plane().coefficients.norm(), 1.73, 1e-6);
    EXPECT_LT((psf.plane().normal() - Vec3(0, 0, -1)).norm(), 1e-6);
    // outline corners lie on the fitted plane
    for (const Vec3& corner : psf.outline)
      EXPECT_LT(std::abs(psf.plane().normal().dot(corner) - psf.plane().distance()),
                2 * cfg.ransac.plane_inlier_threshold);
    EXPECT_EQ(psf.outline.size(), 4u);
  }

  EXPECT_TRUE(extract_road_psfs({}, road_grid(cfg), cfg, 1).empty());
}

TEST(BuildingExtraction, PerpendicularWallsInOneCell) {
  // two walls meeting at a right angle, both within one 20 m rotated cell
  auto pts = plane_patch(Vec3(5, -4, 0), Vec3::UnitY(), Vec3::UnitZ(), 30, 12, 0.3, 0.3);
  const auto wall2 = plane_patch(Vec3(5, 5, 0), Vec3::UnitX(), Vec3::UnitZ(), 30, 12, 0.3, 0.3);
  pts.insert(pts.end(), wall2.begin(), wall2.end());

  const auto cfg = default_cfg();
  const auto psfs = extract_building_psfs(pts, building_grid(cfg), cfg, 1);
  ASSERT_GE(psfs.size(), 2u);
  const Vec3 n0 = psfs[0].plane().normal();
  const Vec3 n1 = psfs[1].plane().normal();
  EXPECT_LT(std::abs(n0.dot(n1)), std::sin(2.0 * M_PI / 180.0));
}

TEST(BuildingExtraction, MultiPlaneInliersDisjointAndLoopStops) {
  auto pts = plane_patch(Vec3(5, -4, 0), Vec3::UnitY(), Vec3::UnitZ(), 25, 10, 0.3, 0.3);
  const auto wall2 = plane_patch(Vec3(5, 5, 0), Vec3::UnitX(), Vec3::UnitZ(), 25, 10, 0.3, 0.3);
  pts.insert(pts.end(), wall2.begin(), wall2.end());

  const auto cfg = default_cfg();
  const auto fits = extract_planes_repeated(pts, cfg, PsfLabel::building, 5);
  ASSERT_GE(fits.size(), 2u);
  std::vector<bool> seen(pts.size(), false);
  std::size_t covered = 0;
  for (const auto& [psf, inliers] : fits)
    for (int i : inliers) {
      EXPECT_FALSE(seen[i]) << "inlier sets overlap";
      seen[i] = true;
      ++covered;
    }
  EXPECT_LE(covered, pts.size());

  // fewer than n_stop leftover points: loop must not emit another PSF
  std::vector<Vec3> small(cfg.multiplane_stop - 1, Vec3(1, 2, 3));
  EXPECT_TRUE(extract_planes_repeated(small, cfg, PsfLabel::building, 1).empty());
}

TEST(SignExtraction, ClustersAndMultiSurface) {
  const auto cfg = default_cfg();
  const auto board = plane_patch(Vec3(10, 0, 2), Vec3::UnitY(), Vec3::UnitZ(), 12, 10, 0.08, 0.08);
  EXPECT_EQ(extract_sign_psfs(board, cfg, 1).size(), 1u);

  auto two = board;
  const auto far_board =
      plane_patch(Vec3(10, 10, 2), Vec3::UnitY(), Vec3::UnitZ(), 12, 10, 0.08, 0.08);
  two.insert(two.end(), far_board.begin(), far_board.end());
  EXPECT_GE(extract_sign_psfs(two, cfg, 1).size(), 2u);

  // V-shaped double-sided sign in a single cluster -> 2 planes
  auto vsign = plane_patch(Vec3(10, 0, 2), Vec3(0.7, 0.7, 0).normalized(), Vec3::UnitZ(), 14, 12,
                           0.08, 0.08);
  const auto back = plane_patch(Vec3(10, 0, 2), Vec3(0.7, -0.7, 0).normalized(), Vec3::UnitZ(), 14,
                                12, 0.08, 0.08);
  vsign.insert(vsign.end(), back.begin(), back.end());
  const auto psfs = extract_sign_psfs(vsign, cfg, 1);
  EXPECT_EQ(psfs.size(), 2u);
  for (const auto& psf : psfs) EXPECT_EQ(psf.label, PsfLabel::sign);
}

TEST(PoleExtraction, SinglePoleAndLeaning) {
  const auto cfg = default_cfg();
  const auto pole = pole_points(Vec3(4, 2, 0), Vec3::UnitZ(), 6.0, 40);
  const auto psfs = extract_pole_psfs(pole, cfg, 1);
  ASSERT_EQ(psfs.size(), 1u);
  EXPECT_EQ(psfs[0].label, PsfLabel::pole);
  EXPECT_GT(psfs[0].line().direction.z(), std::cos(2.0 * M_PI / 180.0));
  EXPECT_EQ(psfs[0].outline.size(), 2u);
  // endpoints span the pole height
  EXPECT_NEAR((psfs[0].outline[1] - psfs[0].outline[0]).norm(), 6.0, 0.2);

  const Vec3 lean = (Vec3::UnitZ() + 0.577 * Vec3::UnitX()).normalized();  // ~30 deg
  const auto leaning = pole_points(Vec3(4, 2, 0), lean, 6.0, 40);
  const auto leaning_psfs = extract_pole_psfs(leaning, cfg, 1);
  ASSERT_EQ(leaning_psfs.size(), 1u);
  EXPECT_GT(leaning_psfs[0].line().direction.z(), 0.0);
  EXPECT_NEAR(leaning_psfs[0].line().direction.dot(lean), 1.0, 1e-3);
}

TEST(PoleExtraction, SmallClusterSkipped) {
  const auto cfg = default_cfg();
  const auto pole = pole_points(Vec3(4, 2, 0), Vec3::UnitZ(), 3.0, cfg.cluster_min_points - 1);
  EXPECT_TRUE(extract_pole_psfs(pole, cfg, 1).empty());
}

TEST(ExtractFrame, CorridorSceneAndDeterminism) {
  SemanticCloud sem;
  auto add = [&](const std::vector<Vec3>& pts, std::uint16_t cls) {
    for (const Vec3& p : pts) {
      sem.cloud.points.push_back(p);
      sem.class_id.push_back(cls);
      sem.instance_id.push_back(0);
    }
  };
  add(plane_patch(Vec3(-10, -6, -1.7), Vec3::UnitX(), Vec3::UnitY(), 40, 16, 0.5, 0.75), 40);
  add(plane_patch(Vec3(-10, -7, -1.7), Vec3::UnitX(), Vec3::UnitZ(), 40, 10, 0.5, 0.4), 50);
  add(plane_patch(Vec3(-10, 7, -1.7), Vec3::UnitX(), Vec3::UnitZ(), 40, 10, 0.5, 0.4), 50);
  for (double x : {-6.0, -2.0, 2.0, 6.0})
    add(pole_points(Vec3(x, 5.5, -1.7), Vec3::UnitZ(), 4.0, 30, 0.02, 11 + int(x)), 80);
  const TaxonomyMap tax = TaxonomyMap::semantic_kitti();
  for (auto c : sem.class_id) sem.role.push_back(tax.role_of(c));

  PsfExtractionConfig cfg;
  const PsfFrame frame = extract_frame(sem, cfg);
  int road = 0, building = 0, pole = 0;
  for (const auto& psf : frame.psfs) {
    if (psf.label == PsfLabel::road) ++road;
    if (psf.label == PsfLabel::building) ++building;
    if (psf.label == PsfLabel::pole) ++pole;
    EXPECT_GT(psf.weight, 0.0);
    EXPECT_LE(psf.weight, 1.0);
  }
  EXPECT_GE(road, 1);
  EXPECT_GE(building, 2);
  EXPECT_EQ(pole, 4);

  // determinism under a fixed seed
  const PsfFrame again = extract_frame(sem, cfg);
  ASSERT_EQ(again.psfs.size(), frame.psfs.size());
  for (std::size_t i = 0; i < frame.psfs.size(); ++i) {
    EXPECT_EQ(again.psfs[i].label, frame.psfs[i].label);
    EXPECT_EQ(again.psfs[i].weight, frame.psfs[i].weight);
    EXPECT_EQ(again.psfs[i].center, frame.psfs[i].center);
  }

  SemanticCloud empty;
  EXPECT_TRUE(extract_frame(empty, cfg).psfs.empty());
}
