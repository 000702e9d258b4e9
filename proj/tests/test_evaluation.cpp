#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "psflo/evaluation.hpp"
#include "psflo/plot.hpp"
#include "psflo/synthetic.hpp"
#include "test_helpers.hpp"

using namespace psflo;
using namespace psflo::testing;
namespace fs = std::filesystem;

namespace {

std::vector<Pose> straight_path(int frames, double step) {
  std::vector<Pose> poses;
  for (int i = 0; i < frames; ++i) poses.push_back(translation_pose(Vec3(i * step, 0, 0)));
  return poses;
}

}  // namespace

TEST(OdometryEval, PerfectEstimateIsZero) {
  const auto gt = straight_path(900, 1.0);
  const auto report = eval_odometry_kitti(gt, gt);
  EXPECT_GT(report.total_segments, 0);
  EXPECT_NEAR(report.avg_translational_percent, 0.0, 1e-12);
  EXPECT_NEAR(report.avg_rotational_deg_per_m, 0.0, 1e-12);
}

TEST(OdometryEval, ScaleInflationOnStraightPath) {
  // 1% scale error on a straight path: every segment drifts by 1% of its length
  const auto gt = straight_path(900, 1.0);
  auto est = gt;
  for (auto& p : est) p.translation *= 1.01;
  const auto report = eval_odometry_kitti(est, gt);
  EXPECT_NEAR(report.avg_translational_percent, 1.0, 0.02);
  EXPECT_NEAR(report.avg_rotational_deg_per_m, 0.0, 1e-12);
  for (const auto& row : report.per_length) EXPECT_NEAR(row.translational_percent, 1.0, 0.02);
}

TEST(OdometryEval, TooShortAndLengthMismatch) {
  const auto gt = straight_path(51, 1.0);  // 50 m path
  EXPECT_THROW(eval_odometry_kitti(gt, gt), TooShort);
  EXPECT_THROW(eval_odometry_kitti(straight_path(10, 1.0), straight_path(11, 1.0)),
               LengthMismatch);
  EXPECT_THROW(eval_odometry_kitti({Pose::identity()}, {Pose::identity()}), TooShort);
}

TEST(OdometryEval, RigidInvariance) {
  std::mt19937 rng(5);
  auto gt = straight_path(400, 1.0);
  // bend the path so rotational errors are exercised
  for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
    gt[i].rotation = rot_z(0.002 * i).rotation;
    gt[i].translation += Vec3(0, 0.05 * i, 0);
  }
  auto est = gt;
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& p : est) {
    p.translation += Vec3(n(rng), n(rng), n(rng));
    p.rotation = so3_exp(Vec3(0.002 * n(rng), 0.002 * n(rng), 0.002 * n(rng))) * p.rotation;
  }

  const auto base = eval_odometry_kitti(est, gt);
  EXPECT_GT(base.avg_rotational_deg_per_m, 1e-7);
  const Pose g = random_pose(rng, 100.0);
  auto est_moved = est;
  auto gt_moved = gt;
  for (auto& p : est_moved) p = g * p;
  for (auto& p : gt_moved) p = g * p;
  const auto moved = eval_odometry_kitti(est_moved, gt_moved);
  EXPECT_NEAR(moved.avg_translational_percent, base.avg_translational_percent,
              1e-9 * std::max(1.0, base.avg_translational_percent));
  EXPECT_NEAR(moved.avg_rotational_deg_per_m, base.avg_rotational_deg_per_m,
              1e-6 * base.avg_rotational_deg_per_m);
}

TEST(ClassificationEval, PerfectAndDegenerate) {
  const std::vector<bool> gt = {true, false, true, false, false};
  const auto perfect = eval_classification(gt, gt);
  EXPECT_DOUBLE_EQ(perfect.static_class.precision, 1.0);
  EXPECT_DOUBLE_EQ(perfect.dynamic_class.recall, 1.0);
  EXPECT_DOUBLE_EQ(perfect.dynamic_class.iou, 1.0);

  const auto empty = eval_classification({}, {});
  EXPECT_FALSE(empty.static_class.has_support);
  EXPECT_FALSE(empty.dynamic_class.has_support);
  EXPECT_DOUBLE_EQ(empty.static_class.precision, 0.0);  // no division by zero
}

TEST(ClassificationEval, AllStaticOnUnbalancedMix) {
  // 19.5 : 1 static : dynamic, everything predicted static
  const long n_static = 1950, n_dynamic = 100;
  std::vector<bool> gt, pred;
  for (long i = 0; i < n_static; ++i) gt.push_back(false);
  for (long i = 0; i < n_dynamic; ++i) gt.push_back(true);
  pred.assign(gt.size(), false);
  const auto report = eval_classification(pred, gt);
  EXPECT_NEAR(report.static_class.precision, 1950.0 / 2050.0, 1e-12);  // ~0.951
  EXPECT_DOUBLE_EQ(report.dynamic_class.recall, 0.0);
  EXPECT_DOUBLE_EQ(report.static_class.recall, 1.0);

  // additivity over frame-wise accumulation
  ClassificationReport split;
  accumulate_classification(split, std::vector<bool>(pred.begin(), pred.begin() + 1000),
                            std::vector<bool>(gt.begin(), gt.begin() + 1000));
  accumulate_classification(split, std::vector<bool>(pred.begin() + 1000, pred.end()),
                            std::vector<bool>(gt.begin() + 1000, gt.end()));
  split.finalize();
  EXPECT_EQ(split.static_class.tp, report.static_class.tp);
  EXPECT_EQ(split.dynamic_class.fn, report.dynamic_class.fn);
}

TEST(Plot, CsvAndSvgEmission) {
  const fs::path dir = fs::temp_directory_path() / "psflo_plot_test";
  fs::create_directories(dir);

  const auto poses = straight_path(2, 1.0);
  const auto csv = (dir / "traj.csv").string();
  write_trajectory_csv(poses, csv);
  std::ifstream in(csv);
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3);  // header + 2 poses

  const auto gt = straight_path(2, 1.1);
  const auto svg = (dir / "traj.svg").string();
  write_trajectory_svg(poses, &gt, svg);
  std::ifstream svg_in(svg);
  std::string content((std::istreambuf_iterator<char>(svg_in)),
                      std::istreambuf_iterator<char>());
  EXPECT_NE(content.find("<svg"), std::string::npos);
  // two polylines and a start marker
  std::size_t count = 0, pos = 0;
  while ((pos = content.find("<polyline", pos)) != std::string::npos) {
    ++count;
    pos += 1;
  }
  EXPECT_EQ(count, 2u);
  EXPECT_NE(content.find("<circle"), std::string::npos);

  EXPECT_THROW(write_trajectory_csv(poses, "/nonexistent_dir/t.csv"), IoError);
  EXPECT_THROW(write_trajectory_svg(poses, nullptr, "/nonexistent_dir/t.svg"), IoError);
}

TEST(SyntheticScene, DeterministicAndLabeled) {
  const SyntheticScene scene = make_corridor_scene(5, 5.0, 42);
  const SyntheticFrame a = generate_scene(scene, 2);
  const SyntheticFrame b = generate_scene(scene, 2);
  ASSERT_EQ(a.cloud.size(), b.cloud.size());
  for (std::size_t i = 0; i < a.cloud.size(); ++i) {
    EXPECT_EQ(a.cloud.cloud.points[i], b.cloud.cloud.points[i]);
    EXPECT_EQ(a.cloud.class_id[i], b.cloud.class_id[i]);
  }
  EXPECT_GT(a.cloud.size(), 1000u);

  // every role present in a corridor frame
  int road = 0, building = 0, pole = 0, sign = 0, object = 0;
  for (Role r : a.cloud.role) {
    road += r == Role::road;
    building += r == Role::building;
    pole += r == Role::pole;
    sign += r == Role::sign;
    object += r == Role::object;
  }
  EXPECT_GT(road, 100);
  EXPECT_GT(building, 100);
  EXPECT_GT(pole, 10);
  EXPECT_GT(sign, 5);
  EXPECT_GT(object, 50);

  // ground-truth motion flags follow the box velocities
  EXPECT_FALSE(a.instance_moving.at(1));
  EXPECT_TRUE(a.instance_moving.at(2));
}

TEST(SyntheticScene, MovingBoxDisplacement) {
  SyntheticScene scene;
  scene.range_noise = 0.0;
  scene.boxes.push_back({Vec3(10, 0, 0), Vec3(2, 2, 2), Vec3(10.0, 0, 0), 252, 7});
  for (int f = 0; f < 2; ++f) scene.trajectory.push_back(translation_pose(Vec3(0, 0, 1.73)));

  const SyntheticFrame f0 = generate_scene(scene, 0);
  const SyntheticFrame f1 = generate_scene(scene, 1);
  auto box_min_x = [](const SyntheticFrame& f) {
    double lo = 1e30;
    for (std::size_t i = 0; i < f.cloud.size(); ++i)
      if (f.cloud.instance_id[i] == 7) lo = std::min(lo, f.cloud.cloud.points[i].x());
    return lo;
  };
  // 10 m/s at 10 Hz: the near face advances 1 m between frames
  EXPECT_NEAR(box_min_x(f1) - box_min_x(f0), 1.0, 0.05);
}

TEST(SyntheticScene, NoObjectClassesMeansNoObjectPoints) {
  SyntheticScene scene = make_corridor_scene(3, 3.0, 1);
  scene.boxes.clear();
  const SyntheticFrame f = generate_scene(scene, 0);
  for (Role r : f.cloud.role) EXPECT_NE(r, Role::object);
}
