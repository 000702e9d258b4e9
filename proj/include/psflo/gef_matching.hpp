#pragma once

#include <Eigen/Eigenvalues>
#include <unordered_set>
#include <vector>

#include "psflo/clustering.hpp"
#include "psflo/config.hpp"
#include "psflo/errors.hpp"
#include "psflo/gef.hpp"
#include "psflo/kdtree.hpp"
#include "psflo/residuals.hpp"
#include "psflo/solver.hpp"

namespace psflo {

// An indexed target feature set (previous frame or submap side).
struct GefIndex {
  std::vector<Gef> features;
  KdTree3 tree;

  void rebuild() {
    std::vector<Vec3> pts;
    pts.reserve(features.size());
    for (const Gef& f : features) pts.push_back(f.position);
    tree.build(pts);
  }
};

struct GefSubmap {
  GefIndex corners;
  GefIndex surfaces;
};

namespace detail {

struct NeighborFit {
  bool ok = false;
  Vec3 centroid = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // line direction or plane normal
  double lambda_ratio = 0.0;
};

inline NeighborFit fit_neighbor_line(const GefIndex& index, const std::vector<KdTree3::Hit>& hits,
                                     const GefConfig& cfg) {
  NeighborFit fit;
  Vec3 centroid = Vec3::Zero();
  for (const auto& h : hits) centroid += index.features[h.index].position;
  centroid /= static_cast<double>(hits.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& h : hits) {
    const Vec3 d = index.features[h.index].position - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const double l_mid = std::max(eig.eigenvalues()[1], 0.0);
  const double l_max = eig.eigenvalues()[2];
  if (l_max < 1e-12 || l_max < cfg.line_cond_min * l_mid) return fit;
  const Vec3 direction = eig.eigenvectors().col(2).normalized();
  for (const auto& h : hits)
    if ((index.features[h.index].position - centroid).cross(direction).norm() >
        cfg.neighbor_fit_tolerance)
      return fit;
  fit.ok = true;
  fit.centroid = centroid;
  fit.direction = direction;
  return fit;
}

inline NeighborFit fit_neighbor_plane(const GefIndex& index, const std::vector<KdTree3::Hit>& hits,
                                      const GefConfig& cfg) {
  NeighborFit fit;
  Vec3 centroid = Vec3::Zero();
  for (const auto& h : hits) centroid += index.features[h.index].position;
  centroid /= static_cast<double>(hits.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& h : hits) {
    const Vec3 d = index.features[h.index].position - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const double l_min = std::max(eig.eigenvalues()[0], 0.0);
  const double l_mid = eig.eigenvalues()[1];
  if (l_mid < 1e-12 || l_min > cfg.plane_cond_max * l_mid) return fit;
  const Vec3 normal = eig.eigenvectors().col(0).normalized();
  for (const auto& h : hits)
    if (std::abs(normal.dot(index.features[h.index].position - centroid)) >
        cfg.neighbor_fit_tolerance)
      return fit;
  fit.ok = true;
  fit.centroid = centroid;
  fit.direction = normal;
  return fit;
}

inline int count_same_class(const GefIndex& index, const std::vector<KdTree3::Hit>& hits,
                            std::uint16_t class_id) {
  int n = 0;
  for (const auto& h : hits)
    if (index.features[h.index].class_id == class_id) ++n;
  return n;
}

}  // namespace detail

// Builds weighted point-to-line and point-to-plane blocks for the source
// features against an indexed target set, at the given pose estimate.
// KNN correspondences, semantic consistency penalty on the weight,
// ill-conditioned neighbor fits dropped.
inline std::vector<ResidualBlock> build_gef_residuals(const GefSets& source,
                                                      const GefSubmap& target, const Pose& pose,
                                                      const GefConfig& cfg) {
  std::vector<ResidualBlock> blocks;
  const double gate_sq = cfg.max_correspondence_dist * cfg.max_correspondence_dist;

  for (const Gef& f : source.corners) {
    if (target.corners.tree.size() < static_cast<std::size_t>(cfg.knn)) break;
    const auto hits = target.corners.tree.knn(pose.apply(f.position), cfg.knn);
    if (hits.empty() || hits.back().sq_dist > gate_sq) continue;
    const auto fit = detail::fit_neighbor_line(target.corners, hits, cfg);
    if (!fit.ok) continue;
    ResidualBlock block;
    block.kind = ResidualKind::point_to_line;
    block.weight = semantic_weight(f.weight, detail::count_same_class(target.corners, hits, f.class_id));
    block.source_point = f.position;
    block.line_point = fit.centroid;
    block.line_direction = fit.direction;
    blocks.push_back(block);
  }

  for (const Gef& f : source.surfaces) {
    if (target.surfaces.tree.size() < static_cast<std::size_t>(cfg.knn)) break;
    const auto hits = target.surfaces.tree.knn(pose.apply(f.position), cfg.knn);
    if (hits.empty() || hits.back().sq_dist > gate_sq) continue;
    const auto fit = detail::fit_neighbor_plane(target.surfaces, hits, cfg);
    if (!fit.ok) continue;
    ResidualBlock block;
    block.kind = ResidualKind::point_to_plane;
    block.weight =
        semantic_weight(f.weight, detail::count_same_class(target.surfaces, hits, f.class_id));
    block.source_point = f.position;
    block.plane_normal = fit.direction;
    block.plane_offset = fit.direction.dot(fit.centroid);
    blocks.push_back(block);
  }
  return blocks;
}

// Frame-to-frame odometry: the previous frame's GeFs are the target, the
// result maps current-frame coordinates into previous-frame coordinates.
// A degenerate solve returns `init` unchanged (and reports it when asked).
inline Pose match_frame_to_frame(const GefSets& prev, const GefSets& cur, const Pose& init,
                                 const GefConfig& cfg, const SolverConfig& solver_cfg,
                                 bool* degenerate = nullptr) {
  GefSubmap target;
  target.corners.features = prev.corners;
  target.surfaces.features = prev.surfaces;
  target.corners.rebuild();
  target.surfaces.rebuild();

  const SolveResult result = solve_pose_lm(
      init,
      [&](const Pose& pose) { return build_gef_residuals(cur, target, pose, cfg); },
      solver_cfg);
  if (degenerate) *degenerate = result.degenerate;
  if (result.degenerate)
    return init;  // caller falls back to the motion prediction
  if (result.mean_residual > solver_cfg.diverged_mean_residual)
    throw Diverged("frame-to-frame matching: mean residual " +
                   std::to_string(result.mean_residual));
  return result.pose;
}

// Inserts the frame's features (plus static object points, which enter the
// surface set) transformed by `pose`, voxel-downsamples with first-point-
// wins, and drops content beyond the submap radius.
inline void update_submap(GefSubmap& submap, const GefSets& frame,
                          const std::vector<Gef>& static_object_points, const Pose& pose,
                          const GefConfig& cfg) {
  auto insert = [&](GefIndex& index, const std::vector<Gef>& features, bool transform) {
    for (const Gef& f : features) {
      Gef moved = f;
      if (transform) moved.position = pose.apply(f.position);
      index.features.push_back(moved);
    }
  };
  insert(submap.corners, frame.corners, true);
  insert(submap.surfaces, frame.surfaces, true);
  insert(submap.surfaces, static_object_points, false);  // already world frame

  auto downsample = [&](GefIndex& index, double voxel) {
    std::unordered_set<std::int64_t> occupied;
    std::vector<Gef> kept;
    kept.reserve(index.features.size());
    const double inv = 1.0 / voxel;
    for (const Gef& f : index.features) {
      if ((f.position - pose.translation).norm() > cfg.submap_radius) continue;
      const std::int64_t key = detail::voxel_key(static_cast<int>(std::floor(f.position.x() * inv)),
                                                 static_cast<int>(std::floor(f.position.y() * inv)),
                                                 static_cast<int>(std::floor(f.position.z() * inv)));
      if (occupied.insert(key).second) kept.push_back(f);
    }
    index.features = std::move(kept);
    index.rebuild();
  };
  downsample(submap.corners, cfg.voxel_corner);
  downsample(submap.surfaces, cfg.voxel_surface);
}

}  // namespace psflo
