#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/cp_forms.hpp"
#include "psflo/errors.hpp"
#include "psflo/se3.hpp"

namespace psflo {

struct PlaneFit {
  PlaneCP plane;
  std::vector<int> inliers;  // indices into the input set
  double weight = 0.0;       // inlier ratio
};

struct LineFit {
  LineCPN line;
  std::vector<int> inliers;
  double weight = 0.0;
};

namespace detail {

inline Mat3 scatter_matrix(const std::vector<Vec3>& points, const std::vector<int>& subset,
                           Vec3& centroid) {
  centroid = Vec3::Zero();
  for (int i : subset) centroid += points[i];
  centroid /= static_cast<double>(subset.size());
  Mat3 cov = Mat3::Zero();
  for (int i : subset) {
    const Vec3 d = points[i] - centroid;
    cov += d * d.transpose();
  }
  return cov;
}

}  // namespace detail

// Least-squares plane through a point subset; returns (unit normal, origin
// distance) with distance >= 0.
inline std::pair<Vec3, double> fit_plane_lsq(const std::vector<Vec3>& points,
                                             const std::vector<int>& subset) {
  Vec3 centroid;
  const Mat3 cov = detail::scatter_matrix(points, subset, centroid);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 normal = eig.eigenvectors().col(0);  // smallest eigenvalue
  double d = normal.dot(centroid);
  if (d < 0) {
    normal = -normal;
    d = -d;
  }
  return {normal, d};
}

// RANSAC plane fit in CP form. weight = inlier ratio of the refined model.
inline PlaneFit fit_plane_ransac(const std::vector<Vec3>& points, const RansacConfig& cfg,
                                 std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (n < cfg.min_fit_points)
    throw TooFewPoints("plane fit needs " + std::to_string(cfg.min_fit_points) + " points, got " +
                       std::to_string(n));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  int best_count = -1;
  Vec3 best_normal = Vec3::UnitZ();
  double best_d = 0.0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const int a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    Vec3 normal = (points[b] - points[a]).cross(points[c] - points[a]);
    if (normal.norm() < 1e-9) continue;
    normal.normalize();
    double d = normal.dot(points[a]);
    if (d < 0) {
      normal = -normal;
      d = -d;
    }
    int count = 0;
    for (const Vec3& p : points)
      if (std::abs(normal.dot(p) - d) <= cfg.plane_inlier_threshold) ++count;
    if (count > best_count) {
      best_count = count;
      best_normal = normal;
      best_d = d;
    }
  }

  if (best_count < 0 || best_count < cfg.min_inlier_ratio * n)
    throw NoModel("plane RANSAC: best inlier ratio below threshold");

  // refine on the consensus set, then recount
  std::vector<int> inliers;
  for (int i = 0; i < n; ++i)
    if (std::abs(best_normal.dot(points[i]) - best_d) <= cfg.plane_inlier_threshold)
      inliers.push_back(i);
  const auto [normal, d] = fit_plane_lsq(points, inliers);
  if (d <= kEpsPlane) throw DegeneratePlane("fitted plane passes through the origin");

  PlaneFit fit;
  fit.inliers.clear();
  for (int i = 0; i < n; ++i)
    if (std::abs(normal.dot(points[i]) - d) <= cfg.plane_inlier_threshold)
      fit.inliers.push_back(i);
  if (static_cast<int>(fit.inliers.size()) < cfg.min_inlier_ratio * n)
    throw NoModel("plane RANSAC: refined model lost consensus");
  fit.plane = PlaneCP{d * normal};
  fit.weight = static_cast<double>(fit.inliers.size()) / n;
  return fit;
}

// Least-squares 3D line through a subset (centroid + dominant direction).
inline LineCPN fit_line_lsq(const std::vector<Vec3>& points, const std::vector<int>& subset) {
  Vec3 centroid;
  const Mat3 cov = detail::scatter_matrix(points, subset, centroid);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 direction = eig.eigenvectors().col(2);  // largest eigenvalue
  return make_line_cpn(centroid, direction);
}

inline double point_line_distance(const Vec3& p, const Vec3& on_line, const Vec3& unit_dir) {
  return ((p - on_line).cross(unit_dir)).norm();
}

inline LineFit fit_line_ransac(const std::vector<Vec3>& points, const RansacConfig& cfg,
                               std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (n < cfg.min_fit_points)
    throw TooFewPoints("line fit needs " + std::to_string(cfg.min_fit_points) + " points, got " +
                       std::to_string(n));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  int best_count = -1;
  Vec3 best_point = Vec3::Zero(), best_dir = Vec3::UnitZ();

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    Vec3 dir = points[b] - points[a];
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    int count = 0;
    for (const Vec3& p : points)
      if (point_line_distance(p, points[a], dir) <= cfg.line_inlier_threshold) ++count;
    if (count > best_count) {
      best_count = count;
      best_point = points[a];
      best_dir = dir;
    }
  }

  if (best_count < 0 || best_count < cfg.min_inlier_ratio * n)
    throw NoModel("line RANSAC: best inlier ratio below threshold");

  std::vector<int> consensus;
  for (int i = 0; i < n; ++i)
    if (point_line_distance(points[i], best_point, best_dir) <= cfg.line_inlier_threshold)
      consensus.push_back(i);
  const LineCPN line = fit_line_lsq(points, consensus);

  LineFit fit;
  for (int i = 0; i < n; ++i)
    if (point_line_distance(points[i], line.point, line.direction) <= cfg.line_inlier_threshold)
      fit.inliers.push_back(i);
  if (static_cast<int>(fit.inliers.size()) < cfg.min_inlier_ratio * n)
    throw NoModel("line RANSAC: refined model lost consensus");
  fit.line = line;
  fit.weight = static_cast<double>(fit.inliers.size()) / n;
  return fit;
}

// Minimum-area enclosing rectangle of the inliers projected into the fitted
// plane (rotating calipers over the 2D convex hull). Returns the four 3D
// corners; `center` receives the rectangle center.
inline std::vector<Vec3> min_enclosing_rectangle(const std::vector<Vec3>& points,
                                                 const std::vector<int>& inliers,
                                                 const PlaneCP& plane, Vec3& center) {
  const double d = plane.distance();
  const Vec3 n = plane.coefficients / d;
  Vec3 u = n.cross(Vec3::UnitX());
  if (u.norm() < 1e-3) u = n.cross(Vec3::UnitY());
  u.normalize();
  const Vec3 v = n.cross(u);

  std::vector<Eigen::Vector2d> pts2;
  pts2.reserve(inliers.size());
  for (int i : inliers) pts2.emplace_back(u.dot(points[i]), v.dot(points[i]));

  // Andrew monotone chain hull
  std::sort(pts2.begin(), pts2.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  pts2.erase(std::unique(pts2.begin(), pts2.end()), pts2.end());
  auto cross2 = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull;
  if (pts2.size() < 3) {
    hull = pts2;
  } else {
    hull.resize(2 * pts2.size());
    std::size_t k = 0;
    for (const auto& p : pts2) {
      while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
      hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts2.rbegin() + 1; it != pts2.rend(); ++it) {
      while (k >= lower && cross2(hull[k - 2], hull[k - 1], *it) <= 0) --k;
      hull[k++] = *it;
    }
    hull.resize(k - 1);
  }

  double best_area = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_lo = Eigen::Vector2d::Zero(), best_hi = Eigen::Vector2d::Zero();
  Eigen::Matrix2d best_axes = Eigen::Matrix2d::Identity();
  const std::size_t h = hull.size();
  const std::size_t n_edges = h >= 2 ? h : 1;
  for (std::size_t e = 0; e < n_edges; ++e) {
    Eigen::Vector2d dir(1, 0);
    if (h >= 2) {
      dir = hull[(e + 1) % h] - hull[e];
      if (dir.norm() < 1e-12) continue;
      dir.normalize();
    }
    const Eigen::Vector2d ortho(-dir.y(), dir.x());
    Eigen::Vector2d lo(std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (const auto& p : (h >= 1 ? hull : pts2)) {
      const Eigen::Vector2d q(dir.dot(p), ortho.dot(p));
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const double area = (hi - lo).prod();
    if (area < best_area) {
      best_area = area;
      best_lo = lo;
      best_hi = hi;
      best_axes.col(0) = dir;
      best_axes.col(1) = ortho;
    }
  }

  auto lift = [&](const Eigen::Vector2d& q) {
    const Eigen::Vector2d xy = best_axes * q;
    return d * n + xy.x() * u + xy.y() * v;
  };
  const std::vector<Vec3> corners = {
      lift({best_lo.x(), best_lo.y()}), lift({best_hi.x(), best_lo.y()}),
      lift({best_hi.x(), best_hi.y()}), lift({best_lo.x(), best_hi.y()})};
  center = 0.25 * (corners[0] + corners[1] + corners[2] + corners[3]);
  return corners;
}

}  // namespace psflo
