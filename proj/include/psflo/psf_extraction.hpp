#pragma once

#include <map>
#include <vector>

#include "psflo/clustering.hpp"
#include "psflo/config.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/psf.hpp"
#include "psflo/ransac.hpp"

namespace psflo {

// 2D multi-resolution grid: cell size per 2D-range band, optionally rotated
// about z (45 degrees for buildings so walls are not split along their
// tangential direction).
struct GridSpec {
  std::vector<std::pair<double, double>> bands;  // (range limit, cell size), limits increasing
  double rotation = 0.0;

  // (band, cell x, cell y); band -1 when beyond the last range limit
  std::tuple<int, int, int> cell_of(const Vec3& p) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double x = c * p.x() + s * p.y();
    const double y = -s * p.x() + c * p.y();
    const double range = std::hypot(p.x(), p.y());
    for (int b = 0; b < static_cast<int>(bands.size()); ++b) {
      if (range <= bands[b].first) {
        const double cell = bands[b].second;
        return {b, static_cast<int>(std::floor(x / cell)), static_cast<int>(std::floor(y / cell))};
      }
    }
    return {-1, 0, 0};
  }
};

inline GridSpec road_grid(const PsfExtractionConfig& cfg) { return GridSpec{cfg.road_bands, 0.0}; }

inline GridSpec building_grid(const PsfExtractionConfig& cfg) {
  return GridSpec{{{1e9, cfg.building_cell}}, cfg.building_rotation};
}

namespace detail {

inline std::vector<Vec3> gather(const std::vector<Vec3>& points, const std::vector<int>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(points[i]);
  return out;
}

// Groups point indices by grid cell, in deterministic (band, x, y) order.
inline std::map<std::tuple<int, int, int>, std::vector<int>> bin_points(
    const std::vector<Vec3>& points, const GridSpec& grid) {
  std::map<std::tuple<int, int, int>, std::vector<int>> cells;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const auto key = grid.cell_of(points[i]);
    if (std::get<0>(key) >= 0) cells[key].push_back(i);
  }
  return cells;
}

}  // namespace detail

inline Psf make_planar_psf(const std::vector<Vec3>& points, const PlaneFit& fit, PsfLabel label) {
  Psf psf;
  psf.coefficients = fit.plane;
  psf.weight = fit.weight;
  psf.label = label;
  psf.outline = min_enclosing_rectangle(points, fit.inliers, fit.plane, psf.center);
  return psf;
}

// Repeated plane extraction: fit, emit, remove inliers, until fewer than
// n_stop points remain or the fit fails. Returns each PSF with the original
// indices of its inliers (sets are disjoint by construction).
inline std::vector<std::pair<Psf, std::vector<int>>> extract_planes_repeated(
    const std::vector<Vec3>& points, const PsfExtractionConfig& cfg, PsfLabel label,
    std::uint64_t seed) {
  std::vector<std::pair<Psf, std::vector<int>>> out;
  std::vector<int> remaining(points.size());
  std::iota(remaining.begin(), remaining.end(), 0);

  int round = 0;
  while (static_cast<int>(remaining.size()) >= cfg.multiplane_stop) {
    const std::vector<Vec3> subset = detail::gather(points, remaining);
    PlaneFit fit;
    try {
      fit = fit_plane_ransac(subset, cfg.ransac, seed + round);
    } catch (const Error&) {
      break;  // TooFewPoints / NoModel / DegeneratePlane all end the loop
    }
    std::vector<int> original;
    original.reserve(fit.inliers.size());
    for (int i : fit.inliers) original.push_back(remaining[i]);

    Psf psf = make_planar_psf(subset, fit, label);
    out.emplace_back(std::move(psf), original);

    std::vector<int> next;
    next.reserve(remaining.size() - fit.inliers.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (k < fit.inliers.size() && static_cast<int>(i) == fit.inliers[k]) {
        ++k;
        continue;
      }
      next.push_back(remaining[i]);
    }
    remaining = std::move(next);
    ++round;
  }
  return out;
}

inline std::vector<Psf> extract_road_psfs(const std::vector<Vec3>& road_points,
                                          const GridSpec& grid, const PsfExtractionConfig& cfg,
                                          std::uint64_t seed) {
  std::vector<Psf> out;
  std::uint64_t cell_index = 0;
  for (const auto& [key, idx] : detail::bin_points(road_points, grid)) {
    ++cell_index;
    if (static_cast<int>(idx.size()) < cfg.ransac.min_fit_points) continue;
    const std::vector<Vec3> cell_points = detail::gather(road_points, idx);
    try {
      const PlaneFit fit = fit_plane_ransac(cell_points, cfg.ransac, seed ^ (cell_index * 0x9e3779b9));
      out.push_back(make_planar_psf(cell_points, fit, PsfLabel::road));
    } catch (const Error&) {
      // cell skipped: no consensus plane, or plane through the origin
    }
  }
  return out;
}

inline std::vector<Psf> extract_building_psfs(const std::vector<Vec3>& building_points,
                                              const GridSpec& grid,
                                              const PsfExtractionConfig& cfg,
                                              std::uint64_t seed) {
  std::vector<Psf> out;
  std::uint64_t cell_index = 0;
  for (const auto& [key, idx] : detail::bin_points(building_points, grid)) {
    ++cell_index;
    const std::vector<Vec3> cell_points = detail::gather(building_points, idx);
    for (auto& [psf, inliers] :
         extract_planes_repeated(cell_points, cfg, PsfLabel::building, seed ^ (cell_index * 0x51ed)))
      out.push_back(std::move(psf));
  }
  return out;
}

inline std::vector<Psf> extract_sign_psfs(const std::vector<Vec3>& sign_points,
                                          const PsfExtractionConfig& cfg, std::uint64_t seed) {
  std::vector<Psf> out;
  const auto clusters =
      euclidean_clusters(sign_points, cfg.cluster_tolerance, cfg.cluster_min_points);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const std::vector<Vec3> cluster_points = detail::gather(sign_points, clusters[c]);
    for (auto& [psf, inliers] :
         extract_planes_repeated(cluster_points, cfg, PsfLabel::sign, seed ^ ((c + 1) * 0x2c1b)))
      out.push_back(std::move(psf));
  }
  return out;
}

inline std::vector<Psf> extract_pole_psfs(const std::vector<Vec3>& pole_points,
                                          const PsfExtractionConfig& cfg, std::uint64_t seed) {
  std::vector<Psf> out;
  const auto clusters =
      euclidean_clusters(pole_points, cfg.cluster_tolerance, cfg.cluster_min_points);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const std::vector<Vec3> cluster_points = detail::gather(pole_points, clusters[c]);
    LineFit fit;
    try {
      fit = fit_line_ransac(cluster_points, cfg.ransac, seed ^ ((c + 1) * 0x7f4a));
    } catch (const Error&) {
      continue;
    }
    Psf psf;
    psf.coefficients = fit.line;
    psf.weight = fit.weight;
    psf.label = PsfLabel::pole;

    Vec3 lo = cluster_points[0], hi = cluster_points[0];
    for (const Vec3& p : cluster_points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    psf.center = 0.5 * (lo + hi);  // cluster bounding-box center

    // endpoints: inlier extent projected onto the line
    double s_min = std::numeric_limits<double>::infinity(), s_max = -s_min;
    for (int i : fit.inliers) {
      const double s = (cluster_points[i] - fit.line.point).dot(fit.line.direction);
      s_min = std::min(s_min, s);
      s_max = std::max(s_max, s);
    }
    psf.outline = {fit.line.point + s_min * fit.line.direction,
                   fit.line.point + s_max * fit.line.direction};
    out.push_back(std::move(psf));
  }
  return out;
}

inline PsfFrame extract_frame(const SemanticCloud& sem, const PsfExtractionConfig& cfg) {
  PsfFrame frame;
  frame.frame_index = sem.cloud.frame_index;

  auto points_of = [&](Role role) {
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < sem.size(); ++i)
      if (sem.role[i] == role) pts.push_back(sem.cloud.points[i]);
    return pts;
  };

  const std::uint64_t seed = cfg.seed ^ (static_cast<std::uint64_t>(sem.cloud.frame_index) << 32);
  for (Psf& p : extract_road_psfs(points_of(Role::road), road_grid(cfg), cfg, seed ^ 0xA))
    frame.psfs.push_back(std::move(p));
  for (Psf& p :
       extract_building_psfs(points_of(Role::building), building_grid(cfg), cfg, seed ^ 0xB))
    frame.psfs.push_back(std::move(p));
  for (Psf& p : extract_sign_psfs(points_of(Role::sign), cfg, seed ^ 0xC))
    frame.psfs.push_back(std::move(p));
  for (Psf& p : extract_pole_psfs(points_of(Role::pole), cfg, seed ^ 0xD))
    frame.psfs.push_back(std::move(p));
  return frame;
}

}  // namespace psflo
