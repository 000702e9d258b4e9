#pragma once

#include <algorithm>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/se3.hpp"

namespace psflo {

// LOAM-style geometric feature: one corner or surface point.
struct Gef {
  Vec3 position = Vec3::Zero();  // local frame at extraction, world in submaps
  double curvature = 0.0;
  std::uint16_t class_id = 0;
  Role role = Role::other;
  double weight = 1.0;  // in [0, 1]
};

struct GefSets {
  std::vector<Gef> corners;
  std::vector<Gef> surfaces;
};

// Eq.: w * 1 / (1 + e^(-2 n_same)) - semantic consistency penalty on the
// GeF weight, n_same the number of same-class neighbors found by the KNN
// correspondence search.
inline double semantic_weight(double w, int n_same) {
  return w / (1.0 + std::exp(-2.0 * static_cast<double>(n_same)));
}

// Per-scan-line curvature over a sliding window, sector quotas for corner
// and surface selection, neighbor suppression, and the semantic filter that
// drops corners on road/terrain points.
inline GefSets extract_gefs(const SemanticCloud& sem, const GefConfig& cfg) {
  GefSets out;
  const auto& cloud = sem.cloud;
  if (cloud.ring.size() != cloud.size()) return out;

  int max_ring = 0;
  for (int r : cloud.ring) max_ring = std::max(max_ring, r);

  std::vector<std::vector<int>> rings(max_ring + 1);
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    if (sem.role[i] == Role::object) continue;  // objects enter via the classifier
    if (cloud.points[i].norm() < 1.0) continue;
    rings[cloud.ring[i]].push_back(i);
  }

  const int w = cfg.curvature_window;
  for (auto& ring : rings) {
    const int n = static_cast<int>(ring.size());
    if (n < 2 * w + 1) continue;
    std::stable_sort(ring.begin(), ring.end(), [&](int a, int b) {
      const double aa = std::atan2(cloud.points[a].y(), cloud.points[a].x());
      const double ab = std::atan2(cloud.points[b].y(), cloud.points[b].x());
      return aa < ab;
    });

    std::vector<double> curvature(n, 0.0);
    std::vector<bool> eligible(n, true);
    for (int i = 0; i < w; ++i) eligible[i] = eligible[n - 1 - i] = false;

    // occlusion edges: behind a range jump the surface is only grazed
    for (int i = 0; i + 1 < n; ++i) {
      const double r0 = cloud.points[ring[i]].norm();
      const double r1 = cloud.points[ring[i + 1]].norm();
      if (std::abs(r1 - r0) > cfg.occlusion_gap) {
        const int far_side = r1 > r0 ? i + 1 : i;
        const int step = r1 > r0 ? 1 : -1;
        for (int k = 0; k < w; ++k) {
          const int j = far_side + step * k;
          if (j >= 0 && j < n) eligible[j] = false;
        }
      }
    }

    for (int i = w; i < n - w; ++i) {
      const Vec3& p = cloud.points[ring[i]];
      Vec3 sum = Vec3::Zero();
      for (int k = 1; k <= w; ++k)
        sum += (cloud.points[ring[i - k]] - p) + (cloud.points[ring[i + k]] - p);
      curvature[i] = sum.squaredNorm();
    }

    // per-sector quotas
    const int sectors = cfg.sectors_per_ring;
    for (int s = 0; s < sectors; ++s) {
      const int begin = s * n / sectors;
      const int end = (s + 1) * n / sectors;
      std::vector<int> order;
      for (int i = begin; i < end; ++i)
        if (eligible[i]) order.push_back(i);

      std::vector<bool> picked(n, false);
      auto suppress = [&](int i) {
        for (int k = -w; k <= w; ++k)
          if (i + k >= 0 && i + k < n) picked[i + k] = true;
      };

      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return curvature[a] != curvature[b] ? curvature[a] > curvature[b] : a < b; });
      int corners_taken = 0;
      for (int i : order) {
        if (curvature[i] < cfg.corner_curvature_min) break;
        if (picked[i]) continue;
        const int idx = ring[i];
        if (sem.role[idx] == Role::road || sem.role[idx] == Role::terrain) continue;
        out.corners.push_back(
            Gef{cloud.points[idx], curvature[i], sem.class_id[idx], sem.role[idx], 1.0});
        suppress(i);
        if (++corners_taken >= cfg.max_corners_per_sector) break;
      }

      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return curvature[a] != curvature[b] ? curvature[a] < curvature[b] : a < b; });
      int surfaces_taken = 0;
      for (int i : order) {
        if (curvature[i] > cfg.surface_curvature_max) break;
        if (picked[i]) continue;
        const int idx = ring[i];
        out.surfaces.push_back(
            Gef{cloud.points[idx], curvature[i], sem.class_id[idx], sem.role[idx], 1.0});
        suppress(i);
        if (++surfaces_taken >= cfg.max_surfaces_per_sector) break;
      }
    }
  }
  return out;
}

}  // namespace psflo
