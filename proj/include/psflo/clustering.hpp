#pragma once

#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

#include "psflo/se3.hpp"

namespace psflo {

namespace detail {
inline std::int64_t voxel_key(int x, int y, int z) {
  // 21 bits per axis, offset to keep coordinates positive
  const std::int64_t bias = 1 << 20;
  return ((static_cast<std::int64_t>(x) + bias) << 42) |
         ((static_cast<std::int64_t>(y) + bias) << 21) | (static_cast<std::int64_t>(z) + bias);
}
}  // namespace detail

// Euclidean clustering: connected components under the point-to-point
// distance `tolerance`, via a voxel hash of cell size = tolerance (checking
// the 27 surrounding cells). Clusters below `min_points` are dropped.
// Deterministic: clusters seeded and grown in index order.
inline std::vector<std::vector<int>> euclidean_clusters(const std::vector<Vec3>& points,
                                                        double tolerance, int min_points) {
  const double inv = 1.0 / tolerance;
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  grid.reserve(points.size());
  auto key_of = [&](const Vec3& p) {
    return detail::voxel_key(static_cast<int>(std::floor(p.x() * inv)),
                             static_cast<int>(std::floor(p.y() * inv)),
                             static_cast<int>(std::floor(p.z() * inv)));
  };
  for (int i = 0; i < static_cast<int>(points.size()); ++i) grid[key_of(points[i])].push_back(i);

  std::vector<std::vector<int>> clusters;
  std::vector<bool> visited(points.size(), false);
  const double sq_tol = tolerance * tolerance;

  for (int seed = 0; seed < static_cast<int>(points.size()); ++seed) {
    if (visited[seed]) continue;
    std::vector<int> cluster;
    std::queue<int> frontier;
    frontier.push(seed);
    visited[seed] = true;
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop();
      cluster.push_back(i);
      const Vec3& p = points[i];
      const int cx = static_cast<int>(std::floor(p.x() * inv));
      const int cy = static_cast<int>(std::floor(p.y() * inv));
      const int cz = static_cast<int>(std::floor(p.z() * inv));
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = grid.find(detail::voxel_key(cx + dx, cy + dy, cz + dz));
            if (it == grid.end()) continue;
            for (int j : it->second) {
              if (visited[j] || (points[j] - p).squaredNorm() > sq_tol) continue;
              visited[j] = true;
              frontier.push(j);
            }
          }
    }
    if (static_cast<int>(cluster.size()) >= min_points) {
      std::sort(cluster.begin(), cluster.end());
      clusters.push_back(std::move(cluster));
    }
  }
  return clusters;
}

}  // namespace psflo
