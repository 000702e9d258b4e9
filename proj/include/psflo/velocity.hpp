#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/errors.hpp"
#include "psflo/se3.hpp"

namespace psflo {

// Probability density over candidate planar velocities on a regular grid.
struct VelocityDensity {
  double resolution = 0.25;  // m/s per cell
  int cells = 0;             // per axis, odd; cell (cells/2, cells/2) is v = 0
  std::vector<double> density;  // row-major [iy * cells + ix], sums to 1
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();

  double vx_of(int ix) const { return (ix - cells / 2) * resolution; }
  double vy_of(int iy) const { return (iy - cells / 2) * resolution; }
  double at(int ix, int iy) const { return density[iy * cells + ix]; }
  double at_zero() const { return at(cells / 2, cells / 2); }

  double max_value() const { return *std::max_element(density.begin(), density.end()); }

  Eigen::Vector2d argmax() const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(density.size()); ++i)
      if (density[i] > density[best]) best = i;
    return {vx_of(best % cells), vy_of(best / cells)};
  }

  // headings (atan2 of the cell velocity) of the k highest-density cells
  std::vector<double> top_k_headings(int k) const {
    std::vector<int> order(density.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return density[a] != density[b] ? density[a] > density[b] : a < b;
    });
    std::vector<double> headings;
    for (int i = 0; i < k && i < static_cast<int>(order.size()); ++i)
      headings.push_back(std::atan2(vy_of(order[i] / cells), vx_of(order[i] % cells)));
    return headings;
  }
};

// Vertical-plane point sampling: project into a 2D polar grid (dtheta, dd),
// keep bins whose (2r+1)^2 neighborhood is crossed by more than n_v
// consecutive laser rings. Removes upper-surface points that bias velocity
// estimation. Returns indices into the input.
inline std::vector<int> sample_vertical_points(const std::vector<Vec3>& local_points,
                                               const std::vector<int>& rings,
                                               const ClassifierConfig& cfg) {
  const double dtheta = cfg.sample_dtheta_deg * M_PI / 180.0;
  const int n_theta = std::max(1, static_cast<int>(std::round(2.0 * M_PI / dtheta)));
  std::map<std::pair<int, int>, std::vector<int>> bins;
  for (int i = 0; i < static_cast<int>(local_points.size()); ++i) {
    const Vec3& p = local_points[i];
    double azimuth = std::atan2(p.y(), p.x());
    if (azimuth < 0) azimuth += 2.0 * M_PI;
    const int bi = std::min(static_cast<int>(azimuth / dtheta), n_theta - 1);
    const int bj = static_cast<int>(std::hypot(p.x(), p.y()) / cfg.sample_dd);
    bins[{bi, bj}].push_back(i);
  }

  auto max_consecutive_rings = [&](int bi, int bj) {
    std::set<int> seen;
    for (int di = -cfg.sample_r; di <= cfg.sample_r; ++di)
      for (int dj = -cfg.sample_r; dj <= cfg.sample_r; ++dj) {
        const int wrapped = ((bi + di) % n_theta + n_theta) % n_theta;
        auto it = bins.find({wrapped, bj + dj});
        if (it == bins.end()) continue;
        for (int idx : it->second) seen.insert(rings[idx]);
      }
    int best = 0, run = 0, prev = std::numeric_limits<int>::min();
    for (int ring : seen) {
      run = (ring == prev + 1) ? run + 1 : 1;
      best = std::max(best, run);
      prev = ring;
    }
    return best;
  };

  std::vector<int> kept;
  for (const auto& [key, members] : bins) {
    if (max_consecutive_rings(key.first, key.second) > cfg.sample_n_v)
      kept.insert(kept.end(), members.begin(), members.end());
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

namespace detail {

// Felzenszwalb 1D squared-distance transform with per-site offsets, unit
// spacing. INF cells carry no site.
inline void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  d.assign(n, std::numeric_limits<double>::infinity());
  int k = -1;
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double s;
    while (true) {
      if (k < 0) break;
      const int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = std::numeric_limits<double>::infinity();
    }
  }
  if (k < 0) return;  // no sites
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const int p = v[j];
    d[q] = (q - p) * (q - p) + f[p];
  }
}

}  // namespace detail

// Exhaustive alignment scorer: for every candidate planar velocity on the
// support grid, the previous point set shifted by v*dt is scored against the
// current set by the nearest-neighbor distance under a Gaussian kernel
// (joint log-likelihood over points). The per-point NN distance field over
// the grid is the lower envelope of one paraboloid per point pair, computed
// with a 2D distance transform.
inline VelocityDensity estimate_velocity(const std::vector<Vec3>& prev_points,
                                         const std::vector<Vec3>& cur_points, double dt,
                                         const ClassifierConfig& cfg) {
  if (prev_points.empty() || cur_points.empty())
    throw EmptyAfterSampling("velocity estimation needs points on both frames");
  if (dt <= 0) throw EmptyAfterSampling("velocity estimation needs dt > 0");

  auto subsample = [&](const std::vector<Vec3>& pts) {
    if (static_cast<int>(pts.size()) <= cfg.max_sample_points) return pts;
    std::vector<Vec3> out;
    const double stride = static_cast<double>(pts.size()) / cfg.max_sample_points;
    for (int k = 0; k < cfg.max_sample_points; ++k)
      out.push_back(pts[static_cast<int>(k * stride)]);
    return out;
  };
  const std::vector<Vec3> prev = subsample(prev_points);
  const std::vector<Vec3> cur = subsample(cur_points);

  VelocityDensity out;
  out.resolution = cfg.velocity_resolution;
  const int half = static_cast<int>(std::round(cfg.velocity_max / cfg.velocity_resolution));
  out.cells = 2 * half + 1;

  const double h = cfg.velocity_resolution * dt;  // grid spacing in meters
  const double cap_sq = 1.0;                      // per-point NN distance cap (m^2)
  const int pad = std::min(static_cast<int>(std::ceil(std::sqrt(cap_sq) / h)), 16);
  const int n = out.cells + 2 * pad;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> exponent(out.cells * out.cells, 0.0);
  std::vector<double> grid(n * n), row_in(n), row_out(n), col_in(n), col_out(n);
  std::vector<int> v_buf(n);
  std::vector<double> z_buf(n + 1);

  const double extent = (half + pad) * h;  // meters from grid center to padded edge
  for (const Vec3& p : prev) {
    std::fill(grid.begin(), grid.end(), inf);
    bool any = false;
    for (const Vec3& q : cur) {
      const double dx = q.x() - p.x(), dy = q.y() - p.y();
      const double dz_sq = (q.z() - p.z()) * (q.z() - p.z());
      if (std::abs(dx) > extent || std::abs(dy) > extent) continue;
      const int ix = std::clamp(static_cast<int>(std::round(dx / h)) + half + pad, 0, n - 1);
      const int iy = std::clamp(static_cast<int>(std::round(dy / h)) + half + pad, 0, n - 1);
      grid[iy * n + ix] = std::min(grid[iy * n + ix], dz_sq / (h * h));
      any = true;
    }
    if (!any) {
      for (double& e : exponent) e += cap_sq;
      continue;
    }
    // rows then columns (squared distances separate)
    for (int iy = 0; iy < n; ++iy) {
      std::copy(grid.begin() + iy * n, grid.begin() + (iy + 1) * n, row_in.begin());
      detail::dt1d(row_in, row_out, v_buf, z_buf);
      std::copy(row_out.begin(), row_out.end(), grid.begin() + iy * n);
    }
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) col_in[iy] = grid[iy * n + ix];
      detail::dt1d(col_in, col_out, v_buf, z_buf);
      for (int iy = 0; iy < n; ++iy) grid[iy * n + ix] = col_out[iy];
    }
    for (int iy = 0; iy < out.cells; ++iy)
      for (int ix = 0; ix < out.cells; ++ix) {
        const double d_sq = grid[(iy + pad) * n + (ix + pad)] * h * h;
        exponent[iy * out.cells + ix] += std::min(d_sq, cap_sq);
      }
  }

  // normalize in the log domain
  const double sigma_sq = cfg.match_sigma * cfg.match_sigma;
  double min_exp = *std::min_element(exponent.begin(), exponent.end());
  out.density.resize(exponent.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < exponent.size(); ++i) {
    out.density[i] = std::exp(-(exponent[i] - min_exp) / (2.0 * sigma_sq));
    sum += out.density[i];
  }
  for (double& d : out.density) d /= sum;

  // density-weighted moments
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int iy = 0; iy < out.cells; ++iy)
    for (int ix = 0; ix < out.cells; ++ix)
      mean += out.at(ix, iy) * Eigen::Vector2d(out.vx_of(ix), out.vy_of(iy));
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int iy = 0; iy < out.cells; ++iy)
    for (int ix = 0; ix < out.cells; ++ix) {
      const Eigen::Vector2d d = Eigen::Vector2d(out.vx_of(ix), out.vy_of(iy)) - mean;
      cov += out.at(ix, iy) * d * d.transpose();
    }
  out.mean = mean;
  out.covariance = cov;
  return out;
}

}  // namespace psflo
