#pragma once

#include <Eigen/Eigenvalues>
#include <functional>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/residuals.hpp"
#include "psflo/se3.hpp"

namespace psflo {

struct SolveResult {
  Pose pose;
  bool degenerate = false;
  bool converged = false;
  int iterations = 0;
  double cost = 0.0;
  double mean_residual = 0.0;  // mean weighted residual norm over blocks
};

namespace detail {

inline double huber_rho(double s, double delta) {
  return s <= delta ? s * s : delta * (2.0 * s - delta);
}

struct Accumulated {
  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
  Vec6 g = Vec6::Zero();
  double cost = 0.0;
  double residual_norm_sum = 0.0;
  int valid_blocks = 0;
  int dimensions = 0;
};

inline Accumulated accumulate(const std::vector<ResidualBlock>& blocks, const Pose& pose,
                              double huber_delta, bool with_derivatives) {
  Accumulated acc;
  Eigen::Vector4d r;
  Eigen::Matrix<double, 4, 6> jac;
  for (const ResidualBlock& block : blocks) {
    if (!block.evaluate(pose, r, with_derivatives ? &jac : nullptr)) continue;
    const int dim = block.dimension();
    const double s = r.head(dim).norm();
    acc.residual_norm_sum += s;
    ++acc.valid_blocks;
    acc.dimensions += dim;
    if (block.robust) {
      acc.cost += huber_rho(s, huber_delta);
      if (with_derivatives && s > huber_delta) {
        const double scale = std::sqrt(huber_delta / s);
        r *= scale;
        jac *= scale;
      }
    } else {
      acc.cost += s * s;
    }
    if (with_derivatives) {
      acc.h += jac.topRows(dim).transpose() * jac.topRows(dim);
      acc.g += jac.topRows(dim).transpose() * r.head(dim);
    }
  }
  return acc;
}

}  // namespace detail

// Levenberg-Marquardt over the 6-dof pose. `rebuild` re-establishes
// correspondences at the current estimate once per outer iteration and
// returns the residual blocks. Degeneracy (fewer than 6 residual dimensions
// or normal-equations condition number beyond cfg.condition_max) returns the
// initial pose with the degenerate flag set.
inline SolveResult solve_pose_lm(
    const Pose& init, const std::function<std::vector<ResidualBlock>(const Pose&)>& rebuild,
    const SolverConfig& cfg) {
  SolveResult result;
  result.pose = init;
  double lambda = cfg.lm_lambda_init;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const std::vector<ResidualBlock> blocks = rebuild(result.pose);
    const auto acc = detail::accumulate(blocks, result.pose, cfg.huber_delta, true);
    result.cost = acc.cost;
    result.mean_residual =
        acc.valid_blocks > 0 ? acc.residual_norm_sum / acc.valid_blocks : 0.0;

    if (acc.dimensions < 6) {
      result.pose = init;
      result.degenerate = true;
      return result;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(acc.h);
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double lambda_max = eig.eigenvalues().maxCoeff();
    if (lambda_min <= 0.0 || lambda_max / lambda_min > cfg.condition_max) {
      result.pose = init;
      result.degenerate = true;
      return result;
    }

    // damped step, retried with increased damping until the cost drops
    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 6, 6> h = acc.h;
      h.diagonal() += lambda * acc.h.diagonal();
      const Vec6 delta = h.ldlt().solve(-acc.g);
      const Pose candidate = apply_increment(result.pose, delta);
      const auto cand = detail::accumulate(blocks, candidate, cfg.huber_delta, false);
      if (cand.cost < acc.cost) {
        result.pose = candidate;
        result.cost = cand.cost;
        lambda = std::max(lambda / cfg.lm_lambda_scale, 1e-12);
        accepted = true;
        if (delta.head<3>().norm() < cfg.rotation_tolerance &&
            delta.tail<3>().norm() < cfg.translation_tolerance) {
          result.converged = true;
          const auto fin = detail::accumulate(blocks, result.pose, cfg.huber_delta, false);
          result.mean_residual =
              fin.valid_blocks > 0 ? fin.residual_norm_sum / fin.valid_blocks : 0.0;
          return result;
        }
        break;
      }
      lambda *= cfg.lm_lambda_scale;
    }
    if (!accepted) {
      result.converged = true;  // no descent direction left at this damping
      return result;
    }
  }
  return result;
}

}  // namespace psflo
