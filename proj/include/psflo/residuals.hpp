#pragma once

#include <Eigen/Dense>
#include <optional>

#include "psflo/cp_forms.hpp"
#include "psflo/se3.hpp"

namespace psflo {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat46 = Eigen::Matrix<double, 4, 6>;

enum class ResidualKind : std::uint8_t {
  point_to_line,   // E_gl
  point_to_plane,  // E_gpi
  plane_to_plane,  // E_pi
  line_to_line     // E_p
};

// One weighted residual against the 6-dof pose T (local -> world), using the
// left perturbation R <- Exp(w) R, t <- t + u. Geometric targets are fixed
// at correspondence time; evaluation is a function of T only.
struct ResidualBlock {
  ResidualKind kind = ResidualKind::point_to_plane;
  double weight = 1.0;
  bool robust = true;  // Huber applies to GeF blocks only

  // point_to_line / point_to_plane: source point in local frame
  Vec3 source_point = Vec3::Zero();
  Vec3 line_point = Vec3::Zero();      // point on target line
  Vec3 line_direction = Vec3::UnitZ(); // unit
  Vec3 plane_normal = Vec3::UnitZ();   // unit
  double plane_offset = 0.0;           // n . x = offset

  // plane_to_plane: source CP vector (local), averaged CP vector (world)
  Vec3 source_plane_cp = Vec3::Zero();
  Vec3 avg_plane_cp = Vec3::Zero();

  // line_to_line: source line CP stacked 4-vector (local), averaged line (world)
  Eigen::Vector4d source_line_stacked = Eigen::Vector4d::Zero();
  LineCPN avg_line;

  int dimension() const {
    switch (kind) {
      case ResidualKind::point_to_plane: return 1;
      case ResidualKind::point_to_line: return 3;
      case ResidualKind::plane_to_plane: return 3;
      case ResidualKind::line_to_line: return 4;
    }
    return 0;
  }

  // Residual (first dimension() rows of r) and Jacobian w.r.t. the pose
  // increment. Returns false when the block is undefined at this pose
  // (back-transformed line through the origin).
  bool evaluate(const Pose& pose, Eigen::Vector4d& r,
                Eigen::Matrix<double, 4, 6>* jacobian = nullptr) const {
    switch (kind) {
      case ResidualKind::point_to_plane: {
        const Vec3 v = pose.rotation * source_point;
        const Vec3 p_world = v + pose.translation;
        r.setZero();
        r[0] = weight * (plane_normal.dot(p_world) - plane_offset);
        if (jacobian) {
          jacobian->setZero();
          jacobian->block<1, 3>(0, 0) = -weight * plane_normal.transpose() * skew(v);
          jacobian->block<1, 3>(0, 3) = weight * plane_normal.transpose();
        }
        return true;
      }
      case ResidualKind::point_to_line: {
        const Vec3 v = pose.rotation * source_point;
        const Vec3 p_world = v + pose.translation;
        const Mat3 proj = Mat3::Identity() - line_direction * line_direction.transpose();
        r.setZero();
        r.head<3>() = weight * proj * (p_world - line_point);
        if (jacobian) {
          jacobian->setZero();
          jacobian->block<3, 3>(0, 0) = -weight * proj * skew(v);
          jacobian->block<3, 3>(0, 3) = weight * proj;
        }
        return true;
      }
      case ResidualKind::plane_to_plane:
        return eval_plane_to_plane(pose, r, jacobian);
      case ResidualKind::line_to_line:
        return eval_line_to_line(pose, r, jacobian);
    }
    return false;
  }

 private:
  // r = w * (c_src - c_back), c_back the world average plane expressed in
  // the local frame: n_b = R^T n_avg, d_b = d_avg - t . n_avg, c_b = d_b n_b.
  bool eval_plane_to_plane(const Pose& pose, Eigen::Vector4d& r,
                           Eigen::Matrix<double, 4, 6>* jacobian) const {
    const double d_avg = avg_plane_cp.norm();
    if (d_avg <= kEpsPlane) return false;
    const Vec3 n_avg = avg_plane_cp / d_avg;
    const Vec3 n_b = pose.rotation.transpose() * n_avg;
    const double d_b = d_avg - pose.translation.dot(n_avg);
    r.setZero();
    r.head<3>() = weight * (source_plane_cp - d_b * n_b);
    if (jacobian) {
      jacobian->setZero();
      // d(R^T n)/dw = R^T [n]x ; d(d_b)/du = -n_avg
      const Mat3 dcb_dw = d_b * pose.rotation.transpose() * skew(n_avg);
      const Mat3 dcb_du = -n_b * n_avg.transpose();
      jacobian->block<3, 3>(0, 0) = -weight * dcb_dw;
      jacobian->block<3, 3>(0, 3) = -weight * dcb_du;
    }
    return true;
  }

  // r = w * (floor(c_src) - floor(T^-1 (x) c_avg)) where floor() stacks the
  // line CP form as d * quaternion, with the average side's quaternion sign
  // aligned to the source.
  bool eval_line_to_line(const Pose& pose, Eigen::Vector4d& r,
                         Eigen::Matrix<double, 4, 6>* jacobian) const {
    const Mat3 rot_t = pose.rotation.transpose();
    // back-transform the world line into the local frame
    const Vec3 m = rot_t * avg_line.direction;
    const Vec3 a = rot_t * (avg_line.point - pose.translation);
    const Vec3 n = canonical_line_direction(m);
    const double sigma = n.dot(m) > 0 ? 1.0 : -1.0;  // locally constant
    const Vec3 p = a - a.dot(n) * n;
    const double dist = p.norm();
    if (dist <= kEpsLine) return false;

    // CP frame columns: a_col = (n x p)/|n x p|, n, b_col = p/|p|
    const Vec3 c = n.cross(p);
    const double c_norm = c.norm();
    Mat3 frame;
    frame.col(0) = c / c_norm;
    frame.col(1) = n;
    frame.col(2) = p / dist;
    Eigen::Quaterniond q = canonical_quaternion(Eigen::Quaterniond(frame));
    double align = 1.0;
    {
      // align quaternion sign to the source before differencing
      const Eigen::Vector4d qs = source_line_stacked;
      const Eigen::Vector4d qa(q.w(), q.x(), q.y(), q.z());
      if (qs.dot(qa) < 0) align = -1.0;
    }
    const Eigen::Vector4d q_vec =
        align * Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
    r = weight * (source_line_stacked - dist * q_vec);

    if (!jacobian) return true;

    // chain rule through back-transform, re-projection, CP frame and
    // quaternion extraction
    const Mat36 dm = (Mat36() << rot_t * skew(avg_line.direction), Mat3::Zero()).finished();
    const Mat36 dn = sigma * dm;
    Mat36 da;
    da.leftCols<3>() = rot_t * skew(avg_line.point - pose.translation);
    da.rightCols<3>() = -rot_t;

    // p = a - (a.n)n
    const Mat3 proj_n = Mat3::Identity() - n * n.transpose();
    const Mat36 dp = proj_n * da - n * (a.transpose() * dn) - a.dot(n) * dn;

    // columns of the frame
    const Vec3 b_col = p / dist;
    const Mat3 proj_b = (Mat3::Identity() - b_col * b_col.transpose()) / dist;
    const Mat36 db = proj_b * dp;

    const Vec3 a_col = c / c_norm;
    const Mat36 dc = skew(n) * dp - skew(p) * dn;
    const Mat3 proj_a = (Mat3::Identity() - a_col * a_col.transpose()) / c_norm;
    const Mat36 da_col = proj_a * dc;

    // body-frame rotation rate of the CP frame: psi_k = vee(M^T dM_k)
    Eigen::Matrix<double, 3, 6> psi;
    for (int k = 0; k < 6; ++k) {
      Mat3 dframe;
      dframe.col(0) = da_col.col(k);
      dframe.col(1) = dn.col(k);
      dframe.col(2) = db.col(k);
      const Mat3 s = frame.transpose() * dframe;
      const Mat3 sk = 0.5 * (s - s.transpose());
      psi.col(k) = Vec3(sk(2, 1), sk(0, 2), sk(1, 0));
    }

    // dq = 0.5 * q (x) (0, psi); left-multiplication matrix of q
    Eigen::Matrix<double, 4, 3> lmat;
    const Vec3 qv = align * Vec3(q.x(), q.y(), q.z());
    const double qw = align * q.w();
    lmat.row(0) = -qv.transpose();
    lmat.bottomRows<3>() = qw * Mat3::Identity() + skew(qv);
    const Mat46 dq = 0.5 * lmat * psi;

    const Eigen::Matrix<double, 1, 6> ddist = b_col.transpose() * dp;
    const Mat46 dstacked = q_vec * ddist + dist * dq;
    *jacobian = -weight * dstacked;
    return true;
  }
};

}  // namespace psflo
