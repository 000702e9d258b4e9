#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace psflo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Rodrigues formula.
inline Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(omega);
  const Vec3 axis = omega / theta;
  return Eigen::AngleAxisd(theta, axis).toRotationMatrix();
}

inline Vec3 so3_log(const Mat3& rot) {
  Eigen::AngleAxisd aa(rot);
  return aa.angle() * aa.axis();
}

// Rigid transform: x_out = rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  // this applied after other: (a*b).apply(x) == a.apply(b.apply(x)).
  Pose operator*(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  bool is_valid(double tol = 1e-9) const {
    const Mat3 rrt = rotation * rotation.transpose();
    return (rrt - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
           std::abs(rotation.determinant() - 1.0) < tol &&
           translation.allFinite();
  }

  // Re-orthonormalize the rotation; keeps long compounding chains on SO(3).
  void normalize() {
    Eigen::Quaterniond q(rotation);
    q.normalize();
    rotation = q.toRotationMatrix();
  }
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose invert(const Pose& t) { return t.inverse(); }

inline Pose make_pose(const Mat3& r, const Vec3& t) { return Pose{r, t}; }

inline Pose translation_pose(const Vec3& t) { return Pose{Mat3::Identity(), t}; }

inline Pose rot_z(double radians) {
  return Pose{Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()};
}

// Left-perturbation update used by the solvers:
//   rotation <- Exp(omega) * rotation,  translation <- translation + u.
inline Pose apply_increment(const Pose& t, const Eigen::Matrix<double, 6, 1>& delta) {
  Pose out;
  out.rotation = so3_exp(delta.head<3>()) * t.rotation;
  out.translation = t.translation + delta.tail<3>();
  out.normalize();
  return out;
}

inline double rotation_angle(const Mat3& rot) {
  const double c = std::clamp((rot.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

// Fix the quaternion double cover: scalar part >= 0, ties broken on the
// first nonzero vector component.
inline Eigen::Quaterniond canonical_quaternion(Eigen::Quaterniond q) {
  q.normalize();
  double lead = q.w();
  if (lead == 0.0) lead = q.x();
  if (lead == 0.0) lead = q.y();
  if (lead == 0.0) lead = q.z();
  if (lead < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace psflo
