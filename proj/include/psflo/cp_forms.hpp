#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "psflo/errors.hpp"
#include "psflo/se3.hpp"

namespace psflo {

// CP forms are singular for features through the origin; inputs that close
// to the sensor are rejected at extraction time, so hitting these limits
// later signals a bug upstream.
inline constexpr double kEpsPlane = 1e-6;
inline constexpr double kEpsLine = 1e-6;

// Plane as its closest point to the origin: coefficients = d * n with d the
// origin distance and n the unit normal pointing from origin to plane.
struct PlaneCP {
  Vec3 coefficients = Vec3::Zero();

  double distance() const {
    const double d = coefficients.norm();
    if (d <= kEpsPlane) throw DegeneratePlane("plane passes through the origin");
    return d;
  }
  Vec3 normal() const { return coefficients / distance(); }
};

// 3D line as (closest point to origin, unit direction with non-negative z).
struct LineCPN {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

// 3D line as scalar origin distance plus a unit quaternion encoding the
// frame [ (n x p)/|n x p|, n, p/|p| ].
struct LineCP {
  double distance = 0.0;
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  // d * q stacked as (w, x, y, z) * d; the residual vector used in matching.
  Eigen::Vector4d stacked() const {
    return distance * Eigen::Vector4d(orientation.w(), orientation.x(),
                                      orientation.y(), orientation.z());
  }
};

inline Vec3 canonical_line_direction(Vec3 dir) {
  dir.normalize();
  bool flip = dir.z() < 0.0;
  if (dir.z() == 0.0) {
    if (dir.x() != 0.0)
      flip = dir.x() < 0.0;
    else
      flip = dir.y() < 0.0;
  }
  return flip ? Vec3(-dir) : dir;
}

// Builds a valid CP-N line through `point_on_line`: the stored point is the
// closest point of the line to the origin and the direction is canonical.
inline LineCPN make_line_cpn(const Vec3& point_on_line, const Vec3& direction) {
  LineCPN l;
  l.direction = canonical_line_direction(direction);
  l.point = point_on_line - point_on_line.dot(l.direction) * l.direction;
  return l;
}

inline PlaneCP transform_plane_cp(const PlaneCP& plane, const Pose& pose) {
  const double d = plane.distance();  // throws DegeneratePlane near origin
  const Vec3 n = plane.coefficients / d;
  const Vec3 n_out = pose.rotation * n;
  const double d_out = d + pose.translation.dot(n_out);
  // d_out may be negative when the origin crosses the plane; d*n is still
  // the closest-point vector of the transformed plane.
  return PlaneCP{d_out * n_out};
}

inline LineCPN transform_line_cpn(const LineCPN& line, const Pose& pose) {
  return make_line_cpn(pose.apply(line.point), pose.rotation * line.direction);
}

// CP-N -> CP conversion:
//   p0 = n + p, p1 = -n + p
//   n0 = p0 x p1, n1 = n0 x n
//   R = [ n0/|n0|, n, n1/|n1| ],  d = |p0 x p1| / |p0 - p1|
inline LineCP cpn_to_cp(const LineCPN& line) {
  const Vec3 p0 = line.direction + line.point;
  const Vec3 p1 = -line.direction + line.point;
  const Vec3 n0 = p0.cross(p1);
  if (n0.norm() <= 2.0 * kEpsLine) throw DegenerateLine("line passes through the origin");
  const Vec3 n1 = n0.cross(line.direction);

  Mat3 rot;
  rot.col(0) = n0.normalized();
  rot.col(1) = line.direction;
  rot.col(2) = n1.normalized();
  if ((rot * rot.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw DegenerateLine("CP frame is not orthonormal (invalid CP-N input)");

  LineCP out;
  out.distance = n0.norm() / (p0 - p1).norm();
  out.orientation = canonical_quaternion(Eigen::Quaterniond(rot));
  return out;
}

}  // namespace psflo
