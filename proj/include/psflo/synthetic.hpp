#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "psflo/point_cloud.hpp"
#include "psflo/se3.hpp"

namespace psflo {

// Analytic world for desk-scale experiments: ground plane, rectangles
// (walls, signs), cylinders (poles) and moving/static boxes, ray-cast from a
// spinning-lidar sensor model with exact per-point labels.
struct SyntheticScene {
  struct Rect {
    Vec3 origin;  // one corner
    Vec3 edge_u, edge_v;  // spanning edges (not necessarily unit)
    std::uint16_t class_id = 50;
  };
  struct Cylinder {
    Vec3 base;
    double height = 4.0, radius = 0.15;
    std::uint16_t class_id = 80;
  };
  struct Box {
    Vec3 base_center;  // bottom face center at t = 0
    Vec3 size;         // x, y, z extents
    Vec3 velocity = Vec3::Zero();
    std::uint16_t class_id = 10;
    std::uint16_t instance_id = 1;
  };

  double road_half_width = 6.0;  // |y| beyond this on the ground is terrain
  std::vector<Rect> rects;
  std::vector<Cylinder> cylinders;
  std::vector<Box> boxes;

  // sensor model
  int rings = 64;
  double elevation_min_deg = -24.0;
  double elevation_max_deg = 2.0;
  double azimuth_step_deg = 0.35;
  double range_noise = 0.02;
  double max_range = 80.0;

  std::vector<Pose> trajectory;  // sensor pose per frame (world frame)
  double frame_dt = 0.1;
  std::uint64_t seed = 1;
};

namespace detail {

struct RayHit {
  double range = std::numeric_limits<double>::infinity();
  std::uint16_t class_id = 0;
  std::uint16_t instance_id = 0;
};

inline void hit_rect(const Vec3& origin, const Vec3& dir, const Vec3& corner, const Vec3& eu,
                     const Vec3& ev, std::uint16_t cls, std::uint16_t inst, RayHit& best) {
  const Vec3 normal = eu.cross(ev);
  const double denom = normal.dot(dir);
  if (std::abs(denom) < 1e-12) return;
  const double t = normal.dot(corner - origin) / denom;
  if (t <= 0.05 || t >= best.range) return;
  const Vec3 p = origin + t * dir - corner;
  const double uu = eu.squaredNorm(), vv = ev.squaredNorm();
  const double u = p.dot(eu) / uu, v = p.dot(ev) / vv;
  if (u < 0 || u > 1 || v < 0 || v > 1) return;
  best = {t, cls, inst};
}

inline void hit_cylinder(const Vec3& origin, const Vec3& dir, const SyntheticScene::Cylinder& cyl,
                         RayHit& best) {
  // infinite vertical cylinder, then height test
  const double ox = origin.x() - cyl.base.x(), oy = origin.y() - cyl.base.y();
  const double a = dir.x() * dir.x() + dir.y() * dir.y();
  if (a < 1e-12) return;
  const double b = 2.0 * (ox * dir.x() + oy * dir.y());
  const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  if (t <= 0.05 || t >= best.range) return;
  const double z = origin.z() + t * dir.z();
  if (z < cyl.base.z() || z > cyl.base.z() + cyl.height) return;
  best = {t, cyl.class_id, 0};
}

}  // namespace detail

struct SyntheticFrame {
  SemanticCloud cloud;   // local (sensor) frame, ring ids set
  Pose pose;             // ground-truth sensor pose
  // ground truth per instance id: true if the box moves
  std::map<std::uint16_t, bool> instance_moving;
};

inline SyntheticFrame generate_scene(const SyntheticScene& scene, int frame_index) {
  SyntheticFrame out;
  out.pose = scene.trajectory.at(frame_index);
  out.cloud.cloud.frame_index = frame_index;
  out.cloud.cloud.timestamp = frame_index * scene.frame_dt;

  const double t_now = frame_index * scene.frame_dt;
  std::vector<SyntheticScene::Rect> box_rects;
  std::vector<std::uint16_t> box_rect_instance;
  for (const auto& box : scene.boxes) {
    out.instance_moving[box.instance_id] = box.velocity.norm() > 1e-9;
    const Vec3 center = box.base_center + t_now * box.velocity;
    const Vec3 h(0.5 * box.size.x(), 0.5 * box.size.y(), 0.0);
    const Vec3 up(0, 0, box.size.z());
    auto add = [&](const Vec3& corner, const Vec3& eu, const Vec3& ev) {
      box_rects.push_back({corner, eu, ev, box.class_id});
      box_rect_instance.push_back(box.instance_id);
    };
    const Vec3 c00 = center - h, c10 = center + Vec3(h.x(), -h.y(), 0),
               c01 = center + Vec3(-h.x(), h.y(), 0), c11 = center + h;
    add(c00, c10 - c00, up);   // -y face
    add(c01, c11 - c01, up);   // +y face
    add(c00, c01 - c00, up);   // -x face
    add(c10, c11 - c10, up);   // +x face
    add(c00 + up, c10 - c00, c01 - c00);  // top
  }

  std::mt19937_64 rng(scene.seed ^ (0x9e3779b97f4a7c15ull * (frame_index + 1)));
  std::normal_distribution<double> noise(0.0, scene.range_noise);

  const Vec3 origin = out.pose.translation;
  const int n_azimuth = static_cast<int>(std::round(360.0 / scene.azimuth_step_deg));
  for (int k = 0; k < scene.rings; ++k) {
    const double elevation_deg =
        scene.elevation_min_deg +
        (k + 0.5) * (scene.elevation_max_deg - scene.elevation_min_deg) / scene.rings;
    const double el = elevation_deg * M_PI / 180.0;
    for (int a = 0; a < n_azimuth; ++a) {
      const double az = a * scene.azimuth_step_deg * M_PI / 180.0;
      const Vec3 local_dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                           std::sin(el));
      const Vec3 dir = out.pose.rotation * local_dir;

      detail::RayHit best;
      best.range = scene.max_range;
      bool hit_anything = false;

      // ground plane z = 0
      if (dir.z() < -1e-9) {
        const double t = -origin.z() / dir.z();
        if (t > 0.05 && t < best.range) {
          const Vec3 p = origin + t * dir;
          best = {t, std::abs(p.y()) <= scene.road_half_width ? std::uint16_t(40)
                                                              : std::uint16_t(72),
                  0};
          hit_anything = true;
        }
      }
      for (const auto& rect : scene.rects) {
        const double before = best.range;
        detail::hit_rect(origin, dir, rect.origin, rect.edge_u, rect.edge_v, rect.class_id, 0,
                         best);
        hit_anything |= best.range < before;
      }
      for (std::size_t b = 0; b < box_rects.size(); ++b) {
        const double before = best.range;
        detail::hit_rect(origin, dir, box_rects[b].origin, box_rects[b].edge_u,
                         box_rects[b].edge_v, box_rects[b].class_id, box_rect_instance[b], best);
        hit_anything |= best.range < before;
      }
      for (const auto& cyl : scene.cylinders) {
        const double before = best.range;
        detail::hit_cylinder(origin, dir, cyl, best);
        hit_anything |= best.range < before;
      }
      if (!hit_anything || best.range >= scene.max_range) continue;

      const double noisy_range = std::max(best.range + noise(rng), 0.1);
      out.cloud.cloud.points.push_back(noisy_range * local_dir);
      out.cloud.cloud.intensity.push_back(0.5f);
      out.cloud.cloud.ring.push_back(k);
      out.cloud.class_id.push_back(best.class_id);
      out.cloud.instance_id.push_back(best.instance_id);
    }
  }

  const TaxonomyMap tax = TaxonomyMap::semantic_kitti();
  out.cloud.role.resize(out.cloud.class_id.size());
  for (std::size_t i = 0; i < out.cloud.class_id.size(); ++i)
    out.cloud.role[i] = tax.role_of(out.cloud.class_id[i]);
  return out;
}

// Straight corridor: road, segmented walls on both sides, poles and signs,
// plus a parked and a slowly crossing box. `length` meters of forward travel
// split over `frames` frames.
inline SyntheticScene make_corridor_scene(int frames, double length, std::uint64_t seed,
                                          double range_noise = 0.02) {
  SyntheticScene scene;
  scene.seed = seed;
  scene.range_noise = range_noise;

  const double extent = length + 40.0;
  // segmented walls with 2 m gaps so the corridor constrains forward motion
  for (double y : {-8.0, 8.0}) {
    for (double x0 = -20.0; x0 < extent; x0 += 17.0) {
      scene.rects.push_back({Vec3(x0, y, 0.0), Vec3(15.0, 0, 0), Vec3(0, 0, 5.0), 50});
      // short return wall at the segment end, perpendicular to the corridor
      scene.rects.push_back(
          {Vec3(x0 + 15.0, y, 0.0), Vec3(0, y > 0 ? 1.5 : -1.5, 0), Vec3(0, 0, 5.0), 50});
    }
  }
  for (double x0 = -12.0; x0 < extent; x0 += 12.0) {
    scene.cylinders.push_back({Vec3(x0, -6.5, 0.0), 5.0, 0.15, 80});
    scene.cylinders.push_back({Vec3(x0 + 6.0, 6.5, 0.0), 5.0, 0.15, 80});
  }
  for (double x0 = -10.0; x0 < extent; x0 += 21.0) {
    scene.rects.push_back({Vec3(x0, -5.8, 2.0), Vec3(0.9, 0.2, 0), Vec3(0, 0, 0.9), 81});
    scene.rects.push_back({Vec3(x0 + 10.0, 5.8, 2.2), Vec3(0.9, -0.2, 0), Vec3(0, 0, 0.9), 81});
  }
  // a parked car and a slow mover drifting along the corridor
  scene.boxes.push_back({Vec3(15.0, 4.0, 0.0), Vec3(4.0, 1.8, 1.5), Vec3::Zero(), 10, 1});
  scene.boxes.push_back({Vec3(30.0, -4.0, 0.0), Vec3(3.5, 1.8, 1.6), Vec3(1.0, 0.0, 0.0), 252, 2});

  scene.trajectory.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    Pose pose;
    pose.translation = Vec3(length * f / std::max(1, frames - 1), 0.0, 1.73);
    scene.trajectory.push_back(pose);
  }
  return scene;
}

}  // namespace psflo
