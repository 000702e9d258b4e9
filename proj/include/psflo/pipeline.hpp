#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/gef.hpp"
#include "psflo/gef_matching.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/psf_extraction.hpp"
#include "psflo/psf_matching.hpp"
#include "psflo/tracking.hpp"

namespace psflo {

struct FrameResult {
  int frame_index = 0;
  Pose odom_pose;        // T_o: frame-to-frame estimate
  Pose map_pose;         // T_m: frame-to-submap refinement
  Pose integrated_pose;  // T_t: the output trajectory
  int gef_corners = 0, gef_surfaces = 0;
  int psf_road = 0, psf_building = 0, psf_sign = 0, psf_pole = 0;
  int tracks = 0, static_instances = 0, dynamic_instances = 0;
  bool odom_diverged = false;
  bool odom_degenerate = false;
  bool map_degenerate = false;
  bool used_fallback = false;  // constant-velocity output
  double ms_extract = 0.0, ms_classify = 0.0, ms_odom = 0.0, ms_map = 0.0;
};

// Constant-velocity prediction from the pose history.
inline Pose predict_pose(const std::vector<Pose>& history) {
  if (history.empty()) return Pose::identity();
  if (history.size() < 2) return history.back();
  const Pose& prev = history[history.size() - 2];
  const Pose& last = history.back();
  return last * (prev.inverse() * last);
}

// Integration rule: the map pose when refinement succeeded, otherwise the
// last map pose composed with the odometry increments accumulated since.
inline Pose integrate_pose(const std::optional<Pose>& map_pose, const Pose& last_map_pose,
                           const Pose& odom_since_map) {
  return map_pose ? *map_pose : last_map_pose * odom_since_map;
}

// Sequential PSF-LO driver: semantic partition in, trajectory out. The
// world frame is anchored at the first frame.
class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& cfg) : cfg_(cfg), tracker_(cfg.classifier) {
    cfg_.psf.seed = cfg_.seed;
  }

  FrameResult process_frame(SemanticCloud sem) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
      return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    FrameResult result;
    result.frame_index = sem.cloud.frame_index;
    if (sem.cloud.ring.size() != sem.cloud.size())
      reconstruct_rings(sem.cloud, cfg_.sensor.rings, cfg_.sensor.elevation_min_deg,
                        cfg_.sensor.elevation_max_deg);

    // ---- extraction ----
    auto t0 = clock::now();
    const GefSets gefs = extract_gefs(sem, cfg_.gef);
    const PsfFrame psf_frame = extract_frame(sem, cfg_.psf);
    result.gef_corners = static_cast<int>(gefs.corners.size());
    result.gef_surfaces = static_cast<int>(gefs.surfaces.size());
    for (const Psf& s : psf_frame.psfs) {
      if (s.label == PsfLabel::road) ++result.psf_road;
      if (s.label == PsfLabel::building) ++result.psf_building;
      if (s.label == PsfLabel::sign) ++result.psf_sign;
      if (s.label == PsfLabel::pole) ++result.psf_pole;
    }
    result.ms_extract = ms_since(t0);

    // ---- frame-to-frame odometry ----
    t0 = clock::now();
    const bool first = poses_.empty();
    Pose odom_pose;  // T_o for this frame
    Pose increment = Pose::identity();
    if (first) {
      odom_pose = Pose::identity();
    } else {
      const Pose predicted = predict_pose(poses_);
      increment = poses_.back().inverse() * predicted;
      try {
        increment = match_frame_to_frame(prev_gefs_, gefs, increment, cfg_.gef, cfg_.solver,
                                         &result.odom_degenerate);
      } catch (const Diverged&) {
        result.odom_diverged = true;  // keep the constant-velocity increment
      }
      odom_pose = poses_.back() * increment;
      odom_pose.normalize();
    }
    result.odom_pose = odom_pose;
    result.ms_odom = ms_since(t0);

    // ---- object classification (world frame via the predictive pose) ----
    t0 = clock::now();
    std::vector<ObjectInstance> detections;
    std::vector<ObjectMotion> labels;
    if (cfg_.classify_objects) {
      detections = cluster_objects(sem, odom_pose, cfg_.classifier);
      labels = tracker_.step(detections, frame_dt_, result.frame_index);
    }
    std::vector<Gef> static_world_points;   // surface features for the submap
    GefSets matching_gefs = gefs;           // static objects join the surfaces
    std::unordered_set<std::int64_t> voxels;
    const double inv_voxel = 1.0 / cfg_.gef.voxel_surface;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (labels[d] == ObjectMotion::Static) {
        ++result.static_instances;
        for (std::size_t k = 0; k < detections[d].world_points.size(); ++k) {
          const Vec3& w = detections[d].world_points[k];
          const std::int64_t key =
              detail::voxel_key(static_cast<int>(std::floor(w.x() * inv_voxel)),
                                static_cast<int>(std::floor(w.y() * inv_voxel)),
                                static_cast<int>(std::floor(w.z() * inv_voxel)));
          if (!voxels.insert(key).second) continue;
          static_world_points.push_back(
              Gef{w, 0.0, detections[d].class_id, Role::object, 1.0});
          matching_gefs.surfaces.push_back(Gef{detections[d].local_points[k], 0.0,
                                               detections[d].class_id, Role::object, 1.0});
        }
      } else {
        ++result.dynamic_instances;
      }
    }
    result.tracks = static_cast<int>(tracker_.tracks().size());
    result.ms_classify = ms_since(t0);

    // ---- frame-to-submap refinement ----
    t0 = clock::now();
    std::optional<Pose> map_pose;
    if (first) {
      map_pose = Pose::identity();
    } else {
      odom_since_map_ = odom_since_map_ * increment;
      const bool refine = result.frame_index % std::max(1, cfg_.refine_every_n) == 0 &&
                          !gef_submap_.surfaces.features.empty();
      if (refine) {
        const SolveResult solved = solve_map_pose(
            [&](const Pose& pose) {
              return build_gef_residuals(matching_gefs, gef_submap_, pose, cfg_.gef);
            },
            [&](const Pose& pose) {
              return build_psf_residuals(psf_frame, pose, psf_submap_, cfg_.psf_match);
            },
            odom_pose, cfg_.solver);
        if (solved.degenerate)
          result.map_degenerate = true;
        else
          map_pose = solved.pose;
      }
    }

    Pose integrated;
    const bool odom_ok = !result.odom_diverged && !result.odom_degenerate;
    if (first) {
      integrated = Pose::identity();
      last_map_pose_ = integrated;
      odom_since_map_ = Pose::identity();
    } else if (map_pose || odom_ok) {
      integrated = integrate_pose(map_pose, last_map_pose_, odom_since_map_);
      if (map_pose) {
        last_map_pose_ = *map_pose;
        odom_since_map_ = Pose::identity();
      }
    } else {
      // no map refinement and no odometry: constant-velocity output
      integrated = predict_pose(poses_);
      result.used_fallback = true;
      last_map_pose_ = integrated;
      odom_since_map_ = Pose::identity();
    }
    integrated.normalize();
    result.map_pose = map_pose.value_or(integrated);
    result.integrated_pose = integrated;

    // ---- submap updates at the integrated pose ----
    update_submap(gef_submap_, gefs, static_world_points, integrated, cfg_.gef);
    psf_submap_.update(psf_frame, integrated, cfg_.psf_match.submap_window);
    result.ms_map = ms_since(t0);

    poses_.push_back(integrated);
    prev_gefs_ = gefs;
    return result;
  }

  const std::vector<Pose>& trajectory() const { return poses_; }
  const Tracker& tracker() const { return tracker_; }
  void set_frame_dt(double dt) { frame_dt_ = dt; }

 private:
  PipelineConfig cfg_;
  double frame_dt_ = 0.1;
  GefSets prev_gefs_;
  GefSubmap gef_submap_;
  PsfSubmap psf_submap_;
  Tracker tracker_;
  std::vector<Pose> poses_;
  Pose last_map_pose_;
  Pose odom_since_map_;
};

}  // namespace psflo
