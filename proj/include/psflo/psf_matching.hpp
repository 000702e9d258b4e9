#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "psflo/config.hpp"
#include "psflo/errors.hpp"
#include "psflo/kdtree.hpp"
#include "psflo/psf.hpp"
#include "psflo/residuals.hpp"
#include "psflo/solver.hpp"

namespace psflo {

// Windowed collection of recent PSF-frames in world coordinates, indexed by
// PSF center for the correspondence search. Frames whose capture origin
// falls outside the window (100 m by default) are evicted.
class PsfSubmap {
 public:
  struct FrameEntry {
    Vec3 origin;
    std::vector<Psf> psfs;  // world frame
  };

  void update(const PsfFrame& frame, const Pose& pose, double window) {
    FrameEntry entry;
    entry.origin = pose.translation;
    entry.psfs.reserve(frame.psfs.size());
    for (const Psf& s : frame.psfs) {
      try {
        entry.psfs.push_back(transform_psf(s, pose));
      } catch (const Error&) {
        // feature through the origin after transform: unrepresentable, drop
      }
    }
    frames_.push_back(std::move(entry));
    while (!frames_.empty() && (frames_.front().origin - pose.translation).norm() > window)
      frames_.pop_front();
    rebuild_index();
  }

  bool empty() const { return flat_.empty(); }
  std::size_t size() const { return flat_.size(); }
  std::size_t frame_count() const { return frames_.size(); }
  const Psf& psf(int index) const { return *flat_[index]; }

  std::vector<int> neighbors_of(const Vec3& center_world, double radius, PsfLabel label) const {
    std::vector<int> out;
    for (const auto& hit : center_tree_.radius(center_world, radius))
      if (flat_[hit.index]->label == label) out.push_back(hit.index);
    return out;
  }

 private:
  void rebuild_index() {
    flat_.clear();
    std::vector<Vec3> centers;
    for (const auto& entry : frames_)
      for (const Psf& s : entry.psfs) {
        flat_.push_back(&s);
        centers.push_back(s.center);
      }
    center_tree_.build(centers);
  }

  std::deque<FrameEntry> frames_;
  std::vector<const Psf*> flat_;
  KdTree3 center_tree_;
};

// Weighted average PSF of a same-label neighbor set: coefficients averaged
// by weight (pole direction renormalized and the point re-projected), weight
// is the plain mean, centers averaged with the same weights for bookkeeping.
inline Psf weighted_average_psf(const std::vector<Psf>& neighbors) {
  if (neighbors.empty()) throw EmptySet("weighted_average_psf: no neighbors");
  const PsfLabel label = neighbors.front().label;
  double weight_sum = 0.0, weight_mean = 0.0;
  Vec3 center = Vec3::Zero();
  for (const Psf& s : neighbors) {
    if (s.label != label) throw EmptySet("weighted_average_psf: mixed labels");
    weight_sum += s.weight;
    weight_mean += s.weight / neighbors.size();
  }
  if (weight_sum <= 0.0) throw EmptySet("weighted_average_psf: zero total weight");

  Psf out;
  out.label = label;
  out.weight = weight_mean;
  if (is_planar(label)) {
    Vec3 c = Vec3::Zero();
    for (const Psf& s : neighbors) {
      c += s.weight * s.plane().coefficients;
      center += s.weight * s.center;
    }
    out.coefficients = PlaneCP{c / weight_sum};
  } else {
    Vec3 p = Vec3::Zero(), d = Vec3::Zero();
    for (const Psf& s : neighbors) {
      p += s.weight * s.line().point;
      d += s.weight * s.line().direction;
      center += s.weight * s.center;
    }
    if (d.norm() < 1e-9) throw DegenerateLine("averaged pole direction vanished");
    out.coefficients = make_line_cpn(p / weight_sum, d);
  }
  out.center = center / weight_sum;
  return out;
}

struct PsfCorrespondence {
  Psf source;            // local frame
  std::vector<Psf> neighbors;  // world frame, same label
  Psf average;           // world frame
};

// Transforms the source into the world by the map-pose estimate and gathers
// same-label submap PSFs whose centers fall within the per-label radius.
// Neighbors must also describe the same surface as the source: averaging a
// wall with a perpendicular wall of the same label would produce a phantom
// plane, so coefficient-inconsistent neighbors are dropped.
inline std::optional<PsfCorrespondence> find_correspondence(const Psf& source, const Pose& map_pose,
                                                            const PsfSubmap& submap,
                                                            const PsfMatchConfig& cfg) {
  if (submap.empty()) return std::nullopt;
  Psf source_world;
  try {
    source_world = transform_psf(source, map_pose);
  } catch (const Error&) {
    return std::nullopt;
  }
  const double radius =
      is_planar(source.label) ? cfg.planar_search_radius : cfg.slim_search_radius;
  const auto idx = submap.neighbors_of(source_world.center, radius, source.label);
  if (idx.empty()) return std::nullopt;

  const double cos_gate = std::cos(cfg.max_normal_angle_deg * M_PI / 180.0);
  auto same_surface = [&](const Psf& other) {
    if (is_planar(source.label)) {
      const Vec3 cs = source_world.plane().coefficients;
      const Vec3 cn = other.plane().coefficients;
      if (cs.norm() <= kEpsPlane || cn.norm() <= kEpsPlane) return false;
      return cs.normalized().dot(cn.normalized()) >= cos_gate &&
             (cs - cn).norm() <= cfg.max_coefficient_distance;
    }
    const LineCPN& ls = source_world.line();
    const LineCPN& ln = other.line();
    return ls.direction.dot(ln.direction) >= cos_gate &&
           (ls.point - ln.point).norm() <= cfg.max_coefficient_distance;
  };

  PsfCorrespondence corr;
  corr.source = source;
  for (int i : idx)
    if (same_surface(submap.psf(i))) corr.neighbors.push_back(submap.psf(i));
  if (corr.neighbors.empty()) return std::nullopt;
  corr.average = weighted_average_psf(corr.neighbors);
  return corr;
}

// Plane-to-plane residual (computed in the local frame): r = w_s^l *
// (c_s^l - T_m^-1 (x) avg_c^w), entered as a 3-vector block.
inline ResidualBlock plane_error(const Psf& source, const Psf& average, const Pose& map_pose,
                                 double gain = 1.0) {
  ResidualBlock block;
  block.kind = ResidualKind::plane_to_plane;
  block.robust = false;
  block.weight = source.weight * gain;
  block.source_plane_cp = source.plane().coefficients;
  block.avg_plane_cp = average.plane().coefficients;
  if (block.source_plane_cp.norm() <= kEpsPlane || block.avg_plane_cp.norm() <= kEpsPlane)
    throw DegeneratePlane("plane_error: CP form undefined");
  Eigen::Vector4d r;
  if (!block.evaluate(map_pose, r)) throw DegeneratePlane("plane_error: undefined at map pose");
  return block;
}

// Line-to-line residual via the CP form: r = w_s^l * (floor(c_s^l) -
// floor(T_m^-1 (x) avg_c^w)), a 4-vector of distance-scaled quaternions with
// the sign aligned to the source.
inline ResidualBlock line_error(const Psf& source, const Psf& average, const Pose& map_pose,
                                double gain = 1.0) {
  ResidualBlock block;
  block.kind = ResidualKind::line_to_line;
  block.robust = false;
  block.weight = source.weight * gain;
  block.source_line_stacked = cpn_to_cp(source.line()).stacked();  // throws DegenerateLine
  block.avg_line = average.line();
  Eigen::Vector4d r;
  if (!block.evaluate(map_pose, r)) throw DegenerateLine("line_error: undefined at map pose");
  return block;
}

// PSF residual blocks for one frame at the current map-pose estimate.
inline std::vector<ResidualBlock> build_psf_residuals(const PsfFrame& frame, const Pose& map_pose,
                                                      const PsfSubmap& submap,
                                                      const PsfMatchConfig& cfg) {
  std::vector<ResidualBlock> blocks;
  if (cfg.psf_gain == 0.0) return blocks;
  for (const Psf& source : frame.psfs) {
    const auto corr = find_correspondence(source, map_pose, submap, cfg);
    if (!corr) continue;
    try {
      if (is_planar(source.label))
        blocks.push_back(plane_error(source, corr->average, map_pose, cfg.psf_gain));
      else
        blocks.push_back(line_error(source, corr->average, map_pose, cfg.psf_gain));
    } catch (const Error&) {
      // degenerate back-transform: drop this correspondence
    }
  }
  return blocks;
}

// Joint map-pose refinement: GeF and PSF residual stacks re-established
// each outer iteration; degeneracy returns the initial pose flagged.
inline SolveResult solve_map_pose(
    const std::function<std::vector<ResidualBlock>(const Pose&)>& gef_blocks,
    const std::function<std::vector<ResidualBlock>(const Pose&)>& psf_blocks, const Pose& init,
    const SolverConfig& cfg) {
  return solve_pose_lm(
      init,
      [&](const Pose& pose) {
        std::vector<ResidualBlock> blocks = gef_blocks(pose);
        std::vector<ResidualBlock> psf = psf_blocks(pose);
        blocks.insert(blocks.end(), psf.begin(), psf.end());
        return blocks;
      },
      cfg);
}

}  // namespace psflo
