#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "psflo/clustering.hpp"
#include "psflo/config.hpp"
#include "psflo/hmm.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/velocity.hpp"

namespace psflo {

// One clustered object observation. Points are kept in the world frame for
// association/velocity and in the local (sensor) frame for polar binning.
struct ObjectInstance {
  std::vector<Vec3> world_points;
  std::vector<Vec3> local_points;
  std::vector<int> rings;
  std::vector<int> source_indices;  // indices into the frame's cloud (for labeling)
  Vec3 centroid = Vec3::Zero();     // world frame
  int frame_index = 0;
  std::uint16_t class_id = 0;
};

inline std::vector<ObjectInstance> cluster_objects(const SemanticCloud& sem,
                                                   const Pose& world_pose,
                                                   const ClassifierConfig& cfg) {
  std::vector<int> object_idx = sem.indices_with_role(Role::object);
  std::vector<Vec3> local;
  local.reserve(object_idx.size());
  for (int i : object_idx) local.push_back(sem.cloud.points[i]);

  std::vector<ObjectInstance> instances;
  for (const auto& cluster :
       euclidean_clusters(local, cfg.object_cluster_tolerance, cfg.object_cluster_min_points)) {
    ObjectInstance inst;
    inst.frame_index = sem.cloud.frame_index;
    std::map<std::uint16_t, int> class_votes;
    for (int k : cluster) {
      const int i = object_idx[k];
      inst.local_points.push_back(sem.cloud.points[i]);
      inst.world_points.push_back(world_pose.apply(sem.cloud.points[i]));
      inst.rings.push_back(sem.cloud.ring.empty() ? 0 : sem.cloud.ring[i]);
      inst.source_indices.push_back(i);
      ++class_votes[sem.class_id[i]];
    }
    for (const Vec3& p : inst.world_points) inst.centroid += p;
    inst.centroid /= static_cast<double>(inst.world_points.size());
    int best = -1;
    for (const auto& [cls, votes] : class_votes)
      if (votes > best) {
        best = votes;
        inst.class_id = cls;
      }
    instances.push_back(std::move(inst));
  }
  return instances;
}

struct Assignments {
  std::vector<std::pair<int, int>> matches;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

// Globally greedy data association on centroid distance: closest pair
// first, each side used at most once, gated at `gate`.
inline Assignments associate(const std::vector<Vec3>& track_centroids,
                             const std::vector<Vec3>& detection_centroids, double gate) {
  struct Pair {
    double dist;
    int track, detection;
  };
  std::vector<Pair> pairs;
  for (int t = 0; t < static_cast<int>(track_centroids.size()); ++t)
    for (int d = 0; d < static_cast<int>(detection_centroids.size()); ++d) {
      const double dist = (track_centroids[t] - detection_centroids[d]).norm();
      if (dist <= gate) pairs.push_back({dist, t, d});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.track != b.track) return a.track < b.track;
    return a.detection < b.detection;
  });

  Assignments out;
  std::vector<bool> track_used(track_centroids.size(), false);
  std::vector<bool> det_used(detection_centroids.size(), false);
  for (const Pair& p : pairs) {
    if (track_used[p.track] || det_used[p.detection]) continue;
    track_used[p.track] = det_used[p.detection] = true;
    out.matches.emplace_back(p.track, p.detection);
  }
  for (int t = 0; t < static_cast<int>(track_used.size()); ++t)
    if (!track_used[t]) out.unmatched_tracks.push_back(t);
  for (int d = 0; d < static_cast<int>(det_used.size()); ++d)
    if (!det_used[d]) out.unmatched_detections.push_back(d);
  return out;
}

inline double sigmoid_ab(double x, double a, double b) {
  return 1.0 / (1.0 + std::exp(a * (b - x)));
}

// p_u = Sig_u(||Cov(f)||), spectral norm; 0 good, 1 bad.
inline double velocity_uncertainty(const VelocityDensity& f, const ClassifierConfig& cfg) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(f.covariance);
  const double spectral = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  return sigmoid_ab(spectral, cfg.sig_u_a, cfg.sig_u_b);
}

// p_s(v) = Sig_v(f(0) / max_v f(v)).
inline double static_score_velocity(const VelocityDensity& f, const ClassifierConfig& cfg) {
  return sigmoid_ab(f.at_zero() / f.max_value(), cfg.sig_v_a, cfg.sig_v_b);
}

// circular-statistics dispersion: h = sqrt(-ln(Cbar^2 + Sbar^2)), clamped
inline double heading_variance(const std::vector<double>& headings, double h_max) {
  if (headings.empty()) return h_max;
  double c = 0.0, s = 0.0;
  for (double theta : headings) {
    c += std::cos(theta);
    s += std::sin(theta);
  }
  c /= headings.size();
  s /= headings.size();
  const double r_sq = c * c + s * s;
  if (r_sq < std::exp(-h_max * h_max)) return h_max;
  return std::sqrt(-std::log(std::min(r_sq, 1.0)));
}

// p_s(h) = N_s(h) / (N_d(h) + N_s(h)).
inline double static_score_heading(double h_sigma, const ClassifierConfig& cfg) {
  auto normal_pdf = [](double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  };
  const double ns = normal_pdf(h_sigma, cfg.ns_mu, cfg.ns_sigma);
  const double nd = normal_pdf(h_sigma, cfg.nd_mu, cfg.nd_sigma);
  return ns / (nd + ns);
}

// odds(p_s) = odds(p_s(h)) + p_u * odds(p_s(v)), odds(p) = log(p/(1-p)).
inline StateMeasurement fuse_scores(double p_s_h, double p_s_v, double p_u,
                                    const ClassifierConfig& cfg) {
  auto clamp = [&](double p) { return std::clamp(p, cfg.odds_clamp, 1.0 - cfg.odds_clamp); };
  auto odds = [](double p) { return std::log(p / (1.0 - p)); };
  const double gate = cfg.invert_uncertainty_gate ? 1.0 - p_u : p_u;
  const double fused = odds(clamp(p_s_h)) + gate * odds(clamp(p_s_v));
  StateMeasurement m;
  m.p_static = 1.0 / (1.0 + std::exp(-fused));
  m.p_dynamic = 1.0 - m.p_static;
  m.p_uncertain = p_u;
  return m;
}

struct TrackState {
  int id = 0;
  int missed = 0;
  Vec3 centroid = Vec3::Zero();  // last world centroid
  std::vector<int> frames;       // observed frame indices, strictly increasing
  std::vector<std::vector<int>> source_indices;  // per observation
  std::vector<StateMeasurement> measurements;    // one per observation after the first
  std::vector<ObjectMotion> decoded;             // same length as measurements
  ObjectMotion current_label = ObjectMotion::Dynamic;

  // working state carried between frames
  std::vector<Vec3> last_sampled_world;
  std::vector<double> last_headings;

  int length() const { return static_cast<int>(frames.size()); }
};

// Offline per-frame labels for a finished track: short tracks are dynamic
// regardless of the decode; otherwise the Viterbi path over the
// measurements, with the first observation inheriting the first decoded
// state.
inline std::vector<ObjectMotion> classify_track(const TrackState& track,
                                                const ClassifierConfig& cfg) {
  const int n = track.length();
  if (n < cfg.short_track_length || track.measurements.empty())
    return std::vector<ObjectMotion>(n, ObjectMotion::Dynamic);
  const auto path = viterbi_decode(track.measurements, cfg);
  std::vector<ObjectMotion> labels(n);
  labels[0] = path.front();
  for (int i = 1; i < n; ++i) labels[i] = path[static_cast<std::size_t>(i) - 1];
  return labels;
}

// Tracking-by-detection with instance-level dynamic/static classification.
class Tracker {
 public:
  explicit Tracker(const ClassifierConfig& cfg) : cfg_(cfg) {}

  // Detections must be in the world frame. Returns per-detection labels.
  std::vector<ObjectMotion> step(const std::vector<ObjectInstance>& detections, double dt,
                                 int frame_index) {
    std::vector<Vec3> track_centroids, det_centroids;
    for (const TrackState& t : tracks_) track_centroids.push_back(t.centroid);
    for (const ObjectInstance& d : detections) det_centroids.push_back(d.centroid);
    const Assignments assignment =
        associate(track_centroids, det_centroids, cfg_.association_gate);

    std::vector<ObjectMotion> labels(detections.size(), ObjectMotion::Dynamic);

    for (const auto& [t, d] : assignment.matches) {
      observe(tracks_[t], detections[d], dt, frame_index);
      labels[d] = tracks_[t].current_label;
    }
    for (int d : assignment.unmatched_detections) {
      TrackState track;
      track.id = next_id_++;
      observe(track, detections[d], dt, frame_index);
      tracks_.push_back(std::move(track));
      labels[d] = tracks_.back().current_label;
    }

    std::vector<TrackState> alive;
    std::vector<bool> matched(tracks_.size(), false);
    for (const auto& [t, d] : assignment.matches) matched[t] = true;
    for (std::size_t t = 0; t < tracks_.size(); ++t) {
      // freshly spawned tracks sit past the original track list
      if (t >= matched.size() || matched[t] || tracks_[t].frames.back() == frame_index) {
        tracks_[t].missed = 0;
        alive.push_back(std::move(tracks_[t]));
      } else if (++tracks_[t].missed <= cfg_.max_missed_frames) {
        alive.push_back(std::move(tracks_[t]));
      } else {
        retired_.push_back(std::move(tracks_[t]));
      }
    }
    tracks_ = std::move(alive);
    return labels;
  }

  const std::vector<TrackState>& tracks() const { return tracks_; }
  const std::vector<TrackState>& retired() const { return retired_; }

  // all tracks, finished and active, for offline evaluation
  std::vector<TrackState> all_tracks() const {
    std::vector<TrackState> out = retired_;
    out.insert(out.end(), tracks_.begin(), tracks_.end());
    std::sort(out.begin(), out.end(),
              [](const TrackState& a, const TrackState& b) { return a.id < b.id; });
    return out;
  }

 private:
  void observe(TrackState& track, const ObjectInstance& detection, double dt, int frame_index) {
    const bool first = track.frames.empty();
    if (!first) dt *= std::max(1, frame_index - track.frames.back());  // missed-frame gap
    track.frames.push_back(frame_index);
    track.source_indices.push_back(detection.source_indices);
    track.centroid = detection.centroid;

    const auto kept = sample_vertical_points(detection.local_points, detection.rings, cfg_);
    std::vector<Vec3> sampled_world;
    sampled_world.reserve(kept.size());
    for (int i : kept) sampled_world.push_back(detection.world_points[i]);

    if (!first) {
      StateMeasurement m;
      std::vector<double> headings_now;
      try {
        if (track.last_sampled_world.empty() || sampled_world.empty())
          throw EmptyAfterSampling("no vertical points");
        const VelocityDensity f = estimate_velocity(track.last_sampled_world, sampled_world, dt, cfg_);
        const double p_u = velocity_uncertainty(f, cfg_);
        const double p_s_v = static_score_velocity(f, cfg_);
        headings_now = f.top_k_headings(cfg_.top_k);
        std::vector<double> pooled = track.last_headings;
        pooled.insert(pooled.end(), headings_now.begin(), headings_now.end());
        const double h_sigma = heading_variance(pooled, cfg_.heading_variance_max);
        const double p_s_h = static_score_heading(h_sigma, cfg_);
        m = fuse_scores(p_s_h, p_s_v, p_u, cfg_);
        m.heading_variance = h_sigma;
      } catch (const EmptyAfterSampling&) {
        m = fuse_scores(0.5, 0.5, 1.0, cfg_);  // neutral evidence, bad quality
      }
      track.measurements.push_back(m);
      track.decoded = viterbi_decode(track.measurements, cfg_);
      track.last_headings = std::move(headings_now);
    }
    track.last_sampled_world = std::move(sampled_world);

    if (track.length() < cfg_.short_track_length)
      track.current_label = ObjectMotion::Dynamic;
    else
      track.current_label = track.decoded.empty() ? ObjectMotion::Dynamic : track.decoded.back();
  }

  ClassifierConfig cfg_;
  std::vector<TrackState> tracks_;
  std::vector<TrackState> retired_;
  int next_id_ = 0;
};

}  // namespace psflo
