#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "psflo/errors.hpp"

namespace psflo {

// Flat "key = value" config file; '#' starts a comment.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    ConfigMap map;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw MalformedFile("config line " + std::to_string(line_no) + ": expected key = value");
      }
      map.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return map;
  }

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::istringstream ss(it->second);
    T out;
    if constexpr (std::is_same_v<T, bool>) {
      std::string s = it->second;
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw MalformedFile("config key '" + key + "': expected bool, got '" + s + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return it->second;
    } else {
      if (!(ss >> out))
        throw MalformedFile("config key '" + key + "': cannot parse '" + it->second + "'");
      return out;
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, std::string> values_;
};

struct RansacConfig {
  double plane_inlier_threshold = 0.10;  // meters
  double line_inlier_threshold = 0.15;
  int iterations = 100;
  int min_fit_points = 10;
  double min_inlier_ratio = 0.3;  // w_min: best model below this -> NoModel
};

struct PsfExtractionConfig {
  RansacConfig ransac;
  // Road grid coarsens with range: cell size per range band.
  std::vector<std::pair<double, double>> road_bands = {{30.0, 10.0}, {60.0, 20.0}, {1e9, 40.0}};
  double building_cell = 20.0;
  double building_rotation = M_PI / 4.0;
  double cluster_tolerance = 0.5;  // d_cluster
  int cluster_min_points = 10;     // n_cluster
  int multiplane_stop = 20;        // n_stop: stop when fewer points remain
  std::uint64_t seed = 1;
};

struct GefConfig {
  int curvature_window = 5;
  int sectors_per_ring = 6;
  int max_corners_per_sector = 4;
  int max_surfaces_per_sector = 8;
  double corner_curvature_min = 0.1;  // squared window-sum norm
  double surface_curvature_max = 0.05;
  double occlusion_gap = 0.5;  // adjacent-point range jump marking occlusion edges
  int knn = 5;
  double plane_cond_max = 0.1;  // lambda_min/lambda_mid must be below this
  double line_cond_min = 3.0;   // lambda_max/lambda_mid must exceed this
  double neighbor_fit_tolerance = 0.2;  // every KNN neighbor within this of the fit
  double max_correspondence_dist = 1.5;
  double voxel_corner = 0.2;
  double voxel_surface = 0.4;
  double submap_radius = 120.0;
};

struct SolverConfig {
  int max_iterations = 20;
  double rotation_tolerance = 1e-4;   // radians
  double translation_tolerance = 1e-3;  // meters
  double huber_delta = 0.1;
  double condition_max = 1e8;
  double diverged_mean_residual = 1.0;
  double lm_lambda_init = 1e-4;
  double lm_lambda_scale = 10.0;
};

struct PsfMatchConfig {
  double planar_search_radius = 3.0;  // road/building
  double slim_search_radius = 1.5;    // sign/pole
  double psf_gain = 1.0;              // lambda_psf; 0 disables PSF residuals
  double submap_window = 100.0;       // meters; frames beyond this are evicted
  // same-surface gate: neighbors whose coefficients disagree with the
  // (transformed) source are not averaged
  double max_normal_angle_deg = 30.0;
  double max_coefficient_distance = 1.0;  // meters, CP-vector / closest-point gap
};

struct ClassifierConfig {
  // vertical plane point sampling
  double sample_dtheta_deg = 0.5;
  double sample_dd = 0.025;
  int sample_r = 1;
  int sample_n_v = 2;
  // velocity density grid
  double velocity_max = 15.0;
  double velocity_resolution = 0.25;
  double match_sigma = 0.3;
  int max_sample_points = 256;
  // sigmoids and heading Gaussians
  double sig_u_a = 2.0, sig_u_b = 1.0;
  double sig_v_a = 100.0, sig_v_b = 0.05;
  double ns_mu = 2.06, ns_sigma = 0.35;
  double nd_mu = 0.05, nd_sigma = 0.53;
  int top_k = 5;
  // HMM transition matrix, rows = from state, columns = (static, dynamic)
  double trans_static_static = 0.99, trans_static_dynamic = 0.01;
  double trans_dynamic_static = 0.99, trans_dynamic_dynamic = 0.01;
  double prior_static = 0.5;
  int short_track_length = 3;
  double odds_clamp = 1e-4;  // eps_p
  double heading_variance_max = 3.0;
  bool invert_uncertainty_gate = false;
  // object clustering + association
  double object_cluster_tolerance = 0.5;
  int object_cluster_min_points = 30;
  double association_gate = 1.5;  // d_assoc
  int max_missed_frames = 2;      // n_miss
};

struct SensorConfig {
  int rings = 64;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 3.0;
};

struct PipelineConfig {
  PsfExtractionConfig psf;
  GefConfig gef;
  SolverConfig solver;
  PsfMatchConfig psf_match;
  ClassifierConfig classifier;
  SensorConfig sensor;
  int refine_every_n = 1;
  bool classify_objects = true;  // false: every object treated as dynamic ("no-o" ablation)
  std::uint64_t seed = 1;
};

namespace detail {
// Single registry of key <-> field bindings; load and snapshot both walk it.
template <typename F>
void visit_config(PipelineConfig& cfg, F&& f) {
  f("ransac.plane_inlier_threshold", cfg.psf.ransac.plane_inlier_threshold);
  f("ransac.line_inlier_threshold", cfg.psf.ransac.line_inlier_threshold);
  f("ransac.iterations", cfg.psf.ransac.iterations);
  f("ransac.min_fit_points", cfg.psf.ransac.min_fit_points);
  f("ransac.min_inlier_ratio", cfg.psf.ransac.min_inlier_ratio);
  f("psf.building_cell", cfg.psf.building_cell);
  f("psf.building_rotation", cfg.psf.building_rotation);
  f("psf.cluster_tolerance", cfg.psf.cluster_tolerance);
  f("psf.cluster_min_points", cfg.psf.cluster_min_points);
  f("psf.multiplane_stop", cfg.psf.multiplane_stop);
  f("gef.curvature_window", cfg.gef.curvature_window);
  f("gef.sectors_per_ring", cfg.gef.sectors_per_ring);
  f("gef.max_corners_per_sector", cfg.gef.max_corners_per_sector);
  f("gef.max_surfaces_per_sector", cfg.gef.max_surfaces_per_sector);
  f("gef.corner_curvature_min", cfg.gef.corner_curvature_min);
  f("gef.surface_curvature_max", cfg.gef.surface_curvature_max);
  f("gef.occlusion_gap", cfg.gef.occlusion_gap);
  f("gef.knn", cfg.gef.knn);
  f("gef.plane_cond_max", cfg.gef.plane_cond_max);
  f("gef.line_cond_min", cfg.gef.line_cond_min);
  f("gef.neighbor_fit_tolerance", cfg.gef.neighbor_fit_tolerance);
  f("gef.max_correspondence_dist", cfg.gef.max_correspondence_dist);
  f("gef.voxel_corner", cfg.gef.voxel_corner);
  f("gef.voxel_surface", cfg.gef.voxel_surface);
  f("gef.submap_radius", cfg.gef.submap_radius);
  f("solver.max_iterations", cfg.solver.max_iterations);
  f("solver.rotation_tolerance", cfg.solver.rotation_tolerance);
  f("solver.translation_tolerance", cfg.solver.translation_tolerance);
  f("solver.huber_delta", cfg.solver.huber_delta);
  f("solver.condition_max", cfg.solver.condition_max);
  f("solver.diverged_mean_residual", cfg.solver.diverged_mean_residual);
  f("psf_match.planar_search_radius", cfg.psf_match.planar_search_radius);
  f("psf_match.slim_search_radius", cfg.psf_match.slim_search_radius);
  f("psf_match.psf_gain", cfg.psf_match.psf_gain);
  f("psf_match.submap_window", cfg.psf_match.submap_window);
  f("psf_match.max_normal_angle_deg", cfg.psf_match.max_normal_angle_deg);
  f("psf_match.max_coefficient_distance", cfg.psf_match.max_coefficient_distance);
  f("classifier.sample_dtheta_deg", cfg.classifier.sample_dtheta_deg);
  f("classifier.sample_dd", cfg.classifier.sample_dd);
  f("classifier.sample_r", cfg.classifier.sample_r);
  f("classifier.sample_n_v", cfg.classifier.sample_n_v);
  f("classifier.velocity_max", cfg.classifier.velocity_max);
  f("classifier.velocity_resolution", cfg.classifier.velocity_resolution);
  f("classifier.match_sigma", cfg.classifier.match_sigma);
  f("classifier.max_sample_points", cfg.classifier.max_sample_points);
  f("classifier.sig_u_a", cfg.classifier.sig_u_a);
  f("classifier.sig_u_b", cfg.classifier.sig_u_b);
  f("classifier.sig_v_a", cfg.classifier.sig_v_a);
  f("classifier.sig_v_b", cfg.classifier.sig_v_b);
  f("classifier.ns_mu", cfg.classifier.ns_mu);
  f("classifier.ns_sigma", cfg.classifier.ns_sigma);
  f("classifier.nd_mu", cfg.classifier.nd_mu);
  f("classifier.nd_sigma", cfg.classifier.nd_sigma);
  f("classifier.top_k", cfg.classifier.top_k);
  f("classifier.trans_static_static", cfg.classifier.trans_static_static);
  f("classifier.trans_static_dynamic", cfg.classifier.trans_static_dynamic);
  f("classifier.trans_dynamic_static", cfg.classifier.trans_dynamic_static);
  f("classifier.trans_dynamic_dynamic", cfg.classifier.trans_dynamic_dynamic);
  f("classifier.prior_static", cfg.classifier.prior_static);
  f("classifier.short_track_length", cfg.classifier.short_track_length);
  f("classifier.odds_clamp", cfg.classifier.odds_clamp);
  f("classifier.heading_variance_max", cfg.classifier.heading_variance_max);
  f("classifier.invert_uncertainty_gate", cfg.classifier.invert_uncertainty_gate);
  f("classifier.object_cluster_tolerance", cfg.classifier.object_cluster_tolerance);
  f("classifier.object_cluster_min_points", cfg.classifier.object_cluster_min_points);
  f("classifier.association_gate", cfg.classifier.association_gate);
  f("classifier.max_missed_frames", cfg.classifier.max_missed_frames);
  f("sensor.rings", cfg.sensor.rings);
  f("sensor.elevation_min_deg", cfg.sensor.elevation_min_deg);
  f("sensor.elevation_max_deg", cfg.sensor.elevation_max_deg);
  f("pipeline.refine_every_n", cfg.refine_every_n);
  f("pipeline.classify_objects", cfg.classify_objects);
  f("pipeline.seed", cfg.seed);
}
}  // namespace detail

inline PipelineConfig config_from_map(const ConfigMap& map) {
  PipelineConfig cfg;
  detail::visit_config(cfg, [&](const char* key, auto& field) {
    field = map.get(key, field);
  });
  cfg.psf.seed = cfg.seed;
  // Road band overrides: "psf.road_bands = 30:10,60:20,inf:40".
  if (map.contains("psf.road_bands")) {
    cfg.psf.road_bands.clear();
    std::istringstream ss(map.get<std::string>("psf.road_bands", ""));
    std::string band;
    while (std::getline(ss, band, ',')) {
      const auto colon = band.find(':');
      if (colon == std::string::npos) throw MalformedFile("psf.road_bands: expected range:cell");
      const std::string range_str = ConfigMap::trim(band.substr(0, colon));
      const double range = range_str == "inf" ? 1e9 : std::stod(range_str);
      cfg.psf.road_bands.emplace_back(range, std::stod(band.substr(colon + 1)));
    }
  }
  return cfg;
}

inline ConfigMap config_to_map(const PipelineConfig& config) {
  ConfigMap map;
  auto& cfg = const_cast<PipelineConfig&>(config);
  detail::visit_config(cfg, [&](const char* key, auto& field) {
    std::ostringstream ss;
    ss.precision(17);
    if constexpr (std::is_same_v<std::decay_t<decltype(field)>, bool>)
      ss << (field ? "true" : "false");
    else
      ss << field;
    map.set(key, ss.str());
  });
  std::ostringstream bands;
  for (std::size_t i = 0; i < config.psf.road_bands.size(); ++i) {
    if (i) bands << ',';
    if (config.psf.road_bands[i].first >= 1e9)
      bands << "inf";
    else
      bands << config.psf.road_bands[i].first;
    bands << ':' << config.psf.road_bands[i].second;
  }
  map.set("psf.road_bands", bands.str());
  return map;
}

}  // namespace psflo
