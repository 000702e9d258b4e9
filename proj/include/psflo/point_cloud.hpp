#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "psflo/errors.hpp"
#include "psflo/se3.hpp"

namespace psflo {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensity;
  std::vector<int> ring;  // scan line id per point; empty if unknown
  int frame_index = 0;
  std::optional<double> timestamp;

  std::size_t size() const { return points.size(); }
};

enum class Role : std::uint8_t { road, building, sign, pole, terrain, object, other };

inline const char* role_name(Role role) {
  switch (role) {
    case Role::road: return "road";
    case Role::building: return "building";
    case Role::sign: return "sign";
    case Role::pole: return "pole";
    case Role::terrain: return "terrain";
    case Role::object: return "object";
    case Role::other: return "other";
  }
  return "other";
}

inline std::optional<Role> role_from_name(const std::string& name) {
  for (Role r : {Role::road, Role::building, Role::sign, Role::pole, Role::terrain,
                 Role::object, Role::other})
    if (name == role_name(r)) return r;
  return std::nullopt;
}

// class_id -> (role, moving flag). Total over all ids: unknown ids resolve
// to Role::other.
class TaxonomyMap {
 public:
  struct Entry {
    Role role = Role::other;
    bool is_moving = false;
    std::string name;
  };

  void set(std::uint16_t class_id, Role role, bool is_moving = false, std::string name = "") {
    entries_[class_id] = Entry{role, is_moving, std::move(name)};
  }

  Role role_of(std::uint16_t class_id) const {
    auto it = entries_.find(class_id);
    return it == entries_.end() ? Role::other : it->second.role;
  }

  bool is_moving_class(std::uint16_t class_id) const {
    auto it = entries_.find(class_id);
    return it != entries_.end() && it->second.is_moving;
  }

  const std::map<std::uint16_t, Entry>& entries() const { return entries_; }

  // SemanticKITTI defaults: road 40, building 50, pole 80, traffic sign 81,
  // terrain 72; vehicle/person classes (and their 25x moving variants) are
  // objects.
  static TaxonomyMap semantic_kitti() {
    TaxonomyMap map;
    map.set(40, Role::road, false, "road");
    map.set(50, Role::building, false, "building");
    map.set(80, Role::pole, false, "pole");
    map.set(81, Role::sign, false, "traffic-sign");
    map.set(72, Role::terrain, false, "terrain");
    const std::pair<std::uint16_t, const char*> statics[] = {
        {10, "car"},        {11, "bicycle"},   {13, "bus"},    {15, "motorcycle"},
        {16, "on-rails"},   {18, "truck"},     {20, "other-vehicle"},
        {30, "person"},     {31, "bicyclist"}, {32, "motorcyclist"}};
    for (auto [id, name] : statics) map.set(id, Role::object, false, name);
    const std::pair<std::uint16_t, const char*> movers[] = {
        {252, "moving-car"},          {253, "moving-bicyclist"},
        {254, "moving-person"},       {255, "moving-motorcyclist"},
        {256, "moving-on-rails"},     {257, "moving-bus"},
        {258, "moving-truck"},        {259, "moving-other-vehicle"}};
    for (auto [id, name] : movers) map.set(id, Role::object, true, name);
    return map;
  }

  // Flat "class_id role [moving] [name]" lines; '#' starts a comment.
  static TaxonomyMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open taxonomy file: " + path);
    TaxonomyMap map;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      int id = 0;
      std::string role_str;
      if (!(ss >> id >> role_str)) {
        if (ss.eof() && line.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw MalformedFile("taxonomy line " + std::to_string(line_no) + ": expected 'id role'");
      }
      const auto role = role_from_name(role_str);
      if (!role)
        throw MalformedFile("taxonomy line " + std::to_string(line_no) +
                            ": unknown role '" + role_str + "'");
      std::string moving_str, name;
      bool moving = false;
      if (ss >> moving_str) moving = (moving_str == "moving" || moving_str == "1");
      ss >> name;
      map.set(static_cast<std::uint16_t>(id), *role, moving, name);
    }
    return map;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write taxonomy file: " + path);
    out << "# class_id role [moving] [name]\n";
    for (const auto& [id, e] : entries_)
      out << id << ' ' << role_name(e.role) << ' ' << (e.is_moving ? "moving" : "static")
          << ' ' << e.name << '\n';
  }

 private:
  std::map<std::uint16_t, Entry> entries_;
};

struct SemanticCloud {
  PointCloud cloud;
  std::vector<std::uint16_t> class_id;
  std::vector<std::uint16_t> instance_id;
  std::vector<Role> role;

  std::size_t size() const { return cloud.size(); }

  std::vector<int> indices_with_role(Role r) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(role.size()); ++i)
      if (role[i] == r) out.push_back(i);
    return out;
  }
};

inline SemanticCloud partition(PointCloud cloud, std::vector<std::uint16_t> class_id,
                               std::vector<std::uint16_t> instance_id,
                               const TaxonomyMap& taxonomy) {
  if (class_id.size() != cloud.size() || instance_id.size() != cloud.size())
    throw LengthMismatch("label arrays do not match point count");
  SemanticCloud sem;
  sem.role.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) sem.role[i] = taxonomy.role_of(class_id[i]);
  sem.cloud = std::move(cloud);
  sem.class_id = std::move(class_id);
  sem.instance_id = std::move(instance_id);
  return sem;
}

// Reconstructs scan-line ids by quantizing elevation angle when the input
// carries none (KITTI bins store no ring field).
inline void reconstruct_rings(PointCloud& cloud, int n_rings = 64,
                              double elevation_min_deg = -25.0,
                              double elevation_max_deg = 3.0) {
  cloud.ring.resize(cloud.size());
  const double lo = elevation_min_deg * M_PI / 180.0;
  const double hi = elevation_max_deg * M_PI / 180.0;
  const double span = hi - lo;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const double range2d = std::hypot(p.x(), p.y());
    const double elevation = std::atan2(p.z(), range2d);
    int ring = static_cast<int>((elevation - lo) / span * n_rings);
    cloud.ring[i] = std::clamp(ring, 0, n_rings - 1);
  }
}

}  // namespace psflo
