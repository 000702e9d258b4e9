#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "psflo/errors.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/se3.hpp"

namespace psflo {

namespace detail {
inline std::vector<char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(bytes.data(), size);
  if (!in) throw IoError("short read: " + path);
  return bytes;
}
}  // namespace detail

// KITTI velodyne .bin: packed little-endian float32 x,y,z,intensity.
inline PointCloud read_cloud_kitti(const std::string& path) {
  const auto bytes = detail::read_all_bytes(path);
  if (bytes.empty() || bytes.size() % 16 != 0)
    throw MalformedFile(path + ": byte length " + std::to_string(bytes.size()) +
                        " is not a positive multiple of 16");
  const std::size_t n = bytes.size() / 16;
  PointCloud cloud;
  cloud.points.resize(n);
  cloud.intensity.resize(n);
  const float* data = reinterpret_cast<const float*>(bytes.data());
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points[i] = Vec3(data[4 * i], data[4 * i + 1], data[4 * i + 2]);
    cloud.intensity[i] = data[4 * i + 3];
  }
  return cloud;
}

inline void write_cloud_kitti(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float row[4] = {static_cast<float>(cloud.points[i].x()),
                          static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z()),
                          i < cloud.intensity.size() ? cloud.intensity[i] : 0.f};
    out.write(reinterpret_cast<const char*>(row), sizeof(row));
  }
}

struct LabelArrays {
  std::vector<std::uint16_t> class_id;
  std::vector<std::uint16_t> instance_id;
};

// SemanticKITTI .label: packed uint32, low 16 bits class, high 16 instance.
inline LabelArrays read_labels_semantickitti(const std::string& path, std::size_t n_points) {
  const auto bytes = detail::read_all_bytes(path);
  if (bytes.size() % 4 != 0)
    throw MalformedFile(path + ": byte length not a multiple of 4");
  const std::size_t n = bytes.size() / 4;
  if (n != n_points)
    throw LengthMismatch(path + ": " + std::to_string(n) + " labels for " +
                         std::to_string(n_points) + " points");
  LabelArrays labels;
  labels.class_id.resize(n);
  labels.instance_id.resize(n);
  const std::uint32_t* words = reinterpret_cast<const std::uint32_t*>(bytes.data());
  for (std::size_t i = 0; i < n; ++i) {
    labels.class_id[i] = static_cast<std::uint16_t>(words[i] & 0xFFFFu);
    labels.instance_id[i] = static_cast<std::uint16_t>(words[i] >> 16);
  }
  return labels;
}

inline void write_labels_semantickitti(const LabelArrays& labels, const std::string& path) {
  if (labels.class_id.size() != labels.instance_id.size())
    throw LengthMismatch("class/instance arrays differ in length");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  for (std::size_t i = 0; i < labels.class_id.size(); ++i) {
    const std::uint32_t word =
        (static_cast<std::uint32_t>(labels.instance_id[i]) << 16) | labels.class_id[i];
    out.write(reinterpret_cast<const char*>(&word), sizeof(word));
  }
}

// KITTI poses .txt: one row-major 3x4 [R|t] per line. When `calib` (the
// lidar->camera transform Tr) is given, poses on disk are camera-frame:
// written as Tr * T * Tr^-1, undone on read.
inline std::vector<Pose> read_poses_kitti(const std::string& path,
                                          const std::optional<Pose>& calib = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open poses file: " + path);
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double v[12];
    for (int i = 0; i < 12; ++i)
      if (!(ss >> v[i]))
        throw MalformedFile(path + " line " + std::to_string(line_no) +
                            ": expected 12 fields");
    double extra;
    if (ss >> extra)
      throw MalformedFile(path + " line " + std::to_string(line_no) + ": trailing fields");
    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation = Vec3(v[3], v[7], v[11]);
    if (calib) pose = calib->inverse() * pose * (*calib);
    pose.normalize();
    poses.push_back(pose);
  }
  return poses;
}

inline void write_poses_kitti(const std::vector<Pose>& poses, const std::string& path,
                              const std::optional<Pose>& calib = std::nullopt) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write poses file: " + path);
  out << std::setprecision(9);
  for (const Pose& p : poses) {
    Pose w = calib ? (*calib) * p * calib->inverse() : p;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << w.rotation(r, c) << ' ';
      out << w.translation[r] << (r == 2 ? "" : " ");
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

// Parses the "Tr:" row of a KITTI calib.txt as a 3x4 transform.
inline Pose read_calib_kitti(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calib file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key != "Tr:" && key != "Tr") continue;
    double v[12];
    for (int i = 0; i < 12; ++i)
      if (!(ss >> v[i])) throw MalformedFile(path + ": Tr row needs 12 fields");
    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation = Vec3(v[3], v[7], v[11]);
    pose.normalize();
    return pose;
  }
  throw MalformedFile(path + ": no Tr row found");
}

}  // namespace psflo
