#pragma once

#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "psflo/errors.hpp"
#include "psflo/psf.hpp"
#include "psflo/se3.hpp"

namespace psflo {

inline void write_trajectory_csv(const std::vector<Pose>& poses, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "frame,x,y,z\n" << std::setprecision(9);
  for (std::size_t i = 0; i < poses.size(); ++i)
    out << i << ',' << poses[i].translation.x() << ',' << poses[i].translation.y() << ','
        << poses[i].translation.z() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// Dependency-free top-down (x/y) trajectory overlay. Estimate in blue,
// ground truth in grey, a circle marks the start.
inline void write_trajectory_svg(const std::vector<Pose>& est,
                                 const std::vector<Pose>* gt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);

  double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
  auto expand = [&](const std::vector<Pose>& poses) {
    for (const Pose& p : poses) {
      min_x = std::min(min_x, p.translation.x());
      max_x = std::max(max_x, p.translation.x());
      min_y = std::min(min_y, p.translation.y());
      max_y = std::max(max_y, p.translation.y());
    }
  };
  expand(est);
  if (gt) expand(*gt);
  const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
  const double size = 800.0, margin = 40.0;
  const double scale = (size - 2 * margin) / span;
  auto sx = [&](double x) { return margin + (x - min_x) * scale; };
  auto sy = [&](double y) { return size - margin - (y - min_y) * scale; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto polyline = [&](const std::vector<Pose>& poses, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const Pose& p : poses) out << sx(p.translation.x()) << ',' << sy(p.translation.y()) << ' ';
    out << "\"/>\n";
  };
  if (gt) polyline(*gt, "#888888");
  polyline(est, "#1f77b4");
  if (!est.empty())
    out << "<circle cx=\"" << sx(est.front().translation.x()) << "\" cy=\""
        << sy(est.front().translation.y()) << "\" r=\"5\" fill=\"none\" stroke=\"black\"/>\n";
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

// PSF outlines as CSV polylines (one feature per group of rows) for
// plotting extracted frames.
inline void write_psf_outlines_csv(const PsfFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "psf,label,weight,x,y,z\n" << std::setprecision(9);
  for (std::size_t i = 0; i < frame.psfs.size(); ++i) {
    const Psf& s = frame.psfs[i];
    for (const Vec3& p : s.outline)
      out << i << ',' << psf_label_name(s.label) << ',' << s.weight << ',' << p.x() << ','
          << p.y() << ',' << p.z() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace psflo
