#pragma once

#include <variant>
#include <vector>

#include "psflo/cp_forms.hpp"
#include "psflo/point_cloud.hpp"
#include "psflo/se3.hpp"

namespace psflo {

enum class PsfLabel : std::uint8_t { road, building, sign, pole };

inline const char* psf_label_name(PsfLabel label) {
  switch (label) {
    case PsfLabel::road: return "road";
    case PsfLabel::building: return "building";
    case PsfLabel::sign: return "sign";
    case PsfLabel::pole: return "pole";
  }
  return "?";
}

inline bool is_planar(PsfLabel label) { return label != PsfLabel::pole; }

// Parameterized semantic feature: fitted primitive coefficients plus weight,
// label, center and outline (outline kept for rendering/debugging only).
struct Psf {
  std::variant<PlaneCP, LineCPN> coefficients;
  double weight = 1.0;  // inlier ratio of the fit, in (0, 1]
  PsfLabel label = PsfLabel::road;
  Vec3 center = Vec3::Zero();
  std::vector<Vec3> outline;  // 4 rectangle corners (planar) or 2 endpoints (pole)

  const PlaneCP& plane() const { return std::get<PlaneCP>(coefficients); }
  const LineCPN& line() const { return std::get<LineCPN>(coefficients); }
};

struct PsfFrame {
  std::vector<Psf> psfs;
  int frame_index = 0;
};

// The PSF transform: weight and label are preserved, center and outline map
// as points, coefficients via their CP-form transforms.
inline Psf transform_psf(const Psf& psf, const Pose& pose) {
  Psf out = psf;
  out.center = pose.apply(psf.center);
  for (auto& corner : out.outline) corner = pose.apply(corner);
  if (is_planar(psf.label))
    out.coefficients = transform_plane_cp(psf.plane(), pose);
  else
    out.coefficients = transform_line_cpn(psf.line(), pose);
  return out;
}

inline PsfFrame transform_psf_frame(const PsfFrame& frame, const Pose& pose) {
  PsfFrame out;
  out.frame_index = frame.frame_index;
  out.psfs.reserve(frame.psfs.size());
  for (const Psf& s : frame.psfs) out.psfs.push_back(transform_psf(s, pose));
  return out;
}

}  // namespace psflo
