#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "psflo/errors.hpp"
#include "psflo/se3.hpp"

namespace psflo {

// Benchmark-style segment errors: translational drift in percent and
// rotational drift in deg/m, per segment length and averaged.
struct OdometryErrorReport {
  struct PerLength {
    double length = 0.0;
    double translational_percent = 0.0;
    double rotational_deg_per_m = 0.0;
    int segments = 0;
  };
  std::vector<PerLength> per_length;
  double avg_translational_percent = 0.0;
  double avg_rotational_deg_per_m = 0.0;
  int total_segments = 0;
};

// Segment-based relative pose error over lengths {100..800} m, segment
// starts every `start_step` frames, distances measured along the ground
// truth path.
inline OdometryErrorReport eval_odometry_kitti(const std::vector<Pose>& est,
                                               const std::vector<Pose>& gt, int start_step = 10) {
  if (est.size() != gt.size()) throw LengthMismatch("pose lists differ in length");
  if (est.size() < 2) throw TooShort("need at least two poses");

  std::vector<double> dist(gt.size(), 0.0);
  for (std::size_t i = 1; i < gt.size(); ++i)
    dist[i] = dist[i - 1] + (gt[i].translation - gt[i - 1].translation).norm();

  const std::array<double, 8> lengths = {100, 200, 300, 400, 500, 600, 700, 800};
  auto frame_at_distance = [&](std::size_t start, double length) -> int {
    for (std::size_t i = start; i < dist.size(); ++i)
      if (dist[i] > dist[start] + length) return static_cast<int>(i);
    return -1;
  };

  std::map<double, std::pair<double, double>> sums;  // length -> (t_err, r_err)
  std::map<double, int> counts;
  for (std::size_t start = 0; start < gt.size(); start += start_step) {
    for (double length : lengths) {
      const int end = frame_at_distance(start, length);
      if (end < 0) break;
      const Pose gt_rel = gt[start].inverse() * gt[end];
      const Pose est_rel = est[start].inverse() * est[end];
      const Pose error = gt_rel.inverse() * est_rel;
      sums[length].first += error.translation.norm() / length;
      sums[length].second += rotation_angle(error.rotation) / length;
      counts[length] += 1;
    }
  }
  if (counts.empty()) throw TooShort("ground-truth path shorter than the smallest segment");

  OdometryErrorReport report;
  double t_sum = 0.0, r_sum = 0.0;
  for (const auto& [length, sum] : sums) {
    OdometryErrorReport::PerLength row;
    row.length = length;
    row.segments = counts[length];
    row.translational_percent = 100.0 * sum.first / row.segments;
    row.rotational_deg_per_m = (180.0 / M_PI) * sum.second / row.segments;
    report.per_length.push_back(row);
    t_sum += sum.first;
    r_sum += sum.second;
    report.total_segments += row.segments;
  }
  report.avg_translational_percent = 100.0 * t_sum / report.total_segments;
  report.avg_rotational_deg_per_m = (180.0 / M_PI) * r_sum / report.total_segments;
  return report;
}

// Point-wise dynamic/static classification metrics over object points.
struct ClassificationReport {
  struct PerClass {
    long tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, iou = 0.0;
    bool has_support = false;
  };
  PerClass static_class;
  PerClass dynamic_class;
  long points = 0;

  void finalize() {
    for (PerClass* c : {&static_class, &dynamic_class}) {
      c->has_support = c->tp + c->fn > 0;
      c->precision = c->tp + c->fp > 0 ? double(c->tp) / (c->tp + c->fp) : 0.0;
      c->recall = c->tp + c->fn > 0 ? double(c->tp) / (c->tp + c->fn) : 0.0;
      c->iou = c->tp + c->fp + c->fn > 0 ? double(c->tp) / (c->tp + c->fp + c->fn) : 0.0;
    }
  }
};

// `pred_dynamic` / `gt_dynamic` aligned over object points (any frame
// partitioning; counts are additive).
inline void accumulate_classification(ClassificationReport& report,
                                      const std::vector<bool>& pred_dynamic,
                                      const std::vector<bool>& gt_dynamic) {
  if (pred_dynamic.size() != gt_dynamic.size())
    throw LengthMismatch("prediction/ground-truth point counts differ");
  for (std::size_t i = 0; i < pred_dynamic.size(); ++i) {
    ++report.points;
    if (gt_dynamic[i]) {
      if (pred_dynamic[i])
        ++report.dynamic_class.tp;
      else {
        ++report.dynamic_class.fn;
        ++report.static_class.fp;
      }
    } else {
      if (!pred_dynamic[i])
        ++report.static_class.tp;
      else {
        ++report.static_class.fn;
        ++report.dynamic_class.fp;
      }
    }
  }
}

inline ClassificationReport eval_classification(const std::vector<bool>& pred_dynamic,
                                                const std::vector<bool>& gt_dynamic) {
  ClassificationReport report;
  accumulate_classification(report, pred_dynamic, gt_dynamic);
  report.finalize();
  return report;
}

}  // namespace psflo
