#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "psflo/se3.hpp"

namespace psflo {

// Static 3D kd-tree (median split). Built once over a point set, then
// queried read-only; knn results are sorted by distance, ties by index so
// queries are deterministic.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(const std::vector<Vec3>& points) { build(points); }

  void build(const std::vector<Vec3>& points) {
    points_ = points;
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    nodes_.reserve(points_.size());
    if (!points_.empty()) root_ = build_range(0, static_cast<int>(points_.size()));
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(int index) const { return points_[index]; }

  struct Hit {
    int index = -1;
    double sq_dist = 0.0;
  };

  std::vector<Hit> knn(const Vec3& query, int k) const {
    std::vector<Hit> heap;  // max-heap on (sq_dist, index)
    if (k <= 0 || points_.empty()) return heap;
    heap.reserve(k + 1);
    knn_recurse(root_, query, k, heap);
    std::sort(heap.begin(), heap.end(), hit_less);
    return heap;
  }

  std::vector<Hit> radius(const Vec3& query, double r) const {
    std::vector<Hit> out;
    if (points_.empty() || r < 0) return out;
    radius_recurse(root_, query, r * r, out);
    std::sort(out.begin(), out.end(), hit_less);
    return out;
  }

 private:
  struct Node {
    int point_index;
    int axis;
    int left = -1;
    int right = -1;
  };

  static bool hit_less(const Hit& a, const Hit& b) {
    return a.sq_dist != b.sq_dist ? a.sq_dist < b.sq_dist : a.index < b.index;
  }

  int build_range(int begin, int end) {
    if (begin >= end) return -1;
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       return pa != pb ? pa < pb : a < b;
                     });

    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{order_[mid], axis});
    const int left = build_range(begin, mid);
    const int right = build_range(mid + 1, end);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
  }

  void knn_recurse(int node_index, const Vec3& query, int k, std::vector<Hit>& heap) const {
    if (node_index < 0) return;
    const Node& node = nodes_[node_index];
    const Vec3& p = points_[node.point_index];
    const double sq = (p - query).squaredNorm();

    Hit hit{node.point_index, sq};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(hit);
      std::push_heap(heap.begin(), heap.end(), hit_less);
    } else if (hit_less(hit, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), hit_less);
      heap.back() = hit;
      std::push_heap(heap.begin(), heap.end(), hit_less);
    }

    const double plane_delta = query[node.axis] - p[node.axis];
    const int near = plane_delta <= 0 ? node.left : node.right;
    const int far = plane_delta <= 0 ? node.right : node.left;
    knn_recurse(near, query, k, heap);
    if (static_cast<int>(heap.size()) < k || plane_delta * plane_delta <= heap.front().sq_dist)
      knn_recurse(far, query, k, heap);
  }

  void radius_recurse(int node_index, const Vec3& query, double sq_radius,
                      std::vector<Hit>& out) const {
    if (node_index < 0) return;
    const Node& node = nodes_[node_index];
    const Vec3& p = points_[node.point_index];
    const double sq = (p - query).squaredNorm();
    if (sq <= sq_radius) out.push_back(Hit{node.point_index, sq});

    const double plane_delta = query[node.axis] - p[node.axis];
    const int near = plane_delta <= 0 ? node.left : node.right;
    const int far = plane_delta <= 0 ? node.right : node.left;
    radius_recurse(near, query, sq_radius, out);
    if (plane_delta * plane_delta <= sq_radius) radius_recurse(far, query, sq_radius, out);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace psflo
