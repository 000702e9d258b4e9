#include <gtest/gtest.h>

#include <random>

#include "psflo/kdtree.hpp"
#include "test_helpers.hpp"

using namespace psflo;
using namespace psflo::testing;

namespace {

std::vector<KdTree3::Hit> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, int k) {
  std::vector<KdTree3::Hit> hits;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i)
    hits.push_back({i, (pts[i] - q).squaredNorm()});
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.sq_dist != b.sq_dist ? a.sq_dist < b.sq_dist : a.index < b.index;
  });
  if (static_cast<int>(hits.size()) > k) hits.resize(k);
  return hits;
}

}  // namespace

TEST(KdTree, MatchesBruteForce) {
  std::mt19937 rng(41);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(random_vec(rng, 20.0));
  KdTree3 tree(pts);

  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 q = random_vec(rng, 25.0);
    const auto got = tree.knn(q, 5);
    const auto want = brute_knn(pts, q, 5);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].index, want[i].index);
      EXPECT_DOUBLE_EQ(got[i].sq_dist, want[i].sq_dist);
    }

    const double r = 3.0;
    const auto in_radius = tree.radius(q, r);
    std::size_t expected = 0;
    for (const auto& p : pts)
      if ((p - q).squaredNorm() <= r * r) ++expected;
    EXPECT_EQ(in_radius.size(), expected);
    for (const auto& hit : in_radius) EXPECT_LE(hit.sq_dist, r * r);
  }
}

TEST(KdTree, EdgeCases) {
  KdTree3 empty;
  EXPECT_TRUE(empty.knn(Vec3::Zero(), 3).empty());
  EXPECT_TRUE(empty.radius(Vec3::Zero(), 1.0).empty());

  KdTree3 single(std::vector<Vec3>{Vec3(1, 2, 3)});
  const auto hits = single.knn(Vec3::Zero(), 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].index, 0);

  // duplicated points all returned by radius search
  std::vector<Vec3> dup(10, Vec3(0.5, 0.5, 0.5));
  KdTree3 tree(dup);
  EXPECT_EQ(tree.radius(Vec3(0.5, 0.5, 0.5), 0.01).size(), 10u);
}
