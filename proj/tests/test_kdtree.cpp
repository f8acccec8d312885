#include "test_support.hpp"

#include "tlsdeform/kdtree.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace tlsdeform;

namespace {

std::vector<Neighbor> brute_knn(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& q,
                                std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({i, (pts[i] - q).squaredNorm()});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST(KdTree, KnnMatchesBruteForce) {
  const auto pts = testing_support::random_cloud(2000, 21).positions();
  const KdTree tree(pts);
  const auto queries = testing_support::random_cloud(200, 22, 12.0).positions();
  for (const auto& q : queries) {
    for (std::size_t k : {1u, 8u, 17u}) {
      const auto got = tree.knn(q, k);
      const auto want = brute_knn(pts, q, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < k; ++i) {
        EXPECT_EQ(got[i].index, want[i].index);
        EXPECT_EQ(got[i].dist2, want[i].dist2);
      }
    }
  }
}

TEST(KdTree, TiesResolveToLowerIndex) {
  // Integer lattice: many exactly equal distances.
  std::vector<Eigen::Vector3d> pts;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y)
      for (int z = 0; z < 6; ++z) pts.emplace_back(x, y, z);
  std::reverse(pts.begin(), pts.end());
  const KdTree tree(pts);
  for (const auto& q : {Eigen::Vector3d(2.5, 2.5, 2.5), Eigen::Vector3d(0, 0, 0),
                        Eigen::Vector3d(3, 2.5, 1)}) {
    for (std::size_t k : {1u, 5u, 9u, 27u}) {
      const auto got = tree.knn(q, k);
      const auto want = brute_knn(pts, q, k);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(got[i].index, want[i].index);
    }
  }
}

TEST(KdTree, KLargerThanTree) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(KdTree(pts).knn({0, 0, 0}, 5).size(), 2u);
}

TEST(KdTree, RadiusMatchesBruteForceSortedByIndex) {
  const auto pts = testing_support::random_cloud(1500, 23).positions();
  const KdTree tree(pts);
  for (const auto& q : testing_support::random_cloud(50, 24).positions()) {
    const auto got = tree.radius(q, 3.0);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if ((pts[i] - q).squaredNorm() <= 9.0) want.push_back(i);
    EXPECT_EQ(got, want);
  }
}

TEST(KdTree, NearestOfDuplicatesIsLowestIndex) {
  const std::vector<Eigen::Vector3d> pts{{5, 5, 5}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  const auto n = KdTree(pts).nearest({1, 1, 1});
  EXPECT_EQ(n.index, 1u);
  EXPECT_EQ(n.dist2, 0.0);
}
