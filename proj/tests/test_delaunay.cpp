#include "test_support.hpp"

#include "tlsdeform/delaunay.hpp"
#include "tlsdeform/error.hpp"
#include "tlsdeform/predicates.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace tlsdeform;

namespace {

PointCloud xy_cloud(const std::vector<Eigen::Vector2d>& xy) {
  std::vector<Eigen::Vector3d> pts;
  for (const auto& p : xy) pts.emplace_back(p.x(), p.y(), 0.1 * p.x() - 0.2 * p.y());
  return testing_support::cloud_from(pts);
}

using LD = long double;

LD orient(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return (LD(b.x()) - a.x()) * (LD(c.y()) - a.y()) - (LD(b.y()) - a.y()) * (LD(c.x()) - a.x());
}

// Independent incircle determinant, relative to its magnitude scale.
LD incircle_det(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                const Eigen::Vector3d& d, LD& scale) {
  const LD adx = LD(a.x()) - d.x(), ady = LD(a.y()) - d.y();
  const LD bdx = LD(b.x()) - d.x(), bdy = LD(b.y()) - d.y();
  const LD cdx = LD(c.x()) - d.x(), cdy = LD(c.y()) - d.y();
  const LD al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
  scale = (std::abs(adx) + std::abs(ady)) * (std::abs(bdx) + std::abs(bdy)) *
          (std::abs(cdx) + std::abs(cdy)) * (al + bl + cl);
  return al * (bdx * cdy - cdx * bdy) + bl * (cdx * ady - adx * cdy) + cl * (adx * bdy - bdx * ady);
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return a / 2;
}

void check_mesh_structure(const PointCloud& cloud, const TriangleMesh& mesh) {
  ASSERT_EQ(mesh.triangles.size(), mesh.adjacency.size());
  double area = 0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const LD o = orient(cloud[tri[0]].position, cloud[tri[1]].position, cloud[tri[2]].position);
    EXPECT_GT(o, 0) << "triangle " << t << " not counter-clockwise";
    area += static_cast<double>(o) / 2;
    for (int k = 0; k < 3; ++k) {
      const std::int64_t n = mesh.adjacency[t][k];
      if (n == TriangleMesh::kNoNeighbor) continue;
      const auto& back = mesh.adjacency[static_cast<std::size_t>(n)];
      EXPECT_EQ(std::count(back.begin(), back.end(), static_cast<std::int64_t>(t)), 1)
          << "adjacency not symmetric";
      // Shared edge = the two vertices other than tri[k].
      std::set<std::size_t> mine{tri[(k + 1) % 3], tri[(k + 2) % 3]};
      std::set<std::size_t> theirs(mesh.triangles[n].begin(), mesh.triangles[n].end());
      for (std::size_t v : mine) EXPECT_TRUE(theirs.count(v));
    }
  }
  std::vector<Eigen::Vector2d> xy;
  for (std::size_t v : mesh.vertices) xy.emplace_back(cloud[v].position.x(), cloud[v].position.y());
  EXPECT_NEAR(area, polygon_area(convex_hull(xy)), 1e-9 * std::max(1.0, area));
  // Euler: every edge appears once or twice; boundary edges have no neighbor.
  std::map<std::pair<std::size_t, std::size_t>, int> edges;
  for (const auto& tri : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      auto a = tri[k], b = tri[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  for (const auto& [e, n] : edges) EXPECT_LE(n, 2);
}

void check_empty_circumcircle(const PointCloud& cloud, const TriangleMesh& mesh) {
  std::size_t violations = 0;
  for (const auto& tri : mesh.triangles) {
    for (std::size_t v : mesh.vertices) {
      if (v == tri[0] || v == tri[1] || v == tri[2]) continue;
      LD scale = 0;
      const LD det = incircle_det(cloud[tri[0]].position, cloud[tri[1]].position,
                                  cloud[tri[2]].position, cloud[v].position, scale);
      if (det > 1e-15L * scale) ++violations;
    }
  }
  EXPECT_EQ(violations, 0u);
}

}  // namespace

TEST(DelaunayXy, ThreePointsOneTriangle) {
  const auto cloud = xy_cloud({{0, 0}, {1, 0}, {0, 1}});
  const auto mesh = delaunay_xy(cloud);
  ASSERT_EQ(mesh.triangles.size(), 1u);
  EXPECT_EQ(mesh.vertices, (std::vector<std::size_t>{0, 1, 2}));
  for (auto n : mesh.adjacency[0]) EXPECT_EQ(n, TriangleMesh::kNoNeighbor);
  check_mesh_structure(cloud, mesh);
}

TEST(DelaunayXy, SquareDiagonalTouchesLowestIndex) {
  const std::vector<Eigen::Vector2d> corners{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<int> perm{0, 1, 2, 3};
  do {
    std::vector<Eigen::Vector2d> xy;
    for (int i : perm) xy.push_back(corners[i]);
    const auto cloud = xy_cloud(xy);
    const auto mesh = delaunay_xy(cloud);
    ASSERT_EQ(mesh.triangles.size(), 2u);
    const auto& t0 = mesh.triangles[0];
    const auto& t1 = mesh.triangles[1];
    std::vector<std::size_t> shared;
    for (auto v : t0)
      if (std::find(t1.begin(), t1.end(), v) != t1.end()) shared.push_back(v);
    ASSERT_EQ(shared.size(), 2u);
    EXPECT_TRUE(shared[0] == 0 || shared[1] == 0);
    check_mesh_structure(cloud, mesh);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(DelaunayXy, EmptyCircumcircle200Random) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto cloud = testing_support::random_cloud(200, seed);
    const auto mesh = delaunay_xy(cloud);
    EXPECT_EQ(mesh.vertices.size(), 200u);
    check_mesh_structure(cloud, mesh);
    check_empty_circumcircle(cloud, mesh);
  }
}

TEST(DelaunayXy, CocircularLatticeIsValidAndDeterministic) {
  std::vector<Eigen::Vector2d> xy;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) xy.emplace_back(0.1 * i, 0.1 * j);
  std::mt19937_64 rng(4);
  std::shuffle(xy.begin(), xy.end(), rng);
  const auto cloud = xy_cloud(xy);
  const auto a = delaunay_xy(cloud);
  EXPECT_EQ(a.triangles.size(), 2u * 19 * 19);
  check_mesh_structure(cloud, a);
  check_empty_circumcircle(cloud, a);
  const auto b = delaunay_xy(cloud);
  EXPECT_EQ(a.triangles, b.triangles);
  EXPECT_EQ(a.adjacency, b.adjacency);
}

TEST(DelaunayXy, LargerCloudStructure) {
  const auto cloud = testing_support::random_cloud(5000, 12, 100.0);
  const auto mesh = delaunay_xy(cloud);
  check_mesh_structure(cloud, mesh);
}

TEST(DelaunayXy, XyDuplicatesAreSkipped) {
  std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 5}, {1, 1, 0}};
  const auto cloud = testing_support::cloud_from(pts);
  const auto mesh = delaunay_xy(cloud);
  EXPECT_EQ(mesh.vertices, (std::vector<std::size_t>{0, 1, 2, 4}));
  EXPECT_EQ(mesh.triangles.size(), 2u);
}

TEST(DelaunayXy, Errors) {
  EXPECT_THROW(delaunay_xy(xy_cloud({{0, 0}, {1, 1}})), Error);
  EXPECT_THROW(delaunay_xy(xy_cloud({{0, 0}, {1, 1}, {2, 2}, {3, 3}})), Error);
  EXPECT_THROW(delaunay_xy(testing_support::cloud_from({{0, 0, 0}, {0, 0, 1}, {0, 0, 2}})), Error);
}

TEST(Predicates, ExactNearDegenerate) {
  using predicates::orient2d;
  using predicates::incircle;
  const Eigen::Vector2d a(0.5, 0.5), b(12, 12), c(24, 24);
  EXPECT_EQ(orient2d(a, b, c), 0);
  const Eigen::Vector2d c_up(24, std::nextafter(24.0, 25.0));
  EXPECT_EQ(orient2d(a, b, c_up), 1);
  const Eigen::Vector2d c_down(24, std::nextafter(24.0, 23.0));
  EXPECT_EQ(orient2d(a, b, c_down), -1);

  const Eigen::Vector2d p(0, 0), q(1, 0), r(1, 1), s(0, 1);
  EXPECT_EQ(incircle(p, q, r, s), 0);
  EXPECT_EQ(incircle(p, q, r, {0.5, 0.5}), 1);
  EXPECT_EQ(incircle(p, q, r, {2, 2}), -1);
  EXPECT_EQ(incircle(p, q, r, {0, std::nextafter(1.0, 0.0)}), 1);
  EXPECT_EQ(incircle(p, q, r, {0, std::nextafter(1.0, 2.0)}), -1);
}
