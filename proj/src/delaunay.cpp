#include "tlsdeform/delaunay.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/predicates.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace tlsdeform {

namespace {

using predicates::incircle;
using predicates::orient2d;

constexpr std::int32_t kGhost = -1;

struct Tri {
  std::array<std::int32_t, 3> v;  // counter-clockwise; kGhost marks the vertex at infinity
  std::array<std::int32_t, 3> n;  // n[k] lies across the edge opposite v[k]
  bool alive = true;

  int ghost_slot() const {
    for (int k = 0; k < 3; ++k)
      if (v[k] == kGhost) return k;
    return -1;
  }
  int slot_of_neighbor(std::int32_t t) const {
    for (int k = 0; k < 3; ++k)
      if (n[k] == t) return k;
    return -1;
  }
};

std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a + 1)) << 32) |
         static_cast<std::uint32_t>(b + 1);
}

std::uint64_t morton_interleave(std::uint32_t x, std::uint32_t y) {
  auto spread = [](std::uint64_t v) {
    v &= 0xffffffffull;
    v = (v | (v << 16)) & 0x0000ffff0000ffffull;
    v = (v | (v << 8)) & 0x00ff00ff00ff00ffull;
    v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0full;
    v = (v | (v << 2)) & 0x3333333333333333ull;
    v = (v | (v << 1)) & 0x5555555555555555ull;
    return v;
  };
  return spread(x) | (spread(y) << 1);
}

class Builder {
 public:
  explicit Builder(const PointCloud& cloud) {
    xy_.reserve(cloud.size());
    for (const auto& p : cloud) xy_.emplace_back(p.position.x(), p.position.y());
  }

  TriangleMesh run();

 private:
  const Eigen::Vector2d& at(std::int32_t v) const { return xy_[static_cast<std::size_t>(v)]; }

  std::vector<std::int32_t> insertion_order() const;
  std::int32_t new_tri(std::int32_t a, std::int32_t b, std::int32_t c);
  bool in_conflict(const Tri& t, const Eigen::Vector2d& p) const;
  std::int32_t locate(const Eigen::Vector2d& p) const;
  bool insert(std::int32_t vertex);
  void flip(std::int32_t t, int slot);
  void break_cocircular_ties();
  TriangleMesh extract() const;

  std::vector<Eigen::Vector2d> xy_;
  std::vector<Tri> tris_;
  std::vector<std::int32_t> free_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::int32_t last_ = 0;
  std::vector<std::int32_t> inserted_;
};

std::vector<std::int32_t> Builder::insertion_order() const {
  // Morton order keeps consecutive insertions spatially close, so the walk
  // from the previous triangle stays short.
  Eigen::Vector2d lo = xy_.front(), hi = xy_.front();
  for (const auto& p : xy_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector2d extent = (hi - lo).cwiseMax(Eigen::Vector2d::Constant(1e-300));
  std::vector<std::uint64_t> code(xy_.size());
  for (std::size_t i = 0; i < xy_.size(); ++i) {
    const Eigen::Vector2d q = (xy_[i] - lo).cwiseQuotient(extent) * 65535.0;
    code[i] = morton_interleave(static_cast<std::uint32_t>(q.x()), static_cast<std::uint32_t>(q.y()));
  }
  std::vector<std::int32_t> order(xy_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return code[a] < code[b]; });
  return order;
}

std::int32_t Builder::new_tri(std::int32_t a, std::int32_t b, std::int32_t c) {
  Tri t{{a, b, c}, {-1, -1, -1}, true};
  if (!free_.empty()) {
    const std::int32_t id = free_.back();
    free_.pop_back();
    tris_[id] = t;
    return id;
  }
  tris_.push_back(t);
  stamp_.push_back(0);
  return static_cast<std::int32_t>(tris_.size() - 1);
}

bool Builder::in_conflict(const Tri& t, const Eigen::Vector2d& p) const {
  const int g = t.ghost_slot();
  if (g < 0) return incircle(at(t.v[0]), at(t.v[1]), at(t.v[2]), p) > 0;
  // Ghost triangle over hull edge x->y: conflicts when p is strictly outside
  // the hull across that edge, or lies on the open segment itself.
  const auto& x = at(t.v[(g + 1) % 3]);
  const auto& y = at(t.v[(g + 2) % 3]);
  const int o = orient2d(x, y, p);
  if (o != 0) return o > 0;
  return (p - x).dot(y - x) > 0 && (p - y).dot(x - y) > 0;
}

std::int32_t Builder::locate(const Eigen::Vector2d& p) const {
  std::int32_t t = last_;
  if (!tris_[t].alive) {
    t = 0;
    while (!tris_[t].alive) ++t;
  }
  if (int g = tris_[t].ghost_slot(); g >= 0) t = tris_[t].n[g];

  const std::size_t max_steps = tris_.size() + 16;
  int rotate = 0;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Tri& tri = tris_[t];
    bool moved = false;
    for (int e = 0; e < 3; ++e) {
      const int k = (e + rotate) % 3;
      const std::int32_t a = tri.v[(k + 1) % 3];
      const std::int32_t b = tri.v[(k + 2) % 3];
      if (orient2d(at(a), at(b), p) < 0) {
        t = tri.n[k];
        if (tris_[t].ghost_slot() >= 0) return t;
        moved = true;
        break;
      }
    }
    if (!moved) return t;
    rotate = (rotate + 1) % 3;
  }
  // Walk did not settle; fall back to a scan for any conflicting triangle.
  for (std::size_t i = 0; i < tris_.size(); ++i)
    if (tris_[i].alive && in_conflict(tris_[i], p)) return static_cast<std::int32_t>(i);
  throw Error("delaunay_xy: point location failed");
}

bool Builder::insert(std::int32_t vertex) {
  const Eigen::Vector2d& p = at(vertex);
  const std::int32_t start = locate(p);
  for (std::int32_t v : tris_[start].v)
    if (v != kGhost && at(v) == p) return false;  // XY duplicate

  ++epoch_;
  std::vector<std::int32_t> cavity{start};
  stamp_[start] = epoch_;
  struct BoundaryEdge {
    std::int32_t a, b, outside;
  };
  std::vector<BoundaryEdge> boundary;
  for (std::size_t i = 0; i < cavity.size(); ++i) {
    const std::int32_t t = cavity[i];
    for (int k = 0; k < 3; ++k) {
      const std::int32_t nb = tris_[t].n[k];
      if (stamp_[nb] == epoch_) continue;
      if (in_conflict(tris_[nb], p)) {
        stamp_[nb] = epoch_;
        cavity.push_back(nb);
      } else {
        boundary.push_back({tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3], nb});
      }
    }
  }
  // Boundary neighbors keep the conflict stamp test valid only for the cavity;
  // clear stamps of deleted slots before reuse.
  for (std::int32_t t : cavity) {
    tris_[t].alive = false;
    free_.push_back(t);
  }

  std::unordered_map<std::uint64_t, std::pair<std::int32_t, int>> open_edges;
  open_edges.reserve(boundary.size() * 2);
  for (const auto& e : boundary) {
    const std::int32_t id = new_tri(e.a, e.b, vertex);
    stamp_[id] = 0;
    Tri& t = tris_[id];
    t.n[2] = e.outside;
    Tri& out = tris_[e.outside];
    for (int k = 0; k < 3; ++k) {
      if (out.v[(k + 1) % 3] == e.b && out.v[(k + 2) % 3] == e.a) {
        out.n[k] = id;
        break;
      }
    }
    // Edges (b, p) opposite a and (p, a) opposite b pair up with twins.
    const std::array<std::pair<std::uint64_t, int>, 2> edges{
        {{edge_key(e.b, vertex), 0}, {edge_key(vertex, e.a), 1}}};
    const std::array<std::uint64_t, 2> twins{edge_key(vertex, e.b), edge_key(e.a, vertex)};
    for (int s = 0; s < 2; ++s) {
      auto it = open_edges.find(twins[s]);
      if (it != open_edges.end()) {
        tris_[id].n[edges[s].second] = it->second.first;
        tris_[it->second.first].n[it->second.second] = id;
        open_edges.erase(it);
      } else {
        open_edges.emplace(edges[s].first, std::make_pair(id, edges[s].second));
      }
    }
    last_ = id;
  }
  if (!open_edges.empty()) throw Error("delaunay_xy: cavity boundary did not close");
  return true;
}

void Builder::flip(std::int32_t t, int slot) {
  const std::int32_t u = tris_[t].n[slot];
  const int j = tris_[u].slot_of_neighbor(t);
  const std::int32_t c = tris_[t].v[slot];
  const std::int32_t a = tris_[t].v[(slot + 1) % 3];
  const std::int32_t b = tris_[t].v[(slot + 2) % 3];
  const std::int32_t d = tris_[u].v[j];
  const std::int32_t n_ca = tris_[t].n[(slot + 2) % 3];
  const std::int32_t n_bc = tris_[t].n[(slot + 1) % 3];
  const std::int32_t n_ad = tris_[u].n[(j + 1) % 3];
  const std::int32_t n_db = tris_[u].n[(j + 2) % 3];

  tris_[t].v = {c, a, d};
  tris_[t].n = {n_ad, u, n_ca};
  tris_[u].v = {d, b, c};
  tris_[u].n = {n_bc, t, n_db};
  tris_[n_ad].n[tris_[n_ad].slot_of_neighbor(u)] = t;
  tris_[n_bc].n[tris_[n_bc].slot_of_neighbor(t)] = u;
}

void Builder::break_cocircular_ties() {
  for (int pass = 0; pass < 16; ++pass) {
    bool flipped = false;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const auto t = static_cast<std::int32_t>(i);
      if (!tris_[t].alive || tris_[t].ghost_slot() >= 0) continue;
      for (int k = 0; k < 3; ++k) {
        const std::int32_t u = tris_[t].n[k];
        if (u < t || tris_[u].ghost_slot() >= 0) continue;
        const Tri& tri = tris_[t];
        const std::int32_t c = tri.v[k];
        const std::int32_t a = tri.v[(k + 1) % 3];
        const std::int32_t b = tri.v[(k + 2) % 3];
        const std::int32_t d = tris_[u].v[tris_[u].slot_of_neighbor(t)];
        if (std::min(c, d) >= std::min(a, b)) continue;
        if (incircle(at(tri.v[0]), at(tri.v[1]), at(tri.v[2]), at(d)) != 0) continue;
        flip(t, k);
        flipped = true;
        break;
      }
    }
    if (!flipped) return;
  }
}

TriangleMesh Builder::extract() const {
  TriangleMesh mesh;
  std::vector<std::int64_t> compact(tris_.size(), TriangleMesh::kNoNeighbor);
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    if (!tris_[i].alive || tris_[i].ghost_slot() >= 0) continue;
    compact[i] = static_cast<std::int64_t>(mesh.triangles.size());
    const auto& v = tris_[i].v;
    mesh.triangles.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                              static_cast<std::size_t>(v[2])});
  }
  mesh.adjacency.reserve(mesh.triangles.size());
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    if (compact[i] == TriangleMesh::kNoNeighbor) continue;
    std::array<std::int64_t, 3> adj;
    for (int k = 0; k < 3; ++k) adj[k] = compact[tris_[i].n[k]];
    mesh.adjacency.push_back(adj);
  }
  mesh.vertices.assign(inserted_.begin(), inserted_.end());
  std::sort(mesh.vertices.begin(), mesh.vertices.end());
  return mesh;
}

TriangleMesh Builder::run() {
  if (xy_.size() < 3) throw Error("delaunay_xy: need at least 3 points");
  const auto order = insertion_order();

  // Seed with the first non-degenerate triple in insertion order.
  const std::int32_t a = order[0];
  std::size_t ib = 1;
  while (ib < order.size() && at(order[ib]) == at(a)) ++ib;
  std::size_t ic = ib + 1;
  while (ic < order.size() && (ib >= order.size() || orient2d(at(a), at(order[ib]), at(order[ic])) == 0))
    ++ic;
  if (ib >= order.size() || ic >= order.size())
    throw Error("delaunay_xy: all points are collinear in XY");
  std::int32_t b = order[ib];
  std::int32_t c = order[ic];
  if (orient2d(at(a), at(b), at(c)) < 0) std::swap(b, c);

  const std::int32_t t0 = new_tri(a, b, c);
  const std::int32_t g_ab = new_tri(b, a, kGhost);
  const std::int32_t g_bc = new_tri(c, b, kGhost);
  const std::int32_t g_ca = new_tri(a, c, kGhost);
  tris_[t0].n = {g_bc, g_ca, g_ab};
  tris_[g_ab].n = {g_ca, g_bc, t0};
  tris_[g_bc].n = {g_ab, g_ca, t0};
  tris_[g_ca].n = {g_bc, g_ab, t0};
  inserted_ = {a, b, c};
  last_ = t0;

  for (std::size_t i = 1; i < order.size(); ++i) {
    if (i == ib || i == ic) continue;
    if (insert(order[i])) inserted_.push_back(order[i]);
  }
  break_cocircular_ties();
  return extract();
}

}  // namespace

TriangleMesh delaunay_xy(const PointCloud& cloud) { return Builder(cloud).run(); }

}  // namespace tlsdeform
