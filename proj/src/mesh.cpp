#include "graspforge/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "graspforge/rng.hpp"

namespace graspforge {

double TriangleMesh::area(std::size_t t) const {
  return 0.5 * (corner(t, 1) - corner(t, 0)).cross(corner(t, 2) - corner(t, 0)).norm();
}

TriangleMesh make_mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles) {
  std::vector<std::string> problems;
  const int nv = static_cast<int>(vertices.size());
  TriangleMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  m.normals.resize(m.triangles.size(), Vec3::UnitZ());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    bool in_range = true;
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv) {
        problems.push_back("triangle " + std::to_string(t) + ": vertex index out of range");
        in_range = false;
        break;
      }
    }
    if (!in_range) continue;
    const Vec3 n = (m.corner(t, 1) - m.corner(t, 0)).cross(m.corner(t, 2) - m.corner(t, 0));
    if (0.5 * n.norm() <= 1e-12) {
      problems.push_back("triangle " + std::to_string(t) + ": degenerate (area <= 1e-12)");
      continue;
    }
    m.normals[t] = n.normalized();
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return m;
}

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) ++directed[{tri[k], tri[(k + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

double max_edge_length(const TriangleMesh& mesh) {
  double best = 0.0;
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      best = std::max(best, (mesh.corner(t, k) - mesh.corner(t, (k + 1) % 3)).norm());
    }
  }
  return best;
}

Aabb bounds(const TriangleMesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.expand(v);
  return box;
}

Vec3 mesh_centroid(const TriangleMesh& mesh) {
  if (is_watertight(mesh)) {
    double volume = 0.0;
    Vec3 acc = Vec3::Zero();
    for (std::size_t t = 0; t < mesh.size(); ++t) {
      const Vec3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
      const double v = a.dot(b.cross(c)) / 6.0;
      volume += v;
      acc += v * (a + b + c) / 4.0;
    }
    if (std::abs(volume) > 1e-18) return acc / volume;
  }
  double area = 0.0;
  Vec3 acc = Vec3::Zero();
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const double a = mesh.area(t);
    area += a;
    acc += a * (mesh.corner(t, 0) + mesh.corner(t, 1) + mesh.corner(t, 2)) / 3.0;
  }
  return area > 0.0 ? Vec3(acc / area) : Vec3::Zero();
}

TriangleMesh transformed(const TriangleMesh& mesh, const Iso3& x, double scale) {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) verts.push_back(x * (scale * v));
  return make_mesh(std::move(verts), mesh.triangles);
}

namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

// Corner order starting at the lexicographically smallest vertex, keeping
// the winding.
std::array<Vec3, 3> canonical_corners(const TriangleMesh& mesh, std::size_t t) {
  std::array<Vec3, 3> c{mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)};
  int first = 0;
  for (int k = 1; k < 3; ++k) {
    if (lex_less(c[k], c[first])) first = k;
  }
  return {c[first], c[(first + 1) % 3], c[(first + 2) % 3]};
}

}  // namespace

OrientedPointSet sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw DegenerateGeometryError("cannot sample an empty mesh");
  const std::size_t nt = mesh.size();
  std::vector<std::array<Vec3, 3>> corners(nt);
  for (std::size_t t = 0; t < nt; ++t) corners[t] = canonical_corners(mesh, t);

  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ca = corners[a];
    const auto& cb = corners[b];
    for (int k = 0; k < 3; ++k) {
      if (lex_less(ca[k], cb[k])) return true;
      if (lex_less(cb[k], ca[k])) return false;
    }
    return a < b;
  });

  std::vector<double> cumulative(nt);
  double total = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    total += mesh.area(order[i]);
    cumulative[i] = total;
  }

  Rng rng(seed);
  OrientedPointSet out;
  out.points.reserve(count);
  out.normals.reserve(count);
  out.source_triangle.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t slot = std::min<std::size_t>(it - cumulative.begin(), nt - 1);
    const int t = order[slot];
    const double r1 = std::sqrt(uniform01(rng));
    const double r2 = uniform01(rng);
    const auto& c = corners[t];
    out.points.push_back((1.0 - r1) * c[0] + r1 * (1.0 - r2) * c[1] + r1 * r2 * c[2]);
    out.normals.push_back(mesh.normals[t]);
    out.source_triangle.push_back(t);
  }
  return out;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

IndexedMesh::IndexedMesh(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.triangles.empty()) throw DegenerateGeometryError("mesh has no triangles");
  watertight_ = is_watertight(mesh_);
  if (watertight_) {
    double volume = 0.0;
    for (std::size_t t = 0; t < mesh_.size(); ++t) {
      volume += mesh_.corner(t, 0).dot(mesh_.corner(t, 1).cross(mesh_.corner(t, 2)));
    }
    orientation_ = volume < 0.0 ? -1.0 : 1.0;
  }
  order_.resize(mesh_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * mesh_.size());
  build(0, static_cast<int>(order_.size()));
}

int IndexedMesh::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  Aabb box, centers;
  for (int i = begin; i < end; ++i) {
    const int t = order_[i];
    for (int k = 0; k < 3; ++k) box.expand(mesh_.corner(t, k));
    centers.expand((mesh_.corner(t, 0) + mesh_.corner(t, 1) + mesh_.corner(t, 2)) / 3.0);
  }
  nodes_[id].box = box;
  if (end - begin <= 4) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  int axis = 0;
  centers.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  auto center = [&](int t) {
    return mesh_.corner(t, 0)[axis] + mesh_.corner(t, 1)[axis] + mesh_.corner(t, 2)[axis];
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = center(a), cb = center(b);
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

SurfacePoint IndexedMesh::nearest(const Vec3& q) const {
  SurfacePoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squared_distance(q) > best_d2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int t = order_[i];
        const Vec3 p = closest_point_on_triangle(q, mesh_.corner(t, 0), mesh_.corner(t, 1),
                                                 mesh_.corner(t, 2));
        const double d2 = (p - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && t < best.triangle)) {
          best_d2 = d2;
          best.point = p;
          best.triangle = t;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squared_distance(q);
    const double dr = nodes_[node.right].box.squared_distance(q);
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  best.distance = std::sqrt(best_d2);
  best.normal = mesh_.normals[best.triangle];
  return best;
}

namespace {

bool ray_box(const Aabb& box, const Vec3& o, const Vec3& inv, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double tn = (box.lo[a] - o[a]) * inv[a];
    double tf = (box.hi[a] - o[a]) * inv[a];
    if (tn > tf) std::swap(tn, tf);
    t0 = std::max(t0, tn);
    t1 = std::min(t1, tf);
    if (t0 > t1) return false;
  }
  return true;
}

std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                                   const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-18) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = s.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qv) * inv;
  if (t <= 1e-12) return std::nullopt;
  return t;
}

}  // namespace

std::optional<RayHit> IndexedMesh::raycast(const Vec3& origin, const Vec3& dir, double t_max) const {
  const Vec3 inv = dir.cwiseInverse();
  std::optional<RayHit> best;
  double best_t = t_max;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_box(node.box, origin, inv, best_t)) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int t = order_[i];
        auto hit = ray_triangle(origin, dir, mesh_.corner(t, 0), mesh_.corner(t, 1), mesh_.corner(t, 2));
        if (hit && (*hit < best_t || (best && *hit == best_t && t < best->triangle))) {
          best_t = *hit;
          best = RayHit{*hit, t};
        }
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return best;
}

SurfacePoint nearest_surface_point(const IndexedMesh& mesh, const Vec3& query) {
  return mesh.nearest(query);
}

SurfacePoint nearest_surface_point_bruteforce(const TriangleMesh& mesh, const Vec3& query) {
  SurfacePoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const Vec3 p = closest_point_on_triangle(query, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    const double d2 = (p - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = p;
      best.triangle = static_cast<int>(t);
    }
  }
  if (best.triangle >= 0) best.normal = mesh.normals[best.triangle];
  best.distance = std::sqrt(best_d2);
  return best;
}

double winding_number(const TriangleMesh& mesh, const Vec3& q) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const Vec3 a = mesh.corner(t, 0) - q, b = mesh.corner(t, 1) - q, c = mesh.corner(t, 2) - q;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

double signed_distance(const IndexedMesh& mesh, const Vec3& query, SurfacePoint& nearest) {
  if (!mesh.watertight()) {
    throw DegenerateGeometryError("signed distance requires a watertight mesh");
  }
  nearest = mesh.nearest(query);
  // A closed surface has winding number 0 everywhere outside its bounding box.
  if (!mesh.box().contains(query)) return nearest.distance;
  if (nearest.distance > 0.0) {
    // Nearest point strictly inside a face: the face plane decides the side.
    const TriangleMesh& m = mesh.mesh();
    const Vec3 a = m.corner(nearest.triangle, 0), b = m.corner(nearest.triangle, 1),
               c = m.corner(nearest.triangle, 2);
    const Vec3 n = (b - a).cross(c - a);
    const double area2 = n.squaredNorm();
    const double wa = (b - nearest.point).cross(c - nearest.point).dot(n) / area2;
    const double wb = (c - nearest.point).cross(a - nearest.point).dot(n) / area2;
    const double wc = 1.0 - wa - wb;
    constexpr double kInterior = 1e-6;
    if (wa > kInterior && wb > kInterior && wc > kInterior) {
      const double side = mesh.orientation() * n.dot(query - nearest.point);
      return side < 0.0 ? -nearest.distance : nearest.distance;
    }
  }
  const bool inside = std::abs(winding_number(mesh.mesh(), query)) > 0.5;
  return inside ? -nearest.distance : nearest.distance;
}

double signed_distance(const IndexedMesh& mesh, const Vec3& query) {
  SurfacePoint unused;
  return signed_distance(mesh, query, unused);
}

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(points_.size() / 2 + 4);
    build(0, static_cast<int>(points_.size()));
  }
}

int PointIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  Aabb box;
  for (int i = begin; i < end; ++i) box.expand(points_[order_[i]]);
  nodes_[id].box = box;
  if (end - begin <= 8) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  int axis = 0;
  box.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = points_[a][axis], cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointIndex::nearest_rec(int id, const Vec3& q, int& best, double& best_d2) const {
  const Node& node = nodes_[id];
  if (node.box.squared_distance(q) > best_d2) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int p = order_[i];
      const double d2 = (points_[p] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && p < best)) {
        best_d2 = d2;
        best = p;
      }
    }
    return;
  }
  const double dl = nodes_[node.left].box.squared_distance(q);
  const double dr = nodes_[node.right].box.squared_distance(q);
  if (dl <= dr) {
    nearest_rec(node.left, q, best, best_d2);
    nearest_rec(node.right, q, best, best_d2);
  } else {
    nearest_rec(node.right, q, best, best_d2);
    nearest_rec(node.left, q, best, best_d2);
  }
}

std::pair<int, double> PointIndex::nearest(const Vec3& query) const {
  if (points_.empty()) return {-1, std::numeric_limits<double>::infinity()};
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(0, query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

std::vector<int> PointIndex::within(const Vec3& query, double radius) const {
  std::vector<int> out;
  if (points_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squared_distance(query) > r2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        if ((points_[order_[i]] - query).squaredNorm() <= r2) out.push_back(order_[i]);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<int, double> nearest_point(const PointIndex& index, const Vec3& query) {
  return index.nearest(query);
}

std::pair<int, double> nearest_point_bruteforce(const std::vector<Vec3>& points, const Vec3& query) {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return {best, std::sqrt(best_d2)};
}

namespace {

// Convex primitives only: orient every triangle away from `center`.
void orient_outward(std::vector<Vec3>& verts, std::vector<Triangle>& tris, const Vec3& center) {
  for (auto& t : tris) {
    const Vec3 n = (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
    const Vec3 c = (verts[t[0]] + verts[t[1]] + verts[t[2]]) / 3.0;
    if (n.dot(c - center) < 0.0) std::swap(t[1], t[2]);
  }
}

}  // namespace

TriangleMesh make_uv_sphere(double radius, int slices, int stacks, const Vec3& center) {
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  verts.push_back(center + Vec3(0, 0, radius));
  for (int i = 1; i < stacks; ++i) {
    const double phi = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / slices;
      verts.push_back(center + radius * Vec3(std::sin(phi) * std::cos(theta),
                                             std::sin(phi) * std::sin(theta), std::cos(phi)));
    }
  }
  verts.push_back(center + Vec3(0, 0, -radius));
  const int south = static_cast<int>(verts.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * slices + (j % slices); };
  for (int j = 0; j < slices; ++j) tris.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < stacks - 1; ++i) {
    for (int j = 0; j < slices; ++j) {
      tris.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      tris.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  }
  for (int j = 0; j < slices; ++j) tris.push_back({south, ring(stacks - 1, j + 1), ring(stacks - 1, j)});
  orient_outward(verts, tris, center);
  return make_mesh(std::move(verts), std::move(tris));
}

TriangleMesh make_box(const Vec3& h, const Vec3& center) {
  std::vector<Vec3> verts;
  for (int i = 0; i < 8; ++i) {
    verts.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                  (i & 4) ? h.z() : -h.z()));
  }
  std::vector<Triangle> tris = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5}, {0, 4, 5}, {0, 5, 1},
                                {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
  orient_outward(verts, tris, center);
  return make_mesh(std::move(verts), std::move(tris));
}

}  // namespace graspforge
