#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "graspforge/common.hpp"

namespace graspforge {

enum class Execution { kSerial, kParallel };

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double squared_distance(const Vec3& p) const {
    return (lo - p).cwiseMax(p - hi).cwiseMax(0.0).squaredNorm();
  }
  Vec3 extent() const { return hi - lo; }
};

using Triangle = std::array<int, 3>;

/// Triangle soup with per-triangle outward unit normals. Build through
/// make_mesh(), which checks index ranges and rejects degenerate triangles.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> normals;

  std::size_t size() const { return triangles.size(); }
  Vec3 corner(std::size_t t, int k) const { return vertices[triangles[t][k]]; }
  double area(std::size_t t) const;
};

TriangleMesh make_mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

/// Every undirected edge is shared by exactly two triangles that traverse it
/// in opposite directions.
bool is_watertight(const TriangleMesh& mesh);
double max_edge_length(const TriangleMesh& mesh);
/// Discretization tolerance used by analytic-geometry checks: 2x max edge.
inline double discretization_epsilon(const TriangleMesh& mesh) { return 2.0 * max_edge_length(mesh); }
Aabb bounds(const TriangleMesh& mesh);
/// Volume centroid for closed meshes, area centroid otherwise.
Vec3 mesh_centroid(const TriangleMesh& mesh);
TriangleMesh transformed(const TriangleMesh& mesh, const Iso3& x, double scale = 1.0);

/// Points with unit normals; `source_triangle` is filled by surface sampling.
struct OrientedPointSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> source_triangle;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Area-weighted uniform samples, deterministic per seed. Triangles are
/// visited in a canonical order so the result does not depend on how the
/// input triangles are listed.
OrientedPointSet sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct SurfacePoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double distance = std::numeric_limits<double>::infinity();
  int triangle = -1;
};

struct RayHit {
  double t = 0.0;
  int triangle = -1;
};

/// Triangle mesh plus an axis-aligned bounding-volume hierarchy. Immutable
/// after construction; all queries are const and thread-safe.
class IndexedMesh {
 public:
  explicit IndexedMesh(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }
  bool watertight() const { return watertight_; }
  /// +1 when triangle winding faces outward, -1 when inward (closed meshes).
  double orientation() const { return orientation_; }
  const Aabb& box() const { return nodes_.front().box; }

  SurfacePoint nearest(const Vec3& query) const;
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir,
                                double t_max = std::numeric_limits<double>::infinity()) const;

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };
  int build(int begin, int end);

  TriangleMesh mesh_;
  bool watertight_ = false;
  double orientation_ = 1.0;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

SurfacePoint nearest_surface_point(const IndexedMesh& mesh, const Vec3& query);
/// Exhaustive per-triangle scan; kept as the oracle for the BVH path.
SurfacePoint nearest_surface_point_bruteforce(const TriangleMesh& mesh, const Vec3& query);

/// Generalized winding number (sum of signed solid angles / 4 pi).
double winding_number(const TriangleMesh& mesh, const Vec3& query);

/// Negative inside. Throws DegenerateGeometryError for an open mesh.
double signed_distance(const IndexedMesh& mesh, const Vec3& query);
/// Signed distance together with the nearest surface point it was measured to.
double signed_distance(const IndexedMesh& mesh, const Vec3& query, SurfacePoint& nearest);

/// Static k-d tree over a point list. Nearest queries break ties toward the
/// lowest index; radius queries are inclusive.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// (index, distance); index -1 when empty.
  std::pair<int, double> nearest(const Vec3& query) const;
  /// Ascending indices of all points within `radius` (inclusive).
  std::vector<int> within(const Vec3& query, double radius) const;

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };
  int build(int begin, int end);
  void nearest_rec(int node, const Vec3& q, int& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

std::pair<int, double> nearest_point(const PointIndex& index, const Vec3& query);
std::pair<int, double> nearest_point_bruteforce(const std::vector<Vec3>& points, const Vec3& query);

TriangleMesh make_uv_sphere(double radius, int slices, int stacks, const Vec3& center = Vec3::Zero());
TriangleMesh make_box(const Vec3& half_extent, const Vec3& center = Vec3::Zero());

}  // namespace graspforge
