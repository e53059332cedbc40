#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "graspforge/mesh.hpp"
#include "graspforge/mesh_io.hpp"
#include "graspforge/object_model.hpp"

using namespace graspforge;
using namespace fixtures;

namespace {

const TriangleMesh& unit_sphere() {
  static const TriangleMesh m = make_uv_sphere(1.0, 32, 32);
  return m;
}

const IndexedMesh& unit_sphere_indexed() {
  static const IndexedMesh m(unit_sphere());
  return m;
}

Vec3 random_point(Rng& rng, double scale) { return scale * Vec3(normal01(rng), normal01(rng), normal01(rng)); }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("surface samples follow face areas") {
    const auto cube = make_box(Vec3::Constant(0.5));
    const auto s = sample_surface(cube, 6000, 7);
    REQUIRE(s.size() == 6000);
    // Faces keyed by outward axis.
    std::map<std::pair<int, int>, int> counts;
    for (std::size_t i = 0; i < s.size(); ++i) {
      int axis = 0;
      s.normals[i].cwiseAbs().maxCoeff(&axis);
      counts[{axis, s.normals[i][axis] > 0 ? 1 : -1}]++;
    }
    REQUIRE(counts.size() == 6);
    const double sigma = std::sqrt(6000.0 * (1.0 / 6.0) * (5.0 / 6.0));
    for (const auto& [face, c] : counts) CHECK(std::abs(c - 1000.0) <= 3.0 * sigma);
  }

  TEST_CASE("samples of a single triangle lie inside it") {
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0.2, 0.9, 0.3);
    const auto tri = make_mesh({a, b, c}, {{0, 1, 2}});
    const auto s = sample_surface(tri, 500, 3);
    Eigen::Matrix<double, 3, 2> m;
    m << b - a, c - a;
    for (const auto& p : s.points) {
      const Eigen::Vector2d uv = m.colPivHouseholderQr().solve(p - a);
      CHECK(uv[0] >= -1e-12);
      CHECK(uv[1] >= -1e-12);
      CHECK(uv[0] + uv[1] <= 1.0 + 1e-12);
      CHECK((m * uv + a - p).norm() < 1e-12);
    }
  }

  TEST_CASE("sampling is deterministic and ignores triangle order") {
    const auto& sphere = unit_sphere();
    const auto a = sample_surface(sphere, 300, 11);
    const auto b = sample_surface(sphere, 300, 11);
    CHECK(a.points == b.points);
    auto shuffled = sphere;
    Rng rng(1);
    std::shuffle(shuffled.triangles.begin(), shuffled.triangles.end(), rng);
    shuffled = make_mesh(shuffled.vertices, shuffled.triangles);
    const auto c = sample_surface(shuffled, 300, 11);
    CHECK(c.points == a.points);
    CHECK(sample_surface(sphere, 300, 12).points != a.points);
  }

  TEST_CASE("nearest surface point on a sphere") {
    const auto& mesh = unit_sphere_indexed();
    const double eps = discretization_epsilon(mesh.mesh());
    MESSAGE("discretization epsilon " << eps);
    const auto far = mesh.nearest(Vec3(2, 0, 0));
    CHECK((far.point - Vec3(1, 0, 0)).norm() <= eps);
    CHECK(std::abs(far.distance - 1.0) <= eps);
    for (std::size_t v = 0; v < mesh.mesh().vertices.size(); v += 17) {
      CHECK(mesh.nearest(mesh.mesh().vertices[v]).distance <= 1e-9);
    }
  }

  TEST_CASE("BVH nearest point matches an exhaustive scan") {
    const auto small = make_uv_sphere(1.0, 5, 6, Vec3(0.1, -0.2, 0.3));
    REQUIRE(small.size() == 50);
    Rng rng(2);
    for (const auto* m : {&small, &unit_sphere()}) {
      const IndexedMesh idx(*m);
      for (int q = 0; q < 100; ++q) {
        const Vec3 p = random_point(rng, 1.0);
        const auto fast = idx.nearest(p);
        const auto slow = nearest_surface_point_bruteforce(*m, p);
        CHECK(fast.distance == doctest::Approx(slow.distance).epsilon(1e-12));
        CHECK((fast.point - slow.point).norm() < 1e-9);
      }
    }
  }

  TEST_CASE("point index queries") {
    Rng rng(3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back(random_point(rng, 1.0));
    const PointIndex index(pts);
    CHECK(index.nearest(pts[123]).first == 123);
    CHECK(index.nearest(pts[123]).second == 0.0);
    for (int q = 0; q < 100; ++q) {
      const Vec3 p = random_point(rng, 1.2);
      const auto fast = index.nearest(p);
      const auto slow = nearest_point_bruteforce(pts, p);
      CHECK(fast.first == slow.first);
      CHECK(fast.second == slow.second);
      std::vector<int> within;
      for (int i = 0; i < 1000; ++i) {
        if ((pts[i] - p).norm() <= 0.3) within.push_back(i);
      }
      CHECK(index.within(p, 0.3) == within);
    }
    const PointIndex tie({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)});
    CHECK(tie.nearest(Vec3::Zero()).first == 0);
    CHECK(PointIndex().nearest(Vec3::Zero()).first == -1);
  }

  TEST_CASE("signed distance of a sphere") {
    const auto& mesh = unit_sphere_indexed();
    const double eps = discretization_epsilon(mesh.mesh());
    CHECK(std::abs(signed_distance(mesh, Vec3::Zero()) + 1.0) <= eps);
    CHECK(std::abs(signed_distance(mesh, Vec3(0, 2, 0)) - 1.0) <= eps);
    CHECK(std::abs(signed_distance(mesh, mesh.mesh().vertices[40])) <= eps);
    CHECK(winding_number(mesh.mesh(), Vec3(0.1, 0.2, -0.3)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(winding_number(mesh.mesh(), Vec3(1.5, 0.2, -0.3))) < 1e-9);

    // The sign flips exactly once along rays leaving the interior.
    Rng rng(4);
    for (int ray = 0; ray < 10; ++ray) {
      const Vec3 dir = random_point(rng, 1.0).normalized();
      const Vec3 origin = 0.3 * random_point(rng, 1.0).normalized() * uniform01(rng);
      int flips = 0;
      double prev = signed_distance(mesh, origin);
      for (int k = 1; k <= 2000; ++k) {
        const double cur = signed_distance(mesh, origin + 1e-3 * k * dir);
        if ((cur > 0) != (prev > 0)) ++flips;
        prev = cur;
      }
      CHECK(flips == 1);
    }
  }

  TEST_CASE("signed distance agrees with the winding number on a flipped mesh") {
    auto flipped = unit_sphere();
    for (auto& t : flipped.triangles) std::swap(t[1], t[2]);
    const IndexedMesh mesh(make_mesh(flipped.vertices, flipped.triangles));
    CHECK(mesh.orientation() == -1.0);
    CHECK(signed_distance(mesh, Vec3::Zero()) < -0.9);
    CHECK(signed_distance(mesh, Vec3(0.0, 0.0, 1.5)) > 0.4);
  }

  TEST_CASE("watertightness and mesh validation") {
    const auto box = make_box(Vec3(0.1, 0.2, 0.3));
    CHECK(is_watertight(box));
    CHECK(is_watertight(unit_sphere()));
    auto open = box;
    open.triangles.pop_back();
    open = make_mesh(open.vertices, open.triangles);
    CHECK_FALSE(is_watertight(open));
    CHECK_THROWS_AS(signed_distance(IndexedMesh(open), Vec3::Zero()), DegenerateGeometryError);
    CHECK_THROWS_AS(make_mesh({Vec3::Zero(), Vec3::UnitX()}, {{0, 1, 2}}), ValidationError);
    CHECK_THROWS_AS(make_mesh({Vec3::Zero(), Vec3::UnitX(), 2.0 * Vec3::UnitX()}, {{0, 1, 2}}), ValidationError);
    CHECK(max_edge_length(box) == doctest::Approx(std::sqrt(0.4 * 0.4 + 0.6 * 0.6)).epsilon(1e-12));
  }

  TEST_CASE("mesh and image files round trip") {
    const auto dir = scratch_dir("geometry_io");
    const auto& sphere = unit_sphere();
    save_obj(dir / "s.obj", sphere);
    save_ply_mesh(dir / "s.ply", sphere);
    for (const auto& p : {dir / "s.obj", dir / "s.ply"}) {
      const auto back = load_mesh(p);
      REQUIRE(back.size() == sphere.size());
      REQUIRE(back.vertices.size() == sphere.vertices.size());
      double err = 0.0;
      for (std::size_t i = 0; i < back.vertices.size(); ++i) {
        err = std::max(err, (back.vertices[i] - sphere.vertices[i]).norm());
      }
      CHECK(err < 1e-6);
      CHECK(back.triangles == sphere.triangles);
    }
    const auto pts = sample_surface(sphere, 50, 1);
    save_ply_points(dir / "p.ply", pts);
    const auto pback = load_ply_points(dir / "p.ply");
    REQUIRE(pback.size() == 50);
    CHECK((pback.points[7] - pts.points[7]).norm() < 1e-6);
    CHECK((pback.normals[7] - pts.normals[7]).norm() < 1e-6);

    FloatImage img{3, 2, {1, 2, 3, 4, 5, std::numeric_limits<float>::quiet_NaN()}};
    write_pfm(dir / "d.pfm", img);
    const auto iback = read_pfm(dir / "d.pfm");
    CHECK(iback.width == 3);
    CHECK(iback.height == 2);
    CHECK(iback.data[0] == 1.0f);
    CHECK(iback.data[4] == 5.0f);
    CHECK(std::isnan(iback.data[5]));

    std::ofstream(dir / "bad.obj") << "v 0 0 0\nv 1 0 0\nf 1 2 9\n";
    CHECK_THROWS(load_mesh(dir / "bad.obj"));
  }

  TEST_CASE("object model regions") {
    const auto& obj = sparse_sphere_object();
    CHECK(obj.surface.size() == 200);
    CHECK(obj.extent == doctest::Approx(2 * kSphereRadius).epsilon(1e-3));
    CHECK(obj.centroid.norm() < 1e-3);
    for (const auto& p : obj.surface.points) CHECK(obj.mesh->nearest(p).distance < 1e-12);
    RegionSpec ball;
    ball.by_ball = true;
    ball.center = Vec3(kSphereRadius, 0, 0);
    ball.radius = 0.02;
    const auto idx = resolve_region(obj, ball);
    CHECK_FALSE(idx.empty());
    for (std::size_t i = 0; i < obj.surface.size(); ++i) {
      const bool inside = (obj.surface.points[i] - ball.center).norm() <= ball.radius;
      CHECK(inside == std::binary_search(idx.begin(), idx.end(), static_cast<int>(i)));
    }
    RegionSpec bad;
    bad.indices = {5000};
    CHECK_THROWS_AS(resolve_region(obj, bad), ValidationError);
    const auto scaled = make_object_model("s", make_uv_sphere(1.0, 16, 16), 100, 1, 0.05);
    CHECK(scaled.extent == doctest::Approx(0.1).epsilon(1e-3));
  }
}
