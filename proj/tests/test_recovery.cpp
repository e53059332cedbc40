#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "graspforge/dro_recovery.hpp"
#include "graspforge/kinematics.hpp"

using namespace graspforge;
using namespace fixtures;

namespace {

double percentile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(std::ceil(0.95 * v.size())) - 1];
}

Grasp perturbed(const HandModel& hand, const Grasp& g, Rng& rng, double dt, double dr) {
  Grasp out = g;
  out.translation += dt * Vec3(normal01(rng), normal01(rng), normal01(rng)).normalized();
  out.rotation = (exp_rotation(dr * Vec3(normal01(rng), normal01(rng), normal01(rng)).normalized()) * g.rotation)
                     .normalized();
  for (int j = 0; j < hand.dof(); ++j) {
    out.joints[j] = std::clamp(out.joints[j] + 0.1 * (2.0 * uniform01(rng) - 1.0), hand.joints[j].lower,
                               hand.joints[j].upper);
  }
  return out;
}

double rotation_angle(const Quat& a, const Quat& b) { return a.angularDistance(b); }

}  // namespace

TEST_SUITE("recovery") {
  TEST_CASE("distance matrix matches direct pairwise computation") {
    const auto& hand = toy_hand();
    Rng rng(1);
    const Grasp g = random_grasp(hand, rng);
    const auto all = select_hand_points(hand, 0);
    std::vector<HandPoint> five(all.begin(), all.begin() + 5);
    std::vector<Vec3> obj;
    for (int j = 0; j < 7; ++j) obj.emplace_back(uniform01(rng), uniform01(rng), uniform01(rng));
    const auto d = compute_distance_matrix(hand, g, five, obj);
    REQUIRE(d.rows() == 5);
    REQUIRE(d.cols() == 7);
    const auto st = forward_kinematics(hand, g);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 7; ++j) {
        const Vec3 h = st.link_world[five[i].link] * five[i].local;
        CHECK(d.values(i, j) == doctest::Approx((h - obj[j]).norm()).epsilon(1e-14));
      }
    }
    // A hand point placed on an object point gives a zero entry.
    obj[3] = st.link_world[five[2].link] * five[2].local;
    CHECK(compute_distance_matrix(hand, g, five, obj).values(2, 3) == 0.0);
    CHECK(pairwise_distances(hand_points_world(hand, g, five), obj, Execution::kParallel) ==
          pairwise_distances_reference(hand_points_world(hand, g, five), obj));
  }

  TEST_CASE("distance matrix is invariant under a joint rigid motion") {
    const auto& hand = toy_hand();
    const auto& obj = sparse_sphere_object();
    Rng rng(2);
    const Grasp g = random_grasp(hand, rng);
    const auto pts = select_hand_points(hand);
    const auto d0 = compute_distance_matrix(hand, g, pts, obj.surface.points);
    const Iso3 motion = make_iso(random_rotation(rng), Vec3(0.3, -0.2, 0.5));
    Grasp moved = g;
    moved.rotation = (Quat(motion.linear()) * g.rotation).normalized();
    moved.translation = motion * g.translation;
    std::vector<Vec3> moved_obj;
    for (const auto& p : obj.surface.points) moved_obj.push_back(motion * p);
    const auto d1 = compute_distance_matrix(hand, moved, pts, moved_obj);
    CHECK((d0.values - d1.values).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("hand point selection strides over every link") {
    const auto& hand = toy_hand();
    const auto pts = select_hand_points(hand);
    CHECK(pts.size() == 128);
    std::vector<int> per_link(hand.num_links(), 0);
    for (const auto& p : pts) ++per_link[p.link];
    for (int c : per_link) CHECK(c > 0);
  }

  TEST_CASE("multilateration on exact data") {
    const std::vector<Vec3> anchors = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    const std::vector<double> d = {0, 1, 1, 1};
    const auto m = multilaterate(anchors, d);
    CHECK(m.point.norm() < 1e-12);
    CHECK(m.residual < 1e-12);

    Rng rng(4);
    const Vec3 target(0.1, 0.2, 0.3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec3> a;
      std::vector<double> dist;
      for (int j = 0; j < 8; ++j) {
        a.emplace_back(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
        dist.push_back((target - a.back()).norm());
      }
      const auto r = multilaterate(a, dist);
      CHECK((r.point - target).norm() <= 1e-9);
      CHECK(r.residual <= 1e-9);
    }
  }

  TEST_CASE("multilateration under 1 mm range noise") {
    Rng rng(5);
    const Vec3 target(0.1, 0.2, 0.3);
    std::vector<double> errors;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Vec3> a;
      std::vector<double> dist;
      for (int j = 0; j < 8; ++j) {
        a.emplace_back(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
        dist.push_back((target - a.back()).norm() + 0.001 * normal01(rng));
      }
      errors.push_back((multilaterate(a, dist).point - target).norm());
    }
    MESSAGE("95th percentile error " << percentile95(errors));
    CHECK(percentile95(errors) <= 0.005);
  }

  TEST_CASE("multilateration rejects degenerate anchors") {
    const std::vector<Vec3> flat = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    const std::vector<double> d = {1, 1, 1, 1};
    CHECK_THROWS_AS(multilaterate(flat, d), DegenerateGeometryError);
    const std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK_THROWS_AS(multilaterate(three, std::vector<double>{1, 1, 1}), DegenerateGeometryError);
    CHECK_THROWS_AS(multilaterate(flat, std::vector<double>{1, 1}), DimensionError);
  }

  TEST_CASE("pose fitting is a fixed point at the generating grasp") {
    for (const HandModel* hand : {&toy_hand(), &six_dof_hand()}) {
      Rng rng(6);
      const Grasp g = random_grasp(*hand, rng);
      const auto pts = select_hand_points(*hand);
      const auto targets = hand_points_world(*hand, g, pts);
      const auto r = fit_pose_and_joints(targets, pts, *hand, g);
      CHECK(r.rms <= 1e-9);
      CHECK(r.converged);
    }
  }

  TEST_CASE("pose fitting recovers a perturbed start") {
    for (const HandModel* hand : {&toy_hand(), &six_dof_hand()}) {
      Rng rng(7);
      for (int trial = 0; trial < 5; ++trial) {
        const Grasp g = random_grasp(*hand, rng);
        const auto pts = select_hand_points(*hand);
        const auto targets = hand_points_world(*hand, g, pts);
        const auto r = fit_pose_and_joints(targets, pts, *hand, perturbed(*hand, g, rng, 0.02, 0.1));
        CHECK((r.grasp.translation - g.translation).norm() < 0.001);
        CHECK((r.grasp.joints - g.joints).cwiseAbs().maxCoeff() < 0.01);
        for (int j = 0; j < hand->dof(); ++j) {
          CHECK(r.grasp.joints[j] >= hand->joints[j].lower);
          CHECK(r.grasp.joints[j] <= hand->joints[j].upper);
        }
      }
    }
  }

  TEST_CASE("pose fitting rejects coplanar targets") {
    const auto& hand = toy_hand();
    const auto all = select_hand_points(hand);
    std::vector<HandPoint> four(all.begin(), all.begin() + 4);
    const std::vector<Vec3> flat = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    CHECK_THROWS_AS(fit_pose_and_joints(flat, four, hand, make_grasp(hand)), DegenerateGeometryError);
  }

  TEST_CASE("noiseless round trip recovers pose and joints") {
    const auto& obj = sphere_object();
    for (const HandModel* hand : {&toy_hand(), &six_dof_hand()}) {
      Rng rng(8);
      for (int trial = 0; trial < 3; ++trial) {
        Grasp g = random_grasp(*hand, rng);
        const auto pts = select_hand_points(*hand);
        const auto d = compute_distance_matrix(*hand, g, obj, pts);
        RecoveryConfig cfg;
        cfg.ik.tolerance = 1e-7;
        const auto r = recover_grasp(d, obj.surface.points, *hand, make_grasp(*hand), cfg);
        const auto truth = hand_points_world(*hand, g, pts);
        const auto fitted = hand_points_world(*hand, r.grasp, pts);
        double worst_target = 0.0, worst_fit = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          worst_target = std::max(worst_target, (r.targets[i] - truth[i]).norm());
          worst_fit = std::max(worst_fit, (fitted[i] - truth[i]).norm());
        }
        CHECK(worst_target <= 1e-6);
        CHECK(worst_fit <= 1e-6);
        CHECK((r.grasp.translation - g.translation).norm() <= 0.001);
        CHECK(rotation_angle(r.grasp.rotation, g.rotation) <= 0.5 * M_PI / 180.0);
        CHECK((r.grasp.joints - g.joints).cwiseAbs().maxCoeff() <= 0.01);
      }
    }
  }

  TEST_CASE("identity fixture has exact residuals") {
    const auto& hand = toy_hand();
    std::vector<Vec3> grid;
    for (int x = 0; x < 5; ++x) {
      for (int y = 0; y < 5; ++y) {
        for (int z = 0; z < 5; ++z) grid.emplace_back(0.05 * x - 0.1, 0.05 * y - 0.1, 0.05 * z);
      }
    }
    const Grasp g = make_grasp(hand);
    const auto pts = select_hand_points(hand);
    const auto d = compute_distance_matrix(hand, g, pts, grid);
    const auto r = recover_grasp(d, grid, hand, g);
    for (double res : r.multilateration_residuals) CHECK(res <= 1e-9);
    for (double res : r.ik.residuals) CHECK(res <= 1e-9);
  }

  TEST_CASE("fingertip recovery under 1 mm matrix noise") {
    const auto& hand = toy_hand();
    const auto& obj = sphere_object();
    Rng rng(9);
    std::vector<double> errors;
    for (int trial = 0; trial < 20; ++trial) {
      const Grasp g = random_grasp(hand, rng);
      const auto pts = select_hand_points(hand);
      auto d = compute_distance_matrix(hand, g, obj, pts);
      for (int i = 0; i < d.rows(); ++i) {
        for (int j = 0; j < d.cols(); ++j) d.values(i, j) = std::max(0.0, d.values(i, j) + 0.001 * normal01(rng));
      }
      const auto r = recover_grasp(d, obj.surface.points, hand, make_grasp(hand));
      for (int f = 0; f < hand.num_fingers(); ++f) {
        const int link = hand.distal_link(f);
        const Vec3 tip = hand.contact_candidates[link][0].point;
        const Vec3 truth = forward_kinematics(hand, g).link_world[link] * tip;
        const Vec3 got = forward_kinematics(hand, r.grasp).link_world[link] * tip;
        errors.push_back((truth - got).norm());
      }
    }
    MESSAGE("95th percentile fingertip error " << percentile95(errors));
    CHECK(percentile95(errors) <= 0.01);
  }

  TEST_CASE("matrix file round trip") {
    const auto& hand = toy_hand();
    const auto& obj = sparse_sphere_object();
    const auto pts = select_hand_points(hand, 16);
    const auto d = compute_distance_matrix(hand, make_grasp(hand), obj, pts);
    const auto dir = scratch_dir("drom");
    save_distance_matrix(dir / "g.drom", d);
    const auto back = load_distance_matrix(dir / "g.drom");
    REQUIRE(back.rows() == d.rows());
    REQUIRE(back.cols() == d.cols());
    CHECK((back.values - d.values).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(back.object_points == d.object_points);
    CHECK(back.hand_points[5].local == d.hand_points[5].local);
    CHECK(std::filesystem::file_size(dir / "g.drom") == 12 + 4 * 16 * 200);
  }
}
