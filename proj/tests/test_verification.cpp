#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/verification.hpp"
#include "oracles.hpp"

using namespace graspforge;
using namespace fixtures;

namespace {

Contact sphere_contact(const Vec3& dir, double radius = 1.0, double mu = 0.5) {
  Contact c;
  c.point = radius * dir.normalized();
  c.normal = -dir.normalized();
  c.tangent = c.normal.unitOrthogonal();
  c.friction = mu;
  return c;
}

Vec3 random_unit(Rng& rng) { return Vec3(normal01(rng), normal01(rng), normal01(rng)).normalized(); }

MatX unit_wrenches(const ContactState& cs, const Vec3& centroid, double length) {
  MatX w = contact_wrenches(cs, centroid, length, 8);
  for (Eigen::Index j = 0; j < w.cols(); ++j) w.col(j).normalize();
  return w;
}

ObjectModel with_exact_sample(ObjectModel obj, const Vec3& p, const Vec3& outward, int& index) {
  obj.surface.points.push_back(p);
  obj.surface.normals.push_back(outward);
  obj.surface.source_triangle.push_back(-1);
  obj.surface_index = PointIndex(obj.surface.points);
  index = static_cast<int>(obj.surface.points.size()) - 1;
  return obj;
}

Vec3 distal_pad_world(const HandModel& hand, const Grasp& g, int finger) {
  const int link = hand.distal_link(finger);
  return forward_kinematics(hand, g).link_world[link] * hand.contact_candidates[link][0].point;
}

// Smallest distance from any distal candidate of `finger` to the given points.
double distal_distance(const HandModel& hand, const Grasp& g, int finger, const std::vector<Vec3>& pts) {
  const int link = hand.distal_link(finger);
  const Iso3 x = forward_kinematics(hand, g).link_world[link];
  double best = 1e9;
  for (const auto& c : hand.contact_candidates[link]) {
    for (const auto& p : pts) best = std::min(best, (x * c.point - p).norm());
  }
  return best;
}

}  // namespace

TEST_SUITE("verification") {
  TEST_CASE("hull of a cube has six distinct face planes at distance one half") {
    MatX pts(3, 9);
    int k = 0;
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        for (int z = 0; z < 2; ++z) pts.col(k++) = Vec3(x - 0.5, y - 0.5, z - 0.5);
      }
    }
    pts.col(8) = Vec3(0.1, -0.2, 0.05);  // interior point
    const auto hull = convex_hull(pts);
    CHECK(hull.facets.size() == 12);
    for (const auto& f : hull.facets) {
      CHECK(f.offset == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(std::find(f.vertices.begin(), f.vertices.end(), 8) == f.vertices.end());
    }
    CHECK(oracles::bruteforce_facets(pts).size() == 6);
  }

  TEST_CASE("hull facets agree with brute-force enumeration") {
    Rng rng(21);
    for (int d = 2; d <= 6; ++d) {
      for (int trial = 0; trial < 3; ++trial) {
        const int n = d + 8;
        MatX pts(d, n);
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < d; ++i) pts(i, j) = normal01(rng);
        }
        const auto hull = convex_hull(pts);
        const auto brute = oracles::bruteforce_facets(pts);
        // Random points are in general position: every facet is a simplex.
        CHECK(hull.facets.size() == brute.size());
        for (const auto& f : hull.facets) {
          const bool found = std::any_of(brute.begin(), brute.end(), [&](const oracles::Plane& p) {
            return (p.normal - f.normal).norm() < 1e-7 && std::abs(p.offset - f.offset) < 1e-7;
          });
          CHECK(found);
          CHECK((f.normal.transpose() * pts).maxCoeff() <= f.offset + 1e-9);
        }
      }
    }
  }

  TEST_CASE("hull rejects points that do not span the space") {
    MatX flat(3, 5);
    flat << 0, 1, 0, 1, 0.5, 0, 0, 1, 1, 0.5, 0, 0, 0, 0, 0;
    CHECK_THROWS_AS(convex_hull(flat), DegenerateGeometryError);
    CHECK_THROWS_AS(convex_hull(MatX::Random(3, 3)), DegenerateGeometryError);
  }

  TEST_CASE("nonnegative least squares agrees with the simplex oracle on cone membership") {
    Rng rng(22);
    int feasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int k = 3 + trial % 10;
      MatX a(6, k);
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < 6; ++i) a(i, j) = normal01(rng);
      }
      VecX b(6);
      for (int i = 0; i < 6; ++i) b[i] = normal01(rng);
      if (trial % 3 == 0) b = a * VecX::Random(k).cwiseAbs();  // a point inside the cone
      const VecX x = nnls(a, b);
      CHECK((x.array() >= 0.0).all());
      const bool ours = (a * x - b).norm() <= 1e-9;
      CHECK(ours == oracles::cone_contains(a, b));
      feasible += ours;
    }
    CHECK(feasible >= 67);
  }

  TEST_CASE("contact extraction") {
    const auto& hand = toy_hand();
    const auto& obj = sphere_object();
    Grasp far = make_grasp(hand);
    far.translation = Vec3(1.0, 0.0, 0.0);
    CHECK(extract_contacts(far, hand, obj, 0.003, 0.5).contacts.empty());

    // A small ball tangent to one distal pad centre touches only that candidate;
    // the rest of the pad patch clears it by about 0.4 mm.
    const Grasp g = toy_pinch_grasp();
    const int link = hand.distal_link(0);
    const auto st = forward_kinematics(hand, g);
    const Vec3 pad = st.link_world[link] * hand.contact_candidates[link][0].point;
    const Vec3 out = st.link_world[link].linear() * hand.contact_candidates[link][0].normal;
    const auto ball = make_object_model("ball", make_uv_sphere(0.01, 48, 48, pad + 0.01 * out), 256, 3);
    const auto one = extract_contacts(g, hand, ball, 2e-4, 0.5);
    REQUIRE(one.contacts.size() == 1);
    CHECK(one.contacts[0].link == link);
    CHECK(one.contacts[0].finger == 0);
    CHECK((one.contacts[0].point - pad).norm() <= discretization_epsilon(ball.mesh->mesh()));
    CHECK(one.contacts[0].normal.dot(out) > 0.99);

    // Count against an exhaustive triangle scan over random poses.
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
      Grasp r = random_grasp(hand, rng);
      r.translation *= 1.5;
      const double threshold = 0.02;
      const auto state = forward_kinematics(hand, r);
      std::size_t expected = 0;
      for (int l = 0; l < hand.num_links(); ++l) {
        for (const auto& c : hand.contact_candidates[l]) {
          expected += nearest_surface_point_bruteforce(obj.mesh->mesh(), state.link_world[l] * c.point).distance <=
                      threshold;
        }
      }
      CHECK(extract_contacts(r, hand, obj, threshold, 0.5).contacts.size() == expected);
    }
  }

  TEST_CASE("antipodal contacts resist every direction") {
    ContactState cs;
    cs.contacts = {sphere_contact(Vec3::UnitX()), sphere_contact(-Vec3::UnitX())};
    const auto r = check_wrench_resistance(cs, Vec3::Zero(), 2.0);
    for (bool b : r.resisted) CHECK(b);
    CHECK(r.quality > 0.0);
    CHECK(r.quality_6d == 0.0);  // two point contacts cannot resist torque about their axis

    const MatX w = unit_wrenches(cs, Vec3::Zero(), 2.0);
    const auto dirs = test_directions();
    for (int k = 0; k < 6; ++k) {
      VecX target = VecX::Zero(6);
      target.head<3>() = -dirs[k];
      CHECK(oracles::cone_contains(w, target));
    }
    const double oracle = oracles::force_inradius(w);
    MESSAGE("quality " << r.quality << " oracle " << oracle);
    CHECK(r.quality == doctest::Approx(oracle).epsilon(1e-6));
  }

  TEST_CASE("a single contact cannot hold the object") {
    ContactState cs;
    cs.contacts = {sphere_contact(Vec3::UnitZ())};
    const auto r = check_wrench_resistance(cs, Vec3::Zero(), 2.0);
    CHECK_FALSE(std::all_of(r.resisted.begin(), r.resisted.end(), [](bool b) { return b; }));
    CHECK_FALSE(r.resisted[0]);  // tangential pull
    CHECK(r.resisted[4]);        // pushing straight down onto the contact... is opposed by it
    CHECK(r.quality == 0.0);

    const auto empty = check_wrench_resistance(ContactState{}, Vec3::Zero(), 2.0);
    for (bool b : empty.resisted) CHECK_FALSE(b);
    CHECK(empty.quality == 0.0);
  }

  TEST_CASE("wrench checks on random contact sets") {
    Rng rng(24);
    int oracle_checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
      ContactState cs;
      const int nc = 1 + trial % 4;
      for (int i = 0; i < nc; ++i) cs.contacts.push_back(sphere_contact(random_unit(rng), 0.05));
      const Vec3 centroid = Vec3::Zero();
      const auto r = check_wrench_resistance(cs, centroid, 0.1);

      // Flags agree with the LP oracle.
      const MatX w = unit_wrenches(cs, centroid, 0.1);
      const auto dirs = test_directions();
      bool all = true;
      for (int k = 0; k < 6; ++k) {
        VecX target = VecX::Zero(6);
        target.head<3>() = -dirs[k];
        CHECK(r.resisted[k] == oracles::cone_contains(w, target));
        all = all && r.resisted[k];
      }
      // Quality is positive exactly when all six directions are resisted.
      CHECK((r.quality > 0.0) == all);
      if (all && nc == 3) {
        CHECK(r.quality == doctest::Approx(oracles::force_inradius(w)).epsilon(1e-6));
        ++oracle_checked;
      }

      // Rigid motion of contacts and centroid together changes nothing.
      const Quat q = random_rotation(rng);
      const Vec3 t(normal01(rng), normal01(rng), normal01(rng));
      ContactState moved = cs;
      for (auto& c : moved.contacts) {
        c.point = q * c.point + t;
        c.normal = q * c.normal;
        c.tangent = q * c.tangent;
      }
      std::array<Vec3, 6> rotated;
      for (int k = 0; k < 6; ++k) rotated[k] = q * dirs[k];
      const auto rm = check_wrench_resistance(moved, q * centroid + t, 0.1, rotated);
      CHECK(rm.resisted == r.resisted);
      CHECK(rm.quality == doctest::Approx(r.quality).epsilon(1e-7));

      // Adding a contact never loses a resisted direction.
      ContactState more = cs;
      more.contacts.push_back(sphere_contact(random_unit(rng), 0.05));
      const auto rp = check_wrench_resistance(more, centroid, 0.1);
      for (int k = 0; k < 6; ++k) {
        if (r.resisted[k]) CHECK(rp.resisted[k]);
      }
    }
    CHECK(oracle_checked >= 2);
  }

  TEST_CASE("functionality distances") {
    const auto& hand = toy_hand();
    const Grasp g = toy_pinch_grasp();
    const Vec3 pad = distal_pad_world(hand, g, 0);
    int idx = -1;
    ObjectModel obj = with_exact_sample(sphere_object(), pad, pad.normalized(), idx);
    obj.functional_regions = {{0, {idx}}};
    auto r = check_functionality(g, hand, obj, 0.001);
    REQUIRE(r.fingers == std::vector<int>{0});
    CHECK(r.distances[0] < 1e-12);
    CHECK(r.functional);

    Grasp shifted = g;
    shifted.translation += Vec3(0.0, 0.005, 0.0);
    r = check_functionality(shifted, hand, obj, 0.001);
    CHECK(r.distances[0] == doctest::Approx(distal_distance(hand, shifted, 0, {pad})).epsilon(1e-9));
    CHECK(r.distances[0] > 0.001);
    CHECK_FALSE(r.functional);

    // Brute-force scan over a larger region.
    obj.functional_regions = {{-1, resolve_region(obj, {-1, {}, true, Vec3(0.0, 0.0, 0.04), 0.02})}};
    Rng rng(25);
    for (int trial = 0; trial < 10; ++trial) {
      const Grasp rg = random_grasp(hand, rng);
      std::vector<Vec3> region;
      for (int i : obj.functional_indices(0)) region.push_back(obj.surface.points[i]);
      const double best = distal_distance(hand, rg, 0, region);
      CHECK(check_functionality(rg, hand, obj, 0.001).distances[0] == doctest::Approx(best).epsilon(1e-12));
    }

    obj.functional_regions.clear();
    CHECK_THROWS_AS(check_functionality(g, hand, obj, 0.001), ValidationError);
  }

  TEST_CASE("avoidance distances") {
    const auto& hand = toy_hand();
    const Grasp g = toy_pinch_grasp();
    ObjectModel obj = sphere_object();
    obj.avoidance.clear();
    auto r = check_avoidance(g, hand, obj, 0.003);
    CHECK(r.clear);
    CHECK(std::isinf(r.min_distance));

    const auto st = forward_kinematics(hand, g);
    const Vec3 s = st.link_world[1] * hand.surface_samples[1][3];
    int idx = -1;
    obj = with_exact_sample(obj, s, s.normalized(), idx);
    obj.avoidance = {idx};
    r = check_avoidance(g, hand, obj, 0.003);
    CHECK_FALSE(r.clear);
    CHECK(r.min_distance < 1e-12);

    obj.avoidance.clear();
    for (int i = 0; i < 4096; i += 37) obj.avoidance.push_back(i);
    double best = 1e9;
    for (int l = 0; l < hand.num_links(); ++l) {
      std::vector<Vec3> hand_pts = hand.surface_samples[l];
      for (const auto& c : hand.contact_candidates[l]) hand_pts.push_back(c.point);
      for (const auto& p : hand_pts) {
        for (int i : obj.avoidance) best = std::min(best, (st.link_world[l] * p - obj.surface.points[i]).norm());
      }
    }
    r = check_avoidance(g, hand, obj, 0.003);
    CHECK(r.min_distance == doctest::Approx(best).epsilon(1e-12));
    CHECK(r.clear == (best > 0.003));
  }

  TEST_CASE("verify composes the checks") {
    const auto& hand = toy_hand();
    const Grasp g = toy_pinch_grasp();
    const Vec3 pad = distal_pad_world(hand, g, 0);
    int idx = -1;
    ObjectModel obj = with_exact_sample(sphere_object(), pad, pad.normalized(), idx);
    obj.functional_regions = {{0, {idx}}};
    obj.avoidance.clear();

    const auto ok = verify(g, hand, obj);
    CHECK(ok.stable);
    CHECK(ok.quality > 0.0);
    CHECK(ok.functional);
    CHECK(ok.avoidance_clear);
    CHECK(ok.passed());
    CHECK(ok.stabilizing_fingers == std::vector<int>{0, 1});
    CHECK_FALSE(ok.note.empty());

    ObjectModel guarded = obj;
    guarded.avoidance = {idx};
    const auto blocked = verify(g, hand, guarded);
    CHECK(blocked.stable);
    CHECK_FALSE(blocked.avoidance_clear);
    CHECK_FALSE(blocked.passed());

    Grasp floating = g;
    floating.translation += Vec3(0.0, 0.0, -0.2);
    const auto loose = verify(floating, hand, obj);
    CHECK(loose.num_contacts == 0);
    CHECK_FALSE(loose.stable);
    CHECK(loose.quality == 0.0);
    CHECK_FALSE(loose.passed());

    // Report invariants hold across random poses.
    Rng rng(26);
    std::vector<Grasp> batch;
    for (int i = 0; i < 12; ++i) batch.push_back(random_grasp(hand, rng));
    batch.push_back(g);
    const auto serial = verify_batch(batch, hand, obj, {}, Execution::kSerial);
    const auto parallel = verify_batch(batch, hand, obj, {}, Execution::kParallel);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& r = serial[i];
      if (r.stable) {
        for (bool b : r.resisted_directions) CHECK(b);
      }
      if (r.functional) {
        for (double d : r.functional_distances) CHECK(d < 0.001);
      }
      CHECK(report_to_json(r) == report_to_json(parallel[i]));
    }
  }

  TEST_CASE("report and threshold serialization") {
    const auto& hand = toy_hand();
    const Grasp g = toy_pinch_grasp();
    ObjectModel obj = sphere_object();
    obj.functional_regions = {{0, {0, 1, 2}}};
    obj.avoidance.clear();
    const auto r = verify(g, hand, obj);
    const auto j = report_to_json(r);
    CHECK(j["min_avoidance_distance"].is_null());
    CHECK(report_to_json(report_from_json(nlohmann::json::parse(j.dump()))) == j);
    VerificationThresholds t;
    t.friction = 0.7;
    t.cone_edges = 12;
    CHECK(thresholds_to_json(thresholds_from_json(thresholds_to_json(t))) == thresholds_to_json(t));
    t.cone_edges = 2;
    CHECK_FALSE(validate_thresholds(t).empty());
  }

  TEST_CASE("importance map values") {
    const double tau = 0.02;
    const std::vector<Vec3> hand = {Vec3::Zero()};
    std::vector<Vec3> equal;
    for (int i = 0; i < 10; ++i) equal.push_back(0.3 * Vec3(std::cos(i), std::sin(i), 0.0));
    const VecX u = importance_map(equal, hand, tau);
    for (Eigen::Index i = 0; i < u.size(); ++i) CHECK(u[i] == doctest::Approx(0.1).epsilon(1e-12));

    const std::vector<Vec3> two = {Vec3::Zero(), Vec3(tau, 0.0, 0.0)};
    const VecX p = importance_map(two, hand, tau);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(0.2689).epsilon(1e-3));
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK_THROWS_AS(importance_map(two, hand, 0.0), ValidationError);
    CHECK_THROWS_AS(importance_map(two, std::vector<Vec3>{}, tau), ValidationError);
  }

  TEST_CASE("importance map is a distribution that reverses distance order") {
    const auto& obj = sparse_sphere_object();
    Rng rng(27);
    std::vector<Vec3> hand;
    for (int i = 0; i < 30; ++i) hand.push_back(0.06 * Vec3(normal01(rng), normal01(rng), normal01(rng)));
    const VecX p = importance_map(obj.surface.points, hand, 0.02);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((p.array() > 0.0).all());
    std::vector<double> d;
    for (const auto& q : obj.surface.points) {
      double best = 1e9;
      for (const auto& h : hand) best = std::min(best, (q - h).norm());
      d.push_back(best);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (d[i] < d[j] - 1e-12) CHECK(p[i] > p[j]);
      }
    }
    // Permuting the object points permutes the map.
    std::vector<int> perm(obj.surface.points.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec3> shuffled;
    for (int i : perm) shuffled.push_back(obj.surface.points[i]);
    const VecX ps = importance_map(shuffled, hand, 0.02);
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(ps[k] == doctest::Approx(p[perm[k]]).epsilon(1e-12));

    VecX q = VecX::Constant(p.size(), 1.0 / p.size());
    CHECK(kl_divergence(p, q) > 0.0);
    q[0] = 0.0;
    CHECK(std::isinf(kl_divergence(p, q)));
  }

  TEST_CASE("importance sampling") {
    std::vector<Vec3> pts(1000, Vec3::Zero());
    VecX p = VecX::Constant(1000, 0.03 / 990.0);
    for (int i = 0; i < 10; ++i) p[100 * i + 7] = 0.097;
    std::vector<int> heavy;
    for (int i = 0; i < 10; ++i) heavy.push_back(100 * i + 7);

    int hits = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) hits += importance_sample(pts, p, 10, s) == heavy;
    const double freq = static_cast<double>(hits) / seeds;
    // Exact chance that ten sequential draws all land on heavy points.
    double exact = 1.0;
    for (int m = 10; m >= 1; --m) exact *= 0.097 * m / (0.097 * m + 0.03);
    const double sigma = std::sqrt(exact * (1.0 - exact) / seeds);
    MESSAGE("all ten heavy points selected with frequency " << freq << ", exact " << exact);
    CHECK(std::abs(freq - exact) <= 4.0 * sigma);
    // Heavy points take nine of the ten slots on average or better.
    int heavy_slots = 0;
    for (int s = 0; s < 1000; ++s) {
      for (int i : importance_sample(pts, p, 10, s)) heavy_slots += i % 100 == 7;
    }
    CHECK(heavy_slots / 10000.0 >= 0.9);

    std::vector<int> all(1000);
    std::iota(all.begin(), all.end(), 0);
    CHECK(importance_sample(pts, p, 1000, 4) == all);
    const auto a = importance_sample(pts, p, 300, 5);
    CHECK(a == importance_sample(pts, p, 300, 5));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    CHECK_THROWS_AS(importance_sample(pts, p, 1001, 1), ValidationError);
    CHECK_THROWS_AS(importance_sample(pts, VecX::Ones(3), 1, 1), DimensionError);
  }
}
