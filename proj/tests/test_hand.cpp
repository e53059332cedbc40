#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "graspforge/json_util.hpp"
#include "graspforge/kinematics.hpp"

using namespace graspforge;
using namespace fixtures;

namespace {

// Base link plus one child turning about z, optionally sliding along x.
HandModel one_joint_hand(JointType type = JointType::kRevolute) {
  HandModel m;
  Link base;
  base.name = "base";
  base.spheres = {{Vec3::Zero(), 0.01}};
  Link tip;
  tip.name = "tip";
  tip.parent = 0;
  tip.fixed = make_iso(Quat::Identity(), Vec3(0, 0, 0.1));
  tip.spheres = {{Vec3(0.05, 0, 0), 0.01}};
  m.links = {base, tip};
  Joint j;
  j.link = 1;
  j.axis = type == JointType::kRevolute ? Vec3::UnitZ() : Vec3::UnitX();
  j.type = type;
  j.lower = -2.0;
  j.upper = 2.0;
  m.joints = {j};
  m.fingers = {{0, 1}};
  m.contact_candidates = {{{Vec3::Zero(), Vec3::UnitX()}}, {{Vec3(1, 0, 0), Vec3::UnitY()}}};
  m.surface_samples = {{Vec3(0.01, 0, 0)}, {Vec3(0.06, 0, 0)}};
  return finalize_hand_model(m);
}

nlohmann::json toy_doc() { return jsonutil::read_file(data_path("hands/toy_two_finger.json")); }

}  // namespace

TEST_SUITE("hand") {
  TEST_CASE("toy hand loads with two joints and two fingers") {
    const auto& hand = toy_hand();
    CHECK(hand.dof() == 2);
    CHECK(hand.num_fingers() == 2);
    CHECK(validate_hand_model(hand).empty());
    CHECK(six_dof_hand().dof() == 6);
    CHECK(six_dof_hand().num_fingers() == 5);
  }

  TEST_CASE("invalid descriptors are rejected with every problem listed") {
    auto doc = toy_doc();
    doc["joints"][0]["lower"] = 1.0;
    doc["joints"][0]["upper"] = -1.0;
    CHECK_THROWS_AS(load_hand_model(doc), ValidationError);

    auto cyc = toy_doc();
    cyc["links"][1]["parent"] = 2;
    cyc["links"][2]["parent"] = 1;
    try {
      load_hand_model(cyc);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      bool cycle = false;
      for (const auto& p : e.problems()) cycle = cycle || p.find("cycle") != std::string::npos;
      CHECK(cycle);
    }

    auto many = toy_doc();
    many["joints"][0]["lower"] = 1.0;
    many["joints"][0]["upper"] = -1.0;
    many["joints"][1]["axis"] = {0.0, 2.0, 0.0};
    try {
      load_hand_model(many);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.problems().size() >= 2);
    }

    auto missing = toy_doc();
    missing.erase("joints");
    CHECK_THROWS_AS(load_hand_model(missing), ParseError);
  }

  TEST_CASE("hand model JSON round trip") {
    const auto& hand = six_dof_hand();
    const auto back = load_hand_model(hand_model_to_json(hand));
    // Quaternions are renormalized on load, so one pass may move the last bits;
    // after that the round trip is exact.
    CHECK(hand_model_to_json(load_hand_model(hand_model_to_json(back))) == hand_model_to_json(back));
    const auto a = forward_kinematics(hand, make_grasp(hand));
    const auto b = forward_kinematics(back, make_grasp(back));
    for (int l = 0; l < hand.num_links(); ++l) {
      CHECK((a.link_world[l].matrix() - b.link_world[l].matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
    Rng rng(41);
    const Grasp g = random_grasp(hand, rng);
    const Grasp gb = grasp_from_json(nlohmann::json::parse(grasp_to_json(g).dump()));
    CHECK(gb.rotation.coeffs() == g.rotation.coeffs());
    CHECK(gb.translation == g.translation);
    CHECK(gb.joints == g.joints);
  }

  TEST_CASE("forward kinematics at the identity composes fixed transforms") {
    const auto& hand = six_dof_hand();
    const auto st = forward_kinematics(hand, make_grasp(hand));
    for (int l = 0; l < hand.num_links(); ++l) {
      Iso3 expected = Iso3::Identity();
      for (int k = l; k >= 0; k = hand.links[k].parent) expected = hand.links[k].fixed * expected;
      CHECK((st.link_world[l].matrix() - expected.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
    Grasp bad = make_grasp(hand);
    bad.joints = VecX::Zero(2);
    CHECK_THROWS_AS(forward_kinematics(hand, bad), DimensionError);
  }

  TEST_CASE("a quarter turn maps x to y") {
    const auto hand = one_joint_hand();
    Grasp g = make_grasp(hand);
    g.joints[0] = std::numbers::pi / 2;
    const auto st = forward_kinematics(hand, g);
    const Vec3 in_joint_frame = hand.links[1].fixed.inverse() * (st.link_world[1] * Vec3(1, 0, 0));
    CHECK((in_joint_frame - Vec3(0, 1, 0)).norm() < 1e-12);
  }

  TEST_CASE("forward kinematics is equivariant under rigid motion") {
    Rng rng(42);
    for (const HandModel* hand : {&toy_hand(), &six_dof_hand()}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Grasp g = random_grasp(*hand, rng);
        const Iso3 s = make_iso(random_rotation(rng), Vec3(normal01(rng), normal01(rng), normal01(rng)));
        Grasp moved = g;
        moved.rotation = Quat(s.linear()) * g.rotation;
        moved.translation = s * g.translation;
        const auto a = forward_kinematics(*hand, g);
        const auto b = forward_kinematics(*hand, moved);
        for (int l = 0; l < hand->num_links(); ++l) {
          CHECK(((s * a.link_world[l]).translation() - b.link_world[l].translation()).norm() <= 1e-9);
        }
        Grasp shifted = g;
        shifted.translation += Vec3(0.1, -0.2, 0.3);
        const auto c = forward_kinematics(*hand, shifted);
        for (int l = 0; l < hand->num_links(); ++l) {
          CHECK((c.link_world[l].translation() - a.link_world[l].translation() - Vec3(0.1, -0.2, 0.3)).norm() <
                1e-12);
        }
      }
    }
  }

  TEST_CASE("world contact points") {
    const auto& hand = toy_hand();
    std::vector<int> links;
    for (int l = 0; l < hand.num_links(); ++l) {
      if (!hand.contact_candidates[l].empty()) links.push_back(l);
    }
    const Grasp id = make_grasp(hand);
    const auto st = forward_kinematics(hand, id);
    for (const auto& c : contact_points_world(hand, id, links)) {
      CHECK((c.point - st.link_world[c.link] * hand.contact_candidates[c.link][c.candidate].point).norm() < 1e-12);
    }
    Rng rng(43);
    Grasp rotated = id;
    rotated.rotation = random_rotation(rng);
    const auto a = contact_points_world(hand, id, links);
    const auto b = contact_points_world(hand, rotated, links);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((b[i].normal - rotated.rotation * a[i].normal).norm() < 1e-12);
      CHECK(std::abs(b[i].normal.norm() - 1.0) <= 1e-9);
    }
    const auto origin_hand = one_joint_hand();
    const auto o = contact_points_world(origin_hand, make_grasp(origin_hand), std::vector<int>{0});
    CHECK(o[0].point == forward_kinematics(origin_hand, make_grasp(origin_hand)).link_world[0].translation());
    HandModel bare = origin_hand;
    bare.contact_candidates[1].clear();
    CHECK_THROWS_AS(contact_points_world(bare, make_grasp(bare), std::vector<int>{1}), MissingCandidatesError);
  }

  TEST_CASE("analytic Jacobian matches finite differences") {
    Rng rng(44);
    int pairs = 0;
    for (int trial = 0; trial < 50; ++trial) {
      for (const HandModel* hand : {&toy_hand(), &six_dof_hand()}) {
        const Grasp g = random_grasp(*hand, rng, 0.05);
        const int link = static_cast<int>(uniform01(rng) * hand->num_links());
        const Vec3 p(0.02 * normal01(rng), 0.02 * normal01(rng), 0.02 * normal01(rng));
        const Mat3X a = grasp_jacobian(*hand, g, link, p);
        const Mat3X n = grasp_jacobian(*hand, g, link, p, JacobianMode::kFiniteDifference);
        CHECK(((a - n).norm() / std::max(a.norm(), 1e-12)) <= 1e-4);
        CHECK((a.block<3, 3>(0, 3) - Mat3::Identity()).norm() < 1e-12);
        ++pairs;
      }
    }
    CHECK(pairs == 100);
    CHECK_THROWS_AS(grasp_jacobian(toy_hand(), make_grasp(toy_hand()), 99, Vec3::Zero()), IndexError);
  }

  TEST_CASE("joint columns for revolute and prismatic joints") {
    Rng rng(45);
    const auto& hand = six_dof_hand();
    const Grasp g = random_grasp(hand, rng);
    const auto st = forward_kinematics(hand, g);
    for (int j = 0; j < hand.dof(); ++j) {
      const int link = hand.joints[j].link;
      const Vec3 local(0.01, 0.02, 0.03);
      const Vec3 world = st.link_world[link] * local;
      const Mat3X jac = grasp_jacobian(hand, g, link, local);
      CHECK((jac.col(6 + j) - st.joint_axis[j].cross(world - st.joint_origin[j])).norm() < 1e-12);
    }
    const auto slider = one_joint_hand(JointType::kPrismatic);
    Grasp s = make_grasp(slider);
    s.rotation = random_rotation(rng);
    s.joints[0] = 0.3;
    const auto sst = forward_kinematics(slider, s);
    const Mat3X jac = grasp_jacobian(slider, s, 1, Vec3(0.1, 0.2, 0.3));
    CHECK((jac.col(6) - sst.joint_axis[0]).norm() < 1e-12);
    CHECK((sst.joint_axis[0] - s.rotation * Vec3::UnitX()).norm() < 1e-12);
  }

  TEST_CASE("joint clamping") {
    const auto& hand = six_dof_hand();
    Rng rng(46);
    const Grasp g = random_grasp(hand, rng);
    CHECK(clamp_to_limits(hand, g.joints) == g.joints);
    VecX below = g.joints;
    below[0] = hand.joints[0].lower - 1.0;
    CHECK(clamp_to_limits(hand, below)[0] == hand.joints[0].lower);
    for (int trial = 0; trial < 100; ++trial) {
      VecX x(hand.dof());
      for (int j = 0; j < hand.dof(); ++j) x[j] = 3.0 * normal01(rng);
      const VecX c = clamp_to_limits(hand, x);
      CHECK(clamp_to_limits(hand, c) == c);
      for (int j = 0; j < hand.dof(); ++j) {
        CHECK(c[j] >= hand.joints[j].lower);
        CHECK(c[j] <= hand.joints[j].upper);
      }
    }
    CHECK_THROWS_AS(clamp_to_limits(hand, VecX::Zero(1)), DimensionError);
  }

  TEST_CASE("retract applies a world-frame rotation and keeps a unit quaternion") {
    const auto& hand = toy_hand();
    Grasp g = make_grasp(hand);
    VecX d = VecX::Zero(6 + hand.dof());
    d.head<3>() = Vec3(0, 0, std::numbers::pi / 2);
    d.segment<3>(3) = Vec3(0.1, 0, 0);
    d[6] = 0.2;
    const Grasp r = retract(g, d);
    CHECK(((r.rotation * Vec3::UnitX()) - Vec3::UnitY()).norm() < 1e-12);
    CHECK(std::abs(r.rotation.norm() - 1.0) < 1e-12);
    CHECK(r.translation == Vec3(0.1, 0, 0));
    CHECK(r.joints[0] == doctest::Approx(0.2));
  }
}
