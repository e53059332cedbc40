#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/common.hpp"

namespace graspforge {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Pad point with its outward normal, both in the owning link's frame.
struct ContactCandidate {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct Link {
  std::string name;
  int parent = -1;
  Iso3 fixed = Iso3::Identity();  // parent frame -> this link's frame, before joint motion
  std::vector<Sphere> spheres;
};

enum class JointType { kRevolute, kPrismatic };

struct Joint {
  std::string name;
  int link = 0;  // child link moved by this joint
  Vec3 axis = Vec3::UnitZ();
  JointType type = JointType::kRevolute;
  double lower = 0.0;
  double upper = 0.0;
};

/// Where the palm sits in the root frame; used to place initial grasps.
/// `approach` points from the palm toward a grasped object.
struct PalmFrame {
  Vec3 center = Vec3::Zero();
  Vec3 approach = Vec3::UnitZ();
};

/// Articulated hand description. Fill the public data, then call
/// finalize_hand_model() to validate it and build the derived tables.
struct HandModel {
  std::vector<Link> links;
  std::vector<Joint> joints;  // one per degree of freedom, in parameter order
  std::vector<std::vector<int>> fingers;  // root-to-tip link chains
  std::vector<std::vector<ContactCandidate>> contact_candidates;  // per link
  std::vector<std::vector<Vec3>> surface_samples;                 // per link
  std::vector<int> functional_fingers;
  std::vector<int> auxiliary_links;
  PalmFrame palm;

  // Derived by finalize_hand_model().
  std::vector<int> topo_order;                    // parents before children
  std::vector<std::vector<int>> link_joints;      // joints acting directly on each link
  std::vector<std::vector<char>> joint_moves_link;  // [joint][link]
  std::vector<int> link_finger;                   // owning finger or -1

  int dof() const { return static_cast<int>(joints.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  int num_fingers() const { return static_cast<int>(fingers.size()); }

  /// Middle and distal links of a finger (the last two links of its chain).
  std::vector<int> finger_contact_links(int finger) const;
  int distal_link(int finger) const { return fingers.at(finger).back(); }
  bool adjacent(int a, int b) const;
};

/// Every violated invariant, empty when the model is well formed.
std::vector<std::string> validate_hand_model(const HandModel& model);

/// Validates (throws ValidationError listing all problems) and computes
/// derived tables.
HandModel finalize_hand_model(HandModel model);

HandModel load_hand_model(const nlohmann::json& doc);
HandModel load_hand_model_file(const std::filesystem::path& path);
nlohmann::json hand_model_to_json(const HandModel& model);

/// g = (T, theta): root pose plus joint values.
struct Grasp {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  VecX joints;

  Iso3 pose() const { return make_iso(rotation, translation); }
};

Grasp make_grasp(const HandModel& model);
nlohmann::json grasp_to_json(const Grasp& g);
Grasp grasp_from_json(const nlohmann::json& j);

}  // namespace graspforge
