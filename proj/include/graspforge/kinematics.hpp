#pragma once

#include <span>
#include <vector>

#include "graspforge/common.hpp"
#include "graspforge/hand_model.hpp"

namespace graspforge {

/// World-frame link frames plus, per joint, the world axis and origin of the
/// frame the joint moves about.
struct KinematicState {
  std::vector<Iso3> link_world;
  std::vector<Vec3> joint_axis;
  std::vector<Vec3> joint_origin;
  Vec3 root_translation = Vec3::Zero();
};

/// Throws DimensionError if the joint vector does not match the model.
KinematicState forward_kinematics(const HandModel& model, const Grasp& grasp);

struct WorldContact {
  int link = 0;
  int candidate = 0;
  Vec3 point;
  Vec3 normal;
};

/// Throws MissingCandidatesError for a link with no candidates.
std::vector<WorldContact> contact_points_world(const HandModel& model, const Grasp& grasp,
                                               std::span<const int> links);

enum class JacobianMode { kAnalytic, kFiniteDifference };

/// Columns: rotation tangent (3), translation (3), joints (K). The rotation
/// tangent is a world-frame left perturbation R <- exp(w) R.
Mat3X point_jacobian(const HandModel& model, const KinematicState& state, int link,
                     const Vec3& world_point);

/// Derivative of a world-frame direction attached to `link`.
Mat3X direction_jacobian(const HandModel& model, const KinematicState& state, int link,
                         const Vec3& world_dir);

/// Throws IndexError on an invalid link.
Mat3X grasp_jacobian(const HandModel& model, const Grasp& grasp, int link, const Vec3& local_point,
                     JacobianMode mode = JacobianMode::kAnalytic, double fd_step = 1e-6);

/// g (+) delta, with delta laid out as in the Jacobian columns. The rotation is
/// renormalized.
Grasp retract(const Grasp& grasp, const VecX& delta);

VecX clamp_to_limits(const HandModel& model, const VecX& joint_angles);

}  // namespace graspforge
