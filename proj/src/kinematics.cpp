#include "graspforge/kinematics.hpp"

#include <algorithm>
#include <string>

namespace graspforge {

KinematicState forward_kinematics(const HandModel& model, const Grasp& grasp) {
  if (grasp.joints.size() != model.dof()) {
    throw DimensionError("joint vector has " + std::to_string(grasp.joints.size()) +
                         " entries, hand has " + std::to_string(model.dof()) + " DoF");
  }
  KinematicState s;
  s.link_world.resize(model.links.size());
  s.joint_axis.resize(model.joints.size());
  s.joint_origin.resize(model.joints.size());
  s.root_translation = grasp.translation;
  const Iso3 root = grasp.pose();

  for (int l : model.topo_order) {
    const auto& link = model.links[l];
    Iso3 frame = (link.parent < 0 ? root : s.link_world[link.parent]) * link.fixed;
    for (int j : model.link_joints[l]) {
      const auto& joint = model.joints[j];
      s.joint_axis[j] = frame.linear() * joint.axis;
      s.joint_origin[j] = frame.translation();
      const double q = grasp.joints[j];
      if (joint.type == JointType::kRevolute) {
        frame.rotate(Eigen::AngleAxisd(q, joint.axis));
      } else {
        frame.translate(q * joint.axis);
      }
    }
    s.link_world[l] = frame;
  }
  return s;
}

std::vector<WorldContact> contact_points_world(const HandModel& model, const Grasp& grasp,
                                               std::span<const int> links) {
  for (int l : links) {
    if (l < 0 || l >= model.num_links()) throw IndexError("invalid link index " + std::to_string(l));
    if (model.contact_candidates[l].empty()) {
      throw MissingCandidatesError("link " + std::to_string(l) + " has no contact candidates");
    }
  }
  const auto state = forward_kinematics(model, grasp);
  std::vector<WorldContact> out;
  for (int l : links) {
    const Iso3& x = state.link_world[l];
    const auto& cands = model.contact_candidates[l];
    for (std::size_t c = 0; c < cands.size(); ++c) {
      out.push_back(WorldContact{l, static_cast<int>(c), x * cands[c].point,
                                 (x.linear() * cands[c].normal).normalized()});
    }
  }
  return out;
}

Mat3X point_jacobian(const HandModel& model, const KinematicState& state, int link,
                     const Vec3& world_point) {
  const int k = model.dof();
  Mat3X jac = Mat3X::Zero(3, 6 + k);
  jac.block<3, 3>(0, 0) = -skew(world_point - state.root_translation);
  jac.block<3, 3>(0, 3).setIdentity();
  for (int j = 0; j < k; ++j) {
    if (!model.joint_moves_link[j][link]) continue;
    if (model.joints[j].type == JointType::kRevolute) {
      jac.col(6 + j) = state.joint_axis[j].cross(world_point - state.joint_origin[j]);
    } else {
      jac.col(6 + j) = state.joint_axis[j];
    }
  }
  return jac;
}

Mat3X direction_jacobian(const HandModel& model, const KinematicState& state, int link,
                         const Vec3& world_dir) {
  const int k = model.dof();
  Mat3X jac = Mat3X::Zero(3, 6 + k);
  jac.block<3, 3>(0, 0) = -skew(world_dir);
  for (int j = 0; j < k; ++j) {
    if (model.joint_moves_link[j][link] && model.joints[j].type == JointType::kRevolute) {
      jac.col(6 + j) = state.joint_axis[j].cross(world_dir);
    }
  }
  return jac;
}

Grasp retract(const Grasp& grasp, const VecX& delta) {
  Grasp out = grasp;
  out.rotation = (exp_rotation(delta.head<3>()) * grasp.rotation).normalized();
  out.translation += delta.segment<3>(3);
  out.joints += delta.tail(delta.size() - 6);
  return out;
}

Mat3X grasp_jacobian(const HandModel& model, const Grasp& grasp, int link, const Vec3& local_point,
                     JacobianMode mode, double fd_step) {
  if (link < 0 || link >= model.num_links()) {
    throw IndexError("invalid link index " + std::to_string(link));
  }
  if (mode == JacobianMode::kAnalytic) {
    const auto state = forward_kinematics(model, grasp);
    return point_jacobian(model, state, link, state.link_world[link] * local_point);
  }
  const int n = 6 + model.dof();
  if (grasp.joints.size() != model.dof()) throw DimensionError("joint vector length mismatch");
  Mat3X jac(3, n);
  for (int c = 0; c < n; ++c) {
    VecX d = VecX::Zero(n);
    d[c] = fd_step;
    const Vec3 plus = forward_kinematics(model, retract(grasp, d)).link_world[link] * local_point;
    const Vec3 minus = forward_kinematics(model, retract(grasp, -d)).link_world[link] * local_point;
    jac.col(c) = (plus - minus) / (2.0 * fd_step);
  }
  return jac;
}

VecX clamp_to_limits(const HandModel& model, const VecX& joint_angles) {
  if (joint_angles.size() != model.dof()) throw DimensionError("joint vector length mismatch");
  VecX out = joint_angles;
  for (int j = 0; j < model.dof(); ++j) {
    out[j] = std::clamp(out[j], model.joints[j].lower, model.joints[j].upper);
  }
  return out;
}

}  // namespace graspforge
