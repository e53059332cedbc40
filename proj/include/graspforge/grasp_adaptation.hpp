#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/contact_transfer.hpp"
#include "graspforge/hand_model.hpp"
#include "graspforge/object_model.hpp"
#include "graspforge/rng.hpp"

namespace graspforge {

/// One finger's pairing of a hand pad point with an object candidate.
/// `object_normal` is the direction the pad normal should match, i.e. the
/// inward object normal at the candidate.
struct AssignedPair {
  int finger = 0;
  int link = 0;
  int hand_candidate = 0;
  int object_candidate = 0;
  Vec3 object_point = Vec3::Zero();
  Vec3 object_normal = Vec3::UnitZ();
};

struct ContactAssignment {
  std::vector<AssignedPair> pairs;
};

/// A point fixed in a link frame.
struct HandPoint {
  int link = 0;
  Vec3 local = Vec3::Zero();
};

struct LossWeights {
  double prior = 100.0;
  double stab = 20.0;
  double aux = 5.0;
  double joint = 1.0;
  double coll = 200.0;
  double self = 100.0;
  double alpha = 0.01;  // m^2 per unit of normal misalignment
};

/// Value with its gradient over (rotation tangent, translation, joints).
struct LossValue {
  double value = 0.0;
  VecX gradient;
};

struct LossBreakdown {
  double prior = 0.0;
  double stab = 0.0;
  double aux = 0.0;
  double joint = 0.0;
  double coll = 0.0;
  double self = 0.0;
  double total = 0.0;
  VecX gradient;
};

LossValue loss_prior(const Grasp& grasp, const HandModel& model, const ContactAssignment& assignment,
                     double alpha);

/// Squared distance of each point to its nearest object surface sample; the
/// nearest sample is held fixed for the gradient.
LossValue loss_surface_pull(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                            std::span<const HandPoint> points);

/// Surface pull over the assigned pad points.
LossValue loss_stability(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                         const ContactAssignment& assignment);

/// Surface pull over the candidate points (or surface samples when a link has
/// none) of the model's auxiliary links. Zero when there are none.
LossValue loss_auxiliary(const Grasp& grasp, const HandModel& model, const ObjectModel& object);

/// Gradient has length K.
LossValue loss_joint_limits(const HandModel& model, const VecX& joint_angles);

/// Squared penetration depth of every hand collision sphere into the object.
LossValue loss_collision(const Grasp& grasp, const HandModel& model, const ObjectModel& object);

/// Squared overlap of sphere pairs on distinct, non-adjacent links.
LossValue loss_self_penetration(const Grasp& grasp, const HandModel& model);

LossBreakdown total_loss(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                         const ContactAssignment& assignment, const LossWeights& weights);

std::vector<std::string> validate_weights(const LossWeights& weights);

std::vector<HandPoint> assigned_hand_points(const HandModel& model, const ContactAssignment& assignment);
std::vector<HandPoint> auxiliary_hand_points(const HandModel& model);

struct OptimizationConfig {
  int num_grasps = 32;
  int iterations = 2000;
  double step_rotation = 0.05;
  double step_translation = 0.002;
  double step_joints = 0.2;
  double step_decay = 1.0;  // per-iteration step multiplier
  double temperature = 1e-2;
  double temperature_decay = 0.995;
  double noise_scale = 1.0;  // 0 disables the Langevin noise
  /// Shrink the step after a rejected proposal and regrow it after an
  /// accepted one (bounded by the configured steps).
  bool adaptive_step = true;
  /// Iterations between assignment resamples; 0 keeps one assignment per chain.
  int resample_period = 50;
  double init_distance = 0.12;
  double init_cone_deg = 30.0;
  double init_joint_jitter = 0.1;  // fraction of each joint's range
  int init_attempts = 20;
  std::uint64_t seed = 0;
};

std::vector<std::string> validate_config(const OptimizationConfig& config);

/// Fingers with no candidates, or not present on the hand, are skipped.
/// Throws MissingCandidatesError when no finger remains.
ContactAssignment sample_assignment(const HandModel& model, const ContactCandidateSet& candidates, Rng& rng);

std::vector<Grasp> initialize_grasps(const HandModel& model, const ObjectModel& object,
                                     const ContactCandidateSet& candidates, const OptimizationConfig& config);

struct ChainResult {
  int chain = 0;
  std::uint64_t seed = 0;
  Grasp grasp;
  LossBreakdown losses;  // at the returned state, under its assignment
  ContactAssignment assignment;
  std::vector<double> trace;  // loss of the current state after each iteration
  int accepted = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct OptimizationResult {
  std::vector<ChainResult> chains;  // sorted by final loss, aborted chains last
  std::vector<std::string> warnings;
};

OptimizationResult optimize(const HandModel& model, const ObjectModel& object, const ContactCandidateSet& candidates,
                            const LossWeights& weights, const OptimizationConfig& config,
                            Execution exec = Execution::kParallel);

nlohmann::json weights_to_json(const LossWeights& w);
LossWeights weights_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const OptimizationConfig& c);
OptimizationConfig config_from_json(const nlohmann::json& j);

nlohmann::json assignment_to_json(const ContactAssignment& a);
ContactAssignment assignment_from_json(const nlohmann::json& j);

/// One JSON-lines record per chain.
nlohmann::json grasp_record(const std::string& object_id, const ChainResult& chain);

}  // namespace graspforge
