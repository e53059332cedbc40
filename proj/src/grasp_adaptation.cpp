#include "graspforge/grasp_adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "graspforge/json_util.hpp"
#include "graspforge/kinematics.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

namespace {

LossValue zero_loss(int n) { return LossValue{0.0, VecX::Zero(n)}; }

}  // namespace

// --- loss terms --------------------------------------------------------------

LossValue loss_prior(const Grasp& grasp, const HandModel& model, const ContactAssignment& assignment,
                     double alpha) {
  const int n = 6 + model.dof();
  LossValue out = zero_loss(n);
  if (assignment.pairs.empty()) return out;
  const auto state = forward_kinematics(model, grasp);
  for (const auto& pair : assignment.pairs) {
    if (pair.link < 0 || pair.link >= model.num_links() ||
        pair.hand_candidate < 0 ||
        pair.hand_candidate >= static_cast<int>(model.contact_candidates[pair.link].size())) {
      throw IndexError("assignment names a missing hand candidate");
    }
    const auto& cand = model.contact_candidates[pair.link][pair.hand_candidate];
    const Iso3& x = state.link_world[pair.link];
    const Vec3 h = x * cand.point;
    const Vec3 nh = x.linear() * cand.normal;
    const Vec3 diff = h - pair.object_point;
    out.value += diff.squaredNorm() + alpha * (1.0 - nh.dot(pair.object_normal));
    out.gradient += 2.0 * point_jacobian(model, state, pair.link, h).transpose() * diff;
    out.gradient -= alpha * direction_jacobian(model, state, pair.link, nh).transpose() * pair.object_normal;
  }
  return out;
}

LossValue loss_surface_pull(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                            std::span<const HandPoint> points) {
  const int n = 6 + model.dof();
  LossValue out = zero_loss(n);
  if (points.empty()) return out;
  if (object.surface.empty()) throw DegenerateGeometryError("object has no surface samples");
  const auto state = forward_kinematics(model, grasp);
  for (const auto& hp : points) {
    const Vec3 p = state.link_world[hp.link] * hp.local;
    const auto [idx, dist] = object.surface_index.nearest(p);
    const Vec3 diff = p - object.surface.points[idx];
    out.value += diff.squaredNorm();
    out.gradient += 2.0 * point_jacobian(model, state, hp.link, p).transpose() * diff;
  }
  return out;
}

std::vector<HandPoint> assigned_hand_points(const HandModel& model, const ContactAssignment& assignment) {
  std::vector<HandPoint> out;
  for (const auto& pair : assignment.pairs) {
    out.push_back(HandPoint{pair.link, model.contact_candidates.at(pair.link).at(pair.hand_candidate).point});
  }
  return out;
}

std::vector<HandPoint> auxiliary_hand_points(const HandModel& model) {
  std::vector<HandPoint> out;
  for (int l : model.auxiliary_links) {
    if (!model.contact_candidates[l].empty()) {
      for (const auto& c : model.contact_candidates[l]) out.push_back(HandPoint{l, c.point});
    } else {
      for (const auto& p : model.surface_samples[l]) out.push_back(HandPoint{l, p});
    }
  }
  return out;
}

LossValue loss_stability(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                         const ContactAssignment& assignment) {
  const auto points = assigned_hand_points(model, assignment);
  return loss_surface_pull(grasp, model, object, points);
}

LossValue loss_auxiliary(const Grasp& grasp, const HandModel& model, const ObjectModel& object) {
  const auto points = auxiliary_hand_points(model);
  return loss_surface_pull(grasp, model, object, points);
}

LossValue loss_joint_limits(const HandModel& model, const VecX& joint_angles) {
  if (joint_angles.size() != model.dof()) throw DimensionError("joint vector length mismatch");
  LossValue out = zero_loss(model.dof());
  for (int j = 0; j < model.dof(); ++j) {
    const double over = joint_angles[j] - model.joints[j].upper;
    const double under = model.joints[j].lower - joint_angles[j];
    if (over > 0.0) {
      out.value += over * over;
      out.gradient[j] = 2.0 * over;
    } else if (under > 0.0) {
      out.value += under * under;
      out.gradient[j] = -2.0 * under;
    }
  }
  return out;
}

LossValue loss_collision(const Grasp& grasp, const HandModel& model, const ObjectModel& object) {
  const int n = 6 + model.dof();
  LossValue out = zero_loss(n);
  const IndexedMesh& mesh = *object.mesh;
  if (!mesh.watertight()) throw DegenerateGeometryError("collision loss needs a watertight object mesh");
  const auto state = forward_kinematics(model, grasp);
  for (int l = 0; l < model.num_links(); ++l) {
    for (const auto& s : model.links[l].spheres) {
      const Vec3 c = state.link_world[l] * s.center;
      if (mesh.box().squared_distance(c) >= s.radius * s.radius) continue;
      SurfacePoint near;
      const double sd = signed_distance(mesh, c, near);
      const double depth = s.radius - sd;
      if (depth <= 0.0) continue;
      // The gradient of the signed distance is the outward direction from the
      // nearest surface point in both the inside and outside cases.
      Vec3 dir;
      if (near.distance > 1e-12) {
        dir = (c - near.point) / near.distance;
        if (sd < 0.0) dir = -dir;
      } else {
        dir = mesh.orientation() * near.normal;
      }
      out.value += depth * depth;
      out.gradient -= 2.0 * depth * point_jacobian(model, state, l, c).transpose() * dir;
    }
  }
  return out;
}

LossValue loss_self_penetration(const Grasp& grasp, const HandModel& model) {
  const int n = 6 + model.dof();
  LossValue out = zero_loss(n);
  const auto state = forward_kinematics(model, grasp);
  struct WorldSphere {
    int link;
    Vec3 c;
    double r;
  };
  std::vector<WorldSphere> spheres;
  for (int l = 0; l < model.num_links(); ++l) {
    for (const auto& s : model.links[l].spheres) spheres.push_back({l, state.link_world[l] * s.center, s.radius});
  }
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < spheres.size(); ++j) {
      const auto& a = spheres[i];
      const auto& b = spheres[j];
      if (a.link == b.link || model.adjacent(a.link, b.link)) continue;
      const Vec3 d = a.c - b.c;
      const double dist = d.norm();
      const double overlap = a.r + b.r - dist;
      if (overlap <= 0.0 || dist < 1e-12) {
        if (overlap > 0.0) out.value += overlap * overlap;  // coincident centers: no usable direction
        continue;
      }
      out.value += overlap * overlap;
      const Vec3 u = d / dist;
      out.gradient -= 2.0 * overlap *
                      (point_jacobian(model, state, a.link, a.c) - point_jacobian(model, state, b.link, b.c))
                          .transpose() *
                      u;
    }
  }
  return out;
}

LossBreakdown total_loss(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                         const ContactAssignment& assignment, const LossWeights& w) {
  const int n = 6 + model.dof();
  LossBreakdown out;
  out.gradient = VecX::Zero(n);
  const auto prior = loss_prior(grasp, model, assignment, w.alpha);
  const auto stab = loss_stability(grasp, model, object, assignment);
  const auto aux = loss_auxiliary(grasp, model, object);
  const auto joint = loss_joint_limits(model, grasp.joints);
  const auto coll = loss_collision(grasp, model, object);
  const auto self = loss_self_penetration(grasp, model);
  out.prior = prior.value;
  out.stab = stab.value;
  out.aux = aux.value;
  out.joint = joint.value;
  out.coll = coll.value;
  out.self = self.value;
  out.total = w.prior * prior.value + w.stab * stab.value + w.aux * aux.value + w.joint * joint.value +
              w.coll * coll.value + w.self * self.value;
  out.gradient = w.prior * prior.gradient + w.stab * stab.gradient + w.aux * aux.gradient +
                 w.coll * coll.gradient + w.self * self.gradient;
  out.gradient.tail(model.dof()) += w.joint * joint.gradient;
  return out;
}

std::vector<std::string> validate_weights(const LossWeights& w) {
  std::vector<std::string> problems;
  const std::pair<const char*, double> fields[] = {{"prior", w.prior}, {"stab", w.stab}, {"aux", w.aux},
                                                   {"joint", w.joint}, {"coll", w.coll}, {"self", w.self},
                                                   {"alpha", w.alpha}};
  for (const auto& [name, v] : fields) {
    if (!(v >= 0.0) || !std::isfinite(v)) problems.push_back(std::string("weights.") + name + " must be >= 0");
  }
  return problems;
}

std::vector<std::string> validate_config(const OptimizationConfig& c) {
  std::vector<std::string> problems;
  if (c.num_grasps < 1) problems.push_back("optimization.num_grasps must be >= 1");
  if (c.iterations < 1) problems.push_back("optimization.iterations must be >= 1");
  if (!(c.step_rotation > 0.0)) problems.push_back("optimization.step_rotation must be > 0");
  if (!(c.step_translation > 0.0)) problems.push_back("optimization.step_translation must be > 0");
  if (!(c.step_joints > 0.0)) problems.push_back("optimization.step_joints must be > 0");
  if (!(c.step_decay > 0.0 && c.step_decay <= 1.0)) problems.push_back("optimization.step_decay must be in (0, 1]");
  if (!(c.temperature >= 0.0)) problems.push_back("optimization.temperature must be >= 0");
  if (!(c.temperature_decay > 0.0 && c.temperature_decay < 1.0)) {
    problems.push_back("optimization.temperature_decay must be in (0, 1)");
  }
  if (!(c.noise_scale >= 0.0)) problems.push_back("optimization.noise_scale must be >= 0");
  if (c.resample_period < 0) problems.push_back("optimization.resample_period must be >= 0");
  if (!(c.init_distance > 0.0)) problems.push_back("optimization.init_distance must be > 0");
  if (!(c.init_cone_deg >= 0.0 && c.init_cone_deg <= 180.0)) {
    problems.push_back("optimization.init_cone_deg must be in [0, 180]");
  }
  if (!(c.init_joint_jitter >= 0.0 && c.init_joint_jitter <= 0.5)) {
    problems.push_back("optimization.init_joint_jitter must be in [0, 0.5]");
  }
  if (c.init_attempts < 1) problems.push_back("optimization.init_attempts must be >= 1");
  return problems;
}

// --- sampling and initialization ---------------------------------------------

namespace {

int pick_weighted(const std::vector<ObjectCandidate>& list, Rng& rng) {
  double total = 0.0;
  for (const auto& c : list) total += std::max(0.0, c.weight);
  const double u = uniform01(rng);
  if (!(total > 0.0)) return std::min(static_cast<int>(u * list.size()), static_cast<int>(list.size()) - 1);
  double target = u * total;
  for (std::size_t i = 0; i < list.size(); ++i) {
    target -= std::max(0.0, list[i].weight);
    if (target < 0.0) return static_cast<int>(i);
  }
  // Rounding left a sliver past the end; give it to the last positive weight.
  for (int i = static_cast<int>(list.size()) - 1; i >= 0; --i) {
    if (list[i].weight > 0.0) return i;
  }
  return 0;
}

bool finger_usable(const HandModel& model, int finger, const std::vector<ObjectCandidate>& list) {
  if (list.empty() || finger < 0 || finger >= model.num_fingers()) return false;
  for (int l : model.finger_contact_links(finger)) {
    if (!model.contact_candidates[l].empty()) return true;
  }
  return false;
}

}  // namespace

ContactAssignment sample_assignment(const HandModel& model, const ContactCandidateSet& candidates, Rng& rng) {
  ContactAssignment out;
  for (const auto& [finger, list] : candidates.fingers) {
    if (!finger_usable(model, finger, list)) continue;
    std::vector<std::pair<int, int>> hand;
    for (int l : model.finger_contact_links(finger)) {
      for (std::size_t c = 0; c < model.contact_candidates[l].size(); ++c) hand.emplace_back(l, static_cast<int>(c));
    }
    const int o = pick_weighted(list, rng);
    const int h = std::min(static_cast<int>(uniform01(rng) * hand.size()), static_cast<int>(hand.size()) - 1);
    AssignedPair pair;
    pair.finger = finger;
    pair.link = hand[h].first;
    pair.hand_candidate = hand[h].second;
    pair.object_candidate = o;
    pair.object_point = list[o].point;
    pair.object_normal = -list[o].normal.normalized();
    out.pairs.push_back(pair);
  }
  if (out.pairs.empty()) throw MissingCandidatesError("no finger has usable contact candidates");
  return out;
}

namespace {

Vec3 any_perpendicular(const Vec3& v) {
  int axis = 0;
  v.cwiseAbs().minCoeff(&axis);
  return v.cross(Vec3::Unit(axis)).normalized();
}

/// Unit vector uniformly distributed on the spherical cap of half-angle
/// `cone` around `axis`.
Vec3 sample_cone(const Vec3& axis, double cone, Rng& rng) {
  const double cos_phi = 1.0 - uniform01(rng) * (1.0 - std::cos(cone));
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - cos_phi * cos_phi));
  const double az = 2.0 * std::numbers::pi * uniform01(rng);
  const Vec3 e1 = any_perpendicular(axis);
  const Vec3 e2 = axis.cross(e1);
  return (cos_phi * axis + sin_phi * (std::cos(az) * e1 + std::sin(az) * e2)).normalized();
}

}  // namespace

std::vector<Grasp> initialize_grasps(const HandModel& model, const ObjectModel& object,
                                     const ContactCandidateSet& candidates, const OptimizationConfig& config) {
  if (candidates.empty()) throw MissingCandidatesError("cannot initialize grasps without contact candidates");
  Vec3 centroid = Vec3::Zero(), normal_sum = Vec3::Zero();
  double wsum = 0.0;
  std::vector<Vec3> pts;
  for (const auto& [finger, list] : candidates.fingers) {
    for (const auto& c : list) {
      const double w = std::max(0.0, c.weight);
      centroid += w * c.point;
      normal_sum += w * c.normal;
      wsum += w;
      pts.push_back(c.point);
    }
  }
  if (!(wsum > 0.0)) {
    centroid.setZero();
    normal_sum.setZero();
    for (const auto& [finger, list] : candidates.fingers) {
      for (const auto& c : list) {
        centroid += c.point;
        normal_sum += c.normal;
      }
    }
    wsum = static_cast<double>(pts.size());
  }
  centroid /= wsum;

  // Opposing candidates cancel their normals; approach across the line
  // through them instead.
  Vec3 axis;
  if (normal_sum.norm() > 0.1 * wsum) {
    axis = normal_sum.normalized();
  } else {
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 principal = eig.eigenvectors().col(2);
    axis = principal.norm() > 0.0 && cov.trace() > 0.0 ? any_perpendicular(principal) : Vec3::UnitZ();
    // Prefer the side away from the object's center.
    if (axis.dot(centroid - object.centroid) < 0.0) axis = -axis;
  }

  const Vec3 approach_local = model.palm.approach.normalized();
  const double cone = config.init_cone_deg * std::numbers::pi / 180.0;
  const std::uint64_t init_seed = derive_seed(config.seed, "init");
  std::vector<Grasp> out;
  out.reserve(config.num_grasps);
  for (int i = 0; i < config.num_grasps; ++i) {
    Rng rng(derive_seed(init_seed, static_cast<std::uint64_t>(i)));
    Grasp best;
    double best_coll = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < config.init_attempts; ++attempt) {
      const Vec3 dir = cone > 0.0 ? sample_cone(axis, cone, rng) : axis;
      const double roll = 2.0 * std::numbers::pi * uniform01(rng);
      const Quat align = Quat::FromTwoVectors(approach_local, -dir);
      const Quat rot = (Quat(Eigen::AngleAxisd(roll, -dir)) * align).normalized();
      Grasp g = make_grasp(model);
      g.rotation = rot;
      g.translation = centroid + config.init_distance * dir - (rot * model.palm.center);
      for (int j = 0; j < model.dof(); ++j) {
        const auto& joint = model.joints[j];
        const double range = joint.upper - joint.lower;
        const double jitter = config.init_joint_jitter * range * (2.0 * uniform01(rng) - 1.0);
        g.joints[j] = std::clamp(0.5 * (joint.lower + joint.upper) + jitter, joint.lower, joint.upper);
      }
      const double coll = loss_collision(g, model, object).value;
      if (coll < best_coll) {
        best_coll = coll;
        best = g;
      }
      if (coll <= 0.0) break;
    }
    out.push_back(best);
  }
  return out;
}

// --- optimizer ---------------------------------------------------------------

namespace {

bool metropolis(double proposed, double current, double temperature, Rng& rng) {
  if (proposed <= current) return true;
  if (!(temperature > 0.0)) return false;
  return uniform01(rng) < std::exp(-(proposed - current) / temperature);
}

ChainResult run_chain(const HandModel& model, const ObjectModel& object, const ContactCandidateSet& candidates,
                      const LossWeights& weights, const OptimizationConfig& config, int chain, const Grasp& init) {
  ChainResult res;
  res.chain = chain;
  res.seed = derive_seed(derive_seed(config.seed, "chain"), static_cast<std::uint64_t>(chain));
  Rng rng(res.seed);
  const int n = 6 + model.dof();

  VecX step(n);
  step.head<3>().setConstant(config.step_rotation);
  step.segment<3>(3).setConstant(config.step_translation);
  step.tail(model.dof()).setConstant(config.step_joints);

  Grasp grasp = init;
  grasp.joints = clamp_to_limits(model, grasp.joints);
  ContactAssignment assignment = sample_assignment(model, candidates, rng);
  LossBreakdown cur = total_loss(grasp, model, object, assignment, weights);
  if (!std::isfinite(cur.total)) {
    res.grasp = grasp;
    res.losses = cur;
    res.assignment = assignment;
    res.aborted = true;
    res.abort_reason = "non-finite loss at the initial state";
    return res;
  }
  res.grasp = grasp;
  res.losses = cur;
  res.assignment = assignment;

  double temperature = config.temperature;
  double scale = 1.0;
  double adapt = 1.0;
  res.trace.reserve(config.iterations);
  VecX noise(n);
  for (int it = 0; it < config.iterations; ++it) {
    if (config.resample_period > 0 && it > 0 && it % config.resample_period == 0) {
      ContactAssignment next = sample_assignment(model, candidates, rng);
      LossBreakdown alt = total_loss(grasp, model, object, next, weights);
      if (std::isfinite(alt.total) && metropolis(alt.total, cur.total, temperature, rng)) {
        assignment = std::move(next);
        cur = std::move(alt);
      }
    }
    for (int k = 0; k < n; ++k) noise[k] = normal01(rng);
    const VecX s = (scale * adapt) * step;
    VecX delta = -s.cwiseProduct(cur.gradient);
    if (config.noise_scale > 0.0 && temperature > 0.0) {
      delta += config.noise_scale * (2.0 * temperature * s).cwiseSqrt().cwiseProduct(noise);
    }
    Grasp proposal = retract(grasp, delta);
    proposal.joints = clamp_to_limits(model, proposal.joints);
    LossBreakdown next = total_loss(proposal, model, object, assignment, weights);
    if (std::isfinite(next.total) && metropolis(next.total, cur.total, temperature, rng)) {
      grasp = proposal;
      cur = std::move(next);
      ++res.accepted;
      if (config.adaptive_step) adapt = std::min(1.0, adapt * 1.2);
    } else if (config.adaptive_step) {
      adapt = std::max(1e-4, adapt * 0.7);
    }
    res.trace.push_back(cur.total);
    if (cur.total < res.losses.total) {
      res.grasp = grasp;
      res.losses = cur;
      res.assignment = assignment;
    }
    temperature *= config.temperature_decay;
    scale *= config.step_decay;
  }
  return res;
}

}  // namespace

OptimizationResult optimize(const HandModel& model, const ObjectModel& object, const ContactCandidateSet& candidates,
                            const LossWeights& weights, const OptimizationConfig& config, Execution exec) {
  auto problems = validate_config(config);
  for (auto& p : validate_weights(weights)) problems.push_back(std::move(p));
  if (!problems.empty()) throw ValidationError(problems);

  OptimizationResult result;
  for (const auto& [finger, list] : candidates.fingers) {
    if (!finger_usable(model, finger, list)) {
      result.warnings.push_back("finger " + std::to_string(finger) + ": no usable candidates; excluded");
    }
  }
  const auto inits = initialize_grasps(model, object, candidates, config);
  result.chains.resize(config.num_grasps);
  const int n = config.num_grasps;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (int c = 0; c < n; ++c) {
    result.chains[c] = run_chain(model, object, candidates, weights, config, c, inits[c]);
  }
  for (const auto& ch : result.chains) {
    if (ch.aborted) result.warnings.push_back("chain " + std::to_string(ch.chain) + ": " + ch.abort_reason);
  }
  std::stable_sort(result.chains.begin(), result.chains.end(), [](const ChainResult& a, const ChainResult& b) {
    if (a.aborted != b.aborted) return !a.aborted;
    if (a.losses.total != b.losses.total) return a.losses.total < b.losses.total;
    return a.chain < b.chain;
  });
  return result;
}

// --- serialization -----------------------------------------------------------

json weights_to_json(const LossWeights& w) {
  return json{{"prior", w.prior}, {"stab", w.stab}, {"aux", w.aux}, {"joint", w.joint},
              {"coll", w.coll},   {"self", w.self}, {"alpha", w.alpha}};
}

LossWeights weights_from_json(const json& j) {
  LossWeights w;
  w.prior = ju::value_or(j, "prior", w.prior);
  w.stab = ju::value_or(j, "stab", w.stab);
  w.aux = ju::value_or(j, "aux", w.aux);
  w.joint = ju::value_or(j, "joint", w.joint);
  w.coll = ju::value_or(j, "coll", w.coll);
  w.self = ju::value_or(j, "self", w.self);
  w.alpha = ju::value_or(j, "alpha", w.alpha);
  return w;
}

json config_to_json(const OptimizationConfig& c) {
  return json{{"num_grasps", c.num_grasps},
              {"iterations", c.iterations},
              {"step_rotation", c.step_rotation},
              {"step_translation", c.step_translation},
              {"step_joints", c.step_joints},
              {"step_decay", c.step_decay},
              {"temperature", c.temperature},
              {"temperature_decay", c.temperature_decay},
              {"noise_scale", c.noise_scale},
              {"adaptive_step", c.adaptive_step},
              {"resample_period", c.resample_period},
              {"init_distance", c.init_distance},
              {"init_cone_deg", c.init_cone_deg},
              {"init_joint_jitter", c.init_joint_jitter},
              {"init_attempts", c.init_attempts},
              {"seed", c.seed}};
}

OptimizationConfig config_from_json(const json& j) {
  OptimizationConfig c;
  try {
    c.num_grasps = ju::value_or(j, "num_grasps", c.num_grasps);
    c.iterations = ju::value_or(j, "iterations", c.iterations);
    c.step_rotation = ju::value_or(j, "step_rotation", c.step_rotation);
    c.step_translation = ju::value_or(j, "step_translation", c.step_translation);
    c.step_joints = ju::value_or(j, "step_joints", c.step_joints);
    c.step_decay = ju::value_or(j, "step_decay", c.step_decay);
    c.temperature = ju::value_or(j, "temperature", c.temperature);
    c.temperature_decay = ju::value_or(j, "temperature_decay", c.temperature_decay);
    c.noise_scale = ju::value_or(j, "noise_scale", c.noise_scale);
    c.adaptive_step = ju::value_or(j, "adaptive_step", c.adaptive_step);
    c.resample_period = ju::value_or(j, "resample_period", c.resample_period);
    c.init_distance = ju::value_or(j, "init_distance", c.init_distance);
    c.init_cone_deg = ju::value_or(j, "init_cone_deg", c.init_cone_deg);
    c.init_joint_jitter = ju::value_or(j, "init_joint_jitter", c.init_joint_jitter);
    c.init_attempts = ju::value_or(j, "init_attempts", c.init_attempts);
    c.seed = ju::value_or<std::uint64_t>(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("optimization: ") + e.what());
  }
  return c;
}

json assignment_to_json(const ContactAssignment& a) {
  json out = json::array();
  for (const auto& p : a.pairs) {
    out.push_back({{"finger", p.finger},
                   {"link", p.link},
                   {"hand_candidate", p.hand_candidate},
                   {"object_candidate", p.object_candidate},
                   {"object_point", ju::to_json(p.object_point)},
                   {"object_normal", ju::to_json(p.object_normal)}});
  }
  return out;
}

ContactAssignment assignment_from_json(const json& j) {
  ContactAssignment a;
  if (!j.is_array()) throw ParseError("assignment: expected an array");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = "assignment[" + std::to_string(k) + "]";
    AssignedPair pair;
    pair.finger = ju::integer(ju::field(j[k], "finger", p), p + ".finger");
    pair.link = ju::integer(ju::field(j[k], "link", p), p + ".link");
    pair.hand_candidate = ju::integer(ju::field(j[k], "hand_candidate", p), p + ".hand_candidate");
    pair.object_candidate = ju::integer(ju::field(j[k], "object_candidate", p), p + ".object_candidate");
    pair.object_point = ju::vec3(ju::field(j[k], "object_point", p), p + ".object_point");
    pair.object_normal = ju::vec3(ju::field(j[k], "object_normal", p), p + ".object_normal");
    a.pairs.push_back(pair);
  }
  return a;
}

json grasp_record(const std::string& object_id, const ChainResult& chain) {
  const json g = grasp_to_json(chain.grasp);
  return json{{"object_id", object_id},
              {"chain", chain.chain},
              {"pose", {{"t", g["t"]}, {"q", g["q"]}}},
              {"joints", g["joints"]},
              {"final_losses",
               {{"prior", chain.losses.prior},
                {"stab", chain.losses.stab},
                {"aux", chain.losses.aux},
                {"joint", chain.losses.joint},
                {"coll", chain.losses.coll},
                {"self", chain.losses.self},
                {"total", chain.losses.total}}},
              {"assignment", assignment_to_json(chain.assignment)},
              {"seed", chain.seed},
              {"aborted", chain.aborted}};
}

}  // namespace graspforge
