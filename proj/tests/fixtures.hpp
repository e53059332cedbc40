#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "graspforge/grasp_adaptation.hpp"
#include "graspforge/hand_model.hpp"
#include "graspforge/object_model.hpp"
#include "graspforge/rng.hpp"

namespace fixtures {

using namespace graspforge;

std::filesystem::path data_path(const std::string& rel);
std::filesystem::path scratch_dir(const std::string& name);

const HandModel& toy_hand();
const HandModel& six_dof_hand();

inline constexpr double kSphereRadius = 0.04;

/// Sphere of radius 4 cm at the origin, 32 x 32 UV tessellation, 4096 samples.
const ObjectModel& sphere_object();
/// Same sphere with only 200 surface samples.
const ObjectModel& sparse_sphere_object();

/// Exact antipodal candidates at the sphere's +-x poles with radial normals,
/// one per toy finger; sample_index is the nearest surface sample.
ContactCandidateSet antipodal_candidates(const ObjectModel& object);

Quat random_rotation(Rng& rng);
Grasp random_grasp(const HandModel& model, Rng& rng, double joint_margin = 0.0);

/// Toy hand pose with both distal pads on the sphere's +-x poles.
Grasp toy_pinch_grasp();

/// Central finite-difference gradient over (rotation tangent, translation, joints).
VecX numeric_gradient(const std::function<double(const Grasp&)>& f, const Grasp& g, double h = 1e-6);

double relative_error(const VecX& analytic, const VecX& numeric);

}  // namespace fixtures
