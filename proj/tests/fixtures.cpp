#include "fixtures.hpp"

#include <cmath>
#include <numbers>

#include "graspforge/kinematics.hpp"
#include "graspforge/mesh.hpp"

namespace fixtures {

std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(GRASPFORGE_DATA_DIR) / rel; }

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "graspforge_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const HandModel& toy_hand() {
  static const HandModel model = load_hand_model_file(data_path("hands/toy_two_finger.json"));
  return model;
}

const HandModel& six_dof_hand() {
  static const HandModel model = load_hand_model_file(data_path("hands/inspire_like_6dof.json"));
  return model;
}

const ObjectModel& sphere_object() {
  static const ObjectModel obj = make_object_model("sphere", make_uv_sphere(kSphereRadius, 32, 32), 4096, 7);
  return obj;
}

const ObjectModel& sparse_sphere_object() {
  static const ObjectModel obj = make_object_model("sphere200", make_uv_sphere(kSphereRadius, 32, 32), 200, 11);
  return obj;
}

ContactCandidateSet antipodal_candidates(const ObjectModel& object) {
  ContactCandidateSet set;
  const Vec3 poles[2] = {Vec3(kSphereRadius, 0, 0), Vec3(-kSphereRadius, 0, 0)};
  for (int f = 0; f < 2; ++f) {
    const auto [idx, d] = object.surface_index.nearest(poles[f]);
    ObjectCandidate c;
    c.point = poles[f];
    c.normal = poles[f].normalized();
    c.weight = 1.0;
    c.members = 10;
    c.sample_index = idx;
    set.fingers[f].push_back(c);
  }
  return set;
}

Quat random_rotation(Rng& rng) {
  const Quat q(normal01(rng), normal01(rng), normal01(rng), normal01(rng));
  return q.normalized();
}

Grasp random_grasp(const HandModel& model, Rng& rng, double joint_margin) {
  Grasp g = make_grasp(model);
  g.rotation = random_rotation(rng);
  g.translation = Vec3(normal01(rng), normal01(rng), normal01(rng)) * 0.03;
  for (int j = 0; j < model.dof(); ++j) {
    const double lo = model.joints[j].lower - joint_margin;
    const double hi = model.joints[j].upper + joint_margin;
    g.joints[j] = lo + (hi - lo) * uniform01(rng);
  }
  return g;
}

Grasp toy_pinch_grasp() {
  Grasp g = make_grasp(toy_hand());
  g.translation = Vec3(0, 0, -0.095);
  return g;
}

VecX numeric_gradient(const std::function<double(const Grasp&)>& f, const Grasp& g, double h) {
  const int n = 6 + static_cast<int>(g.joints.size());
  VecX out(n);
  for (int i = 0; i < n; ++i) {
    VecX d = VecX::Zero(n);
    d[i] = h;
    out[i] = (f(retract(g, d)) - f(retract(g, -d))) / (2.0 * h);
  }
  return out;
}

double relative_error(const VecX& analytic, const VecX& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

}  // namespace fixtures
