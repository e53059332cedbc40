#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/hand_model.hpp"
#include "graspforge/object_model.hpp"

namespace graspforge {

// ---- convex geometry -------------------------------------------------------

/// normal . x <= offset, with a unit normal.
struct HullFacet {
  VecX normal;
  double offset = 0.0;
  std::vector<int> vertices;  // sorted
};

struct ConvexHull {
  int dim = 0;
  std::vector<HullFacet> facets;  // simplicial; coplanar faces come out triangulated
};

/// Incremental hull of points given as columns. Throws DegenerateGeometryError
/// when the points do not span `rows()` dimensions.
ConvexHull convex_hull(const MatX& points, double eps = 1e-10);

/// Nonnegative least squares (Lawson-Hanson active set).
VecX nnls(const MatX& a, const VecX& b, int max_iterations = 0);

// ---- stability -------------------------------------------------------------

struct Contact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // inward object normal
  /// Direction of the first friction-cone edge's tangential part. Zero picks
  /// an arbitrary one, which makes the discretized cone frame-dependent.
  Vec3 tangent = Vec3::Zero();
  double friction = 0.5;
  int link = -1;
  int finger = -1;  // -1 for links outside every finger chain
};

struct ContactState {
  std::vector<Contact> contacts;
};

struct VerificationThresholds {
  double contact_threshold = 0.003;
  double friction = 0.5;
  int cone_edges = 8;
  double functional_epsilon = 0.001;
  double avoidance_margin = 0.003;
  double lp_tolerance = 1e-9;
  /// Displacement bound of the simulated trial the wrench test stands in for.
  /// Reported, never used in a check.
  double displacement_reference = 0.02;
};

std::vector<std::string> validate_thresholds(const VerificationThresholds& t);

/// Hand contact candidates within `threshold` of the surface, placed at their
/// surface projections. Cone tangents follow the owning link's frame.
ContactState extract_contacts(const Grasp& grasp, const HandModel& model, const ObjectModel& object, double threshold,
                              double friction);

/// +x, -x, +y, -y, +z, -z.
std::array<Vec3, 6> test_directions();

/// Columns are the cone-edge wrenches (force, torque / length), one block of
/// `edges` columns per contact.
MatX contact_wrenches(const ContactState& contacts, const Vec3& centroid, double length, int edges);

struct WrenchResult {
  std::array<bool, 6> resisted{};
  /// Largest force-space ball (torque held at zero) inside the hull of unit
  /// wrenches. Positive exactly when all six directions are resisted.
  double quality = 0.0;
  /// Same radius measured in the full six-dimensional wrench space.
  double quality_6d = 0.0;
};

WrenchResult check_wrench_resistance(const ContactState& contacts, const Vec3& centroid, double length,
                                     const std::array<Vec3, 6>& directions = test_directions(), int edges = 8,
                                     double tolerance = 1e-9);

// ---- functionality and avoidance -------------------------------------------

struct FunctionalResult {
  bool functional = false;
  std::vector<int> fingers;
  std::vector<double> distances;  // per entry of `fingers`
};

/// Throws ValidationError when a designated finger has no functional region
/// or no fingertip candidates.
FunctionalResult check_functionality(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                                     double epsilon);

struct AvoidanceResult {
  bool clear = true;
  double min_distance = std::numeric_limits<double>::infinity();
};

/// Distances are taken from every hand surface sample and contact candidate.
AvoidanceResult check_avoidance(const Grasp& grasp, const HandModel& model, const ObjectModel& object, double margin);

// ---- report ----------------------------------------------------------------

struct VerificationReport {
  bool stable = false;
  double quality = 0.0;
  double quality_6d = 0.0;
  std::array<bool, 6> resisted_directions{};
  int num_contacts = 0;
  std::vector<int> stabilizing_fingers;
  bool functional = false;
  std::vector<int> functional_fingers;
  std::vector<double> functional_distances;
  bool avoidance_clear = true;
  double min_avoidance_distance = std::numeric_limits<double>::infinity();
  std::string note;

  bool passed() const { return stable && functional && avoidance_clear; }
};

VerificationReport verify(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                          const VerificationThresholds& thresholds = {});

std::vector<VerificationReport> verify_batch(std::span<const Grasp> grasps, const HandModel& model,
                                             const ObjectModel& object, const VerificationThresholds& thresholds = {},
                                             Execution exec = Execution::kParallel);

/// An infinite avoidance distance is written as null.
nlohmann::json report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const nlohmann::json& j);
nlohmann::json thresholds_to_json(const VerificationThresholds& t);
VerificationThresholds thresholds_from_json(const nlohmann::json& j);

// ---- importance maps -------------------------------------------------------

inline constexpr double kDefaultImportanceTemperature = 0.02;

/// p_i proportional to exp(-d_i / tau), d_i the distance from object point i
/// to its nearest hand point.
VecX importance_map(std::span<const Vec3> object_points, std::span<const Vec3> hand_points,
                    double temperature = kDefaultImportanceTemperature);

/// KL(p || q); infinite when q vanishes where p does not.
double kl_divergence(const VecX& p, const VecX& q);

/// Sequential draw-and-renormalize without replacement. Returned indices are
/// sorted ascending.
std::vector<int> importance_sample(std::span<const Vec3> points, const VecX& probabilities, int count,
                                   std::uint64_t seed);

}  // namespace graspforge
