#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "graspforge/grasp_adaptation.hpp"
#include "graspforge/hand_model.hpp"
#include "graspforge/mesh.hpp"
#include "graspforge/object_model.hpp"

namespace graspforge {

/// Hand-to-object distances: row i is hand point i, column j object point j.
struct DistanceMatrix {
  MatX values;
  std::vector<HandPoint> hand_points;
  std::vector<int> object_points;  // indices into the object's surface samples

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

inline constexpr int kDefaultHandPoints = 128;

/// Evenly strided subset of the hand's per-link surface samples (links in
/// index order). Throws ValidationError when the hand has fewer than four.
std::vector<HandPoint> select_hand_points(const HandModel& model, int count = kDefaultHandPoints);

std::vector<Vec3> hand_points_world(const HandModel& model, const Grasp& grasp, std::span<const HandPoint> points);

/// Euclidean distances between two point lists.
MatX pairwise_distances(std::span<const Vec3> a, std::span<const Vec3> b, Execution exec = Execution::kParallel);
/// Plain double loop, kept as the reference for the parallel kernel.
MatX pairwise_distances_reference(std::span<const Vec3> a, std::span<const Vec3> b);

DistanceMatrix compute_distance_matrix(const HandModel& model, const Grasp& grasp, std::span<const HandPoint> hand_points,
                                       std::span<const Vec3> object_points, std::vector<int> object_ids = {},
                                       Execution exec = Execution::kParallel);
/// Object points are the given surface sample indices (all samples when empty).
DistanceMatrix compute_distance_matrix(const HandModel& model, const Grasp& grasp, const ObjectModel& object,
                                       std::span<const HandPoint> hand_points, std::vector<int> object_ids = {},
                                       Execution exec = Execution::kParallel);

struct Multilateration {
  Vec3 point = Vec3::Zero();
  double residual = 0.0;  // RMS of | |x - a_j| - d_j |
};

/// Throws DegenerateGeometryError for fewer than four or coplanar anchors and
/// DimensionError when the sizes differ.
Multilateration multilaterate(std::span<const Vec3> anchors, std::span<const double> distances, bool refine = true);

struct IkConfig {
  double damping = 1e-4;
  double tolerance = 1e-5;  // RMS in meters
  int max_iterations = 200;
  int max_bad_steps = 10;
};

struct IkResult {
  Grasp grasp;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals;  // per point
};

/// Damped least squares over (pose, joints), started from a rigid fit of the
/// root-link points. Throws DegenerateGeometryError when the targets are
/// fewer than four or coplanar.
IkResult fit_pose_and_joints(std::span<const Vec3> targets, std::span<const HandPoint> points, const HandModel& model,
                             const Grasp& initial, const IkConfig& config = {});

struct RecoveryConfig {
  int anchors_k = 0;  // 0 uses every column; otherwise the k nearest anchors per row
  bool refine = true;
  IkConfig ik;
};

struct RecoveryResult {
  Grasp grasp;
  std::vector<Vec3> targets;  // multilaterated hand points
  std::vector<double> multilateration_residuals;
  IkResult ik;
};

/// `object_points` holds the world positions of the matrix columns.
RecoveryResult recover_grasp(const DistanceMatrix& d, std::span<const Vec3> object_points, const HandModel& model,
                             const Grasp& initial, const RecoveryConfig& config = {},
                             Execution exec = Execution::kParallel);

/// Writes `path` (binary) and `path` + ".json" (point ids).
void save_distance_matrix(const std::filesystem::path& path, const DistanceMatrix& d);
DistanceMatrix load_distance_matrix(const std::filesystem::path& path);

}  // namespace graspforge
