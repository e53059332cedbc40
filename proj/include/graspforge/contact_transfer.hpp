#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/camera.hpp"
#include "graspforge/mesh.hpp"
#include "graspforge/object_model.hpp"

namespace graspforge {

// --- scale alignment and demo contacts -------------------------------------

struct ScaleAlignment {
  double scale = 1.0;
  std::vector<double> distances;   // per fingertip, to its nearest scaled object point
  std::vector<int> assignment;     // nearest object point per fingertip
  std::vector<double> objective;   // sum of squared distances after each round
  int rounds = 0;
};

/// Alternates nearest-point assignment and the closed-form least-squares
/// scale s = sum<o_i, h_i> / sum |o_i|^2 until the assignment is stable or
/// 50 rounds pass. Throws DegenerateGeometryError when all object points are
/// at the origin.
ScaleAlignment align_scale(std::span<const Vec3> fingertips, const OrientedPointSet& object);

struct FingerContact {
  int finger = 0;
  Vec3 fingertip = Vec3::Zero();
  Vec3 contact = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double distance = 0.0;
  bool contacting = false;
};

struct DemoContacts {
  double scale = 1.0;
  std::vector<FingerContact> fingers;

  /// Fingers within the contact threshold (the designated set F).
  std::vector<const FingerContact*> contacting() const;
};

inline constexpr double kDemoContactThreshold = 0.02;

/// `finger_ids` defaults to 0..n-1. Throws DegenerateGeometryError on an
/// empty object.
DemoContacts extract_demo_contacts(std::span<const Vec3> fingertips, const OrientedPointSet& scaled_object,
                                   double max_distance = kDemoContactThreshold,
                                   std::span<const int> finger_ids = {});

nlohmann::json demo_contacts_to_json(const DemoContacts& demo);
DemoContacts demo_contacts_from_json(const nlohmann::json& doc);

// --- correspondences ---------------------------------------------------------

struct Match {
  Pixel src;
  Pixel dst;
  double confidence = 1.0;
};

struct CorrespondenceSet {
  std::string src_view;
  std::string dst_view;
  std::vector<Match> matches;
};

/// JSON lines: {src_view, dst_view, matches: [[u1, v1, u2, v2, conf], ...]}.
std::vector<CorrespondenceSet> load_correspondences(const std::filesystem::path& path);
void save_correspondences(const std::filesystem::path& path, const std::vector<CorrespondenceSet>& sets);
std::vector<std::string> validate_correspondences(const std::vector<CorrespondenceSet>& sets,
                                                  const std::vector<CameraView>& demo_views,
                                                  const std::vector<CameraView>& render_views);

struct TransferConfig {
  double snap_radius_px = 4.0;
  double visibility_tolerance = 0.01;
  /// Carry the sub-pixel offset between the projected contact and the
  /// matched source pixel over to the target pixel.
  bool subpixel_offset = true;
};

struct FingerCloud {
  int finger = 0;
  std::vector<Vec3> points;
  std::vector<double> confidences;
  int frames_valid = 0;
  int frames_rejected = 0;
  int matches_missed = 0;
};

struct TransferResult {
  std::vector<FingerCloud> clouds;  // one per contacting finger, finger order
  std::vector<std::string> warnings;
};

/// Throws IndexError when a correspondence set names an unknown view.
TransferResult transfer_via_correspondences(const std::vector<CameraView>& demo_views, const DemoContacts& demo,
                                            const std::vector<CameraView>& render_views,
                                            const std::vector<CorrespondenceSet>& correspondences,
                                            const TransferConfig& config = {},
                                            Execution exec = Execution::kParallel);

// --- clustering and candidate aggregation ----------------------------------

inline constexpr int kNoise = -1;

/// Core point: at least `min_pts` points (itself included) within `eps`.
/// Clusters are numbered in order of their lowest-index core point; a border
/// point joins the cluster of its lowest-index core neighbour.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts,
                        Execution exec = Execution::kParallel);

struct ObjectCandidate {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // outward surface normal
  double weight = 0.0;          // mean member confidence
  int members = 0;
  int sample_index = -1;        // snapped surface sample
};

struct ContactCandidateSet {
  std::map<int, std::vector<ObjectCandidate>> fingers;

  bool empty() const;
};

struct AggregateConfig {
  double eps = 0.015;
  int min_pts = 4;
  int max_candidates = 3;
};

struct AggregateResult {
  ContactCandidateSet candidates;
  std::vector<std::string> warnings;
};

/// Clusters each finger's cloud and keeps the confidence-weighted centroids
/// of the largest clusters, snapped to the nearest object surface sample.
AggregateResult aggregate_candidates(const std::vector<FingerCloud>& clouds, const ObjectModel& object,
                                     const AggregateConfig& config = {});

nlohmann::json candidates_to_json(const ContactCandidateSet& set, const std::string& object_id);
ContactCandidateSet candidates_from_json(const nlohmann::json& doc);

}  // namespace graspforge
