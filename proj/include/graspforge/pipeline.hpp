#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/contact_transfer.hpp"
#include "graspforge/dro_recovery.hpp"
#include "graspforge/grasp_adaptation.hpp"
#include "graspforge/verification.hpp"

namespace graspforge {

/// Input paths are relative to `base_dir` (the config file's directory).
struct PipelineConfig {
  std::filesystem::path base_dir;
  std::filesystem::path hand;
  std::filesystem::path objects;          // directory of object descriptors
  std::filesystem::path demo_contacts;
  std::filesystem::path demo_views;       // directory of camera sidecars
  std::filesystem::path correspondences;  // directory holding <object id>.jsonl
  std::filesystem::path render_views;     // directory holding <object id>/*.json
  std::filesystem::path output;

  std::uint64_t seed = 0;
  int grasps_to_keep = 10;
  int camera_poses = 1200;
  double camera_cube = 1.0;  // side of the cube camera positions are drawn from
  int hand_points = kDefaultHandPoints;
  int object_points = 1024;  // importance-sampled columns of each distance matrix
  double importance_temperature = kDefaultImportanceTemperature;

  TransferConfig transfer;
  AggregateConfig aggregate;
  LossWeights weights;
  OptimizationConfig optimizer;  // its seed is derived per object
  VerificationThresholds verification;
  RecoveryConfig recovery;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }
  std::filesystem::path out(const std::filesystem::path& p) const { return output / p; }
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Everything that determines the output. The output directory is left out
/// so the same run written to two places compares equal.
nlohmann::json pipeline_config_to_json(const PipelineConfig& config);
/// SHA-256 of the canonical config JSON.
std::string config_hash(const PipelineConfig& config);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Every problem found; empty means the config is runnable.
std::vector<std::string> validate_pipeline(const PipelineConfig& config);

/// Object descriptors sorted by object id.
std::vector<std::filesystem::path> object_descriptors(const PipelineConfig& config);

struct StageOutcome {
  std::map<std::string, int> counts;  // per object
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

// Each stage reads its predecessor's files under the output directory.

/// Transfer and aggregation: objects/<id>/candidates.json.
StageOutcome run_transfer_stage(const PipelineConfig& config, Execution exec = Execution::kParallel);
/// Optimization: objects/<id>/chains.jsonl.
StageOutcome run_adapt_stage(const PipelineConfig& config, Execution exec = Execution::kParallel);
/// Verification, selection and record emission: objects/<id>/verification.jsonl
/// and records/<id>/grasp_NNN.{json,drom,drom.json}.
StageOutcome run_verify_stage(const PipelineConfig& config, Execution exec = Execution::kParallel);
/// Recovers every record's grasp from its distance matrix: objects/<id>/recovery.jsonl.
StageOutcome run_recover_stage(const PipelineConfig& config, Execution exec = Execution::kParallel);
/// Camera poses for an external renderer: objects/<id>/camera_poses.json.
StageOutcome run_views_stage(const PipelineConfig& config);

struct RunOutcome {
  int records = 0;
  std::map<std::string, int> records_per_object;
  std::vector<std::string> warnings;
  std::map<std::string, double> stage_seconds;
};

/// views, transfer, adapt, verify, then summary.json and manifest.json.
RunOutcome run_pipeline(const PipelineConfig& config, Execution exec = Execution::kParallel);

/// Per-object pass counts, quality and loss statistics, recounted from the
/// files under `output_dir`. Stage runtimes live in timing.json, which is
/// referenced rather than copied so the summary stays reproducible.
nlohmann::json emit_summary(const std::filesystem::path& output_dir);

/// Relative path and SHA-256 of every file under `output_dir`, except the
/// manifest itself and timing.json.
nlohmann::json build_manifest(const std::filesystem::path& output_dir);
void write_manifest(const std::filesystem::path& output_dir);

/// Adds (or overwrites) stage runtimes in timing.json.
void record_timing(const std::filesystem::path& output_dir, const std::map<std::string, double>& seconds);

struct DatasetRecord {
  std::string object_id;
  int rank = 0;
  int chain = 0;
  Grasp grasp;
  ContactAssignment assignment;
  LossBreakdown losses;
  VerificationReport report;
  std::string distance_matrix;  // relative to the output directory
  std::string candidates;
  std::string config_hash;
  std::uint64_t seed = 0;
};

nlohmann::json record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const nlohmann::json& j);
/// Records under `output_dir`, objects in id order and ranks ascending.
std::vector<std::filesystem::path> list_records(const std::filesystem::path& output_dir);

struct FixtureOptions {
  std::filesystem::path hand;  // descriptor copied into the fixture
  /// Add a second object whose correspondences never reach the contacts.
  bool with_unreachable_object = true;
  int views = 16;
  int image_size = 96;
  int num_grasps = 16;
  int iterations = 600;
  int camera_poses = 1200;
};

/// Writes a complete input tree (hand, sphere object with a functional
/// region, demo contacts and views, render views, identity correspondences)
/// plus pipeline.json. Returns the config path.
std::filesystem::path make_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace graspforge
