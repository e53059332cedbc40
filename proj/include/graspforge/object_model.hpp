#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/mesh.hpp"

namespace graspforge {

/// Surface-sample subset a finger should touch; finger -1 applies to every
/// designated finger.
struct FunctionalRegion {
  int finger = -1;
  std::vector<int> indices;
};

/// Object mesh with dense surface samples and region annotations. Regions
/// index into `surface`.
struct ObjectModel {
  std::string id;
  std::shared_ptr<const IndexedMesh> mesh;
  OrientedPointSet surface;
  PointIndex surface_index;
  std::vector<FunctionalRegion> functional_regions;
  std::vector<int> avoidance;
  double scale = 1.0;
  Vec3 centroid = Vec3::Zero();
  double extent = 0.0;  // largest bounding-box side

  /// Region sample indices for a finger (tagged entries plus untagged ones).
  std::vector<int> functional_indices(int finger) const;
  OrientedPointSet subset(const std::vector<int>& indices) const;
};

struct RegionSpec {
  int finger = -1;
  std::vector<int> indices;
  bool by_ball = false;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// `mesh` is in object units; it is scaled by `scale` before sampling.
ObjectModel make_object_model(std::string id, const TriangleMesh& mesh, std::size_t sample_count,
                              std::uint64_t seed, double scale = 1.0);

/// Resolves ball specs (center, radius in scaled units) to sample indices.
std::vector<int> resolve_region(const ObjectModel& object, const RegionSpec& spec);

/// Descriptor keys: id, mesh, scale, samples, sample_seed, functional_regions,
/// avoidance_regions. Paths are relative to the descriptor.
ObjectModel load_object_model(const std::filesystem::path& descriptor);
ObjectModel object_model_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

}  // namespace graspforge
