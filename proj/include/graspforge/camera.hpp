#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graspforge/common.hpp"
#include "graspforge/mesh.hpp"

namespace graspforge {

using Pixel = Eigen::Vector2d;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Pinhole view. Pixel (u, v) = (column, row) with pixel centers on integer
/// coordinates; depth is camera-frame z in meters, 0 or NaN marks invalid.
struct CameraView {
  std::string id;
  Intrinsics intrinsics;
  Iso3 world_to_camera = Iso3::Identity();
  int width = 0;
  int height = 0;
  std::vector<float> depth;  // row-major, empty when no raster is attached

  bool has_depth() const { return !depth.empty(); }
  /// Nearest-pixel lookup; NaN for invalid or missing depth.
  double depth_at(const Pixel& px) const;
  bool in_bounds(const Pixel& px) const;
  /// Same scene with all lengths multiplied by `s` (camera translation and depth).
  CameraView scaled(double s) const;
};

std::vector<std::string> validate_camera(const CameraView& view);

struct Projection {
  Pixel pixel;
  double z = 0.0;
};

/// nullopt is the behind-camera marker (z <= 0).
std::optional<Projection> project(const CameraView& view, const Vec3& world_point);

/// nullopt when depth is invalid. Throws IndexError when the pixel is outside
/// the image.
std::optional<Vec3> backproject(const CameraView& view, const Pixel& pixel,
                                std::optional<double> depth_override = std::nullopt);

/// Camera at `eye` looking at `target`; +z forward, +y down in the image.
Iso3 look_at(const Vec3& eye, const Vec3& target);

/// Near-uniform view directions on a sphere around `center`.
std::vector<CameraView> fibonacci_views(int count, const Vec3& center, double radius,
                                        const Intrinsics& intrinsics, int width, int height);

/// Ray-cast depth raster of a mesh into `view`.
void render_depth(const IndexedMesh& mesh, CameraView& view, Execution exec = Execution::kParallel);

/// JSON sidecar: intrinsics, extrinsics (translation + quaternion), width,
/// height, depth_file (PFM, relative to the sidecar).
CameraView load_camera(const std::filesystem::path& sidecar, bool load_depth = true);
void save_camera(const std::filesystem::path& sidecar, const CameraView& view,
                 const std::string& depth_file = "");
nlohmann::json camera_to_json(const CameraView& view, const std::string& depth_file = "");

}  // namespace graspforge
