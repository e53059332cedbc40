#pragma once

#include <filesystem>
#include <vector>

#include "graspforge/mesh.hpp"

namespace graspforge {

/// ASCII OBJ; polygons are fan-triangulated.
TriangleMesh load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Binary little-endian (or ASCII) PLY with vertex x/y/z and a face list.
TriangleMesh load_ply_mesh(const std::filesystem::path& path);
void save_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Point cloud PLY; normals are read when nx/ny/nz are present.
OrientedPointSet load_ply_points(const std::filesystem::path& path);
void save_ply_points(const std::filesystem::path& path, const OrientedPointSet& points);

/// Dispatch on extension (.obj / .ply).
TriangleMesh load_mesh(const std::filesystem::path& path);

struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, row 0 at the top
};

/// Single-channel PFM ("Pf"). PFM stores rows bottom-up; this flips to top-down.
FloatImage read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const FloatImage& image);

}  // namespace graspforge
