#include "graspforge/camera.hpp"

#include <cmath>
#include <numbers>

#include "graspforge/json_util.hpp"
#include "graspforge/mesh_io.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

namespace {

std::pair<int, int> nearest_pixel(const Pixel& px) {
  return {static_cast<int>(std::floor(px.x() + 0.5)), static_cast<int>(std::floor(px.y() + 0.5))};
}

}  // namespace

bool CameraView::in_bounds(const Pixel& px) const {
  if (!std::isfinite(px.x()) || !std::isfinite(px.y())) return false;
  const auto [col, row] = nearest_pixel(px);
  return col >= 0 && col < width && row >= 0 && row < height;
}

double CameraView::depth_at(const Pixel& px) const {
  if (!has_depth() || !in_bounds(px)) return std::numeric_limits<double>::quiet_NaN();
  const auto [col, row] = nearest_pixel(px);
  const double d = depth[static_cast<std::size_t>(row) * width + col];
  if (!std::isfinite(d) || d <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return d;
}

CameraView CameraView::scaled(double s) const {
  CameraView out = *this;
  out.world_to_camera.translation() *= s;
  for (auto& d : out.depth) d = static_cast<float>(d * s);
  return out;
}

std::vector<std::string> validate_camera(const CameraView& v) {
  std::vector<std::string> problems;
  const std::string where = "camera '" + v.id + "'";
  if (!(v.intrinsics.fx > 0.0) || !(v.intrinsics.fy > 0.0)) problems.push_back(where + ": fx, fy must be > 0");
  if (!(v.intrinsics.cx >= 0.0 && v.intrinsics.cx < v.width)) problems.push_back(where + ": cx outside [0, width)");
  if (!(v.intrinsics.cy >= 0.0 && v.intrinsics.cy < v.height)) problems.push_back(where + ": cy outside [0, height)");
  if (v.has_depth() && v.depth.size() != static_cast<std::size_t>(v.width) * v.height) {
    problems.push_back(where + ": depth raster size does not match width x height");
  }
  for (float d : v.depth) {
    if (std::isfinite(d) && d < 0.0f) {
      problems.push_back(where + ": negative depth value");
      break;
    }
  }
  return problems;
}

std::optional<Projection> project(const CameraView& view, const Vec3& world_point) {
  const Vec3 c = view.world_to_camera * world_point;
  if (c.z() <= 0.0) return std::nullopt;
  const auto& k = view.intrinsics;
  return Projection{Pixel(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy), c.z()};
}

std::optional<Vec3> backproject(const CameraView& view, const Pixel& pixel,
                                std::optional<double> depth_override) {
  if (!view.in_bounds(pixel)) {
    throw IndexError("pixel (" + std::to_string(pixel.x()) + ", " + std::to_string(pixel.y()) +
                     ") outside image of camera '" + view.id + "'");
  }
  const double z = depth_override ? *depth_override : view.depth_at(pixel);
  if (!std::isfinite(z) || z <= 0.0) return std::nullopt;
  const auto& k = view.intrinsics;
  const Vec3 cam((pixel.x() - k.cx) / k.fx * z, (pixel.y() - k.cy) / k.fy * z, z);
  return view.world_to_camera.inverse() * cam;
}

Iso3 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(z.dot(up)) > 0.99) up = Vec3::UnitY();
  const Vec3 y = -(up - up.dot(z) * z).normalized();
  const Vec3 x = y.cross(z);
  Iso3 cam_to_world = Iso3::Identity();
  cam_to_world.linear().col(0) = x;
  cam_to_world.linear().col(1) = y;
  cam_to_world.linear().col(2) = z;
  cam_to_world.translation() = eye;
  return cam_to_world.inverse();
}

std::vector<CameraView> fibonacci_views(int count, const Vec3& center, double radius,
                                        const Intrinsics& intrinsics, int width, int height) {
  std::vector<CameraView> views;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = golden * i;
    const Vec3 dir(r * std::cos(theta), r * std::sin(theta), z);
    CameraView v;
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d", i);
    v.id = name;
    v.intrinsics = intrinsics;
    v.width = width;
    v.height = height;
    v.world_to_camera = look_at(center + radius * dir, center);
    views.push_back(std::move(v));
  }
  return views;
}

void render_depth(const IndexedMesh& mesh, CameraView& view, Execution exec) {
  view.depth.assign(static_cast<std::size_t>(view.width) * view.height, 0.0f);
  const Iso3 cam_to_world = view.world_to_camera.inverse();
  const Vec3 eye = cam_to_world.translation();
  const Mat3 rot = cam_to_world.linear();
  const auto k = view.intrinsics;
  const int w = view.width;
  const int h = view.height;
#pragma omp parallel for schedule(dynamic, 4) if (exec == Execution::kParallel)
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const Vec3 dir = rot * Vec3((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0);
      auto hit = mesh.raycast(eye, dir);
      // The camera-frame ray has unit z, so the hit parameter is the depth.
      view.depth[static_cast<std::size_t>(row) * w + col] = hit ? static_cast<float>(hit->t) : 0.0f;
    }
  }
}

json camera_to_json(const CameraView& view, const std::string& depth_file) {
  json j{{"id", view.id},
         {"intrinsics",
          {{"fx", view.intrinsics.fx}, {"fy", view.intrinsics.fy}, {"cx", view.intrinsics.cx}, {"cy", view.intrinsics.cy}}},
         {"extrinsics", ju::transform_to_json(view.world_to_camera)},
         {"width", view.width},
         {"height", view.height}};
  if (!depth_file.empty()) j["depth_file"] = depth_file;
  return j;
}

CameraView load_camera(const std::filesystem::path& sidecar, bool load_depth) {
  const json j = ju::read_file(sidecar);
  const std::string p = sidecar.filename().string();
  CameraView v;
  v.id = j.contains("id") ? ju::string(j.at("id"), p + ".id") : sidecar.stem().string();
  const auto& k = ju::field(j, "intrinsics", p);
  v.intrinsics.fx = ju::number(ju::field(k, "fx", p + ".intrinsics"), p + ".intrinsics.fx");
  v.intrinsics.fy = ju::number(ju::field(k, "fy", p + ".intrinsics"), p + ".intrinsics.fy");
  v.intrinsics.cx = ju::number(ju::field(k, "cx", p + ".intrinsics"), p + ".intrinsics.cx");
  v.intrinsics.cy = ju::number(ju::field(k, "cy", p + ".intrinsics"), p + ".intrinsics.cy");
  v.world_to_camera = ju::transform(ju::field(j, "extrinsics", p), p + ".extrinsics");
  v.width = ju::integer(ju::field(j, "width", p), p + ".width");
  v.height = ju::integer(ju::field(j, "height", p), p + ".height");
  if (load_depth && j.contains("depth_file")) {
    const auto img = read_pfm(sidecar.parent_path() / ju::string(j.at("depth_file"), p + ".depth_file"));
    if (img.width != v.width || img.height != v.height) {
      throw ParseError(p + ".depth_file: raster is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", expected " + std::to_string(v.width) + "x" +
                       std::to_string(v.height));
    }
    v.depth = img.data;
  }
  auto problems = validate_camera(v);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return v;
}

void save_camera(const std::filesystem::path& sidecar, const CameraView& view, const std::string& depth_file) {
  ju::write_file(sidecar, camera_to_json(view, depth_file));
  if (!depth_file.empty() && view.has_depth()) {
    write_pfm(sidecar.parent_path() / depth_file, FloatImage{view.width, view.height, view.depth});
  }
}

}  // namespace graspforge
