#include "graspforge/object_model.hpp"

#include <algorithm>

#include "graspforge/json_util.hpp"
#include "graspforge/mesh_io.hpp"
#include "graspforge/rng.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

std::vector<int> ObjectModel::functional_indices(int finger) const {
  std::vector<int> out;
  for (const auto& r : functional_regions) {
    if (r.finger == finger || r.finger < 0) out.insert(out.end(), r.indices.begin(), r.indices.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

OrientedPointSet ObjectModel::subset(const std::vector<int>& indices) const {
  OrientedPointSet out;
  for (int i : indices) {
    out.points.push_back(surface.points.at(i));
    out.normals.push_back(surface.normals.at(i));
  }
  return out;
}

ObjectModel make_object_model(std::string id, const TriangleMesh& mesh, std::size_t sample_count,
                              std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw ValidationError({"object '" + id + "': scale must be > 0"});
  ObjectModel obj;
  obj.id = std::move(id);
  obj.scale = scale;
  auto scaled = scale == 1.0 ? mesh : transformed(mesh, Iso3::Identity(), scale);
  obj.centroid = mesh_centroid(scaled);
  obj.extent = bounds(scaled).extent().maxCoeff();
  obj.surface = sample_surface(scaled, sample_count, seed);
  obj.surface_index = PointIndex(obj.surface.points);
  obj.mesh = std::make_shared<const IndexedMesh>(std::move(scaled));
  return obj;
}

std::vector<int> resolve_region(const ObjectModel& object, const RegionSpec& spec) {
  if (!spec.by_ball) {
    for (int i : spec.indices) {
      if (i < 0 || i >= static_cast<int>(object.surface.size())) {
        throw ValidationError({"region index " + std::to_string(i) + " outside the surface sample set"});
      }
    }
    auto out = spec.indices;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  return object.surface_index.within(spec.center, spec.radius);
}

namespace {

RegionSpec region_from_json(const json& j, const std::string& path) {
  RegionSpec spec;
  if (j.contains("finger")) spec.finger = ju::integer(j.at("finger"), path + ".finger");
  if (j.contains("indices")) {
    for (const auto& v : j.at("indices")) spec.indices.push_back(ju::integer(v, path + ".indices"));
  } else {
    spec.by_ball = true;
    spec.center = ju::vec3(ju::field(j, "center", path), path + ".center");
    spec.radius = ju::number(ju::field(j, "radius", path), path + ".radius");
  }
  return spec;
}

}  // namespace

ObjectModel object_model_from_json(const json& doc, const std::filesystem::path& base_dir) {
  const std::string id = ju::string(ju::field(doc, "id", "object"), "object.id");
  const std::string p = "object '" + id + "'";
  const auto mesh_path = base_dir / ju::string(ju::field(doc, "mesh", p), p + ".mesh");
  const double scale = doc.contains("scale") ? ju::number(doc.at("scale"), p + ".scale") : 1.0;
  const int samples = doc.contains("samples") ? ju::integer(doc.at("samples"), p + ".samples") : 4096;
  if (samples < 1) throw ValidationError({p + ".samples: must be >= 1"});
  const std::uint64_t seed = doc.contains("sample_seed")
                                 ? doc.at("sample_seed").get<std::uint64_t>()
                                 : derive_seed(0, "surface:" + id);
  ObjectModel obj = make_object_model(id, load_mesh(mesh_path), static_cast<std::size_t>(samples), seed, scale);
  if (doc.contains("functional_regions")) {
    const auto& regions = doc.at("functional_regions");
    for (std::size_t k = 0; k < regions.size(); ++k) {
      auto spec = region_from_json(regions[k], p + ".functional_regions[" + std::to_string(k) + "]");
      obj.functional_regions.push_back(FunctionalRegion{spec.finger, resolve_region(obj, spec)});
    }
  }
  if (doc.contains("avoidance_regions")) {
    const auto& regions = doc.at("avoidance_regions");
    for (std::size_t k = 0; k < regions.size(); ++k) {
      auto spec = region_from_json(regions[k], p + ".avoidance_regions[" + std::to_string(k) + "]");
      auto idx = resolve_region(obj, spec);
      obj.avoidance.insert(obj.avoidance.end(), idx.begin(), idx.end());
    }
    std::sort(obj.avoidance.begin(), obj.avoidance.end());
    obj.avoidance.erase(std::unique(obj.avoidance.begin(), obj.avoidance.end()), obj.avoidance.end());
  }
  return obj;
}

ObjectModel load_object_model(const std::filesystem::path& descriptor) {
  return object_model_from_json(ju::read_file(descriptor), descriptor.parent_path());
}

}  // namespace graspforge
