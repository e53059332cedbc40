#include <cmath>
#include <cstdio>

#include "graspforge/json_util.hpp"
#include "graspforge/mesh_io.hpp"
#include "graspforge/pipeline.hpp"

namespace graspforge {

namespace fs = std::filesystem;
namespace ju = jsonutil;
using nlohmann::json;

namespace {

constexpr double kRadius = 0.04;

std::string view_name(const std::string& prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d", prefix.c_str(), i);
  return buf;
}

std::vector<CameraView> rendered_views(const IndexedMesh& mesh, const std::string& prefix, const FixtureOptions& o) {
  const double c = (o.image_size - 1) / 2.0;
  auto views = fibonacci_views(o.views, Vec3::Zero(), 0.3, {1.25 * o.image_size, 1.25 * o.image_size, c, c},
                               o.image_size, o.image_size);
  for (int i = 0; i < o.views; ++i) {
    views[i].id = view_name(prefix, i);
    render_depth(mesh, views[i]);
  }
  return views;
}

void save_views(const fs::path& dir, const std::vector<CameraView>& views) {
  fs::create_directories(dir);
  for (const auto& v : views) save_camera(dir / (v.id + ".json"), v, v.id + ".pfm");
}

}  // namespace

fs::path make_fixture(const fs::path& dir, const FixtureOptions& o) {
  for (const char* sub : {"hands", "objects", "demo", "correspondences", "render"}) fs::create_directories(dir / sub);
  const fs::path hand_rel = fs::path("hands") / o.hand.filename();
  fs::copy_file(o.hand, dir / hand_rel, fs::copy_options::overwrite_existing);

  // Sphere with a functional patch around the +x pole for finger 0.
  const auto sphere_mesh = make_uv_sphere(kRadius, 32, 32);
  save_obj(dir / "objects" / "sphere.obj", sphere_mesh);
  const json sphere_doc = {{"id", "sphere"},
                           {"mesh", "sphere.obj"},
                           {"samples", 4096},
                           {"sample_seed", 7},
                           {"functional_regions", {{{"finger", 0}, {"center", {kRadius, 0.0, 0.0}}, {"radius", 0.012}}}}};
  ju::write_file(dir / "objects" / "sphere.json", sphere_doc);
  const ObjectModel sphere = object_model_from_json(sphere_doc, dir / "objects");

  // The demonstration pinches the same sphere at its +-x poles.
  const std::vector<Vec3> tips = {Vec3(kRadius + 0.002, 0, 0), Vec3(-kRadius - 0.002, 0, 0)};
  ju::write_file(dir / "demo" / "contacts.json", demo_contacts_to_json(extract_demo_contacts(tips, sphere.surface)));
  const auto demo_views = rendered_views(*sphere.mesh, "demo", o);
  save_views(dir / "demo" / "views", demo_views);

  const auto sphere_views = rendered_views(*sphere.mesh, "sphere", o);
  save_views(dir / "render" / "sphere", sphere_views);
  std::vector<CorrespondenceSet> sphere_corr;
  for (int i = 0; i < o.views; ++i) {
    CorrespondenceSet s{demo_views[i].id, sphere_views[i].id, {}};
    for (int r = 0; r < o.image_size; ++r) {
      for (int c = 0; c < o.image_size; ++c) {
        if (std::isfinite(sphere_views[i].depth_at(Pixel(c, r)))) s.matches.push_back({Pixel(c, r), Pixel(c, r), 1.0});
      }
    }
    sphere_corr.push_back(std::move(s));
  }
  save_correspondences(dir / "correspondences" / "sphere.jsonl", sphere_corr);

  if (o.with_unreachable_object) {
    // Its only matches sit in an image corner, far from every projected contact.
    const auto box = make_box(Vec3::Constant(0.03));
    save_obj(dir / "objects" / "cube.obj", box);
    const json cube_doc = {{"id", "cube"}, {"mesh", "cube.obj"}, {"samples", 2048}, {"sample_seed", 9}};
    ju::write_file(dir / "objects" / "cube.json", cube_doc);
    const IndexedMesh cube_mesh(box);
    const auto cube_views = rendered_views(cube_mesh, "cube", o);
    save_views(dir / "render" / "cube", cube_views);
    std::vector<CorrespondenceSet> cube_corr;
    for (int i = 0; i < o.views; ++i) {
      cube_corr.push_back({demo_views[i].id, cube_views[i].id, {{Pixel(0, 0), Pixel(0, 0), 1.0}}});
    }
    save_correspondences(dir / "correspondences" / "cube.jsonl", cube_corr);
  }

  const json config = {{"hand", hand_rel.generic_string()},
                       {"objects", "objects"},
                       {"demo_contacts", "demo/contacts.json"},
                       {"demo_views", "demo/views"},
                       {"correspondences", "correspondences"},
                       {"render_views", "render"},
                       {"output", "output"},
                       {"seed", 0},
                       {"grasps_to_keep", 10},
                       {"camera_poses", o.camera_poses},
                       {"optimizer", {{"num_grasps", o.num_grasps}, {"iterations", o.iterations}}}};
  ju::write_file(dir / "pipeline.json", config);
  return dir / "pipeline.json";
}

}  // namespace graspforge
