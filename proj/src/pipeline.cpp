#include "graspforge/pipeline.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

#include "graspforge/json_util.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/mesh_io.hpp"
#include "graspforge/rng.hpp"

namespace graspforge {

namespace fs = std::filesystem;
namespace ju = jsonutil;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json transfer_config_to_json(const TransferConfig& c) {
  return json{{"snap_radius_px", c.snap_radius_px},
              {"visibility_tolerance", c.visibility_tolerance},
              {"subpixel_offset", c.subpixel_offset}};
}

TransferConfig transfer_config_from_json(const json& j) {
  TransferConfig c;
  c.snap_radius_px = ju::value_or(j, "snap_radius_px", c.snap_radius_px);
  c.visibility_tolerance = ju::value_or(j, "visibility_tolerance", c.visibility_tolerance);
  c.subpixel_offset = ju::value_or(j, "subpixel_offset", c.subpixel_offset);
  return c;
}

json aggregate_config_to_json(const AggregateConfig& c) {
  return json{{"eps", c.eps}, {"min_pts", c.min_pts}, {"max_candidates", c.max_candidates}};
}

AggregateConfig aggregate_config_from_json(const json& j) {
  AggregateConfig c;
  c.eps = ju::value_or(j, "eps", c.eps);
  c.min_pts = ju::value_or(j, "min_pts", c.min_pts);
  c.max_candidates = ju::value_or(j, "max_candidates", c.max_candidates);
  return c;
}

json recovery_config_to_json(const RecoveryConfig& c) {
  return json{{"anchors_k", c.anchors_k},
              {"refine", c.refine},
              {"ik",
               {{"damping", c.ik.damping},
                {"tolerance", c.ik.tolerance},
                {"max_iterations", c.ik.max_iterations},
                {"max_bad_steps", c.ik.max_bad_steps}}}};
}

RecoveryConfig recovery_config_from_json(const json& j) {
  RecoveryConfig c;
  c.anchors_k = ju::value_or(j, "anchors_k", c.anchors_k);
  c.refine = ju::value_or(j, "refine", c.refine);
  if (j.is_object() && j.contains("ik")) {
    const auto& ik = j.at("ik");
    c.ik.damping = ju::value_or(ik, "damping", c.ik.damping);
    c.ik.tolerance = ju::value_or(ik, "tolerance", c.ik.tolerance);
    c.ik.max_iterations = ju::value_or(ik, "max_iterations", c.ik.max_iterations);
    c.ik.max_bad_steps = ju::value_or(ik, "max_bad_steps", c.ik.max_bad_steps);
  }
  return c;
}

json losses_to_json(const LossBreakdown& l) {
  return json{{"prior", l.prior}, {"stab", l.stab}, {"aux", l.aux},      {"joint", l.joint},
              {"coll", l.coll},   {"self", l.self}, {"total", l.total}};
}

LossBreakdown losses_from_json(const json& j) {
  LossBreakdown l;
  l.prior = ju::value_or(j, "prior", 0.0);
  l.stab = ju::value_or(j, "stab", 0.0);
  l.aux = ju::value_or(j, "aux", 0.0);
  l.joint = ju::value_or(j, "joint", 0.0);
  l.coll = ju::value_or(j, "coll", 0.0);
  l.self = ju::value_or(j, "self", 0.0);
  l.total = ju::value_or(j, "total", 0.0);
  return l;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == extension) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l.dump() << '\n';
}

std::vector<CameraView> load_views(const fs::path& dir, bool depth) {
  std::vector<CameraView> views;
  for (const auto& p : sorted_files(dir, ".json")) views.push_back(load_camera(p, depth));
  return views;
}

// Stage warnings per object, kept on disk so a later summary sees them.
void store_warnings(const fs::path& object_dir, const std::string& stage, const std::vector<std::string>& warnings) {
  const fs::path path = object_dir / "warnings.json";
  json doc = fs::exists(path) ? ju::read_file(path) : json::object();
  if (warnings.empty()) {
    doc.erase(stage);
  } else {
    doc[stage] = warnings;
  }
  fs::create_directories(object_dir);
  ju::write_file(path, doc);
}

struct ObjectEntry {
  fs::path descriptor;
  std::string id;
};

std::vector<ObjectEntry> object_entries(const PipelineConfig& config) {
  std::vector<ObjectEntry> out;
  for (const auto& p : sorted_files(config.resolve(config.objects), ".json")) {
    out.push_back({p, ju::string(ju::field(ju::read_file(p), "id", p.string()), p.string() + ".id")});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

fs::path object_dir(const PipelineConfig& config, const std::string& id) { return config.out(fs::path("objects") / id); }

std::string record_stem(int rank) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "grasp_%03d", rank);
  return buf;
}

// Runs `body` for every object in id order; an Error stops that object only.
template <typename Body>
StageOutcome for_each_object(const PipelineConfig& config, const std::string& stage, Body&& body) {
  const auto t0 = Clock::now();
  StageOutcome outcome;
  for (const auto& entry : object_entries(config)) {
    std::vector<std::string> warnings;
    try {
      outcome.counts[entry.id] = body(entry, warnings);
    } catch (const Error& e) {
      warnings.push_back(std::string(stage) + " failed: " + e.what());
      outcome.counts[entry.id] = 0;
    }
    for (const auto& w : warnings) {
      spdlog::warn("{}: {}", entry.id, w);
      outcome.warnings.push_back(entry.id + ": " + w);
    }
    store_warnings(object_dir(config, entry.id), stage, warnings);
  }
  outcome.seconds = seconds_since(t0);
  spdlog::info("{} stage finished in {:.2f} s", stage, outcome.seconds);
  return outcome;
}

Grasp grasp_from_record_line(const json& line) {
  return grasp_from_json(json{{"t", line.at("pose").at("t")}, {"q", line.at("pose").at("q")}, {"joints", line.at("joints")}});
}

}  // namespace

// --- config ------------------------------------------------------------------

PipelineConfig pipeline_config_from_json(const json& doc, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  const auto path_field = [&](const char* key) {
    return fs::path(ju::string(ju::field(doc, key, "pipeline"), std::string("pipeline.") + key));
  };
  c.hand = path_field("hand");
  c.objects = path_field("objects");
  c.demo_contacts = path_field("demo_contacts");
  c.demo_views = path_field("demo_views");
  c.correspondences = path_field("correspondences");
  c.render_views = path_field("render_views");
  c.output = doc.contains("output") ? c.resolve(doc.at("output").get<std::string>()) : c.resolve("output");
  try {
    c.seed = ju::value_or<std::uint64_t>(doc, "seed", 0);
    c.grasps_to_keep = ju::value_or(doc, "grasps_to_keep", c.grasps_to_keep);
    c.camera_poses = ju::value_or(doc, "camera_poses", c.camera_poses);
    c.camera_cube = ju::value_or(doc, "camera_cube", c.camera_cube);
    c.hand_points = ju::value_or(doc, "hand_points", c.hand_points);
    c.object_points = ju::value_or(doc, "object_points", c.object_points);
    c.importance_temperature = ju::value_or(doc, "importance_temperature", c.importance_temperature);
    const json empty = json::object();
    const auto section = [&](const char* key) -> const json& { return doc.contains(key) ? doc.at(key) : empty; };
    c.transfer = transfer_config_from_json(section("transfer"));
    c.aggregate = aggregate_config_from_json(section("aggregate"));
    c.weights = weights_from_json(section("weights"));
    c.optimizer = config_from_json(section("optimizer"));
    c.verification = thresholds_from_json(section("verification"));
    c.recovery = recovery_config_from_json(section("recovery"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("pipeline: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return pipeline_config_from_json(ju::read_file(path), fs::absolute(path).parent_path());
}

json pipeline_config_to_json(const PipelineConfig& c) {
  json opt = config_to_json(c.optimizer);
  opt.erase("seed");  // derived per object from the root seed
  return json{{"hand", c.hand.generic_string()},
              {"objects", c.objects.generic_string()},
              {"demo_contacts", c.demo_contacts.generic_string()},
              {"demo_views", c.demo_views.generic_string()},
              {"correspondences", c.correspondences.generic_string()},
              {"render_views", c.render_views.generic_string()},
              {"seed", c.seed},
              {"grasps_to_keep", c.grasps_to_keep},
              {"camera_poses", c.camera_poses},
              {"camera_cube", c.camera_cube},
              {"hand_points", c.hand_points},
              {"object_points", c.object_points},
              {"importance_temperature", c.importance_temperature},
              {"transfer", transfer_config_to_json(c.transfer)},
              {"aggregate", aggregate_config_to_json(c.aggregate)},
              {"weights", weights_to_json(c.weights)},
              {"optimizer", opt},
              {"verification", thresholds_to_json(c.verification)},
              {"recovery", recovery_config_to_json(c.recovery)}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(pipeline_config_to_json(config).dump()); }

std::vector<fs::path> object_descriptors(const PipelineConfig& config) {
  std::vector<fs::path> out;
  for (const auto& e : object_entries(config)) out.push_back(e.descriptor);
  return out;
}

// --- validation ----------------------------------------------------------------

std::vector<std::string> validate_pipeline(const PipelineConfig& config) {
  std::vector<std::string> problems;
  const auto add = [&](const std::string& p) { problems.push_back(p); };
  const auto add_all = [&](const std::string& prefix, const std::vector<std::string>& list) {
    for (const auto& p : list) add(prefix + p);
  };

  add_all("optimizer: ", validate_config(config.optimizer));
  add_all("weights: ", validate_weights(config.weights));
  add_all("verification: ", validate_thresholds(config.verification));
  if (config.grasps_to_keep < 1) add("grasps_to_keep: must be >= 1");
  if (config.camera_poses < 0) add("camera_poses: must be >= 0");
  if (!(config.camera_cube > 0.0)) add("camera_cube: must be positive");
  if (config.hand_points < 4) add("hand_points: must be >= 4");
  if (config.object_points < 4) add("object_points: must be >= 4");
  if (!(config.importance_temperature > 0.0)) add("importance_temperature: must be positive");
  if (!(config.aggregate.eps > 0.0) || config.aggregate.min_pts < 1 || config.aggregate.max_candidates < 1) {
    add("aggregate: eps must be positive, min_pts and max_candidates >= 1");
  }
  if (!(config.transfer.snap_radius_px >= 0.0) || !(config.transfer.visibility_tolerance > 0.0)) {
    add("transfer: snap radius must be >= 0 and visibility tolerance positive");
  }

  const fs::path hand_path = config.resolve(config.hand);
  std::optional<HandModel> hand;
  if (!fs::is_regular_file(hand_path)) {
    add("hand model not found: " + hand_path.string());
  } else {
    try {
      hand = load_hand_model_file(hand_path);
      if (hand->contact_candidates.empty()) add(hand_path.string() + ": hand has no contact candidates");
    } catch (const ValidationError& e) {
      add_all(hand_path.string() + ": ", e.problems());
    } catch (const Error& e) {
      add(hand_path.string() + ": " + e.what());
    }
  }
  if (hand) {
    try {
      select_hand_points(*hand, config.hand_points);
    } catch (const ValidationError& e) {
      add_all(hand_path.string() + ": ", e.problems());
    }
  }

  const fs::path demo_path = config.resolve(config.demo_contacts);
  if (!fs::is_regular_file(demo_path)) {
    add("demo contacts not found: " + demo_path.string());
  } else {
    try {
      const auto demo = demo_contacts_from_json(ju::read_file(demo_path));
      if (demo.contacting().empty()) add(demo_path.string() + ": no finger is in contact");
    } catch (const Error& e) {
      add(demo_path.string() + ": " + e.what());
    }
  }

  std::vector<CameraView> demo_views;
  const fs::path demo_view_dir = config.resolve(config.demo_views);
  if (!fs::is_directory(demo_view_dir)) {
    add("demo view directory not found: " + demo_view_dir.string());
  } else {
    for (const auto& p : sorted_files(demo_view_dir, ".json")) {
      try {
        demo_views.push_back(load_camera(p, false));
        add_all(p.string() + ": ", validate_camera(demo_views.back()));
        const auto doc = ju::read_file(p);
        if (!doc.contains("depth_file")) add(p.string() + ": demo view has no depth raster");
        else if (!fs::is_regular_file(p.parent_path() / doc.at("depth_file").get<std::string>())) {
          add(p.string() + ": depth raster not found: " + (p.parent_path() / doc.at("depth_file").get<std::string>()).string());
        }
      } catch (const Error& e) {
        add(p.string() + ": " + e.what());
      }
    }
    if (demo_views.empty()) add("demo view directory has no camera sidecars: " + demo_view_dir.string());
  }

  const fs::path objects_dir = config.resolve(config.objects);
  if (!fs::is_directory(objects_dir)) {
    add("object directory not found: " + objects_dir.string());
    return problems;
  }
  const auto descriptors = sorted_files(objects_dir, ".json");
  if (descriptors.empty()) add("object directory has no descriptors: " + objects_dir.string());
  for (const auto& d : descriptors) {
    std::string id;
    try {
      const auto doc = ju::read_file(d);
      id = ju::string(ju::field(doc, "id", d.string()), d.string() + ".id");
      const fs::path mesh_path = d.parent_path() / ju::string(ju::field(doc, "mesh", d.string()), d.string() + ".mesh");
      if (!fs::is_regular_file(mesh_path)) {
        add(d.string() + ": mesh not found: " + mesh_path.string());
        continue;
      }
      const auto mesh = load_mesh(mesh_path);
      if (config.weights.coll > 0.0 && !is_watertight(mesh)) {
        add(mesh_path.string() + ": mesh is not watertight, which the collision loss requires");
      }
      object_model_from_json(doc, d.parent_path());
    } catch (const ValidationError& e) {
      add_all(d.string() + ": ", e.problems());
      continue;
    } catch (const Error& e) {
      add(d.string() + ": " + e.what());
      continue;
    }

    const fs::path corr_path = config.resolve(config.correspondences) / (id + ".jsonl");
    const fs::path render_dir = config.resolve(config.render_views) / id;
    std::vector<CameraView> render_views;
    if (!fs::is_directory(render_dir)) {
      add("render view directory not found: " + render_dir.string());
    } else {
      try {
        render_views = load_views(render_dir, false);
        for (const auto& v : render_views) add_all(render_dir.string() + "/" + v.id + ": ", validate_camera(v));
      } catch (const Error& e) {
        add(render_dir.string() + ": " + e.what());
      }
    }
    if (!fs::is_regular_file(corr_path)) {
      add("correspondence file not found: " + corr_path.string());
    } else {
      try {
        add_all(corr_path.string() + ": ", validate_correspondences(load_correspondences(corr_path), demo_views, render_views));
      } catch (const Error& e) {
        add(corr_path.string() + ": " + e.what());
      }
    }
  }
  return problems;
}

// --- stages --------------------------------------------------------------------

StageOutcome run_views_stage(const PipelineConfig& config) {
  const std::uint64_t stage_seed = derive_seed(config.seed, "views");
  return for_each_object(config, "views", [&](const ObjectEntry& entry, std::vector<std::string>&) {
    const ObjectModel obj = load_object_model(entry.descriptor);
    Rng rng(derive_seed(stage_seed, entry.id));
    const double min_distance = std::max(obj.extent, 1e-3);
    json poses = json::array();
    for (int k = 0; k < config.camera_poses; ++k) {
      Vec3 eye;
      do {
        eye = obj.centroid + config.camera_cube * Vec3(uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5);
      } while ((eye - obj.centroid).norm() < min_distance);
      poses.push_back(ju::transform_to_json(look_at(eye, obj.centroid)));
    }
    ju::write_file(object_dir(config, entry.id) / "camera_poses.json",
                   json{{"object_id", entry.id},
                        {"count", config.camera_poses},
                        {"cube_side", config.camera_cube},
                        {"convention", "world_to_camera, +z forward, +y down"},
                        {"poses", poses}},
                   -1);
    return config.camera_poses;
  });
}

StageOutcome run_transfer_stage(const PipelineConfig& config, Execution exec) {
  const auto demo = demo_contacts_from_json(ju::read_file(config.resolve(config.demo_contacts)));
  const auto demo_views = load_views(config.resolve(config.demo_views), true);
  return for_each_object(config, "transfer", [&](const ObjectEntry& entry, std::vector<std::string>& warnings) {
    const ObjectModel obj = load_object_model(entry.descriptor);
    const auto render_views = load_views(config.resolve(config.render_views) / entry.id, true);
    const auto corrs = load_correspondences(config.resolve(config.correspondences) / (entry.id + ".jsonl"));
    const auto transferred = transfer_via_correspondences(demo_views, demo, render_views, corrs, config.transfer, exec);
    const auto aggregated = aggregate_candidates(transferred.clouds, obj, config.aggregate);
    warnings.insert(warnings.end(), transferred.warnings.begin(), transferred.warnings.end());
    warnings.insert(warnings.end(), aggregated.warnings.begin(), aggregated.warnings.end());

    json doc = candidates_to_json(aggregated.candidates, entry.id);
    json clouds = json::array();
    for (const auto& c : transferred.clouds) {
      clouds.push_back({{"finger", c.finger},
                        {"points", c.points.size()},
                        {"frames_valid", c.frames_valid},
                        {"frames_rejected", c.frames_rejected},
                        {"matches_missed", c.matches_missed}});
    }
    doc["clouds"] = clouds;
    ju::write_file(object_dir(config, entry.id) / "candidates.json", doc);
    int total = 0;
    for (const auto& [f, list] : aggregated.candidates.fingers) total += static_cast<int>(list.size());
    return total;
  });
}

StageOutcome run_adapt_stage(const PipelineConfig& config, Execution exec) {
  const HandModel hand = load_hand_model_file(config.resolve(config.hand));
  const std::uint64_t stage_seed = derive_seed(config.seed, "adapt");
  return for_each_object(config, "adapt", [&](const ObjectEntry& entry, std::vector<std::string>& warnings) {
    const fs::path dir = object_dir(config, entry.id);
    fs::remove(dir / "chains.jsonl");
    const auto cands = candidates_from_json(ju::read_file(dir / "candidates.json"));
    if (cands.empty()) throw MissingCandidatesError("no contact candidates");
    const ObjectModel obj = load_object_model(entry.descriptor);
    OptimizationConfig oc = config.optimizer;
    oc.seed = derive_seed(stage_seed, entry.id);
    const auto res = optimize(hand, obj, cands, config.weights, oc, exec);
    warnings.insert(warnings.end(), res.warnings.begin(), res.warnings.end());
    std::vector<json> lines;
    int finished = 0;
    for (const auto& chain : res.chains) {
      json line = grasp_record(entry.id, chain);
      if (chain.aborted) line["abort_reason"] = chain.abort_reason;
      lines.push_back(std::move(line));
      finished += !chain.aborted;
    }
    write_jsonl(dir / "chains.jsonl", lines);
    return finished;
  });
}

StageOutcome run_verify_stage(const PipelineConfig& config, Execution exec) {
  const HandModel hand = load_hand_model_file(config.resolve(config.hand));
  const auto hand_pts = select_hand_points(hand, config.hand_points);
  const std::string hash = config_hash(config);
  const std::uint64_t stage_seed = derive_seed(config.seed, "dro");
  return for_each_object(config, "verify", [&](const ObjectEntry& entry, std::vector<std::string>& warnings) {
    const fs::path dir = object_dir(config, entry.id);
    const fs::path record_dir = config.out(fs::path("records") / entry.id);
    fs::remove_all(record_dir);
    fs::remove(dir / "verification.jsonl");
    if (!fs::exists(dir / "chains.jsonl")) throw IoError("no optimized chains");

    const ObjectModel obj = load_object_model(entry.descriptor);
    std::vector<json> chains;
    for (auto& line : read_jsonl(dir / "chains.jsonl")) {
      if (!line.value("aborted", false)) chains.push_back(std::move(line));
    }
    std::vector<Grasp> grasps;
    for (const auto& c : chains) grasps.push_back(grasp_from_record_line(c));
    const auto reports = verify_batch(grasps, hand, obj, config.verification, exec);

    std::vector<json> lines;
    std::vector<int> passing;
    for (std::size_t k = 0; k < chains.size(); ++k) {
      lines.push_back({{"chain", chains[k].at("chain")}, {"report", report_to_json(reports[k])}});
      if (reports[k].passed()) passing.push_back(static_cast<int>(k));
    }
    write_jsonl(dir / "verification.jsonl", lines);

    const auto total = [&](int k) { return chains[k].at("final_losses").at("total").get<double>(); };
    std::stable_sort(passing.begin(), passing.end(), [&](int a, int b) {
      if (reports[a].quality != reports[b].quality) return reports[a].quality > reports[b].quality;
      return total(a) < total(b);
    });
    if (static_cast<int>(passing.size()) > config.grasps_to_keep) passing.resize(config.grasps_to_keep);
    if (passing.empty()) warnings.push_back("no grasp passed verification");

    const std::uint64_t object_seed = derive_seed(stage_seed, entry.id);
    const int n_obj = std::min<int>(config.object_points, static_cast<int>(obj.surface.size()));
    for (std::size_t r = 0; r < passing.size(); ++r) {
      const int k = passing[r];
      DatasetRecord rec;
      rec.object_id = entry.id;
      rec.rank = static_cast<int>(r);
      rec.chain = chains[k].at("chain").get<int>();
      rec.grasp = grasps[k];
      rec.assignment = assignment_from_json(chains[k].at("assignment"));
      rec.losses = losses_from_json(chains[k].at("final_losses"));
      rec.report = reports[k];
      rec.config_hash = hash;
      rec.seed = config.seed;
      rec.candidates = (fs::path("objects") / entry.id / "candidates.json").generic_string();

      // Object columns are drawn with the importance map of this grasp.
      const auto world = hand_points_world(hand, rec.grasp, hand_pts);
      const VecX p = importance_map(obj.surface.points, world, config.importance_temperature);
      auto ids = importance_sample(obj.surface.points, p, n_obj, derive_seed(object_seed, static_cast<std::uint64_t>(r)));
      const auto dm = compute_distance_matrix(hand, rec.grasp, obj, hand_pts, std::move(ids), exec);
      const fs::path rel = fs::path("records") / entry.id / (record_stem(rec.rank) + ".drom");
      fs::create_directories(record_dir);
      save_distance_matrix(config.out(rel), dm);
      rec.distance_matrix = rel.generic_string();
      ju::write_file(record_dir / (record_stem(rec.rank) + ".json"), record_to_json(rec));
    }
    return static_cast<int>(passing.size());
  });
}

StageOutcome run_recover_stage(const PipelineConfig& config, Execution exec) {
  const HandModel hand = load_hand_model_file(config.resolve(config.hand));
  return for_each_object(config, "recover", [&](const ObjectEntry& entry, std::vector<std::string>& warnings) {
    const fs::path dir = object_dir(config, entry.id);
    fs::remove(dir / "recovery.jsonl");
    const auto records = sorted_files(config.out(fs::path("records") / entry.id), ".json");
    std::vector<fs::path> files;
    for (const auto& p : records) {
      if (p.filename().string().find(".drom") == std::string::npos) files.push_back(p);
    }
    if (files.empty()) return 0;
    const ObjectModel obj = load_object_model(entry.descriptor);
    std::vector<json> lines;
    int converged = 0;
    for (const auto& f : files) {
      const auto rec = record_from_json(ju::read_file(f));
      const auto dm = load_distance_matrix(config.out(rec.distance_matrix));
      std::vector<Vec3> cols;
      for (int j : dm.object_points) cols.push_back(obj.surface.points.at(j));
      const auto res = recover_grasp(dm, cols, hand, make_grasp(hand), config.recovery, exec);
      const auto a = hand_points_world(hand, rec.grasp, dm.hand_points);
      const auto b = hand_points_world(hand, res.grasp, dm.hand_points);
      double worst = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).norm());
      const double angle = rec.grasp.rotation.angularDistance(res.grasp.rotation);
      lines.push_back({{"rank", rec.rank},
                       {"grasp", grasp_to_json(res.grasp)},
                       {"ik_converged", res.ik.converged},
                       {"ik_rms", res.ik.rms},
                       {"max_point_error", worst},
                       {"translation_error", (rec.grasp.translation - res.grasp.translation).norm()},
                       {"rotation_error_deg", angle * 180.0 / std::numbers::pi},
                       {"max_joint_error", (rec.grasp.joints - res.grasp.joints).cwiseAbs().maxCoeff()}});
      if (res.ik.converged) {
        ++converged;
      } else {
        warnings.push_back(f.filename().string() + ": inverse kinematics did not converge");
      }
    }
    write_jsonl(dir / "recovery.jsonl", lines);
    return converged;
  });
}

// --- run, summary, manifest ----------------------------------------------------------

RunOutcome run_pipeline(const PipelineConfig& config, Execution exec) {
  const auto problems = validate_pipeline(config);
  if (!problems.empty()) throw ValidationError(problems);
  fs::create_directories(config.output);
  fs::remove_all(config.out("objects"));
  fs::remove_all(config.out("records"));
  ju::write_file(config.out("config.json"), pipeline_config_to_json(config));

  RunOutcome out;
  const auto absorb = [&](const std::string& name, const StageOutcome& s) {
    out.stage_seconds[name] = s.seconds;
    out.warnings.insert(out.warnings.end(), s.warnings.begin(), s.warnings.end());
    return s;
  };
  absorb("views", run_views_stage(config));
  absorb("transfer", run_transfer_stage(config, exec));
  absorb("adapt", run_adapt_stage(config, exec));
  const auto verified = absorb("verify", run_verify_stage(config, exec));
  for (const auto& [id, n] : verified.counts) {
    out.records_per_object[id] = n;
    out.records += n;
  }
  ju::write_file(config.out("summary.json"), emit_summary(config.output));
  record_timing(config.output, out.stage_seconds);
  write_manifest(config.output);
  return out;
}

std::vector<fs::path> list_records(const fs::path& output_dir) {
  std::vector<fs::path> out;
  const fs::path root = output_dir / "records";
  if (!fs::is_directory(root)) return out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    for (const auto& p : sorted_files(d, ".json")) {
      if (p.filename().string().find(".drom") == std::string::npos) out.push_back(p);
    }
  }
  return out;
}

json emit_summary(const fs::path& output_dir) {
  json objects = json::object();
  int total_records = 0, total_chains = 0, total_passed = 0;
  std::vector<fs::path> dirs;
  if (fs::is_directory(output_dir / "objects")) {
    for (const auto& e : fs::directory_iterator(output_dir / "objects")) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const std::string id = d.filename().string();
    json o;
    std::vector<double> totals;
    int aborted = 0;
    if (fs::exists(d / "chains.jsonl")) {
      for (const auto& line : read_jsonl(d / "chains.jsonl")) {
        if (line.value("aborted", false)) {
          ++aborted;
        } else {
          totals.push_back(line.at("final_losses").at("total").get<double>());
        }
      }
    }
    int passed = 0, verified = 0;
    if (fs::exists(d / "verification.jsonl")) {
      for (const auto& line : read_jsonl(d / "verification.jsonl")) {
        ++verified;
        passed += report_from_json(line.at("report")).passed();
      }
    }
    int records = 0;
    double quality_sum = 0.0;
    for (const auto& p : sorted_files(output_dir / "records" / id, ".json")) {
      if (p.filename().string().find(".drom") != std::string::npos) continue;
      ++records;
      quality_sum += ju::read_file(p).at("verification").at("quality").get<double>();
    }
    o["chains"] = static_cast<int>(totals.size()) + aborted;
    o["aborted_chains"] = aborted;
    o["verified"] = verified;
    o["passed"] = passed;
    o["records"] = records;
    o["mean_quality"] = records > 0 ? json(quality_sum / records) : json(nullptr);
    if (!totals.empty()) {
      double sum = 0.0;
      for (double t : totals) sum += t;
      o["loss"] = {{"min", *std::min_element(totals.begin(), totals.end())},
                   {"mean", sum / static_cast<double>(totals.size())},
                   {"max", *std::max_element(totals.begin(), totals.end())}};
    } else {
      o["loss"] = nullptr;
    }
    o["warnings"] = fs::exists(d / "warnings.json") ? ju::read_file(d / "warnings.json") : json::object();
    objects[id] = o;
    total_records += records;
    total_chains += static_cast<int>(totals.size()) + aborted;
    total_passed += passed;
  }
  return json{{"objects", objects},
              {"totals", {{"objects", objects.size()}, {"chains", total_chains}, {"passed", total_passed}, {"records", total_records}}},
              {"stage_runtime_file", "timing.json"}};
}

json build_manifest(const fs::path& output_dir) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(output_dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), output_dir).generic_string();
    if (rel == "manifest.json" || rel == "timing.json") continue;
    files.emplace_back(rel, e.path());
  }
  std::sort(files.begin(), files.end());
  json list = json::array();
  for (const auto& [rel, path] : files) {
    list.push_back({{"path", rel}, {"bytes", fs::file_size(path)}, {"sha256", sha256_file(path)}});
  }
  return json{{"algorithm", "sha256"}, {"files", list}};
}

void write_manifest(const fs::path& output_dir) {
  ju::write_file(output_dir / "manifest.json", build_manifest(output_dir));
}

void record_timing(const fs::path& output_dir, const std::map<std::string, double>& seconds) {
  const fs::path path = output_dir / "timing.json";
  json doc = fs::exists(path) ? ju::read_file(path) : json::object();
  for (const auto& [stage, s] : seconds) doc[stage] = s;
  fs::create_directories(output_dir);
  ju::write_file(path, doc);
}

// --- records -----------------------------------------------------------------

json record_to_json(const DatasetRecord& r) {
  return json{{"object_id", r.object_id},
              {"rank", r.rank},
              {"chain", r.chain},
              {"grasp", grasp_to_json(r.grasp)},
              {"assignment", assignment_to_json(r.assignment)},
              {"losses", losses_to_json(r.losses)},
              {"verification", report_to_json(r.report)},
              {"distance_matrix", r.distance_matrix},
              {"candidates", r.candidates},
              {"config_hash", r.config_hash},
              {"seed", r.seed}};
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  try {
    r.object_id = j.at("object_id").get<std::string>();
    r.rank = j.at("rank").get<int>();
    r.chain = j.at("chain").get<int>();
    r.grasp = grasp_from_json(j.at("grasp"));
    r.assignment = assignment_from_json(j.at("assignment"));
    r.losses = losses_from_json(j.at("losses"));
    r.report = report_from_json(j.at("verification"));
    r.distance_matrix = j.at("distance_matrix").get<std::string>();
    r.candidates = j.at("candidates").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("record: ") + e.what());
  }
  return r;
}

}  // namespace graspforge
