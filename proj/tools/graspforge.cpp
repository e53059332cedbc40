#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "graspforge/json_util.hpp"
#include "graspforge/pipeline.hpp"

using namespace graspforge;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "root seed, overrides the config");
  cmd->add_option("--jobs", c.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--output", c.output, "output directory, overrides the config");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = load_pipeline_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.output.empty()) cfg.output = fs::absolute(c.output);
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
  return cfg;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("graspforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("GRASPFORGE_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int report_problems(const std::vector<std::string>& problems) {
  for (const auto& p : problems) std::cout << p << "\n";
  if (problems.empty()) std::cout << "ok\n";
  return problems.empty() ? 0 : 1;
}

// Stage subcommands validate first, then refresh timing and the manifest.
int run_stage(const Common& c, const std::string& name,
              const std::function<StageOutcome(const PipelineConfig&)>& stage) {
  const PipelineConfig cfg = resolve(c);
  const auto problems = validate_pipeline(cfg);
  if (!problems.empty()) return report_problems(problems);
  fs::create_directories(cfg.output);
  jsonutil::write_file(cfg.out("config.json"), pipeline_config_to_json(cfg));
  const auto outcome = stage(cfg);
  record_timing(cfg.output, {{name, outcome.seconds}});
  write_manifest(cfg.output);
  for (const auto& [id, n] : outcome.counts) std::cout << id << " " << n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Functional grasp dataset pipeline"};
  app.require_subcommand(1);

  Common common;
  auto* validate = app.add_subcommand("validate", "check inputs and list every problem");
  auto* transfer = app.add_subcommand("transfer", "transfer demo contacts and aggregate candidates");
  auto* adapt = app.add_subcommand("adapt", "optimize grasps against the candidates");
  auto* verify = app.add_subcommand("verify", "verify grasps and emit dataset records");
  auto* recover = app.add_subcommand("recover", "recover each record's grasp from its distance matrix");
  auto* views = app.add_subcommand("views", "write camera poses for an external renderer");
  auto* run = app.add_subcommand("run", "all stages, then summary and manifest");
  auto* summary = app.add_subcommand("summary", "summarize an output directory");
  for (auto* cmd : {validate, transfer, adapt, verify, recover, views, run}) add_common(cmd, common);

  std::string summary_dir;
  summary->add_option("--output", summary_dir, "output directory")->required()->check(CLI::ExistingDirectory);

  FixtureOptions fixture;
#ifdef GRASPFORGE_DEFAULT_HAND
  fixture.hand = GRASPFORGE_DEFAULT_HAND;
#endif
  std::string fixture_dir;
  bool single_object = false;
  auto* make = app.add_subcommand("make-fixture", "write a toy input tree and its pipeline config");
  make->add_option("--output", fixture_dir, "fixture directory")->required();
  make->add_option("--hand", fixture.hand, "hand descriptor to copy in")->check(CLI::ExistingFile);
  make->add_option("--views", fixture.views, "demo and render views per object")->check(CLI::PositiveNumber);
  make->add_option("--size", fixture.image_size, "image side in pixels")->check(CLI::PositiveNumber);
  make->add_option("--grasps", fixture.num_grasps, "optimizer chains per object")->check(CLI::PositiveNumber);
  make->add_option("--iterations", fixture.iterations, "optimizer iterations")->check(CLI::PositiveNumber);
  make->add_option("--camera-poses", fixture.camera_poses, "camera poses per object")->check(CLI::NonNegativeNumber);
  make->add_flag("--single-object", single_object, "leave out the object without reachable candidates");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return report_problems(validate_pipeline(resolve(common)));
    if (*transfer) return run_stage(common, "transfer", [](const auto& c) { return run_transfer_stage(c); });
    if (*adapt) return run_stage(common, "adapt", [](const auto& c) { return run_adapt_stage(c); });
    if (*verify) return run_stage(common, "verify", [](const auto& c) { return run_verify_stage(c); });
    if (*recover) return run_stage(common, "recover", [](const auto& c) { return run_recover_stage(c); });
    if (*views) return run_stage(common, "views", [](const auto& c) { return run_views_stage(c); });
    if (*run) {
      const PipelineConfig cfg = resolve(common);
      const auto outcome = run_pipeline(cfg);
      for (const auto& [id, n] : outcome.records_per_object) std::cout << id << " " << n << "\n";
      std::cout << "records " << outcome.records << "\n";
      return outcome.records > 0 ? 0 : 1;
    }
    if (*summary) {
      const fs::path dir(summary_dir);
      auto doc = emit_summary(dir);
      jsonutil::write_file(dir / "summary.json", doc);
      write_manifest(dir);
      if (fs::exists(dir / "timing.json")) doc["stage_seconds"] = jsonutil::read_file(dir / "timing.json");
      std::cout << doc.dump(2) << "\n";
      return 0;
    }
    if (*make) {
      if (fixture.hand.empty()) {
        std::cerr << "--hand is required\n";
        return 2;
      }
      fixture.with_unreachable_object = !single_object;
      std::cout << make_fixture(fixture_dir, fixture).string() << "\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) std::cerr << p << "\n";
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
