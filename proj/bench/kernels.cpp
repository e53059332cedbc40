// Serial against parallel for each kernel that takes an Execution argument.
// Arg 0 is serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "graspforge/camera.hpp"
#include "graspforge/contact_transfer.hpp"
#include "graspforge/dro_recovery.hpp"
#include "graspforge/grasp_adaptation.hpp"
#include "graspforge/hand_model.hpp"
#include "graspforge/rng.hpp"
#include "graspforge/verification.hpp"

using namespace graspforge;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::kParallel : Execution::kSerial; }

const ObjectModel& sphere() {
  static const ObjectModel obj = make_object_model("sphere", make_uv_sphere(0.04, 32, 32), 4096, 7);
  return obj;
}

const HandModel& hand() {
  static const HandModel h = load_hand_model_file(GRASPFORGE_DATA_DIR "/hands/inspire_like_6dof.json");
  return h;
}

ContactCandidateSet candidates() {
  ContactCandidateSet set;
  const auto& obj = sphere();
  for (int f = 0; f < hand().num_fingers(); ++f) {
    const int idx = (f * 997) % static_cast<int>(obj.surface.size());
    set.fingers[f].push_back({obj.surface.points[idx], obj.surface.normals[idx], 1.0, 10, idx});
  }
  return set;
}

void BM_RenderDepth(benchmark::State& state) {
  const int size = 128;
  auto views = fibonacci_views(1, Vec3::Zero(), 0.3, {160.0, 160.0, 63.5, 63.5}, size, size);
  for (auto _ : state) {
    render_depth(*sphere().mesh, views[0], mode(state));
    benchmark::DoNotOptimize(views[0].depth.data());
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RenderDepth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PairwiseDistances(benchmark::State& state) {
  const auto pts = hand_points_world(hand(), make_grasp(hand()), select_hand_points(hand()));
  const auto& obj = sphere().surface.points;
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances(pts, obj, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size() * obj.size()));
}
BENCHMARK(BM_PairwiseDistances)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();

void BM_PairwiseDistancesReference(benchmark::State& state) {
  const auto pts = hand_points_world(hand(), make_grasp(hand()), select_hand_points(hand()));
  const auto& obj = sphere().surface.points;
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances_reference(pts, obj));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size() * obj.size()));
}
BENCHMARK(BM_PairwiseDistancesReference)->Unit(benchmark::kMicrosecond)->UseRealTime();

void BM_Dbscan(benchmark::State& state) {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) {
    const Vec3 c(0.05 * (i % 4), 0.0, 0.0);
    pts.push_back(c + 0.008 * Vec3(normal01(rng), normal01(rng), normal01(rng)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(pts, 0.004, 5, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size()));
}
BENCHMARK(BM_Dbscan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Optimize(benchmark::State& state) {
  OptimizationConfig cfg;
  cfg.num_grasps = 8;
  cfg.iterations = 100;
  const auto cands = candidates();
  for (auto _ : state) benchmark::DoNotOptimize(optimize(hand(), sphere(), cands, LossWeights{}, cfg, mode(state)));
  state.SetItemsProcessed(state.iterations() * cfg.num_grasps * cfg.iterations);
}
BENCHMARK(BM_Optimize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_VerifyBatch(benchmark::State& state) {
  OptimizationConfig cfg;
  cfg.num_grasps = 16;
  const auto grasps = initialize_grasps(hand(), sphere(), candidates(), cfg);
  ObjectModel obj = sphere();
  obj.functional_regions.clear();
  HandModel h = hand();
  h.functional_fingers.clear();
  for (auto _ : state) benchmark::DoNotOptimize(verify_batch(grasps, h, obj, {}, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grasps.size()));
}
BENCHMARK(BM_VerifyBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
