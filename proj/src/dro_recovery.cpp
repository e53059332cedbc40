#include "graspforge/dro_recovery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "graspforge/json_util.hpp"
#include "graspforge/kinematics.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

std::vector<HandPoint> select_hand_points(const HandModel& model, int count) {
  std::vector<HandPoint> all;
  for (int l = 0; l < model.num_links(); ++l) {
    for (const auto& p : model.surface_samples[l]) all.push_back(HandPoint{l, p});
  }
  if (all.size() < 4) {
    throw ValidationError({"hand has " + std::to_string(all.size()) + " surface samples; at least 4 are needed"});
  }
  if (count <= 0 || static_cast<std::size_t>(count) >= all.size()) return all;
  std::vector<HandPoint> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(all[static_cast<std::size_t>(i) * all.size() / count]);
  return out;
}

std::vector<Vec3> hand_points_world(const HandModel& model, const Grasp& grasp, std::span<const HandPoint> points) {
  const auto state = forward_kinematics(model, grasp);
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(state.link_world.at(p.link) * p.local);
  return out;
}

MatX pairwise_distances(std::span<const Vec3> a, std::span<const Vec3> b, Execution exec) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  MatX out(n, m);
#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out(i, j) = (a[i] - b[j]).norm();
  }
  return out;
}

MatX pairwise_distances_reference(std::span<const Vec3> a, std::span<const Vec3> b) {
  MatX out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = (a[i] - b[j]).norm();
  }
  return out;
}

DistanceMatrix compute_distance_matrix(const HandModel& model, const Grasp& grasp, std::span<const HandPoint> hand_points,
                                       std::span<const Vec3> object_points, std::vector<int> object_ids,
                                       Execution exec) {
  if (hand_points.empty() || object_points.empty()) throw DimensionError("distance matrix needs non-empty point sets");
  if (!object_ids.empty() && object_ids.size() != object_points.size()) {
    throw DimensionError("object id list does not match the object points");
  }
  if (object_ids.empty()) {
    object_ids.resize(object_points.size());
    std::iota(object_ids.begin(), object_ids.end(), 0);
  }
  const auto world = hand_points_world(model, grasp, hand_points);
  DistanceMatrix d;
  d.values = pairwise_distances(world, object_points, exec);
  d.hand_points.assign(hand_points.begin(), hand_points.end());
  d.object_points = std::move(object_ids);
  return d;
}

DistanceMatrix compute_distance_matrix(const HandModel& model, const Grasp& grasp, const ObjectModel& object,
                                       std::span<const HandPoint> hand_points, std::vector<int> object_ids,
                                       Execution exec) {
  if (object_ids.empty()) {
    object_ids.resize(object.surface.size());
    std::iota(object_ids.begin(), object_ids.end(), 0);
  }
  std::vector<Vec3> pts;
  pts.reserve(object_ids.size());
  for (int i : object_ids) {
    if (i < 0 || i >= static_cast<int>(object.surface.size())) throw IndexError("object point index out of range");
    pts.push_back(object.surface.points[i]);
  }
  return compute_distance_matrix(model, grasp, hand_points, pts, std::move(object_ids), exec);
}

namespace {

/// Smallest singular value of the centered point matrix.
double spread(std::span<const Vec3> pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) scatter += (p - mean) * (p - mean).transpose();
  // Singular values of the centered matrix are square roots of the scatter
  // eigenvalues.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()[0]));
}

double range_rms(const Vec3& x, std::span<const Vec3> anchors, std::span<const double> d) {
  double sum = 0.0;
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    const double e = (x - anchors[j]).norm() - d[j];
    sum += e * e;
  }
  return std::sqrt(sum / anchors.size());
}

}  // namespace

Multilateration multilaterate(std::span<const Vec3> anchors, std::span<const double> distances, bool refine) {
  if (anchors.size() != distances.size()) throw DimensionError("anchor and distance counts differ");
  if (anchors.size() < 4) throw DegenerateGeometryError("multilateration needs at least 4 anchors");
  if (!(spread(anchors) > 1e-9)) throw DegenerateGeometryError("multilateration anchors are coplanar");

  // Subtracting the first range equation leaves a linear system in x - a0.
  const Vec3 a0 = anchors[0];
  const double d0 = distances[0];
  const int m = static_cast<int>(anchors.size()) - 1;
  Eigen::MatrixX3d a(m, 3);
  VecX b(m);
  for (int j = 0; j < m; ++j) {
    const Vec3 aj = anchors[j + 1] - a0;
    a.row(j) = 2.0 * aj.transpose();
    b[j] = aj.squaredNorm() - distances[j + 1] * distances[j + 1] + d0 * d0;
  }
  Vec3 x = a0 + a.colPivHouseholderQr().solve(b);

  if (refine) {
    Mat3 jtj = Mat3::Zero();
    Vec3 jtr = Vec3::Zero();
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      const Vec3 diff = x - anchors[j];
      const double r = diff.norm();
      if (r < 1e-12) continue;
      const Vec3 g = diff / r;
      jtj += g * g.transpose();
      jtr += g * (r - distances[j]);
    }
    const Vec3 step = jtj.ldlt().solve(-jtr);
    const Vec3 refined = x + step;
    if (step.allFinite() && range_rms(refined, anchors, distances) <= range_rms(x, anchors, distances)) x = refined;
  }
  return Multilateration{x, range_rms(x, anchors, distances)};
}

namespace {

void kabsch(std::span<const Vec3> src, std::span<const Vec3> dst, Mat3& r, Vec3& t) {
  Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= static_cast<double>(src.size());
  md /= static_cast<double>(src.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - ms) * (dst[i] - md).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  r = svd.matrixV() * fix * svd.matrixU().transpose();
  t = md - r * ms;
}

/// Second singular value of the centered points: > 0 when not collinear.
double planarity(std::span<const Vec3> pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) scatter += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()[1]));
}

struct IkEval {
  VecX residual;
  double rms = 0.0;
};

IkEval ik_eval(const HandModel& model, const Grasp& g, std::span<const HandPoint> points,
               std::span<const Vec3> targets) {
  const auto world = hand_points_world(model, g, points);
  IkEval e;
  e.residual.resize(3 * world.size());
  for (std::size_t i = 0; i < world.size(); ++i) e.residual.segment<3>(3 * i) = world[i] - targets[i];
  e.rms = std::sqrt(e.residual.squaredNorm() / world.size());
  return e;
}

}  // namespace

IkResult fit_pose_and_joints(std::span<const Vec3> targets, std::span<const HandPoint> points, const HandModel& model,
                             const Grasp& initial, const IkConfig& config) {
  if (targets.size() != points.size()) throw DimensionError("target and hand point counts differ");
  if (targets.size() < 4) throw DegenerateGeometryError("pose fitting needs at least 4 targets");
  if (!(spread(targets) > 1e-9)) throw DegenerateGeometryError("pose fitting targets are coplanar");
  if (initial.joints.size() != model.dof()) throw DimensionError("initial grasp joint count mismatch");

  // Rigid start: root-frame positions at the initial joints, fitted to the
  // targets on the root link (all targets when those are collinear).
  Grasp g = initial;
  g.joints = clamp_to_limits(model, initial.joints);
  {
    Grasp local = g;
    local.rotation = Quat::Identity();
    local.translation.setZero();
    const auto body = hand_points_world(model, local, points);
    const int root = model.topo_order.front();
    std::vector<Vec3> src, dst;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].link == root) {
        src.push_back(body[i]);
        dst.push_back(targets[i]);
      }
    }
    if (src.size() < 3 || !(planarity(src) > 1e-9)) {
      src = body;
      dst.assign(targets.begin(), targets.end());
    }
    Mat3 r;
    Vec3 t;
    kabsch(src, dst, r, t);
    g.rotation = Quat(r).normalized();
    g.translation = t;
  }

  const int n = 6 + model.dof();
  IkEval cur = ik_eval(model, g, points, targets);
  IkResult best{g, cur.rms, 0, cur.rms < config.tolerance, {}};
  int bad = 0;
  int it = 0;
  for (; it < config.max_iterations && cur.rms >= config.tolerance; ++it) {
    const auto state = forward_kinematics(model, g);
    MatX jac(3 * points.size(), n);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3 p = state.link_world[points[i].link] * points[i].local;
      jac.middleRows<3>(3 * i) = point_jacobian(model, state, points[i].link, p);
    }
    MatX a = jac.transpose() * jac;
    a.diagonal().array() += config.damping;
    const VecX delta = a.ldlt().solve(-jac.transpose() * cur.residual);

    double scale = 1.0;
    Grasp trial;
    IkEval next;
    bool improved = false;
    for (int h = 0; h <= 10; ++h, scale *= 0.5) {
      trial = retract(g, scale * delta);
      trial.joints = clamp_to_limits(model, trial.joints);
      next = ik_eval(model, trial, points, targets);
      if (next.rms < cur.rms) {
        improved = true;
        break;
      }
    }
    g = trial;
    cur = next;
    bad = improved ? 0 : bad + 1;
    if (cur.rms < best.rms) {
      best.grasp = g;
      best.rms = cur.rms;
    }
    if (bad >= config.max_bad_steps) break;
  }
  best.iterations = it;
  best.converged = best.rms < config.tolerance;
  const auto final_eval = ik_eval(model, best.grasp, points, targets);
  for (std::size_t i = 0; i < points.size(); ++i) best.residuals.push_back(final_eval.residual.segment<3>(3 * i).norm());
  return best;
}

RecoveryResult recover_grasp(const DistanceMatrix& d, std::span<const Vec3> object_points, const HandModel& model,
                             const Grasp& initial, const RecoveryConfig& config, Execution exec) {
  if (static_cast<int>(object_points.size()) != d.cols()) throw DimensionError("object points do not match matrix columns");
  if (static_cast<int>(d.hand_points.size()) != d.rows()) throw DimensionError("hand point ids do not match matrix rows");
  if (d.rows() < 4) throw DegenerateGeometryError("distance matrix needs at least 4 hand points");
  if (!d.values.allFinite() || (d.values.array() < 0.0).any()) {
    throw ValidationError({"distance matrix entries must be finite and non-negative"});
  }
  const int rows = d.rows();
  const int cols = d.cols();
  RecoveryResult out;
  out.targets.resize(rows);
  out.multilateration_residuals.resize(rows);
  std::vector<std::string> errors(rows);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Execution::kParallel)
  for (int i = 0; i < rows; ++i) {
    std::vector<Vec3> anchors;
    std::vector<double> dist;
    if (config.anchors_k > 0 && config.anchors_k < cols) {
      std::vector<int> order(cols);
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + config.anchors_k, order.end(), [&](int a, int b) {
        const double da = d.values(i, a), db = d.values(i, b);
        return da != db ? da < db : a < b;
      });
      for (int k = 0; k < config.anchors_k; ++k) {
        anchors.push_back(object_points[order[k]]);
        dist.push_back(d.values(i, order[k]));
      }
    } else {
      anchors.assign(object_points.begin(), object_points.end());
      dist.resize(cols);
      for (int j = 0; j < cols; ++j) dist[j] = d.values(i, j);
    }
    try {
      const auto m = multilaterate(anchors, dist, config.refine);
      out.targets[i] = m.point;
      out.multilateration_residuals[i] = m.residual;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < rows; ++i) {
    if (!errors[i].empty()) throw DegenerateGeometryError("hand point " + std::to_string(i) + ": " + errors[i]);
  }
  out.ik = fit_pose_and_joints(out.targets, d.hand_points, model, initial, config.ik);
  out.grasp = out.ik.grasp;
  return out;
}

// --- file format ---------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void save_distance_matrix(const std::filesystem::path& path, const DistanceMatrix& d) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("DROM", 4);
  put_u32(out, static_cast<std::uint32_t>(d.rows()));
  put_u32(out, static_cast<std::uint32_t>(d.cols()));
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(d.values(i, j))));
  }
  if (!out) throw IoError("short write to " + path.string());

  json hand = json::array();
  for (const auto& p : d.hand_points) hand.push_back({{"link", p.link}, {"point", ju::to_json(p.local)}});
  ju::write_file(sidecar(path), json{{"rows", d.rows()}, {"cols", d.cols()}, {"hand_points", hand},
                                     {"object_points", d.object_points}});
}

DistanceMatrix load_distance_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), 12);
  if (in.gcount() != 12 || std::memcmp(header, "DROM", 4) != 0) {
    throw ParseError(path.string() + ": missing DROM header");
  }
  const std::uint32_t rows = get_u32(header + 4);
  const std::uint32_t cols = get_u32(header + 8);
  std::vector<unsigned char> body(static_cast<std::size_t>(rows) * cols * 4);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (static_cast<std::size_t>(in.gcount()) != body.size()) throw ParseError(path.string() + ": truncated matrix");

  DistanceMatrix d;
  d.values.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      d.values(i, j) = std::bit_cast<float>(get_u32(body.data() + 4 * (static_cast<std::size_t>(i) * cols + j)));
    }
  }
  const json meta = ju::read_file(sidecar(path));
  const auto& hand = ju::field(meta, "hand_points", "distance matrix");
  const auto& obj = ju::field(meta, "object_points", "distance matrix");
  if (hand.size() != rows || obj.size() != cols) throw ParseError(path.string() + ": point ids do not match the header");
  for (std::size_t i = 0; i < hand.size(); ++i) {
    const std::string p = "hand_points[" + std::to_string(i) + "]";
    d.hand_points.push_back(HandPoint{ju::integer(ju::field(hand[i], "link", p), p + ".link"),
                                      ju::vec3(ju::field(hand[i], "point", p), p + ".point")});
  }
  for (const auto& v : obj) d.object_points.push_back(v.get<int>());
  return d;
}

}  // namespace graspforge
