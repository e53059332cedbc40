#include "graspforge/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numbers>
#include <numeric>

#include "graspforge/json_util.hpp"
#include "graspforge/kinematics.hpp"
#include "graspforge/rng.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HullFacet make_facet(const MatX& pts, std::vector<int> verts, const VecX& interior) {
  const int d = static_cast<int>(pts.rows());
  std::sort(verts.begin(), verts.end());
  HullFacet f;
  if (d == 1) {
    f.normal = VecX::Ones(1);
  } else {
    MatX m(d - 1, d);
    for (int k = 1; k < d; ++k) m.row(k - 1) = (pts.col(verts[k]) - pts.col(verts[0])).transpose();
    Eigen::JacobiSVD<MatX> svd(m, Eigen::ComputeFullV);
    f.normal = svd.matrixV().col(d - 1);
  }
  f.offset = f.normal.dot(pts.col(verts[0]));
  if (f.normal.dot(interior) > f.offset) {
    f.normal = -f.normal;
    f.offset = -f.offset;
  }
  f.vertices = std::move(verts);
  return f;
}

}  // namespace

ConvexHull convex_hull(const MatX& pts, double eps) {
  const int d = static_cast<int>(pts.rows());
  const int n = static_cast<int>(pts.cols());
  if (d < 1) throw DimensionError("convex_hull: zero-dimensional points");
  if (n < d + 1) throw DegenerateGeometryError("convex_hull: fewer than dim + 1 points");
  const double tol = eps * std::max(1.0, pts.cwiseAbs().maxCoeff());

  // Initial simplex: start at the lowest first coordinate, then repeatedly add
  // the point farthest from the current affine span.
  std::vector<int> simplex;
  {
    int first = 0;
    for (int j = 1; j < n; ++j) {
      if (pts(0, j) < pts(0, first)) first = j;
    }
    simplex.push_back(first);
    std::vector<VecX> basis;
    for (int k = 0; k < d; ++k) {
      int best = -1;
      double best_norm = tol;
      VecX best_r;
      for (int j = 0; j < n; ++j) {
        VecX r = pts.col(j) - pts.col(first);
        for (const auto& b : basis) r -= b.dot(r) * b;
        const double nr = r.norm();
        if (nr > best_norm) {
          best_norm = nr;
          best = j;
          best_r = r;
        }
      }
      if (best < 0) throw DegenerateGeometryError("convex_hull: points do not span the space");
      basis.push_back(best_r / best_norm);
      simplex.push_back(best);
    }
  }
  VecX interior = VecX::Zero(d);
  for (int v : simplex) interior += pts.col(v);
  interior /= static_cast<double>(d + 1);

  std::vector<HullFacet> facets;
  std::vector<std::vector<int>> outside;
  std::vector<char> alive;
  auto add_facet = [&](std::vector<int> verts) {
    facets.push_back(make_facet(pts, std::move(verts), interior));
    outside.emplace_back();
    alive.push_back(1);
    return static_cast<int>(facets.size()) - 1;
  };
  for (int omit = 0; omit <= d; ++omit) {
    std::vector<int> verts;
    for (int k = 0; k <= d; ++k) {
      if (k != omit) verts.push_back(simplex[k]);
    }
    add_facet(std::move(verts));
  }

  auto assign = [&](int p, const std::vector<int>& candidates) {
    for (int f : candidates) {
      if (facets[f].normal.dot(pts.col(p)) - facets[f].offset > tol) {
        outside[f].push_back(p);
        return;
      }
    }
  };
  {
    std::vector<int> all(facets.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<char> in_simplex(n, 0);
    for (int v : simplex) in_simplex[v] = 1;
    for (int p = 0; p < n; ++p) {
      if (!in_simplex[p]) assign(p, all);
    }
  }

  for (std::size_t cursor = 0; cursor < facets.size(); ++cursor) {
    if (!alive[cursor] || outside[cursor].empty()) continue;
    const HullFacet& base = facets[cursor];
    int eye = outside[cursor].front();
    double eye_dist = -kInf;
    for (int p : outside[cursor]) {
      const double dist = base.normal.dot(pts.col(p)) - base.offset;
      if (dist > eye_dist) {
        eye_dist = dist;
        eye = p;
      }
    }

    std::vector<int> visible;
    for (std::size_t f = 0; f < facets.size(); ++f) {
      if (alive[f] && facets[f].normal.dot(pts.col(eye)) - facets[f].offset > tol) {
        visible.push_back(static_cast<int>(f));
      }
    }

    std::map<std::vector<int>, int> ridge_count;
    for (int f : visible) {
      const auto& v = facets[f].vertices;
      for (int drop = 0; drop < d; ++drop) {
        std::vector<int> ridge;
        ridge.reserve(d - 1);
        for (int k = 0; k < d; ++k) {
          if (k != drop) ridge.push_back(v[k]);
        }
        ++ridge_count[ridge];
      }
    }

    std::vector<int> orphans;
    for (int f : visible) {
      alive[f] = 0;
      for (int p : outside[f]) {
        if (p != eye) orphans.push_back(p);
      }
      outside[f].clear();
      outside[f].shrink_to_fit();
    }
    std::vector<int> created;
    for (const auto& [ridge, count] : ridge_count) {
      if (count != 1) continue;
      std::vector<int> verts = ridge;
      verts.push_back(eye);
      created.push_back(add_facet(std::move(verts)));
    }
    std::sort(orphans.begin(), orphans.end());
    for (int p : orphans) assign(p, created);
  }

  ConvexHull hull;
  hull.dim = d;
  for (std::size_t f = 0; f < facets.size(); ++f) {
    if (alive[f]) hull.facets.push_back(std::move(facets[f]));
  }
  return hull;
}

VecX nnls(const MatX& a, const VecX& b, int max_iterations) {
  const int n = static_cast<int>(a.cols());
  if (a.rows() != b.size()) throw DimensionError("nnls: row count mismatch");
  if (max_iterations <= 0) max_iterations = 3 * std::max(n, 1) + 30;
  VecX x = VecX::Zero(n);
  if (n == 0) return x;
  std::vector<char> passive(n, 0);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * std::max<double>(a.rows(), n) *
                     std::max(1.0, a.cwiseAbs().maxCoeff());

  auto solve_passive = [&](VecX& z) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    MatX ap(a.rows(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(k) = a.col(idx[k]);
    const VecX zp = ap.colPivHouseholderQr().solve(b);
    z = VecX::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[k];
  };

  for (int outer = 0; outer < max_iterations; ++outer) {
    const VecX w = a.transpose() * (b - a * x);
    int j_max = -1;
    double w_max = tol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > w_max) {
        w_max = w[j];
        j_max = j;
      }
    }
    if (j_max < 0) break;
    passive[j_max] = 1;

    for (int inner = 0; inner < max_iterations; ++inner) {
      VecX z;
      solve_passive(z);
      bool feasible = true;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= tol) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= tol) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      }
      x += alpha * (z - x);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = 0;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

std::vector<std::string> validate_thresholds(const VerificationThresholds& t) {
  std::vector<std::string> problems;
  if (!(t.contact_threshold >= 0.0)) problems.push_back("contact_threshold must be >= 0");
  if (!(t.friction > 0.0)) problems.push_back("friction must be > 0");
  if (t.cone_edges < 3) problems.push_back("cone_edges must be >= 3");
  if (!(t.functional_epsilon > 0.0)) problems.push_back("functional_epsilon must be > 0");
  if (!(t.avoidance_margin >= 0.0)) problems.push_back("avoidance_margin must be >= 0");
  if (!(t.lp_tolerance > 0.0)) problems.push_back("lp_tolerance must be > 0");
  return problems;
}

ContactState extract_contacts(const Grasp& grasp, const HandModel& model, const ObjectModel& object, double threshold,
                              double friction) {
  std::vector<int> finger_of(model.num_links(), -1);
  for (int f = 0; f < model.num_fingers(); ++f) {
    for (int l : model.fingers[f]) finger_of[l] = f;
  }
  const auto state = forward_kinematics(model, grasp);
  ContactState out;
  for (int l = 0; l < model.num_links(); ++l) {
    for (const auto& c : model.contact_candidates[l]) {
      const Vec3 p = state.link_world[l] * c.point;
      Contact contact;
      double dist;
      if (object.mesh) {
        const auto near = object.mesh->nearest(p);
        dist = near.distance;
        contact.point = near.point;
        contact.normal = -object.mesh->orientation() * near.normal;
      } else {
        const auto [idx, dd] = object.surface_index.nearest(p);
        if (idx < 0) return out;
        dist = dd;
        contact.point = object.surface.points[idx];
        contact.normal = -object.surface.normals[idx];
      }
      if (dist > threshold) continue;
      // Link axis least aligned with the normal, projected into the tangent plane.
      const Mat3 axes = state.link_world[l].linear();
      int pick = 0;
      for (int k = 1; k < 3; ++k) {
        if (std::abs(axes.col(k).dot(contact.normal)) < std::abs(axes.col(pick).dot(contact.normal))) pick = k;
      }
      contact.tangent = (axes.col(pick) - axes.col(pick).dot(contact.normal) * contact.normal).normalized();
      contact.friction = friction;
      contact.link = l;
      contact.finger = finger_of[l];
      out.contacts.push_back(contact);
    }
  }
  return out;
}

std::array<Vec3, 6> test_directions() {
  return {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
}

MatX contact_wrenches(const ContactState& contacts, const Vec3& centroid, double length, int edges) {
  if (edges < 1) throw ValidationError({"cone_edges must be >= 1"});
  if (!(length > 0.0)) throw ValidationError({"characteristic length must be > 0"});
  MatX w(6, static_cast<Eigen::Index>(contacts.contacts.size()) * edges);
  int col = 0;
  for (const auto& c : contacts.contacts) {
    const Vec3 n = c.normal.normalized();
    Vec3 t1 = c.tangent - c.tangent.dot(n) * n;
    t1 = t1.norm() > 1e-9 ? Vec3(t1.normalized()) : n.unitOrthogonal();
    const Vec3 t2 = n.cross(t1);
    const Vec3 arm = c.point - centroid;
    for (int k = 0; k < edges; ++k) {
      const double th = 2.0 * std::numbers::pi * k / edges;
      const Vec3 f = n + c.friction * (std::cos(th) * t1 + std::sin(th) * t2);
      w.col(col).head<3>() = f;
      w.col(col).tail<3>() = arm.cross(f) / length;
      ++col;
    }
  }
  return w;
}

WrenchResult check_wrench_resistance(const ContactState& contacts, const Vec3& centroid, double length,
                                     const std::array<Vec3, 6>& directions, int edges, double tolerance) {
  WrenchResult r;
  if (contacts.contacts.empty()) return r;
  MatX w = contact_wrenches(contacts, centroid, length, edges);
  for (Eigen::Index j = 0; j < w.cols(); ++j) w.col(j).normalize();

  for (int k = 0; k < 6; ++k) {
    VecX target = VecX::Zero(6);
    target.head<3>() = -directions[k];
    const VecX lambda = nnls(w, target);
    r.resisted[k] = (w * lambda - target).norm() <= tolerance;
  }

  // Hull of the unit wrenches inside their own span, then read off the facet
  // distances restricted to the torque-free force subspace.
  Eigen::JacobiSVD<MatX> svd(w, Eigen::ComputeThinU);
  const VecX sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-9 * sv[0]) ++rank;
  }
  if (rank < 3) return r;
  const MatX basis = svd.matrixU().leftCols(rank);
  bool force_in_span = true;
  for (int i = 0; i < 3; ++i) {
    VecX e = VecX::Zero(6);
    e[i] = 1.0;
    if ((e - basis * (basis.transpose() * e)).norm() > 1e-9) force_in_span = false;
  }
  ConvexHull hull;
  try {
    hull = convex_hull(basis.transpose() * w);
  } catch (const DegenerateGeometryError&) {
    return r;  // origin is off the affine hull
  }
  double force_radius = kInf;
  double full_radius = kInf;
  for (const auto& f : hull.facets) {
    if (f.offset < -tolerance) return r;
    full_radius = std::min(full_radius, f.offset);
    const Vec3 af = (basis * f.normal).head<3>();
    const double na = af.norm();
    if (na > 1e-12) force_radius = std::min(force_radius, f.offset / na);
  }
  if (force_in_span && force_radius > tolerance) r.quality = force_radius;
  if (rank == 6 && full_radius > tolerance) r.quality_6d = full_radius;
  return r;
}

FunctionalResult check_functionality(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                                     double epsilon) {
  std::vector<std::string> problems;
  for (int f : model.functional_fingers) {
    if (f < 0 || f >= model.num_fingers()) {
      problems.push_back("functional finger " + std::to_string(f) + " is not on the hand");
      continue;
    }
    if (object.functional_indices(f).empty()) {
      problems.push_back("object '" + object.id + "' has no functional region for finger " + std::to_string(f));
    }
    if (model.contact_candidates[model.distal_link(f)].empty()) {
      problems.push_back("finger " + std::to_string(f) + " has no fingertip contact candidates");
    }
  }
  if (!problems.empty()) throw ValidationError(problems);

  const auto state = forward_kinematics(model, grasp);
  FunctionalResult out;
  out.functional = true;
  for (int f : model.functional_fingers) {
    std::vector<Vec3> region;
    for (int i : object.functional_indices(f)) region.push_back(object.surface.points.at(i));
    const PointIndex index(std::move(region));
    const int tip = model.distal_link(f);
    double best = kInf;
    for (const auto& c : model.contact_candidates[tip]) {
      best = std::min(best, index.nearest(state.link_world[tip] * c.point).second);
    }
    out.fingers.push_back(f);
    out.distances.push_back(best);
    if (!(best < epsilon)) out.functional = false;
  }
  return out;
}

AvoidanceResult check_avoidance(const Grasp& grasp, const HandModel& model, const ObjectModel& object, double margin) {
  AvoidanceResult out;
  if (object.avoidance.empty()) return out;
  std::vector<Vec3> pts;
  for (int i : object.avoidance) pts.push_back(object.surface.points.at(i));
  const PointIndex index(std::move(pts));
  const auto state = forward_kinematics(model, grasp);
  for (int l = 0; l < model.num_links(); ++l) {
    for (const auto& s : model.surface_samples[l]) {
      out.min_distance = std::min(out.min_distance, index.nearest(state.link_world[l] * s).second);
    }
    for (const auto& c : model.contact_candidates[l]) {
      out.min_distance = std::min(out.min_distance, index.nearest(state.link_world[l] * c.point).second);
    }
  }
  out.clear = out.min_distance > margin;
  return out;
}

VerificationReport verify(const Grasp& grasp, const HandModel& model, const ObjectModel& object,
                          const VerificationThresholds& t) {
  if (auto problems = validate_thresholds(t); !problems.empty()) throw ValidationError(problems);
  VerificationReport r;
  const auto contacts = extract_contacts(grasp, model, object, t.contact_threshold, t.friction);
  const double length = object.extent > 0.0 ? object.extent : 1.0;
  const auto wrench =
      check_wrench_resistance(contacts, object.centroid, length, test_directions(), t.cone_edges, t.lp_tolerance);
  r.resisted_directions = wrench.resisted;
  r.stable = std::all_of(wrench.resisted.begin(), wrench.resisted.end(), [](bool b) { return b; });
  r.quality = wrench.quality;
  r.quality_6d = wrench.quality_6d;
  r.num_contacts = static_cast<int>(contacts.contacts.size());
  for (const auto& c : contacts.contacts) {
    if (c.finger >= 0) r.stabilizing_fingers.push_back(c.finger);
  }
  std::sort(r.stabilizing_fingers.begin(), r.stabilizing_fingers.end());
  r.stabilizing_fingers.erase(std::unique(r.stabilizing_fingers.begin(), r.stabilizing_fingers.end()),
                              r.stabilizing_fingers.end());

  const auto func = check_functionality(grasp, model, object, t.functional_epsilon);
  r.functional = func.functional;
  r.functional_fingers = func.fingers;
  r.functional_distances = func.distances;

  const auto avoid = check_avoidance(grasp, model, object, t.avoidance_margin);
  r.avoidance_clear = avoid.clear;
  r.min_avoidance_distance = avoid.min_distance;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "stability is a quasi-static wrench test standing in for a simulated trial with a %.3g m "
                "displacement bound",
                t.displacement_reference);
  r.note = buf;
  return r;
}

std::vector<VerificationReport> verify_batch(std::span<const Grasp> grasps, const HandModel& model,
                                             const ObjectModel& object, const VerificationThresholds& thresholds,
                                             Execution exec) {
  const int n = static_cast<int>(grasps.size());
  std::vector<VerificationReport> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = verify(grasps[i], model, object, thresholds);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

json report_to_json(const VerificationReport& r) {
  json resisted = json::array();
  for (bool b : r.resisted_directions) resisted.push_back(b);
  json out = {{"passed", r.passed()},
              {"stable", r.stable},
              {"quality", r.quality},
              {"quality_6d", r.quality_6d},
              {"resisted_directions", resisted},
              {"num_contacts", r.num_contacts},
              {"stabilizing_fingers", r.stabilizing_fingers},
              {"functional", r.functional},
              {"functional_fingers", r.functional_fingers},
              {"functional_distances", r.functional_distances},
              {"avoidance_clear", r.avoidance_clear},
              {"note", r.note}};
  out["min_avoidance_distance"] =
      std::isfinite(r.min_avoidance_distance) ? json(r.min_avoidance_distance) : json(nullptr);
  return out;
}

VerificationReport report_from_json(const json& j) {
  VerificationReport r;
  try {
    r.stable = j.at("stable").get<bool>();
    r.quality = j.at("quality").get<double>();
    r.quality_6d = ju::value_or(j, "quality_6d", 0.0);
    const auto& res = j.at("resisted_directions");
    if (!res.is_array() || res.size() != 6) throw ParseError("report: resisted_directions must have 6 entries");
    for (int k = 0; k < 6; ++k) r.resisted_directions[k] = res[k].get<bool>();
    r.num_contacts = ju::value_or(j, "num_contacts", 0);
    r.stabilizing_fingers = ju::value_or(j, "stabilizing_fingers", std::vector<int>{});
    r.functional = j.at("functional").get<bool>();
    r.functional_fingers = ju::value_or(j, "functional_fingers", std::vector<int>{});
    r.functional_distances = ju::value_or(j, "functional_distances", std::vector<double>{});
    r.avoidance_clear = j.at("avoidance_clear").get<bool>();
    const auto& md = j.at("min_avoidance_distance");
    r.min_avoidance_distance = md.is_null() ? kInf : md.get<double>();
    r.note = ju::value_or(j, "note", std::string());
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return r;
}

json thresholds_to_json(const VerificationThresholds& t) {
  return {{"contact_threshold", t.contact_threshold}, {"friction", t.friction},
          {"cone_edges", t.cone_edges},               {"functional_epsilon", t.functional_epsilon},
          {"avoidance_margin", t.avoidance_margin},   {"lp_tolerance", t.lp_tolerance},
          {"displacement_reference", t.displacement_reference}};
}

VerificationThresholds thresholds_from_json(const json& j) {
  VerificationThresholds t;
  try {
    t.contact_threshold = ju::value_or(j, "contact_threshold", t.contact_threshold);
    t.friction = ju::value_or(j, "friction", t.friction);
    t.cone_edges = ju::value_or(j, "cone_edges", t.cone_edges);
    t.functional_epsilon = ju::value_or(j, "functional_epsilon", t.functional_epsilon);
    t.avoidance_margin = ju::value_or(j, "avoidance_margin", t.avoidance_margin);
    t.lp_tolerance = ju::value_or(j, "lp_tolerance", t.lp_tolerance);
    t.displacement_reference = ju::value_or(j, "displacement_reference", t.displacement_reference);
  } catch (const json::exception& e) {
    throw ParseError(std::string("verification: ") + e.what());
  }
  return t;
}

VecX importance_map(std::span<const Vec3> object_points, std::span<const Vec3> hand_points, double temperature) {
  std::vector<std::string> problems;
  if (object_points.empty()) problems.push_back("importance_map: no object points");
  if (hand_points.empty()) problems.push_back("importance_map: no hand points");
  if (!(temperature > 0.0)) problems.push_back("importance_map: temperature must be > 0");
  if (!problems.empty()) throw ValidationError(problems);

  const PointIndex index(std::vector<Vec3>(hand_points.begin(), hand_points.end()));
  const int n = static_cast<int>(object_points.size());
  VecX d(n);
  for (int i = 0; i < n; ++i) d[i] = index.nearest(object_points[i]).second;
  const double d_min = d.minCoeff();
  VecX p = (-(d.array() - d_min) / temperature).exp().matrix();
  p /= p.sum();
  return p;
}

double kl_divergence(const VecX& p, const VecX& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

std::vector<int> importance_sample(std::span<const Vec3> points, const VecX& probabilities, int count,
                                   std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (probabilities.size() != n) throw DimensionError("importance_sample: probabilities do not match points");
  if (count < 0 || count > n) {
    throw ValidationError({"importance_sample: count " + std::to_string(count) + " outside [0, " +
                           std::to_string(n) + "]"});
  }
  if ((probabilities.array() < 0.0).any() || !probabilities.allFinite()) {
    throw ValidationError({"importance_sample: probabilities must be finite and nonnegative"});
  }
  Rng rng(seed);
  std::vector<double> w(probabilities.data(), probabilities.data() + n);
  std::vector<char> taken(n, 0);
  std::vector<int> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!taken[i]) total += w[i];
    }
    const double u = uniform01(rng);
    int pick = -1;
    if (total > 0.0) {
      const double target = u * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        if (taken[i] || w[i] <= 0.0) continue;
        cum += w[i];
        pick = i;
        if (cum > target) break;
      }
    } else {
      // Only zero-weight points remain: draw uniformly among them.
      int slot = static_cast<int>(u * (n - k));
      for (int i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (slot-- == 0) {
          pick = i;
          break;
        }
      }
    }
    taken[pick] = 1;
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace graspforge
