#include "graspforge/contact_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "graspforge/json_util.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

// --- scale alignment ---------------------------------------------------------

namespace {

double assignment_objective(std::span<const Vec3> tips, const std::vector<Vec3>& obj,
                            const std::vector<int>& assign, double s) {
  double e = 0.0;
  for (std::size_t i = 0; i < tips.size(); ++i) e += (s * obj[assign[i]] - tips[i]).squaredNorm();
  return e;
}

std::vector<int> nearest_assignment(std::span<const Vec3> tips, const PointIndex& index, double s) {
  std::vector<int> out(tips.size());
  for (std::size_t i = 0; i < tips.size(); ++i) out[i] = index.nearest(tips[i] / s).first;
  return out;
}

}  // namespace

ScaleAlignment align_scale(std::span<const Vec3> fingertips, const OrientedPointSet& object) {
  if (fingertips.empty()) throw DegenerateGeometryError("scale alignment needs at least one fingertip");
  if (object.empty()) throw DegenerateGeometryError("scale alignment needs a non-empty object");
  double obj_sq = 0.0;
  for (const auto& o : object.points) obj_sq += o.squaredNorm();
  if (!(obj_sq > 0.0)) throw DegenerateGeometryError("all object points are at the origin");
  double tip_sq = 0.0;
  for (const auto& h : fingertips) tip_sq += h.squaredNorm();

  const PointIndex index(object.points);
  const auto& pts = object.points;

  // Coarse log-spaced search for a starting scale, a decade either side of
  // the RMS-radius ratio.
  const double base = tip_sq > 0.0 ? std::sqrt((tip_sq / fingertips.size()) / (obj_sq / pts.size())) : 1.0;
  double s = base;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 80; ++k) {
    const double trial = base * std::pow(10.0, k / 40.0 - 1.0);
    const double e = assignment_objective(fingertips, pts, nearest_assignment(fingertips, index, trial), trial);
    if (e < best) {
      best = e;
      s = trial;
    }
  }

  ScaleAlignment out;
  auto assign = nearest_assignment(fingertips, index, s);
  out.objective.push_back(assignment_objective(fingertips, pts, assign, s));
  bool converged = false;
  for (int round = 1; round <= 50; ++round) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fingertips.size(); ++i) {
      num += pts[assign[i]].dot(fingertips[i]);
      den += pts[assign[i]].squaredNorm();
    }
    if (!(den > 0.0) || !(num > 0.0)) {
      converged = true;
      break;
    }
    s = num / den;
    out.rounds = round;
    auto next = nearest_assignment(fingertips, index, s);
    out.objective.push_back(assignment_objective(fingertips, pts, next, s));
    if (next == assign) {
      converged = true;
      break;
    }
    assign = std::move(next);
  }
  if (!converged) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fingertips.size(); ++i) {
      num += pts[assign[i]].dot(fingertips[i]);
      den += pts[assign[i]].squaredNorm();
    }
    if (den > 0.0 && num > 0.0) s = num / den;
    out.objective.push_back(assignment_objective(fingertips, pts, assign, s));
  }
  out.scale = s;
  out.assignment = assign;
  for (std::size_t i = 0; i < fingertips.size(); ++i) {
    out.distances.push_back((s * pts[assign[i]] - fingertips[i]).norm());
  }
  return out;
}

std::vector<const FingerContact*> DemoContacts::contacting() const {
  std::vector<const FingerContact*> out;
  for (const auto& f : fingers) {
    if (f.contacting) out.push_back(&f);
  }
  return out;
}

DemoContacts extract_demo_contacts(std::span<const Vec3> fingertips, const OrientedPointSet& scaled_object,
                                   double max_distance, std::span<const int> finger_ids) {
  if (scaled_object.empty()) throw DegenerateGeometryError("demo object point set is empty");
  if (!finger_ids.empty() && finger_ids.size() != fingertips.size()) {
    throw DimensionError("finger id list does not match fingertip count");
  }
  const PointIndex index(scaled_object.points);
  DemoContacts out;
  for (std::size_t i = 0; i < fingertips.size(); ++i) {
    const auto [idx, dist] = index.nearest(fingertips[i]);
    FingerContact c;
    c.finger = finger_ids.empty() ? static_cast<int>(i) : finger_ids[i];
    c.fingertip = fingertips[i];
    c.contact = scaled_object.points[idx];
    c.normal = idx < static_cast<int>(scaled_object.normals.size()) ? scaled_object.normals[idx] : Vec3::UnitZ();
    c.distance = dist;
    c.contacting = dist <= max_distance;
    out.fingers.push_back(c);
  }
  return out;
}

json demo_contacts_to_json(const DemoContacts& demo) {
  json fingers = json::array();
  for (const auto& f : demo.fingers) {
    fingers.push_back({{"finger", f.finger},
                       {"fingertip", ju::to_json(f.fingertip)},
                       {"contact", ju::to_json(f.contact)},
                       {"normal", ju::to_json(f.normal)},
                       {"distance", f.distance},
                       {"contacting", f.contacting}});
  }
  return json{{"scale", demo.scale}, {"fingers", fingers}};
}

DemoContacts demo_contacts_from_json(const json& doc) {
  DemoContacts demo;
  demo.scale = doc.contains("scale") ? ju::number(doc.at("scale"), "demo.scale") : 1.0;
  const auto& fingers = ju::field(doc, "fingers", "demo");
  for (std::size_t k = 0; k < fingers.size(); ++k) {
    const std::string p = "demo.fingers[" + std::to_string(k) + "]";
    const auto& f = fingers[k];
    FingerContact c;
    c.finger = ju::integer(ju::field(f, "finger", p), p + ".finger");
    c.contact = ju::vec3(ju::field(f, "contact", p), p + ".contact");
    c.fingertip = f.contains("fingertip") ? ju::vec3(f.at("fingertip"), p + ".fingertip") : c.contact;
    if (f.contains("normal")) c.normal = ju::vec3(f.at("normal"), p + ".normal");
    c.distance = ju::value_or<double>(f, "distance", (c.fingertip - c.contact).norm());
    c.contacting = ju::value_or<bool>(f, "contacting", c.distance <= kDemoContactThreshold);
    demo.fingers.push_back(c);
  }
  return demo;
}

// --- correspondences ---------------------------------------------------------

namespace {

std::string view_id(const json& v, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(path + ": expected a view id");
}

}  // namespace

std::vector<CorrespondenceSet> load_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CorrespondenceSet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string p = path.filename().string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(p + ": " + e.what());
    }
    CorrespondenceSet set;
    set.src_view = view_id(ju::field(j, "src_view", p), p + ".src_view");
    set.dst_view = view_id(ju::field(j, "dst_view", p), p + ".dst_view");
    const auto& matches = ju::field(j, "matches", p);
    if (!matches.is_array()) throw ParseError(p + ".matches: expected an array");
    set.matches.reserve(matches.size());
    for (std::size_t k = 0; k < matches.size(); ++k) {
      const auto& m = matches[k];
      if (!m.is_array() || m.size() != 5) {
        throw ParseError(p + ".matches[" + std::to_string(k) + "]: expected [u1, v1, u2, v2, conf]");
      }
      set.matches.push_back(Match{Pixel(m[0].get<double>(), m[1].get<double>()),
                                  Pixel(m[2].get<double>(), m[3].get<double>()), m[4].get<double>()});
    }
    out.push_back(std::move(set));
  }
  return out;
}

void save_correspondences(const std::filesystem::path& path, const std::vector<CorrespondenceSet>& sets) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : sets) {
    json matches = json::array();
    for (const auto& m : s.matches) {
      matches.push_back(json::array({m.src.x(), m.src.y(), m.dst.x(), m.dst.y(), m.confidence}));
    }
    out << json{{"src_view", s.src_view}, {"dst_view", s.dst_view}, {"matches", matches}}.dump() << "\n";
  }
}

namespace {

const CameraView* find_view(const std::vector<CameraView>& views, const std::string& id) {
  for (const auto& v : views) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

}  // namespace

std::vector<std::string> validate_correspondences(const std::vector<CorrespondenceSet>& sets,
                                                  const std::vector<CameraView>& demo_views,
                                                  const std::vector<CameraView>& render_views) {
  std::vector<std::string> problems;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    const std::string where = "correspondences[" + std::to_string(s) + "]";
    const CameraView* src = find_view(demo_views, set.src_view);
    const CameraView* dst = find_view(render_views, set.dst_view);
    if (!src) problems.push_back(where + ": unknown demo view '" + set.src_view + "'");
    if (!dst) problems.push_back(where + ": unknown render view '" + set.dst_view + "'");
    for (std::size_t k = 0; k < set.matches.size(); ++k) {
      const auto& m = set.matches[k];
      if (!(m.confidence >= 0.0 && m.confidence <= 1.0)) {
        problems.push_back(where + ".matches[" + std::to_string(k) + "]: confidence outside [0, 1]");
        break;
      }
      if ((src && !src->in_bounds(m.src)) || (dst && !dst->in_bounds(m.dst))) {
        problems.push_back(where + ".matches[" + std::to_string(k) + "]: pixel outside image bounds");
        break;
      }
    }
  }
  return problems;
}

// --- transfer ----------------------------------------------------------------

TransferResult transfer_via_correspondences(const std::vector<CameraView>& demo_views, const DemoContacts& demo,
                                            const std::vector<CameraView>& render_views,
                                            const std::vector<CorrespondenceSet>& correspondences,
                                            const TransferConfig& config, Execution exec) {
  const auto contacts = demo.contacting();
  const int nf = static_cast<int>(contacts.size());
  const int ns = static_cast<int>(correspondences.size());

  std::vector<const CameraView*> src(ns), dst(ns);
  for (int s = 0; s < ns; ++s) {
    src[s] = find_view(demo_views, correspondences[s].src_view);
    dst[s] = find_view(render_views, correspondences[s].dst_view);
    if (!src[s]) throw IndexError("unknown demo view '" + correspondences[s].src_view + "'");
    if (!dst[s]) throw IndexError("unknown render view '" + correspondences[s].dst_view + "'");
  }

  // Per (set, finger) partial results, merged afterwards in set order so the
  // output does not depend on the schedule.
  std::vector<std::vector<FingerCloud>> partial(ns, std::vector<FingerCloud>(nf));

#pragma omp parallel for schedule(dynamic) if (exec == Execution::kParallel)
  for (int s = 0; s < ns; ++s) {
    const auto& set = correspondences[s];
    std::vector<Vec3> source_pixels;
    source_pixels.reserve(set.matches.size());
    for (const auto& m : set.matches) source_pixels.emplace_back(m.src.x(), m.src.y(), 0.0);
    const PointIndex index(std::move(source_pixels));

    for (int f = 0; f < nf; ++f) {
      auto& out = partial[s][f];
      const auto proj = project(*src[s], contacts[f]->contact);
      if (!proj || !src[s]->in_bounds(proj->pixel)) {
        ++out.frames_rejected;
        continue;
      }
      const double raster = src[s]->depth_at(proj->pixel);
      if (!std::isfinite(raster) || std::abs(raster - proj->z) >= config.visibility_tolerance) {
        ++out.frames_rejected;
        continue;
      }
      ++out.frames_valid;
      const auto [k, dist] = index.nearest(Vec3(proj->pixel.x(), proj->pixel.y(), 0.0));
      if (k < 0 || dist > config.snap_radius_px) {
        ++out.matches_missed;
        continue;
      }
      const Match& m = set.matches[k];
      Pixel target = m.dst;
      if (config.subpixel_offset) target += proj->pixel - m.src;
      if (!dst[s]->in_bounds(target)) target = m.dst;
      auto p = backproject(*dst[s], target);
      if (!p) {
        ++out.matches_missed;
        continue;
      }
      out.points.push_back(*p);
      out.confidences.push_back(m.confidence);
    }
  }

  TransferResult result;
  for (int f = 0; f < nf; ++f) {
    FingerCloud cloud;
    cloud.finger = contacts[f]->finger;
    for (int s = 0; s < ns; ++s) {
      const auto& part = partial[s][f];
      cloud.points.insert(cloud.points.end(), part.points.begin(), part.points.end());
      cloud.confidences.insert(cloud.confidences.end(), part.confidences.begin(), part.confidences.end());
      cloud.frames_valid += part.frames_valid;
      cloud.frames_rejected += part.frames_rejected;
      cloud.matches_missed += part.matches_missed;
    }
    if (cloud.points.empty()) {
      result.warnings.push_back("finger " + std::to_string(cloud.finger) + ": no transferred points");
    }
    result.clouds.push_back(std::move(cloud));
  }
  return result;
}

// --- clustering --------------------------------------------------------------

std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts, Execution exec) {
  const int n = static_cast<int>(points.size());
  std::vector<int> labels(n, kNoise);
  if (n == 0) return labels;
  const PointIndex index(std::vector<Vec3>(points.begin(), points.end()));
  std::vector<std::vector<int>> neighbors(n);
#pragma omp parallel for schedule(dynamic, 64) if (exec == Execution::kParallel)
  for (int i = 0; i < n; ++i) neighbors[i] = index.within(points[i], eps);

  std::vector<char> core(n);
  for (int i = 0; i < n; ++i) core[i] = static_cast<int>(neighbors[i].size()) >= min_pts;

  int cluster = 0;
  std::vector<int> queue;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    labels[i] = cluster;
    queue.assign(1, i);
    while (!queue.empty()) {
      const int p = queue.back();
      queue.pop_back();
      for (int q : neighbors[p]) {
        if (core[q] && labels[q] == kNoise) {
          labels[q] = cluster;
          queue.push_back(q);
        }
      }
    }
    ++cluster;
  }
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (int q : neighbors[i]) {  // ascending, so the first core hit is the lowest index
      if (core[q]) {
        labels[i] = labels[q];
        break;
      }
    }
  }
  return labels;
}

bool ContactCandidateSet::empty() const {
  for (const auto& [finger, list] : fingers) {
    if (!list.empty()) return false;
  }
  return true;
}

AggregateResult aggregate_candidates(const std::vector<FingerCloud>& clouds, const ObjectModel& object,
                                     const AggregateConfig& config) {
  AggregateResult result;
  for (const auto& cloud : clouds) {
    const std::string tag = "finger " + std::to_string(cloud.finger);
    if (cloud.points.empty()) {
      result.warnings.push_back(tag + ": empty cloud; finger dropped");
      continue;
    }
    const auto labels = dbscan(cloud.points, config.eps, config.min_pts);
    const int nclusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (nclusters == 0) {
      result.warnings.push_back(tag + ": every transferred point is noise; finger dropped");
      continue;
    }
    struct Cluster {
      std::vector<int> members;
      double mean_conf = 0.0;
    };
    std::vector<Cluster> clusters(nclusters);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= 0) clusters[labels[i]].members.push_back(static_cast<int>(i));
    }
    for (auto& c : clusters) {
      double sum = 0.0;
      for (int i : c.members) sum += cloud.confidences[i];
      c.mean_conf = sum / c.members.size();
    }
    std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
      if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
      if (a.mean_conf != b.mean_conf) return a.mean_conf > b.mean_conf;
      return a.members.front() < b.members.front();
    });

    auto& list = result.candidates.fingers[cloud.finger];
    const int keep = std::min<int>(config.max_candidates, nclusters);
    for (int c = 0; c < keep; ++c) {
      const auto& cl = clusters[c];
      Vec3 acc = Vec3::Zero();
      double wsum = 0.0;
      for (int i : cl.members) {
        acc += cloud.confidences[i] * cloud.points[i];
        wsum += cloud.confidences[i];
      }
      Vec3 centroid;
      if (wsum > 0.0) {
        centroid = acc / wsum;
      } else {
        centroid.setZero();
        for (int i : cl.members) centroid += cloud.points[i];
        centroid /= static_cast<double>(cl.members.size());
      }
      const auto [idx, dist] = object.surface_index.nearest(centroid);
      ObjectCandidate cand;
      cand.point = object.surface.points[idx];
      cand.normal = object.surface.normals[idx];
      cand.weight = cl.mean_conf;
      cand.members = static_cast<int>(cl.members.size());
      cand.sample_index = idx;
      list.push_back(cand);
    }
  }
  return result;
}

json candidates_to_json(const ContactCandidateSet& set, const std::string& object_id) {
  json fingers = json::array();
  for (const auto& [finger, list] : set.fingers) {
    json cands = json::array();
    for (const auto& c : list) {
      cands.push_back({{"point", ju::to_json(c.point)},
                       {"normal", ju::to_json(c.normal)},
                       {"weight", c.weight},
                       {"members", c.members},
                       {"sample_index", c.sample_index}});
    }
    fingers.push_back({{"finger", finger}, {"candidates", cands}});
  }
  return json{{"object_id", object_id}, {"fingers", fingers}};
}

ContactCandidateSet candidates_from_json(const json& doc) {
  ContactCandidateSet set;
  const auto& fingers = ju::field(doc, "fingers", "candidates");
  for (std::size_t f = 0; f < fingers.size(); ++f) {
    const std::string p = "candidates.fingers[" + std::to_string(f) + "]";
    const int finger = ju::integer(ju::field(fingers[f], "finger", p), p + ".finger");
    auto& list = set.fingers[finger];
    const auto& cands = ju::field(fingers[f], "candidates", p);
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const std::string cp = p + ".candidates[" + std::to_string(k) + "]";
      ObjectCandidate c;
      c.point = ju::vec3(ju::field(cands[k], "point", cp), cp + ".point");
      c.normal = ju::vec3(ju::field(cands[k], "normal", cp), cp + ".normal");
      c.weight = ju::number(ju::field(cands[k], "weight", cp), cp + ".weight");
      c.members = ju::value_or<int>(cands[k], "members", 0);
      c.sample_index = ju::value_or<int>(cands[k], "sample_index", -1);
      list.push_back(c);
    }
  }
  return set;
}

}  // namespace graspforge
