#include "graspforge/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "graspforge/json_util.hpp"

namespace graspforge {

namespace ju = jsonutil;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

bool unit(const Vec3& v, double tol) { return std::abs(v.norm() - 1.0) <= tol; }

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error("validation failed: " + join(problems)), problems_(std::move(problems)) {}

std::vector<int> HandModel::finger_contact_links(int finger) const {
  const auto& chain = fingers.at(finger);
  if (chain.size() <= 1) return chain;
  return {chain[chain.size() - 2], chain.back()};
}

bool HandModel::adjacent(int a, int b) const {
  return links[a].parent == b || links[b].parent == a;
}

std::vector<std::string> validate_hand_model(const HandModel& m) {
  std::vector<std::string> problems;
  const int n = m.num_links();
  if (n == 0) problems.push_back("links: hand has no links");

  int roots = 0;
  bool parents_ok = true;
  for (int i = 0; i < n; ++i) {
    const int p = m.links[i].parent;
    if (p < 0) {
      ++roots;
    } else if (p >= n || p == i) {
      problems.push_back("links[" + std::to_string(i) + "].parent: invalid index " +
                         std::to_string(p));
      parents_ok = false;
    }
  }
  if (n > 0 && roots != 1) {
    problems.push_back("links: expected exactly one root, found " + std::to_string(roots));
  }
  if (parents_ok) {
    for (int i = 0; i < n; ++i) {
      int cur = i;
      int steps = 0;
      while (cur >= 0 && steps <= n) {
        cur = m.links[cur].parent;
        ++steps;
      }
      if (steps > n) {
        problems.push_back("links[" + std::to_string(i) + "]: parent chain contains a cycle");
        break;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < m.links[i].spheres.size(); ++s) {
      if (!(m.links[i].spheres[s].radius > 0.0)) {
        problems.push_back("links[" + std::to_string(i) + "].spheres[" + std::to_string(s) +
                           "]: radius must be > 0");
      }
    }
  }

  for (int j = 0; j < m.dof(); ++j) {
    const auto& jt = m.joints[j];
    const std::string where = "joints[" + std::to_string(j) + "]";
    if (jt.link < 0 || jt.link >= n) problems.push_back(where + ".link: invalid index");
    if (!unit(jt.axis, 1e-9)) problems.push_back(where + ".axis: not unit norm");
    if (!(jt.lower <= jt.upper)) problems.push_back(where + ": lower limit exceeds upper limit");
  }

  if (static_cast<int>(m.contact_candidates.size()) != n) {
    problems.push_back("contact_candidates: table size does not match link count");
  } else {
    for (int i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m.contact_candidates[i].size(); ++c) {
        if (!unit(m.contact_candidates[i][c].normal, 1e-9)) {
          problems.push_back("contact_candidates[link " + std::to_string(i) + "][" +
                             std::to_string(c) + "].normal: not unit norm");
        }
      }
    }
  }
  if (static_cast<int>(m.surface_samples.size()) != n) {
    problems.push_back("surface_samples: table size does not match link count");
  }

  for (int f = 0; f < m.num_fingers(); ++f) {
    const auto& chain = m.fingers[f];
    const std::string where = "fingers[" + std::to_string(f) + "]";
    if (chain.empty()) {
      problems.push_back(where + ": empty chain");
      continue;
    }
    bool ok = true;
    for (int l : chain) {
      if (l < 0 || l >= n) {
        problems.push_back(where + ": invalid link index " + std::to_string(l));
        ok = false;
      }
    }
    if (!ok || static_cast<int>(m.contact_candidates.size()) != n) continue;
    for (int l : m.finger_contact_links(f)) {
      if (m.contact_candidates[l].empty()) {
        problems.push_back(where + ": contact link " + std::to_string(l) +
                           " has no contact candidates");
      }
    }
  }
  for (int f : m.functional_fingers) {
    if (f < 0 || f >= m.num_fingers()) {
      problems.push_back("functional_fingers: invalid finger " + std::to_string(f));
    }
  }
  for (int l : m.auxiliary_links) {
    if (l < 0 || l >= n) problems.push_back("auxiliary_links: invalid link " + std::to_string(l));
  }
  if (!unit(m.palm.approach, 1e-6)) problems.push_back("palm.approach: not unit norm");
  return problems;
}

HandModel finalize_hand_model(HandModel m) {
  auto problems = validate_hand_model(m);
  if (!problems.empty()) throw ValidationError(std::move(problems));

  const int n = m.num_links();
  std::vector<std::vector<int>> children(n);
  int root = 0;
  for (int i = 0; i < n; ++i) {
    if (m.links[i].parent < 0) {
      root = i;
    } else {
      children[m.links[i].parent].push_back(i);
    }
  }
  m.topo_order.clear();
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    m.topo_order.push_back(cur);
    for (auto it = children[cur].rbegin(); it != children[cur].rend(); ++it) stack.push_back(*it);
  }

  m.link_joints.assign(n, {});
  for (int j = 0; j < m.dof(); ++j) m.link_joints[m.joints[j].link].push_back(j);

  m.joint_moves_link.assign(m.dof(), std::vector<char>(n, 0));
  for (int l = 0; l < n; ++l) {
    for (int cur = l; cur >= 0; cur = m.links[cur].parent) {
      for (int j : m.link_joints[cur]) m.joint_moves_link[j][l] = 1;
    }
  }

  m.link_finger.assign(n, -1);
  for (int f = 0; f < m.num_fingers(); ++f) {
    for (int l : m.fingers[f]) m.link_finger[l] = f;
  }
  m.palm.approach.normalize();
  return m;
}

namespace {

int link_ref(const json& v, const std::map<std::string, int>& names, const std::string& path) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    auto it = names.find(v.get<std::string>());
    if (it == names.end()) throw ParseError(path + ": unknown link '" + v.get<std::string>() + "'");
    return it->second;
  }
  throw ParseError(path + ": expected a link index or name");
}

}  // namespace

HandModel load_hand_model(const json& doc) {
  HandModel m;
  const std::string root = "hand";
  const auto& links = ju::field(doc, "links", root);
  if (!links.is_array()) throw ParseError("hand.links: expected an array");

  std::map<std::string, int> names;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string p = "hand.links[" + std::to_string(i) + "]";
    const auto& lj = links[i];
    Link link;
    link.name = lj.contains("name") ? ju::string(lj.at("name"), p + ".name") : "link" + std::to_string(i);
    names[link.name] = static_cast<int>(i);
    m.links.push_back(std::move(link));
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string p = "hand.links[" + std::to_string(i) + "]";
    const auto& lj = links[i];
    auto& link = m.links[i];
    link.parent = lj.contains("parent") && !lj.at("parent").is_null()
                      ? link_ref(lj.at("parent"), names, p + ".parent")
                      : -1;
    if (lj.contains("origin")) link.fixed = ju::transform(lj.at("origin"), p + ".origin");
    if (lj.contains("spheres")) {
      const auto& sj = lj.at("spheres");
      if (!sj.is_array()) throw ParseError(p + ".spheres: expected an array");
      for (std::size_t s = 0; s < sj.size(); ++s) {
        const std::string sp = p + ".spheres[" + std::to_string(s) + "]";
        link.spheres.push_back(Sphere{ju::vec3(ju::field(sj[s], "center", sp), sp + ".center"),
                                      ju::number(ju::field(sj[s], "radius", sp), sp + ".radius")});
      }
    }
  }

  const auto& joints = ju::field(doc, "joints", root);
  if (!joints.is_array()) throw ParseError("hand.joints: expected an array");
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const std::string p = "hand.joints[" + std::to_string(j) + "]";
    const auto& jj = joints[j];
    Joint joint;
    joint.name = jj.contains("name") ? ju::string(jj.at("name"), p + ".name") : "joint" + std::to_string(j);
    joint.link = link_ref(ju::field(jj, "link", p), names, p + ".link");
    joint.axis = ju::vec3(ju::field(jj, "axis", p), p + ".axis");
    const std::string type = jj.contains("type") ? ju::string(jj.at("type"), p + ".type") : "revolute";
    if (type == "revolute") {
      joint.type = JointType::kRevolute;
    } else if (type == "prismatic") {
      joint.type = JointType::kPrismatic;
    } else {
      throw ParseError(p + ".type: unknown joint type '" + type + "'");
    }
    joint.lower = ju::number(ju::field(jj, "lower", p), p + ".lower");
    joint.upper = ju::number(ju::field(jj, "upper", p), p + ".upper");
    m.joints.push_back(joint);
  }

  const auto& fingers = ju::field(doc, "fingers", root);
  if (!fingers.is_array()) throw ParseError("hand.fingers: expected an array");
  for (std::size_t f = 0; f < fingers.size(); ++f) {
    const std::string p = "hand.fingers[" + std::to_string(f) + "]";
    if (!fingers[f].is_array()) throw ParseError(p + ": expected an array of links");
    std::vector<int> chain;
    for (std::size_t k = 0; k < fingers[f].size(); ++k) {
      chain.push_back(link_ref(fingers[f][k], names, p + "[" + std::to_string(k) + "]"));
    }
    m.fingers.push_back(std::move(chain));
  }

  const int n = m.num_links();
  m.contact_candidates.assign(n, {});
  m.surface_samples.assign(n, {});

  const auto& cands = ju::field(doc, "contact_candidates", root);
  if (!cands.is_array()) throw ParseError("hand.contact_candidates: expected an array");
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const std::string p = "hand.contact_candidates[" + std::to_string(c) + "]";
    int l = link_ref(ju::field(cands[c], "link", p), names, p + ".link");
    if (l < 0 || l >= n) throw ParseError(p + ".link: invalid index");
    m.contact_candidates[l].push_back(
        ContactCandidate{ju::vec3(ju::field(cands[c], "point", p), p + ".point"),
                         ju::vec3(ju::field(cands[c], "normal", p), p + ".normal")});
  }

  const auto& samples = ju::field(doc, "surface_samples", root);
  if (!samples.is_array()) throw ParseError("hand.surface_samples: expected an array");
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const std::string p = "hand.surface_samples[" + std::to_string(s) + "]";
    int l = link_ref(ju::field(samples[s], "link", p), names, p + ".link");
    if (l < 0 || l >= n) throw ParseError(p + ".link: invalid index");
    const auto& pts = ju::field(samples[s], "points", p);
    if (!pts.is_array()) throw ParseError(p + ".points: expected an array");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      m.surface_samples[l].push_back(ju::vec3(pts[k], p + ".points[" + std::to_string(k) + "]"));
    }
  }

  const auto& aux = ju::field(doc, "auxiliary_links", root);
  if (!aux.is_array()) throw ParseError("hand.auxiliary_links: expected an array");
  for (std::size_t k = 0; k < aux.size(); ++k) {
    m.auxiliary_links.push_back(link_ref(aux[k], names, "hand.auxiliary_links[" + std::to_string(k) + "]"));
  }
  const auto& func = ju::field(doc, "functional_fingers", root);
  if (!func.is_array()) throw ParseError("hand.functional_fingers: expected an array");
  for (std::size_t k = 0; k < func.size(); ++k) {
    m.functional_fingers.push_back(
        ju::integer(func[k], "hand.functional_fingers[" + std::to_string(k) + "]"));
  }

  if (doc.contains("palm")) {
    const auto& pj = doc.at("palm");
    if (pj.contains("center")) m.palm.center = ju::vec3(pj.at("center"), "hand.palm.center");
    if (pj.contains("approach")) m.palm.approach = ju::vec3(pj.at("approach"), "hand.palm.approach");
  }
  return finalize_hand_model(std::move(m));
}

HandModel load_hand_model_file(const std::filesystem::path& path) {
  return load_hand_model(ju::read_file(path));
}

json hand_model_to_json(const HandModel& m) {
  json links = json::array();
  for (const auto& l : m.links) {
    json spheres = json::array();
    for (const auto& s : l.spheres) spheres.push_back({{"center", ju::to_json(s.center)}, {"radius", s.radius}});
    links.push_back({{"name", l.name},
                     {"parent", l.parent},
                     {"origin", ju::transform_to_json(l.fixed)},
                     {"spheres", spheres}});
  }
  json joints = json::array();
  for (const auto& j : m.joints) {
    joints.push_back({{"name", j.name},
                      {"link", j.link},
                      {"axis", ju::to_json(j.axis)},
                      {"type", j.type == JointType::kRevolute ? "revolute" : "prismatic"},
                      {"lower", j.lower},
                      {"upper", j.upper}});
  }
  json cands = json::array();
  json samples = json::array();
  for (int l = 0; l < m.num_links(); ++l) {
    for (const auto& c : m.contact_candidates[l]) {
      cands.push_back({{"link", l}, {"point", ju::to_json(c.point)}, {"normal", ju::to_json(c.normal)}});
    }
    if (!m.surface_samples[l].empty()) {
      json pts = json::array();
      for (const auto& p : m.surface_samples[l]) pts.push_back(ju::to_json(p));
      samples.push_back({{"link", l}, {"points", pts}});
    }
  }
  return json{{"links", links},
              {"joints", joints},
              {"fingers", m.fingers},
              {"contact_candidates", cands},
              {"surface_samples", samples},
              {"auxiliary_links", m.auxiliary_links},
              {"functional_fingers", m.functional_fingers},
              {"palm", {{"center", ju::to_json(m.palm.center)}, {"approach", ju::to_json(m.palm.approach)}}}};
}

Grasp make_grasp(const HandModel& model) {
  Grasp g;
  g.joints = VecX::Zero(model.dof());
  return g;
}

json grasp_to_json(const Grasp& g) {
  return json{{"t", ju::to_json(g.translation)},
              {"q", ju::to_json(g.rotation)},
              {"joints", std::vector<double>(g.joints.data(), g.joints.data() + g.joints.size())}};
}

Grasp grasp_from_json(const json& j) {
  Grasp g;
  g.translation = ju::vec3(ju::field(j, "t", "grasp"), "grasp.t");
  g.rotation = ju::quaternion(ju::field(j, "q", "grasp"), "grasp.q");
  const auto& joints = ju::field(j, "joints", "grasp");
  if (!joints.is_array()) throw ParseError("grasp.joints: expected an array");
  g.joints.resize(static_cast<Eigen::Index>(joints.size()));
  for (std::size_t k = 0; k < joints.size(); ++k) {
    g.joints[static_cast<Eigen::Index>(k)] = ju::number(joints[k], "grasp.joints");
  }
  return g;
}

}  // namespace graspforge
