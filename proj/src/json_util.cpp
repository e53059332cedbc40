#include "graspforge/json_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace graspforge::jsonutil {

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path + ": expected an integer");
  return v.get<int>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path + ": expected a string");
  return v.get<std::string>();
}

Vec3 vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ParseError(path + ": expected a 3-vector");
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Quat quaternion(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(path + ": expected a quaternion [w, x, y, z]");
  }
  double c[4];
  for (int i = 0; i < 4; ++i) c[i] = number(v[i], path + "[" + std::to_string(i) + "]");
  Quat q(c[0], c[1], c[2], c[3]);
  if (std::abs(q.norm() - 1.0) > 1e-6) throw ParseError(path + ": quaternion is not unit norm");
  // Leave already-unit values bit-exact so stored grasps reload identically.
  if (std::abs(q.norm() - 1.0) > 1e-12) q.normalize();
  return q;
}

Iso3 transform(const json& v, const std::string& path) {
  Vec3 t = Vec3::Zero();
  Quat q = Quat::Identity();
  if (v.contains("translation")) t = vec3(v.at("translation"), path + ".translation");
  if (v.contains("quaternion")) q = quaternion(v.at("quaternion"), path + ".quaternion");
  return make_iso(q, t);
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

json transform_to_json(const Iso3& x) {
  return json{{"translation", to_json(Vec3(x.translation()))},
              {"quaternion", to_json(Quat(x.linear()))}};
}

json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const json& doc, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(indent) << "\n";
}

}  // namespace graspforge::jsonutil
