#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "graspforge/common.hpp"

namespace graspforge::jsonutil {

using nlohmann::json;

const json& field(const json& obj, const std::string& key, const std::string& path);
double number(const json& v, const std::string& path);
int integer(const json& v, const std::string& path);
std::string string(const json& v, const std::string& path);
Vec3 vec3(const json& v, const std::string& path);
/// (w, x, y, z) order; must be within 1e-6 of unit norm.
Quat quaternion(const json& v, const std::string& path);
Iso3 transform(const json& v, const std::string& path);

json to_json(const Vec3& v);
json to_json(const Quat& q);
json transform_to_json(const Iso3& x);

json read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const json& doc, int indent = 2);

template <typename T>
T value_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return obj.at(key).get<T>();
}

}  // namespace graspforge::jsonutil
