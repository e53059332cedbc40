#include "graspforge/mesh_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace graspforge {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

TriangleMesh load_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed vertex");
      }
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ss >> tok) {
        const int idx = std::stoi(tok.substr(0, tok.find('/')));
        poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(verts.size()) + idx);
      }
      if (poly.size() < 3) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  return make_mesh(std::move(verts), std::move(tris));
}

void save_obj(const fs::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

namespace {

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

PlyType ply_type(const std::string& s, const std::string& where) {
  if (s == "char" || s == "int8") return PlyType::kI8;
  if (s == "uchar" || s == "uint8") return PlyType::kU8;
  if (s == "short" || s == "int16") return PlyType::kI16;
  if (s == "ushort" || s == "uint16") return PlyType::kU16;
  if (s == "int" || s == "int32") return PlyType::kI32;
  if (s == "uint" || s == "uint32") return PlyType::kU32;
  if (s == "float" || s == "float32") return PlyType::kF32;
  if (s == "double" || s == "float64") return PlyType::kF64;
  throw ParseError(where + ": unknown PLY type '" + s + "'");
}

template <typename T>
T read_raw(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

double read_value(std::istream& in, PlyType t, bool binary) {
  if (!binary) {
    double v;
    in >> v;
    return v;
  }
  switch (t) {
    case PlyType::kI8: return read_raw<std::int8_t>(in);
    case PlyType::kU8: return read_raw<std::uint8_t>(in);
    case PlyType::kI16: return read_raw<std::int16_t>(in);
    case PlyType::kU16: return read_raw<std::uint16_t>(in);
    case PlyType::kI32: return read_raw<std::int32_t>(in);
    case PlyType::kU32: return read_raw<std::uint32_t>(in);
    case PlyType::kF32: return read_raw<float>(in);
    case PlyType::kF64: return read_raw<double>(in);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF32;
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyData {
  std::vector<std::vector<double>> vertex_props;  // per property, per vertex
  std::vector<std::string> vertex_names;
  std::vector<std::vector<int>> faces;
};

PlyData read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw ParseError(where + ": missing 'ply' magic");
  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw ParseError(where + ": unsupported PLY format '" + fmt + "'");
      }
    } else if (tag == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw ParseError(where + ": property before element");
      PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = ply_type(ct, where);
        p.type = ply_type(it, where);
      } else {
        p.type = ply_type(t, where);
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      break;
    }
  }

  PlyData data;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      data.vertex_props.assign(e.props.size(), std::vector<double>(e.count));
      for (const auto& p : e.props) data.vertex_names.push_back(p.name);
    }
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t k = 0; k < e.props.size(); ++k) {
        const auto& p = e.props[k];
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(read_value(in, p.count_type, binary));
          std::vector<int> items(n);
          for (std::size_t m = 0; m < n; ++m) items[m] = static_cast<int>(read_value(in, p.type, binary));
          if (e.name == "face" && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            data.faces.push_back(std::move(items));
          }
        } else {
          const double v = read_value(in, p.type, binary);
          if (e.name == "vertex") data.vertex_props[k][i] = v;
        }
      }
      if (!in) throw ParseError(where + ": truncated " + e.name + " data");
    }
  }
  return data;
}

int find_prop(const PlyData& d, const std::string& name) {
  for (std::size_t k = 0; k < d.vertex_names.size(); ++k) {
    if (d.vertex_names[k] == name) return static_cast<int>(k);
  }
  return -1;
}

std::vector<Vec3> ply_vertices(const PlyData& d, const std::string& where) {
  const int x = find_prop(d, "x"), y = find_prop(d, "y"), z = find_prop(d, "z");
  if (x < 0 || y < 0 || z < 0) throw ParseError(where + ": vertex element lacks x/y/z");
  std::vector<Vec3> out(d.vertex_props[x].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Vec3(d.vertex_props[x][i], d.vertex_props[y][i], d.vertex_props[z][i]);
  }
  return out;
}

void write_ply_header(std::ostream& out, std::size_t nv, bool normals, std::size_t nf) {
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << nv << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (nf > 0) out << "element face " << nf << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";
}

template <typename T>
void write_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

TriangleMesh load_ply_mesh(const fs::path& path) {
  auto d = read_ply(path);
  auto verts = ply_vertices(d, path.string());
  std::vector<Triangle> tris;
  for (const auto& f : d.faces) {
    if (f.size() < 3) throw ParseError(path.string() + ": face with fewer than 3 vertices");
    for (std::size_t k = 1; k + 1 < f.size(); ++k) tris.push_back({f[0], f[k], f[k + 1]});
  }
  return make_mesh(std::move(verts), std::move(tris));
}

void save_ply_mesh(const fs::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_ply_header(out, mesh.vertices.size(), false, mesh.triangles.size());
  for (const auto& v : mesh.vertices) {
    for (int k = 0; k < 3; ++k) write_raw(out, v[k]);
  }
  for (const auto& t : mesh.triangles) {
    write_raw<std::uint8_t>(out, 3);
    for (int k = 0; k < 3; ++k) write_raw<std::int32_t>(out, t[k]);
  }
}

OrientedPointSet load_ply_points(const fs::path& path) {
  auto d = read_ply(path);
  OrientedPointSet out;
  out.points = ply_vertices(d, path.string());
  const int nx = find_prop(d, "nx"), ny = find_prop(d, "ny"), nz = find_prop(d, "nz");
  out.normals.resize(out.points.size(), Vec3::UnitZ());
  if (nx >= 0 && ny >= 0 && nz >= 0) {
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      Vec3 n(d.vertex_props[nx][i], d.vertex_props[ny][i], d.vertex_props[nz][i]);
      if (std::abs(n.norm() - 1.0) > 1e-12) n.normalize();
      out.normals[i] = n;
    }
  }
  return out;
}

void save_ply_points(const fs::path& path, const OrientedPointSet& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const bool normals = points.normals.size() == points.points.size();
  write_ply_header(out, points.points.size(), normals, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) write_raw(out, points.points[i][k]);
    if (normals) {
      for (int k = 0; k < 3; ++k) write_raw(out, points.normals[i][k]);
    }
  }
}

TriangleMesh load_mesh(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".obj" || ext == ".OBJ") return load_obj(path);
  if (ext == ".ply" || ext == ".PLY") return load_ply_mesh(path);
  throw ParseError(path.string() + ": unsupported mesh format");
}

FloatImage read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  FloatImage img;
  double scale = 0.0;
  in >> magic >> img.width >> img.height >> scale;
  in.get();  // single whitespace before the raster
  if (magic != "Pf") throw ParseError(path.string() + ": expected single-channel PFM ('Pf')");
  if (img.width <= 0 || img.height <= 0) throw ParseError(path.string() + ": invalid PFM size");
  if (scale > 0.0) throw ParseError(path.string() + ": big-endian PFM not supported");
  const std::size_t w = img.width, h = img.height;
  img.data.resize(w * h);
  std::vector<float> row(w);
  for (std::size_t r = 0; r < h; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
    if (!in) throw ParseError(path.string() + ": truncated PFM raster");
    std::memcpy(&img.data[(h - 1 - r) * w], row.data(), w * sizeof(float));
  }
  return img;
}

void write_pfm(const fs::path& path, const FloatImage& img) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "Pf\n" << img.width << " " << img.height << "\n-1\n";
  const std::size_t w = img.width, h = img.height;
  for (std::size_t r = 0; r < h; ++r) {
    out.write(reinterpret_cast<const char*>(&img.data[(h - 1 - r) * w]),
              static_cast<std::streamsize>(w * sizeof(float)));
  }
}

}  // namespace graspforge
