#include "heartflow/geometry/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "heartflow/csv.hpp"

namespace heartflow::geometry {

void TriangleMesh::validate() const {
  std::ostringstream err;
  const int nv = static_cast<int>(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (!vertices[i].allFinite()) err << "\n  vertex " << i << " is not finite";
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (int k : t)
      if (k < 0 || k >= nv) err << "\n  face " << f << " index " << k << " out of range";
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) err << "\n  face " << f << " repeats a vertex";
  }
  if (!tags.empty() && tags.size() != faces.size())
    err << "\n  " << tags.size() << " tags for " << faces.size() << " faces";
  if (!err.str().empty()) throw std::invalid_argument("invalid mesh:" + err.str());
}

bool TriangleMesh::is_closed_oriented() const {
  if (faces.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : faces)
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  for (const auto& [e, n] : directed) {
    if (n != 1) return false;
    const auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).normalized();
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

TriangleMesh TriangleMesh::flipped() const {
  TriangleMesh m = *this;
  for (auto& t : m.faces) std::swap(t[1], t[2]);
  return m;
}

TriangleMesh read_mesh(const std::string& path, const std::string& tag_path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  long nv = -1, nf = -1;
  if (!(in >> nv >> nf) || nv < 0 || nf < 0)
    throw std::runtime_error(path + ": header must be '<vertex count> <face count>'");
  TriangleMesh m;
  m.vertices.resize(static_cast<std::size_t>(nv));
  m.faces.resize(static_cast<std::size_t>(nf));
  for (long i = 0; i < nv; ++i) {
    auto& v = m.vertices[static_cast<std::size_t>(i)];
    if (!(in >> v.x() >> v.y() >> v.z()))
      throw std::runtime_error(path + ": truncated at vertex " + std::to_string(i));
  }
  for (long f = 0; f < nf; ++f) {
    auto& t = m.faces[static_cast<std::size_t>(f)];
    if (!(in >> t[0] >> t[1] >> t[2]))
      throw std::runtime_error(path + ": truncated at face " + std::to_string(f));
  }
  if (!tag_path.empty()) {
    const auto table = csv::read(tag_path);
    const auto fc = table.column("face"), tc = table.column("tag");
    m.tags.assign(m.faces.size(), kWallTag);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double face = table.number(r, fc);
      if (face < 0 || face >= static_cast<double>(nf) || face != std::floor(face))
        throw std::runtime_error(tag_path + ": bad face index in row " + std::to_string(r + 1));
      m.tags[static_cast<std::size_t>(face)] = static_cast<int>(table.number(r, tc));
    }
  }
  m.validate();
  return m;
}

void write_mesh(const std::string& path, const TriangleMesh& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << m.vertices.size() << ' ' << m.faces.size() << '\n';
  out << std::setprecision(17);
  for (const auto& v : m.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : m.faces) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_tags(const std::string& path, const TriangleMesh& m) {
  csv::Writer w(path);
  w.header({"face", "tag"});
  for (std::size_t f = 0; f < m.tags.size(); ++f)
    if (m.tags[f] != kWallTag) w.row({static_cast<double>(f), static_cast<double>(m.tags[f])});
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  if (!(radius > 0.0) || subdivisions < 0) throw std::invalid_argument("icosphere: bad radius or level");
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriangleMesh m;
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(center + radius * p);
  m.faces = std::move(f);
  return m;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi, bool tag_sides) {
  if (!((hi - lo).array() > 0.0).all()) throw std::invalid_argument("box: hi must exceed lo");
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  // Quads listed counter-clockwise seen from outside, in tag order.
  const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  for (int s = 0; s < 6; ++s) {
    const auto& q = quads[s];
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
    if (tag_sides) m.tags.insert(m.tags.end(), 2, s + 1);
  }
  return m;
}

double enclosed_volume(const TriangleMesh& m) {
  m.validate();
  if (!m.is_closed_oriented())
    throw std::invalid_argument("enclosed_volume: mesh is not closed and consistently oriented");
  // Tetrahedra against the vertex centroid keep the sum well conditioned.
  Vec3 o = Vec3::Zero();
  for (const auto& v : m.vertices) o += v;
  o /= static_cast<double>(m.vertices.size());
  double vol = 0.0;
  for (const auto& t : m.faces)
    vol += (m.vertices[t[0]] - o).dot((m.vertices[t[1]] - o).cross(m.vertices[t[2]] - o));
  return vol / 6.0;
}

double cap_area(const TriangleMesh& m, int cap) {
  double a = 0.0;
  bool found = false;
  for (std::size_t f = 0; f < m.faces.size(); ++f)
    if (m.tag(f) == cap) {
      a += m.face_area(f);
      found = true;
    }
  if (!found) throw std::invalid_argument("no face tagged with cap id " + std::to_string(cap));
  return a;
}

double cap_flux(const TriangleMesh& m, int cap, const std::vector<Vec3>& u) {
  if (u.size() != m.vertices.size())
    throw std::invalid_argument("cap_flux: need one velocity per vertex");
  double q = 0.0;
  bool found = false;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    if (m.tag(f) != cap) continue;
    found = true;
    const auto& t = m.faces[f];
    // area * unit normal = half the edge cross product
    const Vec3 an = 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
    q += ((u[t[0]] + u[t[1]] + u[t[2]]) / 3.0).dot(an);
  }
  if (!found) throw std::invalid_argument("cap_flux: no face tagged with cap id " + std::to_string(cap));
  return q;
}

}  // namespace heartflow::geometry
