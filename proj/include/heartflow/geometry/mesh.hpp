#pragma once

// Triangle surface meshes. Lengths in cm, so enclosed volumes come out in mL.
//
// File format: first line "<vertex count> <face count>", then one "x y z"
// line per vertex and one "i j k" line (0-based) per face. Region tags live
// in an optional sidecar CSV with columns "face,tag"; untagged faces are
// wall (tag 0), caps carry positive ids.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace heartflow::geometry {

using Vec3 = Eigen::Vector3d;

inline constexpr int kWallTag = 0;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<int> tags;  // empty, or one per face

  /// Throws std::invalid_argument on out-of-range or repeated indices,
  /// non-finite vertices or a tag array of the wrong length.
  void validate() const;

  /// Every edge is shared by exactly two faces that traverse it in
  /// opposite directions.
  bool is_closed_oriented() const;

  int tag(std::size_t face) const { return tags.empty() ? kWallTag : tags[face]; }
  Vec3 face_normal(std::size_t face) const;  // unit, right-handed
  double face_area(std::size_t face) const;

  /// Same surface with reversed face orientation.
  TriangleMesh flipped() const;
};

TriangleMesh read_mesh(const std::string& path, const std::string& tag_path = "");
void write_mesh(const std::string& path, const TriangleMesh& mesh);
void write_tags(const std::string& path, const TriangleMesh& mesh);

/// Geodesic sphere: icosahedron refined `subdivisions` times, vertices
/// projected onto the sphere. Outward oriented, 20 * 4^subdivisions faces.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

/// Axis-aligned box [lo, hi], two triangles per side, outward oriented.
/// Side tags (when `tag_sides`): -x 1, +x 2, -y 3, +y 4, -z 5, +z 6.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi, bool tag_sides = false);

/// Signed volume by the divergence theorem; positive for outward
/// orientation. Throws std::invalid_argument for meshes that are not
/// closed and consistently oriented.
double enclosed_volume(const TriangleMesh& mesh);

/// Flow through the faces tagged `cap`: sum of area * (mean of the three
/// vertex velocities) . (unit normal). Throws when no face carries the tag
/// or the velocity count does not match the vertex count.
double cap_flux(const TriangleMesh& mesh, int cap, const std::vector<Vec3>& vertex_velocities);

double cap_area(const TriangleMesh& mesh, int cap);

}  // namespace heartflow::geometry
