#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfcal/pose.hpp"

namespace selfcal {

enum class PrimitiveKind { Box, Sphere, Cylinder };

// Convex solid with its pose in the world frame. Box: size = full extents
// (sx, sy, sz). Sphere: size[0] = radius. Cylinder: size[0] = radius,
// size[1] = full height, axis local z.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Box;
  Vec3 size = Vec3::Ones();
  PoseSE3 pose;

  double surface_area() const;
  // Signed distance and outward normal in the world frame.
  double sdf(const Vec3& p_world) const;
  // AABB in world frame.
  void aabb(Vec3& lo, Vec3& hi) const;
};

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;
};

// Area-weighted uniform sample of the primitive's surface, with the analytic
// outward normal.
SurfaceSample sample_surface(const Primitive& prim, Rng& rng);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;

  // Every edge shared by exactly two triangles.
  bool watertight() const;
  double face_area(int f) const;
  Vec3 face_normal(int f) const;
  // Unsigned distance from p to the closest triangle.
  double distance(const Vec3& p) const;
  // Generalized winding number at p; > 0.5 means inside.
  double winding_number(const Vec3& p) const;
  double signed_distance(const Vec3& p) const;
  void aabb(Vec3& lo, Vec3& hi) const;

  static TriangleMesh load(const std::filesystem::path& path);  // OBJ or STL
};

// Environment: a union of convex primitives or a watertight triangle mesh,
// in the world frame, partitioned into segments.
struct EnvironmentModel {
  std::vector<Primitive> solids;
  std::optional<TriangleMesh> mesh;
  // Each segment is a set of solid indices (primitive mode) or face indices
  // (mesh mode). Defaults to one segment per solid / one segment for the
  // whole mesh.
  std::vector<std::vector<int>> segments;

  void validate() const;
  int segment_count() const { return static_cast<int>(segments.size()); }
  // min over solids of the per-primitive SDF, or the mesh signed distance.
  double analytic_sdf(const Vec3& p) const;
  // Central-difference gradient of analytic_sdf.
  Vec3 sdf_gradient(const Vec3& p, double h = 1e-5) const;
  void aabb(Vec3& lo, Vec3& hi) const;

  static EnvironmentModel single_segment_per_solid(std::vector<Primitive> s);
};

// Dense voxel grid of signed distances, sampled at voxel centers. values are
// row-major with index (i * dims[1] + j) * dims[2] + k.
struct SdfGrid {
  Vec3 origin = Vec3::Zero();  // center of voxel (0,0,0)
  double resolution = 0.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<float> values;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }
  Vec3 voxel_center(int i, int j, int k) const {
    return origin + resolution * Vec3(i, j, k);
  }

  // Nearest-voxel lookup; outside the grid, distance to the grid AABB plus
  // the clamped boundary voxel value. trilinear enables interpolated lookups
  // for accuracy studies.
  double query(const Vec3& p) const;
  double query_trilinear(const Vec3& p) const;

  void save(const std::filesystem::path& path) const;
  static SdfGrid load(const std::filesystem::path& path);
};

SdfGrid build_sdf(const EnvironmentModel& env, double resolution,
                  double padding = 0.3);

// L pre-sampled surface points of the end-effector model, in the
// end-effector body frame.
struct EndEffectorCloud {
  std::vector<Vec3> points;
};

EndEffectorCloud sample_cloud(const std::vector<Primitive>& ee_model, int count,
                              std::uint64_t seed);

// min over cloud points of query(grid, base_pose * ee_transform * p).
double hypothesized_distance(const SdfGrid& grid, const EndEffectorCloud& cloud,
                             const PoseSE3& base_pose,
                             const PoseSE3& ee_transform);

}  // namespace selfcal
