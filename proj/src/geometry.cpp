#include "selfcal/geometry.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace selfcal {

double Primitive::surface_area() const {
  switch (kind) {
    case PrimitiveKind::Box:
      return 2.0 * (size[0] * size[1] + size[1] * size[2] + size[2] * size[0]);
    case PrimitiveKind::Sphere:
      return 4.0 * M_PI * size[0] * size[0];
    case PrimitiveKind::Cylinder:
      return 2.0 * M_PI * size[0] * size[1] + 2.0 * M_PI * size[0] * size[0];
  }
  return 0.0;
}

double Primitive::sdf(const Vec3& p_world) const {
  Vec3 p = pose.inverse().apply(p_world);
  switch (kind) {
    case PrimitiveKind::Box: {
      Vec3 q = p.cwiseAbs() - 0.5 * size;
      Vec3 qp = q.cwiseMax(0.0);
      return qp.norm() + std::min(q.maxCoeff(), 0.0);
    }
    case PrimitiveKind::Sphere:
      return p.norm() - size[0];
    case PrimitiveKind::Cylinder: {
      double dr = std::hypot(p[0], p[1]) - size[0];
      double dz = std::abs(p[2]) - 0.5 * size[1];
      double outside =
          std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
      return outside + std::min(std::max(dr, dz), 0.0);
    }
  }
  return 0.0;
}

void Primitive::aabb(Vec3& lo, Vec3& hi) const {
  // Local-frame AABB corners transformed to world, then boxed.
  Vec3 half;
  switch (kind) {
    case PrimitiveKind::Box:
      half = 0.5 * size;
      break;
    case PrimitiveKind::Sphere:
      half = Vec3::Constant(size[0]);
      break;
    case PrimitiveKind::Cylinder:
      half = Vec3(size[0], size[0], 0.5 * size[1]);
      break;
  }
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (int c = 0; c < 8; c++) {
    Vec3 corner(half[0] * ((c & 1) ? 1 : -1), half[1] * ((c & 2) ? 1 : -1),
                half[2] * ((c & 4) ? 1 : -1));
    Vec3 w = pose.apply(corner);
    lo = lo.cwiseMin(w);
    hi = hi.cwiseMax(w);
  }
}

SurfaceSample sample_surface(const Primitive& prim, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec3 p_local, n_local;
  switch (prim.kind) {
    case PrimitiveKind::Box: {
      const Vec3& s = prim.size;
      double areas[3] = {s[1] * s[2], s[0] * s[2], s[0] * s[1]};  // yz, xz, xy
      double total = 2.0 * (areas[0] + areas[1] + areas[2]);
      double pick = u01(rng) * total;
      int axis = 0;
      double acc = 0.0;
      int side = 1;
      for (int a = 0; a < 3 && pick >= 0; a++) {
        for (int sgn : {-1, 1}) {
          acc += areas[a];
          if (pick < acc) {
            axis = a;
            side = sgn;
            pick = -1;
            break;
          }
        }
      }
      p_local = Vec3((u01(rng) - 0.5) * s[0], (u01(rng) - 0.5) * s[1],
                     (u01(rng) - 0.5) * s[2]);
      p_local[axis] = side * 0.5 * s[axis];
      n_local = Vec3::Zero();
      n_local[axis] = side;
      break;
    }
    case PrimitiveKind::Sphere: {
      std::normal_distribution<double> n(0.0, 1.0);
      Vec3 dir(n(rng), n(rng), n(rng));
      while (dir.norm() < 1e-12) dir = Vec3(n(rng), n(rng), n(rng));
      dir.normalize();
      p_local = prim.size[0] * dir;
      n_local = dir;
      break;
    }
    case PrimitiveKind::Cylinder: {
      double r = prim.size[0], h = prim.size[1];
      double side_area = 2.0 * M_PI * r * h;
      double cap_area = M_PI * r * r;
      double pick = u01(rng) * (side_area + 2.0 * cap_area);
      double phi = 2.0 * M_PI * u01(rng);
      if (pick < side_area) {
        p_local = Vec3(r * std::cos(phi), r * std::sin(phi),
                       (u01(rng) - 0.5) * h);
        n_local = Vec3(std::cos(phi), std::sin(phi), 0.0);
      } else {
        double sign = pick < side_area + cap_area ? 1.0 : -1.0;
        double rr = r * std::sqrt(u01(rng));
        p_local = Vec3(rr * std::cos(phi), rr * std::sin(phi), sign * 0.5 * h);
        n_local = Vec3(0, 0, sign);
      }
      break;
    }
  }
  return {prim.pose.apply(p_local), prim.pose.rotate(n_local)};
}

// ---------------------------------------------------------------------------
// Triangle mesh

bool TriangleMesh::watertight() const {
  // Count directed edges; watertight (and consistently oriented) iff every
  // undirected edge appears exactly twice, once per direction.
  std::vector<std::pair<std::int64_t, int>> edges;
  edges.reserve(faces.size() * 3);
  auto key = [](int a, int b) {
    return (static_cast<std::int64_t>(std::min(a, b)) << 32) |
           static_cast<std::int64_t>(std::max(a, b));
  };
  for (const auto& f : faces) {
    for (int e = 0; e < 3; e++) {
      int a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      edges.emplace_back(key(a, b), a < b ? 1 : -1);
    }
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    int dir_sum = 0;
    while (j < edges.size() && edges[j].first == edges[i].first) {
      dir_sum += edges[j].second;
      j++;
    }
    if (j - i != 2 || dir_sum != 0) return false;
    i = j;
  }
  return true;
}

double TriangleMesh::face_area(int f) const {
  const Vec3& a = vertices[faces[f][0]];
  const Vec3& b = vertices[faces[f][1]];
  const Vec3& c = vertices[faces[f][2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 TriangleMesh::face_normal(int f) const {
  const Vec3& a = vertices[faces[f][0]];
  const Vec3& b = vertices[faces[f][1]];
  const Vec3& c = vertices[faces[f][2]];
  return (b - a).cross(c - a).normalized();
}

namespace {

double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c) {
  // Ericson, Real-Time Collision Detection, closest-point-on-triangle.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.squaredNorm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.squaredNorm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double v = d1 / (d1 - d3);
    return (ap - v * ab).squaredNorm();
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.squaredNorm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double w = d2 / (d2 - d6);
    return (ap - w * ac).squaredNorm();
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (bp - w * (c - b)).squaredNorm();
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return (ap - v * ab - w * ac).squaredNorm();
}

}  // namespace

double TriangleMesh::distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : faces) {
    best = std::min(best, point_triangle_dist2(p, vertices[f[0]],
                                               vertices[f[1]], vertices[f[2]]));
  }
  return std::sqrt(best);
}

double TriangleMesh::winding_number(const Vec3& p) const {
  // Sum of signed solid angles (van Oosterom & Strackee) over 4*pi.
  double total = 0.0;
  for (const auto& f : faces) {
    Vec3 a = vertices[f[0]] - p;
    Vec3 b = vertices[f[1]] - p;
    Vec3 c = vertices[f[2]] - p;
    double la = a.norm(), lb = b.norm(), lc = c.norm();
    double num = a.dot(b.cross(c));
    double den =
        la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * M_PI);
}

double TriangleMesh::signed_distance(const Vec3& p) const {
  double d = distance(p);
  return winding_number(p) > 0.5 ? -d : d;
}

void TriangleMesh::aabb(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

namespace {

TriangleMesh load_obj(std::istream& in) {
  TriangleMesh m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) {
      Vec3 v;
      if (std::sscanf(line.c_str(), "v %lf %lf %lf", &v[0], &v[1], &v[2]) == 3)
        m.vertices.push_back(v);
    } else if (line.rfind("f ", 0) == 0) {
      int idx[3];
      // Accept "f a b c" and "f a/.. b/.. c/.." forms.
      if (std::sscanf(line.c_str(), "f %d %d %d", &idx[0], &idx[1], &idx[2]) ==
              3 ||
          std::sscanf(line.c_str(), "f %d/%*s %d/%*s %d/%*s", &idx[0], &idx[1],
                      &idx[2]) == 3) {
        m.faces.emplace_back(idx[0] - 1, idx[1] - 1, idx[2] - 1);
      }
    }
  }
  return m;
}

TriangleMesh load_stl(std::ifstream& in) {
  // Binary STL: 80-byte header, uint32 count, 50 bytes per triangle.
  // Vertices are deduplicated by exact coordinate match.
  char header[80];
  in.read(header, 80);
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  TriangleMesh m;
  std::vector<std::pair<std::array<float, 3>, int>> seen;
  auto add_vertex = [&](const float* v) {
    std::array<float, 3> key{v[0], v[1], v[2]};
    for (const auto& [k, idx] : seen) {
      if (k == key) return idx;
    }
    int idx = static_cast<int>(m.vertices.size());
    m.vertices.emplace_back(v[0], v[1], v[2]);
    seen.emplace_back(key, idx);
    return idx;
  };
  for (std::uint32_t t = 0; t < count; t++) {
    float data[12];
    in.read(reinterpret_cast<char*>(data), 48);
    std::uint16_t attr;
    in.read(reinterpret_cast<char*>(&attr), 2);
    if (!in) throw std::runtime_error("truncated STL file");
    m.faces.emplace_back(add_vertex(data + 3), add_vertex(data + 6),
                         add_vertex(data + 9));
  }
  return m;
}

}  // namespace

TriangleMesh TriangleMesh::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path.string());
  TriangleMesh m;
  if (path.extension() == ".obj") {
    m = load_obj(in);
  } else if (path.extension() == ".stl") {
    m = load_stl(in);
  } else {
    throw std::runtime_error("unsupported mesh format: " + path.string());
  }
  if (m.faces.empty()) throw std::runtime_error("mesh has no faces");
  return m;
}

// ---------------------------------------------------------------------------
// Environment

void EnvironmentModel::validate() const {
  if (mesh) {
    if (!mesh->watertight()) {
      throw std::invalid_argument("environment mesh is not watertight");
    }
  } else if (solids.empty()) {
    throw std::invalid_argument("environment has no solids");
  }
  if (segments.empty()) {
    throw std::invalid_argument("environment has no segments");
  }
}

double EnvironmentModel::analytic_sdf(const Vec3& p) const {
  if (mesh) return mesh->signed_distance(p);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : solids) best = std::min(best, s.sdf(p));
  return best;
}

Vec3 EnvironmentModel::sdf_gradient(const Vec3& p, double h) const {
  Vec3 g;
  for (int i = 0; i < 3; i++) {
    Vec3 dp = Vec3::Zero();
    dp[i] = h;
    g[i] = (analytic_sdf(p + dp) - analytic_sdf(p - dp)) / (2.0 * h);
  }
  return g;
}

void EnvironmentModel::aabb(Vec3& lo, Vec3& hi) const {
  if (mesh) {
    mesh->aabb(lo, hi);
    return;
  }
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& s : solids) {
    Vec3 slo, shi;
    s.aabb(slo, shi);
    lo = lo.cwiseMin(slo);
    hi = hi.cwiseMax(shi);
  }
}

EnvironmentModel EnvironmentModel::single_segment_per_solid(
    std::vector<Primitive> s) {
  EnvironmentModel env;
  env.solids = std::move(s);
  for (int i = 0; i < static_cast<int>(env.solids.size()); i++) {
    env.segments.push_back({i});
  }
  return env;
}

// ---------------------------------------------------------------------------
// SDF grid

SdfGrid build_sdf(const EnvironmentModel& env, double resolution,
                  double padding) {
  env.validate();
  if (resolution <= 0.0) throw std::invalid_argument("resolution must be > 0");
  Vec3 lo, hi;
  env.aabb(lo, hi);
  if (!env.mesh) {
    for (const auto& s : env.solids) {
      double min_extent = s.kind == PrimitiveKind::Sphere
                              ? 2.0 * s.size[0]
                              : (s.kind == PrimitiveKind::Cylinder
                                     ? std::min(2.0 * s.size[0], s.size[1])
                                     : s.size.minCoeff());
      if (resolution > min_extent) {
        throw std::invalid_argument(
            "resolution exceeds the smallest solid extent");
      }
    }
  }
  SdfGrid grid;
  grid.resolution = resolution;
  grid.origin = lo - Vec3::Constant(padding);
  Vec3 span = hi + Vec3::Constant(padding) - grid.origin;
  for (int i = 0; i < 3; i++) {
    grid.dims[i] = static_cast<int>(std::floor(span[i] / resolution)) + 1;
  }
  grid.values.resize(static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] *
                     grid.dims[2]);
  std::size_t idx = 0;
  for (int i = 0; i < grid.dims[0]; i++) {
    for (int j = 0; j < grid.dims[1]; j++) {
      for (int k = 0; k < grid.dims[2]; k++) {
        grid.values[idx++] =
            static_cast<float>(env.analytic_sdf(grid.voxel_center(i, j, k)));
      }
    }
  }
  return grid;
}

double SdfGrid::query(const Vec3& p) const {
  Vec3 rel = (p - origin) / resolution;
  int i = static_cast<int>(std::lround(rel[0]));
  int j = static_cast<int>(std::lround(rel[1]));
  int k = static_cast<int>(std::lround(rel[2]));
  bool inside = i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 &&
                k < dims[2];
  if (inside) return values[index(i, j, k)];
  // Outside: distance to the voxel-center AABB plus the clamped boundary
  // voxel value, a conservative positive estimate.
  int ci = std::clamp(i, 0, dims[0] - 1);
  int cj = std::clamp(j, 0, dims[1] - 1);
  int ck = std::clamp(k, 0, dims[2] - 1);
  Vec3 nearest = voxel_center(ci, cj, ck);
  return (p - nearest).norm() + values[index(ci, cj, ck)];
}

double SdfGrid::query_trilinear(const Vec3& p) const {
  Vec3 rel = (p - origin) / resolution;
  int i = static_cast<int>(std::floor(rel[0]));
  int j = static_cast<int>(std::floor(rel[1]));
  int k = static_cast<int>(std::floor(rel[2]));
  if (i < 0 || i >= dims[0] - 1 || j < 0 || j >= dims[1] - 1 || k < 0 ||
      k >= dims[2] - 1) {
    return query(p);
  }
  double fx = rel[0] - i, fy = rel[1] - j, fz = rel[2] - k;
  double acc = 0.0;
  for (int c = 0; c < 8; c++) {
    int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) * (dk ? fz : 1 - fz);
    acc += w * values[index(i + di, j + dj, k + dk)];
  }
  return acc;
}

namespace {
constexpr char kGridMagic[8] = {'S', 'D', 'F', 'G', 'R', 'I', 'D', '1'};
}

void SdfGrid::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write grid file: " + path.string());
  out.write(kGridMagic, 8);
  double header[4] = {origin[0], origin[1], origin[2], resolution};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::int64_t d[3] = {dims[0], dims[1], dims[2]};
  out.write(reinterpret_cast<const char*>(d), sizeof(d));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

SdfGrid SdfGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grid file: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kGridMagic, 8) != 0) {
    throw std::runtime_error("bad grid file magic");
  }
  SdfGrid grid;
  double header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  grid.origin = Vec3(header[0], header[1], header[2]);
  grid.resolution = header[3];
  std::int64_t d[3];
  in.read(reinterpret_cast<char*>(d), sizeof(d));
  grid.dims = Eigen::Vector3i(static_cast<int>(d[0]), static_cast<int>(d[1]),
                              static_cast<int>(d[2]));
  grid.values.resize(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated grid file");
  return grid;
}

// ---------------------------------------------------------------------------
// End-effector cloud

EndEffectorCloud sample_cloud(const std::vector<Primitive>& ee_model, int count,
                              std::uint64_t seed) {
  if (ee_model.empty()) throw std::invalid_argument("empty end-effector model");
  if (count < 1) throw std::invalid_argument("cloud size must be >= 1");
  std::vector<double> cum;
  double total = 0.0;
  for (const auto& s : ee_model) {
    total += s.surface_area();
    cum.push_back(total);
  }
  Rng rng = make_rng(seed, 0x636c6f7564ULL);
  std::uniform_real_distribution<double> u(0.0, total);
  EndEffectorCloud cloud;
  cloud.points.reserve(count);
  for (int i = 0; i < count; i++) {
    double pick = u(rng);
    std::size_t s = std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
    if (s >= ee_model.size()) s = ee_model.size() - 1;
    cloud.points.push_back(sample_surface(ee_model[s], rng).point);
  }
  return cloud;
}

double hypothesized_distance(const SdfGrid& grid, const EndEffectorCloud& cloud,
                             const PoseSE3& base_pose,
                             const PoseSE3& ee_transform) {
  if (cloud.points.empty()) throw std::invalid_argument("empty cloud");
  PoseSE3 world_from_ee = base_pose * ee_transform;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : cloud.points) {
    best = std::min(best, grid.query(world_from_ee.apply(p)));
  }
  return best;
}

}  // namespace selfcal
