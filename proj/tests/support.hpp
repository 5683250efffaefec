#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pica/mesh.hpp"
#include "pica/skinning.hpp"
#include "pica/types.hpp"

namespace fixtures {

using pica::Mat3;
using pica::TriMesh;
using pica::Vec3;
using Rng = std::mt19937;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(Rng& rng, double lo = -1, double hi = 1) {
  return Vec3(uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi));
}

inline Mat3 random_rotation(Rng& rng) {
  Vec3 axis = random_vec(rng);
  while (axis.norm() < 1e-6) axis = random_vec(rng);
  return Eigen::AngleAxisd(uniform(rng, -3, 3), axis.normalized()).toRotationMatrix();
}

// Two-triangle square in the z=0 plane, side `side`, centered at origin.
inline TriMesh make_quad(double side = 1.0, double z = 0.0) {
  TriMesh mesh;
  double h = side / 2;
  mesh.vertices = {{-h, -h, z}, {h, -h, z}, {h, h, z}, {-h, h, z}};
  mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

// n x n vertex grid over [0,1]^2 in the z=0 plane with optional z noise.
inline TriMesh make_grid(int n, Rng* rng = nullptr, double noise = 0.0) {
  TriMesh mesh;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double z = rng ? uniform(*rng, -noise, noise) : 0.0;
      mesh.vertices.push_back({x / double(n - 1), y / double(n - 1), z});
    }
  for (int y = 0; y + 1 < n; ++y)
    for (int x = 0; x + 1 < n; ++x) {
      int a = y * n + x, b = y * n + x + 1, c = (y + 1) * n + x + 1, d = (y + 1) * n + x;
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  return mesh;
}

// Icosphere with `subdiv` subdivision rounds, outward orientation.
inline TriMesh make_icosphere(int subdiv, double radius = 1.0) {
  TriMesh mesh;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back(((v[a] + v[b]) / 2).normalized());
      int idx = static_cast<int>(v.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> nf;
    for (const auto& tri : f) {
      int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      nf.push_back({tri[0], ab, ca});
      nf.push_back({tri[1], bc, ab});
      nf.push_back({tri[2], ca, bc});
    }
    f = std::move(nf);
  }
  for (const Vec3& p : v) mesh.vertices.push_back(p * radius);
  mesh.faces = f;
  return mesh;
}

// Spherical cap ("cape") hovering `gap` above a sphere of radius `radius`,
// covering polar angles up to `extent` radians. rings >= 1, segments >= 3.
inline TriMesh make_cape(int rings, int segments, double radius, double gap, double extent) {
  TriMesh mesh;
  double r = radius + gap;
  mesh.vertices.push_back({0, 0, r});  // pole
  for (int i = 1; i <= rings; ++i) {
    double theta = extent * i / rings;
    for (int j = 0; j < segments; ++j) {
      double phi = 2 * M_PI * j / segments;
      mesh.vertices.push_back({r * std::sin(theta) * std::cos(phi),
                               r * std::sin(theta) * std::sin(phi), r * std::cos(theta)});
    }
  }
  auto ring = [&](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
  for (int j = 0; j < segments; ++j) mesh.faces.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      int a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j + 1), d = ring(i + 1, j);
      mesh.faces.push_back({a, d, c});
      mesh.faces.push_back({a, c, b});
    }
  mesh.layer = pica::Layer::clothing;
  return mesh;
}

// Fresh scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("pica_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

// Single-bone identity rig covering every vertex.
inline pica::SkinnedRig single_bone_rig(int num_vertices) {
  pica::SkinnedRig rig;
  pica::Bone root;
  root.name = "root";
  rig.bones.push_back(root);
  rig.weights = Eigen::MatrixXd::Ones(num_vertices, 1);
  return rig;
}

}  // namespace fixtures
