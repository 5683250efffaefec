#include "pica/gaussians.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pica {

double clamp_opacity(double alpha) {
  return std::clamp(alpha, kOpacityEps, 1.0 - kOpacityEps);
}

std::vector<Vec3> barycentric_pattern(int per_face) {
  if (per_face < 1) throw FormatError("barycentric_pattern: per_face must be >= 1");
  // Fixed layout, symmetric under cyclic rotation of the face vertices:
  //   1 centroid
  //   3 vertices pulled inward           (0.8, 0.1, 0.1) + cyclic
  //   3 near-edge-midpoint points        (0.45, 0.45, 0.1) + cyclic
  //   3 off-center points toward vertex  (0.6, 0.2, 0.2) + cyclic
  //   3 off-center points away           (0.2, 0.4, 0.4) + cyclic
  static const std::vector<Vec3> layout = [] {
    std::vector<Vec3> pts;
    pts.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
    auto cyclic = [&pts](double a, double b, double c) {
      pts.emplace_back(a, b, c);
      pts.emplace_back(c, a, b);
      pts.emplace_back(b, c, a);
    };
    cyclic(0.8, 0.1, 0.1);
    cyclic(0.45, 0.45, 0.1);
    cyclic(0.6, 0.2, 0.2);
    cyclic(0.2, 0.4, 0.4);
    return pts;
  }();
  std::vector<Vec3> out;
  out.reserve(per_face);
  for (int i = 0; i < per_face; ++i) {
    if (i < static_cast<int>(layout.size())) {
      out.push_back(layout[i]);
    } else {
      // Deterministic interior fill via a folded Halton-like sequence.
      int k = i - static_cast<int>(layout.size());
      double u = 0, base = 0.5;
      for (int n = k + 1; n > 0; n /= 2, base *= 0.5) u += base * (n % 2);
      double v = 0;
      base = 1.0 / 3;
      for (int n = k + 1; n > 0; n /= 3, base /= 3) v += base * (n % 3);
      if (u + v > 1) {
        u = 1 - u;
        v = 1 - v;
      }
      // Shrink toward the centroid so the point stays interior.
      double b1 = 1.0 / 3 + 0.9 * (1 - u - v - 1.0 / 3);
      double b2 = 1.0 / 3 + 0.9 * (u - 1.0 / 3);
      out.emplace_back(b1, b2, 1.0 - b1 - b2);
    }
  }
  return out;
}

std::vector<AnchoredGaussian> sample_gaussians(const TriMesh& mesh, int per_face) {
  if (per_face < 1) throw FormatError("sample_gaussians: per_face must be >= 1");
  const auto pattern = barycentric_pattern(per_face);
  std::vector<AnchoredGaussian> out;
  out.reserve(static_cast<size_t>(mesh.num_faces()) * per_face);
  const int label = mesh.layer == Layer::clothing ? 1 : 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (const Vec3& bary : pattern) {
      AnchoredGaussian g;
      g.face = f;
      g.bary = bary;
      g.layer_label = label;
      out.push_back(g);
    }
  }
  return out;
}

Vec3 gaussian_position(const AnchoredGaussian& g, const TriMesh& mesh,
                       const std::vector<Vec3>& positions) {
  const auto& f = mesh.faces.at(g.face);
  FaceFrame frame = face_frame(mesh, positions, g.face);
  return g.bary[0] * positions[f[0]] + g.bary[1] * positions[f[1]] +
         g.bary[2] * positions[f[2]] + g.offset * frame.normal;
}

GaussianGeometry gaussian_geometry(const AnchoredGaussian& g, const TriMesh& mesh,
                                   const std::vector<Vec3>& positions, const FaceFrame& frame) {
  const auto& f = mesh.faces.at(g.face);
  const Vec3 center = (positions[f[0]] + positions[f[1]] + positions[f[2]]) / 3.0;
  GaussianGeometry geom;
  geom.mean = g.bary[0] * positions[f[0]] + g.bary[1] * positions[f[1]] +
              g.bary[2] * positions[f[2]] + g.offset * frame.normal;
  geom.rotation = frame.rotation;
  geom.scale = Vec3(kFlatScale, (positions[f[0]] - center).norm() * g.s2,
                    (positions[f[1]] - center).norm() * g.s3);
  Mat3 s2 = geom.scale.cwiseProduct(geom.scale).asDiagonal();
  geom.covariance = geom.rotation * s2 * geom.rotation.transpose();
  return geom;
}

GaussianGeometry gaussian_geometry(const AnchoredGaussian& g, const TriMesh& mesh,
                                   const std::vector<Vec3>& positions) {
  return gaussian_geometry(g, mesh, positions, face_frame(mesh, positions, g.face));
}

void save_gaussians(const std::string& path, const std::vector<AnchoredGaussian>& gaussians) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write gaussian file: " + path);
  char buf[256];
  for (const auto& g : gaussians) {
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d\n", g.face,
                  g.bary[0], g.bary[1], g.bary[2], g.offset, g.s2, g.s3, g.opacity, g.layer_label);
    out << buf;
  }
}

std::vector<AnchoredGaussian> load_gaussians(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open gaussian file: " + path);
  std::vector<AnchoredGaussian> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    AnchoredGaussian g;
    if (!(ls >> g.face >> g.bary[0] >> g.bary[1] >> g.bary[2] >> g.offset >> g.s2 >> g.s3 >>
          g.opacity >> g.layer_label))
      throw FormatError("gaussian file line " + std::to_string(line_no) + ": bad record");
    out.push_back(g);
  }
  return out;
}

}  // namespace pica
