#pragma once

#include <string>
#include <vector>

#include "pica/mesh.hpp"
#include "pica/types.hpp"

namespace pica {

// Normal-direction scale of every anchored Gaussian (meters). Keeps the
// kernels flat against their host face.
constexpr double kFlatScale = 1e-5;

// Opacity clamp: the opacity sparsity loss diverges at 0 and 1.
constexpr double kOpacityEps = 1e-4;

constexpr int kColorBasisTerms = 4;  // 1, d'x, d'y, d'z

// A Gaussian tied to a triangle of a host mesh. Its world-space mean,
// rotation and scale are derived from the current face geometry.
struct AnchoredGaussian {
  int face = 0;
  Vec3 bary = Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
  double offset = 0.0;        // along the face normal, meters
  double s2 = 0.3, s3 = 0.3;  // tangential scale multipliers
  double opacity = 0.5;
  int layer_label = 0;  // 1 = clothing
};

struct GaussianGeometry {
  Vec3 mean;
  Mat3 rotation;  // columns (r1, r2, r3), r1 along the face normal
  Vec3 scale;     // (kFlatScale, |v1 - center| * s2, |v2 - center| * s3)
  Mat3 covariance;
};

// The fixed symmetric 13-point barycentric layout: centroid, the three
// vertices pulled inward, and nine interior lattice points. Stable across
// runs. per_face other than 13 falls back to a deterministic low-discrepancy
// fill after the fixed prefix.
std::vector<Vec3> barycentric_pattern(int per_face);

std::vector<AnchoredGaussian> sample_gaussians(const TriMesh& mesh, int per_face = 13);

Vec3 gaussian_position(const AnchoredGaussian& g, const TriMesh& mesh,
                       const std::vector<Vec3>& positions);

GaussianGeometry gaussian_geometry(const AnchoredGaussian& g, const TriMesh& mesh,
                                   const std::vector<Vec3>& positions);

// Same, with a precomputed frame for the host face.
GaussianGeometry gaussian_geometry(const AnchoredGaussian& g, const TriMesh& mesh,
                                   const std::vector<Vec3>& positions, const FaceFrame& frame);

// Line-oriented text format, one record per Gaussian:
//   face b1 b2 b3 delta s2 s3 alpha label
void save_gaussians(const std::string& path, const std::vector<AnchoredGaussian>& gaussians);
std::vector<AnchoredGaussian> load_gaussians(const std::string& path);

double clamp_opacity(double alpha);

}  // namespace pica
