#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pica/camera.hpp"
#include "pica/gaussians.hpp"
#include "pica/image.hpp"
#include "pica/mesh.hpp"
#include "pica/skinning.hpp"
#include "pica/types.hpp"

namespace pica {

constexpr double kNearPlane = 0.01;            // meters
constexpr double kLowPassFloor = 0.3;          // px^2 added to the projected covariance
constexpr double kMinSplatAlpha = 1.0 / 255.0;
constexpr double kTransmittanceCutoff = 1e-4;

enum class RenderChannel { color, mask, label };

struct Splat2D {
  Vec2 mean2d;
  Mat2 cov2d;
  double depth = 0;  // camera-space z
  int source = -1;
};

// Per-Gaussian appearance: base RGB plus a low-order directional basis
// (1, d'x, d'y, d'z) in the canonicalized view frame, plus one shared linear
// pose-correction matrix (3 x descriptor size, zero-initialized).
struct ColorModel {
  std::vector<Vec3> base;
  std::vector<Eigen::Matrix<double, 4, 3>> coeffs;  // basis term x channel
  Eigen::MatrixXd pose_correction;                  // 3 x D

  static ColorModel neutral(int num_gaussians, int descriptor_size, const Vec3& gray = Vec3(0.5, 0.5, 0.5));
};

// Pose descriptor for shading: the first two rotation columns of every bone
// transform, flattened (6 values per bone).
Eigen::VectorXd pose_descriptor(const Pose& pose);

std::optional<Splat2D> project(const GaussianGeometry& geom, const Camera& cam);

Vec3 canonical_view_dir(const GaussianGeometry& geom, const Camera& cam);

Vec3 shade(const ColorModel& model, int gaussian, const Vec3& dprime,
           const Eigen::VectorXd& descriptor);

// One render pass over a double-layer scene. Gaussians with layer_label 0
// anchor on `body`, label 1 on `clothing`; either mesh pointer may be null
// when no Gaussian references it.
struct RenderScene {
  const std::vector<AnchoredGaussian>* gaussians = nullptr;
  const TriMesh* body = nullptr;
  const TriMesh* clothing = nullptr;
  const std::vector<Vec3>* body_positions = nullptr;      // defaults to mesh vertices
  const std::vector<Vec3>* clothing_positions = nullptr;  // defaults to mesh vertices
  const ColorModel* model = nullptr;
  Eigen::VectorXd descriptor;
};

struct SplatRecord {
  Splat2D splat;
  Mat2 cov_inv;
  Eigen::Matrix<double, 2, 3> axes;  // J * R_wc * R, image response of the scale axes
  Mat3 cov_cam;                      // camera-space 3D covariance
  Vec3 cam_mean;
  Vec3 normal_world;                 // host face normal
  Vec3 color;
  Vec3 dprime;
  Eigen::Vector4d basis;
  Vec3 unclamped;                    // shade() before clamping, for the backward mask
  double alpha = 0;
  double label = 0;
  double len2 = 0, len3 = 0;         // center-to-vertex lengths entering the scale
  int gauss = -1;
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // inclusive pixel bbox
};

// Forward render with the record needed for the backward pass. Splats are
// sorted by (depth, gaussian index); repeated calls are bitwise identical.
struct RenderResult {
  Image color;  // 3 channels
  Image mask;   // 1 channel
  Image label;  // 1 channel
  std::vector<SplatRecord> splats;
};

RenderResult render_all(const RenderScene& scene, const Camera& cam);

Image render(const RenderScene& scene, const Camera& cam, RenderChannel channel);

struct RenderGrads {
  std::vector<double> d_opacity, d_s2, d_s3, d_delta;
  std::vector<Vec3> d_base;
  std::vector<Eigen::Matrix<double, 4, 3>> d_coeffs;
  Eigen::MatrixXd d_pose;  // 3 x D

  explicit RenderGrads(int num_gaussians, int descriptor_size);
  void accumulate(const RenderGrads& other);
};

// Reverse-mode gradients of sum_pixels <dL/dbuffer, buffer> through the
// compositing expression. Null gradient images are treated as zero.
RenderGrads backward_render(const RenderScene& scene, const Camera& cam, const RenderResult& fwd,
                            const Image* d_color, const Image* d_mask, const Image* d_label);

// Worker cap for row-parallel rendering; also reads PICA_THREADS at startup.
void set_render_threads(int n);
int render_threads();

}  // namespace pica
