#pragma once

#include <string>
#include <vector>

#include "pica/avatar.hpp"
#include "pica/camera.hpp"
#include "pica/image.hpp"
#include "pica/splat.hpp"
#include "pica/types.hpp"

namespace pica {

struct LossWeights {
  double lambda_ssim = 0.2;   // SSIM is reported as a metric, not trained
  double lambda_lpips = 0.0;  // perceptual loss not available, fixed 0
  double lambda_seg = 0.1;
  double lambda_opac = 0.01;
  double lambda_collision = 10.0;
  double lambda_laplacian = 1.0;
  double lambda_normal = 0.1;
  double lambda_distance = 1.0;
  double collision_margin = 0.005;  // meters

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// Weighted scalar per term; `total` is the weighted sum of the active terms
// (ssim_metric is informational and excluded).
struct LossReport {
  double color_mse = 0, ssim_metric = 0, mask = 0, seg = 0, opac = 0;
  double laplacian = 0, normal = 0, collision = 0, distance = 0;
  double total = 0;

  double recompute_total() const {
    return color_mse + mask + seg + opac + laplacian + normal + collision + distance;
  }
  static std::string csv_header();
  std::string csv_row(int iteration) const;
};

// Standard SSIM (11x11 Gaussian window, sigma 1.5, K1=0.01, K2=0.03),
// averaged over channels.
double ssim(const Image& a, const Image& b);

struct AppearanceResult {
  double color_mse = 0, ssim_metric = 0, mask = 0, seg = 0;
  Image d_color, d_mask, d_label;  // gradients w.r.t. the rendered buffers
};

// color/mask: mean squared error; seg: lambda_seg * mean BCE of the
// composited label against the binary segmentation.
AppearanceResult appearance_losses(const RenderResult& rendered, const Image& gt_color,
                                   const Image& gt_mask, const Image& gt_seg,
                                   const LossWeights& weights);

struct OpacityLossResult {
  double value = 0;
  std::vector<double> grad;
};

// lambda * mean(ln o + ln(1 - o)); inputs must already be clamped to
// [kOpacityEps, 1 - kOpacityEps].
OpacityLossResult opacity_loss(const std::vector<double>& opacities, double lambda);

struct CollisionLossResult {
  double value = 0;
  std::vector<Vec3> grad;  // w.r.t. clothing vertices
};

// lambda/n * sum max(margin - (v_i - v_j) . n_j, 0)^3 with v_j the nearest
// body vertex and n_j its area-weighted normal, both frozen per evaluation.
CollisionLossResult collision_loss(const std::vector<Vec3>& clothing_positions,
                                   const TriMesh& body, const std::vector<Vec3>& body_positions,
                                   double margin, double lambda);

struct GeometryLossResult {
  double laplacian = 0, normal = 0, distance = 0;  // weighted
  std::vector<Vec3> d_body, d_clothing;
};

GeometryLossResult geometry_losses(const TriMesh& body, const std::vector<Vec3>& body_positions,
                                   const TriMesh& clothing,
                                   const std::vector<Vec3>& clothing_positions,
                                   const std::vector<Vec3>& body_init,
                                   const LossWeights& weights);

// One posed view of the capture: ground-truth buffers plus camera and pose
// references.
struct DatasetView {
  Image image;  // 3 channels
  Image mask;   // binary
  Image seg;    // binary clothing segmentation
  int camera_id = 0;
  int pose_index = 0;
};

struct Dataset {
  std::vector<Camera> cameras;
  std::vector<DatasetView> views;
  std::vector<Pose> poses;
};

// Manifest lines: `camera <id> <path>` and
// `view <image> <mask> <seg> <camera-id> <pose-index>`. Paths are relative
// to the manifest. Poses must be supplied from the animation file.
Dataset load_dataset(const std::string& manifest_path, std::vector<Pose> poses);

struct FitSchedule {
  int iterations = 200;
  unsigned seed = 0;
  double lr_color = 0.3;
  // The pose-conditioned shading correction is shared by every kernel, so a
  // unit change moves every rendered pixel; it needs a far smaller step than
  // the per-kernel colors to stay stable.
  double lr_pose_correction = 0.05;
  double lr_opacity = 0.05;
  double lr_scales = 0.02;
  double lr_delta = 1e-4;
  double lr_vertices = 0.0;
  double lr_weights = 0.0;
  double lr_offsets = 0.0;
  double lambda_offset_smooth = 1.0;  // temporal regularizer on per-frame offsets
  bool cosine_decay = true;

  bool operator==(const FitSchedule&) const = default;
};

// Gradient descent over Gaussian appearance/opacity/scales/offset, mesh
// vertices, clothing blend weights (simplex-projected) and per-frame
// offsets. Deterministic for fixed inputs. Throws NumericalError naming the
// term when a gradient goes non-finite.
std::vector<LossReport> fit(Avatar& avatar, const Dataset& dataset, const LossWeights& weights,
                            const FitSchedule& schedule);

void save_fit_log(const std::string& path, const std::vector<LossReport>& log);

}  // namespace pica
