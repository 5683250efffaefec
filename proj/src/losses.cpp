#include "pica/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pica/nearest.hpp"

namespace pica {

namespace fs = std::filesystem;

void LossWeights::validate() const {
  const double all[] = {lambda_ssim,      lambda_lpips, lambda_seg,      lambda_opac,
                        lambda_collision, lambda_laplacian, lambda_normal, lambda_distance};
  for (double w : all)
    if (w < 0) throw FormatError("loss weights must be nonnegative");
  if (collision_margin <= 0) throw FormatError("collision margin must be positive");
}

std::string LossReport::csv_header() {
  return "iter,color_mse,ssim,mask,seg,opac,laplacian,normal,collision,distance,total";
}

std::string LossReport::csv_row(int iteration) const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g",
                iteration, color_mse, ssim_metric, mask, seg, opac, laplacian, normal, collision,
                distance, total);
  return buf;
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    double x = i - (size - 1) / 2.0;
    w[i] = std::exp(-x * x / (2 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw FormatError("ssim: image dimensions differ");
  constexpr int kWindow = 11;
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  const auto w = gaussian_window(kWindow, 1.5);
  const int half = kWindow / 2;
  if (a.width < kWindow || a.height < kWindow) {
    // Tiny images: global statistics.
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      ma += a.data[i];
      mb += b.data[i];
    }
    ma /= a.data.size();
    mb /= b.data.size();
    double va = 0, vb = 0, cov = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      va += (a.data[i] - ma) * (a.data[i] - ma);
      vb += (b.data[i] - mb) * (b.data[i] - mb);
      cov += (a.data[i] - ma) * (b.data[i] - mb);
    }
    va /= a.data.size();
    vb /= b.data.size();
    cov /= a.data.size();
    return ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
           ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }

  double total = 0;
  long count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = half; y < a.height - half; ++y) {
      for (int x = half; x < a.width - half; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx) {
            double weight = w[dy + half] * w[dx + half];
            double pa = a.at(x + dx, y + dy, c), pb = b.at(x + dx, y + dy, c);
            ma += weight * pa;
            mb += weight * pb;
            saa += weight * pa * pa;
            sbb += weight * pb * pb;
            sab += weight * pa * pb;
          }
        double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
        ++count;
      }
    }
  }
  return total / count;
}

AppearanceResult appearance_losses(const RenderResult& rendered, const Image& gt_color,
                                   const Image& gt_mask, const Image& gt_seg,
                                   const LossWeights& weights) {
  const Image& color = rendered.color;
  if (color.width != gt_color.width || color.height != gt_color.height ||
      gt_mask.width != color.width || gt_seg.width != color.width ||
      gt_mask.height != color.height || gt_seg.height != color.height)
    throw FormatError("appearance_losses: buffer dimensions do not match");

  AppearanceResult result;
  result.d_color = Image(color.width, color.height, 3);
  result.d_mask = Image(color.width, color.height, 1);
  result.d_label = Image(color.width, color.height, 1);

  const double n_color = static_cast<double>(color.data.size());
  for (size_t i = 0; i < color.data.size(); ++i) {
    double diff = color.data[i] - gt_color.data[i];
    result.color_mse += diff * diff / n_color;
    result.d_color.data[i] = 2.0 * diff / n_color;
  }
  const double n_pix = static_cast<double>(rendered.mask.data.size());
  for (size_t i = 0; i < rendered.mask.data.size(); ++i) {
    double diff = rendered.mask.data[i] - gt_mask.data[i];
    result.mask += diff * diff / n_pix;
    result.d_mask.data[i] = 2.0 * diff / n_pix;
  }
  constexpr double kEps = 1e-6;
  for (size_t i = 0; i < rendered.label.data.size(); ++i) {
    double raw = rendered.label.data[i];
    double l_hat = std::clamp(raw, kEps, 1.0 - kEps);
    double l = gt_seg.data[i];
    result.seg += -weights.lambda_seg * (l * std::log(l_hat) + (1 - l) * std::log(1 - l_hat)) / n_pix;
    if (raw > kEps && raw < 1.0 - kEps)
      result.d_label.data[i] = weights.lambda_seg * (l_hat - l) / (l_hat * (1 - l_hat)) / n_pix;
  }
  result.ssim_metric = ssim(color, gt_color);
  return result;
}

OpacityLossResult opacity_loss(const std::vector<double>& opacities, double lambda) {
  OpacityLossResult result;
  result.grad.assign(opacities.size(), 0.0);
  if (opacities.empty()) return result;
  const double n = static_cast<double>(opacities.size());
  for (size_t i = 0; i < opacities.size(); ++i) {
    double o = opacities[i];
    if (o < kOpacityEps - 1e-12 || o > 1.0 - kOpacityEps + 1e-12)
      throw FormatError("opacity_loss: opacity " + std::to_string(i) + " outside the clamp range");
    result.value += lambda * (std::log(o) + std::log(1 - o)) / n;
    result.grad[i] = lambda * (1.0 / o - 1.0 / (1 - o)) / n;
  }
  return result;
}

CollisionLossResult collision_loss(const std::vector<Vec3>& clothing_positions,
                                   const TriMesh& body, const std::vector<Vec3>& body_positions,
                                   double margin, double lambda) {
  if (body_positions.empty()) throw FormatError("collision_loss: empty body mesh");
  CollisionLossResult result;
  result.grad.assign(clothing_positions.size(), Vec3::Zero());
  if (clothing_positions.empty()) return result;

  KdTree tree(body_positions);
  std::vector<Vec3> normals = vertex_normals(body, body_positions);
  const double n = static_cast<double>(clothing_positions.size());
  for (size_t i = 0; i < clothing_positions.size(); ++i) {
    auto [j, dist] = tree.nearest(clothing_positions[i]);
    double deficit = margin - (clothing_positions[i] - body_positions[j]).dot(normals[j]);
    if (deficit > 0) {
      result.value += lambda * deficit * deficit * deficit / n;
      result.grad[i] = -3.0 * lambda * deficit * deficit / n * normals[j];
    }
  }
  return result;
}

namespace {

// d(unit normal)/d(vertex) chain for one face, applied to an incoming
// gradient on the unit normal.
void accumulate_face_normal_grad(const TriMesh& mesh, const std::vector<Vec3>& positions, int face,
                                 const Vec3& d_nhat, std::vector<Vec3>& grad) {
  const auto& f = mesh.faces[face];
  Vec3 e1 = positions[f[1]] - positions[f[0]];
  Vec3 e2 = positions[f[2]] - positions[f[0]];
  Vec3 n = e1.cross(e2);
  double len = n.norm();
  if (len <= 0) return;
  Vec3 nhat = n / len;
  Vec3 d_n = (d_nhat - nhat * nhat.dot(d_nhat)) / len;
  // dN/dp applied transposed: (a x .)^T g = -a x g
  grad[f[0]] += (e2 - e1).cross(d_n) * -1.0;  // dN/dp0 = [e2 - e1]_x
  grad[f[1]] += -e2.cross(d_n) * -1.0;        // dN/dp1 = -[e2]_x
  grad[f[2]] += e1.cross(d_n) * -1.0;         // dN/dp2 = [e1]_x
}

struct MeshNormalLoss {
  double value = 0;  // unweighted mean of (1 - cos)
};

MeshNormalLoss normal_consistency(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                  double weight, std::vector<Vec3>& grad) {
  MeshNormalLoss out;
  auto hinges = interior_hinges(mesh);
  if (hinges.empty()) return out;
  const double n = static_cast<double>(hinges.size());
  std::vector<Vec3> face_n(mesh.num_faces());
  for (int i = 0; i < mesh.num_faces(); ++i) {
    const auto& f = mesh.faces[i];
    face_n[i] = (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]).normalized();
  }
  for (const Hinge& h : hinges) {
    const Vec3& na = face_n[h.face_a];
    const Vec3& nb = face_n[h.face_b];
    out.value += (1.0 - na.dot(nb)) / n;
    accumulate_face_normal_grad(mesh, positions, h.face_a, -weight * nb / n, grad);
    accumulate_face_normal_grad(mesh, positions, h.face_b, -weight * na / n, grad);
  }
  return out;
}

double laplacian_term(const TriMesh& mesh, const std::vector<Vec3>& positions, double weight,
                      std::vector<Vec3>& grad) {
  auto adj = vertex_adjacency(mesh);
  auto lap = uniform_laplacian(mesh, positions);
  const double n = static_cast<double>(mesh.num_vertices());
  double value = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    value += lap[v].squaredNorm() / n;
    grad[v] -= weight * 2.0 / n * lap[v];
    if (!adj[v].empty())
      for (int u : adj[v]) grad[u] += weight * 2.0 / n * lap[v] / static_cast<double>(adj[v].size());
  }
  return value;
}

}  // namespace

GeometryLossResult geometry_losses(const TriMesh& body, const std::vector<Vec3>& body_positions,
                                   const TriMesh& clothing,
                                   const std::vector<Vec3>& clothing_positions,
                                   const std::vector<Vec3>& body_init,
                                   const LossWeights& weights) {
  GeometryLossResult result;
  result.d_body.assign(body.num_vertices(), Vec3::Zero());
  result.d_clothing.assign(clothing.num_vertices(), Vec3::Zero());

  double lap = laplacian_term(body, body_positions, weights.lambda_laplacian, result.d_body) +
               laplacian_term(clothing, clothing_positions, weights.lambda_laplacian,
                              result.d_clothing);
  result.laplacian = weights.lambda_laplacian * lap;

  double nrm = normal_consistency(body, body_positions, weights.lambda_normal, result.d_body).value +
               normal_consistency(clothing, clothing_positions, weights.lambda_normal,
                                  result.d_clothing).value;
  result.normal = weights.lambda_normal * nrm;

  if (static_cast<int>(body_init.size()) != body.num_vertices())
    throw FormatError("geometry_losses: body_init size mismatch");
  const double n = static_cast<double>(body.num_vertices());
  for (int v = 0; v < body.num_vertices(); ++v) {
    Vec3 d = body_positions[v] - body_init[v];
    result.distance += weights.lambda_distance * d.squaredNorm() / n;
    result.d_body[v] += weights.lambda_distance * 2.0 / n * d;
  }
  return result;
}

Dataset load_dataset(const std::string& manifest_path, std::vector<Pose> poses) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open dataset manifest: " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  Dataset dataset;
  dataset.poses = std::move(poses);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "camera") {
      int id;
      std::string path;
      if (!(ls >> id >> path))
        throw FormatError("manifest line " + std::to_string(line_no) + ": bad camera record");
      if (id != static_cast<int>(dataset.cameras.size()))
        throw FormatError("manifest line " + std::to_string(line_no) +
                          ": camera ids must be sequential from 0");
      dataset.cameras.push_back(load_camera((base / path).string()));
    } else if (tag == "view") {
      std::string image, mask, seg;
      DatasetView view;
      if (!(ls >> image >> mask >> seg >> view.camera_id >> view.pose_index))
        throw FormatError("manifest line " + std::to_string(line_no) + ": bad view record");
      if (view.camera_id < 0 || view.camera_id >= static_cast<int>(dataset.cameras.size()))
        throw FormatError("manifest line " + std::to_string(line_no) + ": unknown camera id");
      if (view.pose_index < 0 || view.pose_index >= static_cast<int>(dataset.poses.size()))
        throw FormatError("manifest line " + std::to_string(line_no) + ": pose index out of range");
      view.image = load_ppm((base / image).string());
      view.mask = binarize(load_pgm((base / mask).string()));
      view.seg = binarize(load_pgm((base / seg).string()));
      dataset.views.push_back(std::move(view));
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown record '" + tag +
                        "'");
    }
  }
  if (dataset.views.empty()) throw FormatError("dataset manifest has no views");
  return dataset;
}

namespace {

void check_finite(const char* term, const double* data, size_t count) {
  for (size_t i = 0; i < count; ++i)
    if (!std::isfinite(data[i]))
      throw NumericalError(std::string("fit: non-finite gradient in term '") + term + "'");
}

void check_finite_vec(const char* term, const std::vector<Vec3>& v) {
  for (const Vec3& x : v)
    if (!x.allFinite())
      throw NumericalError(std::string("fit: non-finite gradient in term '") + term + "'");
}

}  // namespace

std::vector<LossReport> fit(Avatar& avatar, const Dataset& dataset, const LossWeights& weights,
                            const FitSchedule& schedule) {
  weights.validate();
  if (dataset.views.empty()) throw FormatError("fit: dataset has no views");
  const int num_gaussians = avatar.num_gaussians();
  const int descriptor_size = static_cast<int>(avatar.color.pose_correction.cols());
  const int n_views = static_cast<int>(dataset.views.size());

  // Host-face offset clamp radii.
  const double body_delta_max = 0.5 * mean_edge_length(avatar.body);
  const double clothing_delta_max = 0.5 * mean_edge_length(avatar.clothing);

  int max_pose = 0;
  for (const auto& view : dataset.views) max_pose = std::max(max_pose, view.pose_index);
  if (schedule.lr_offsets > 0) {
    if (avatar.body_offsets.empty())
      avatar.body_offsets.assign(max_pose + 1,
                                 std::vector<Vec3>(avatar.body.num_vertices(), Vec3::Zero()));
    if (avatar.clothing_offsets.empty())
      avatar.clothing_offsets.assign(
          max_pose + 1, std::vector<Vec3>(avatar.clothing.num_vertices(), Vec3::Zero()));
  }

  std::vector<LossReport> log;
  log.reserve(schedule.iterations);

  for (int iteration = 0; iteration < schedule.iterations; ++iteration) {
    double decay = 1.0;
    if (schedule.cosine_decay && schedule.iterations > 1)
      decay = 0.5 * (1.0 + std::cos(M_PI * iteration / (schedule.iterations - 1.0)));
    // Keep a floor so late iterations still move.
    decay = std::max(decay, 0.05);

    RenderGrads grads(num_gaussians, descriptor_size);
    std::vector<Vec3> d_body(avatar.body.num_vertices(), Vec3::Zero());
    std::vector<Vec3> d_clothing(avatar.clothing.num_vertices(), Vec3::Zero());
    Eigen::MatrixXd d_weights =
        Eigen::MatrixXd::Zero(avatar.clothing_weights.rows(), avatar.clothing_weights.cols());
    std::vector<std::vector<Vec3>> d_body_offsets(avatar.body_offsets.size()),
        d_clothing_offsets(avatar.clothing_offsets.size());
    for (auto& t : d_body_offsets) t.assign(avatar.body.num_vertices(), Vec3::Zero());
    for (auto& t : d_clothing_offsets) t.assign(avatar.clothing.num_vertices(), Vec3::Zero());

    LossReport report;

    for (const DatasetView& view : dataset.views) {
      Pose body_pose = avatar.pose_at(view.pose_index, dataset.poses);
      Pose clothing_pose = avatar.clothing_pose_at(view.pose_index, dataset.poses);
      std::vector<Vec3> body_obs = deform(avatar.body.vertices, avatar.rig.weights, body_pose);
      std::vector<Vec3> clothing_obs =
          deform(avatar.clothing.vertices, avatar.clothing_weights, clothing_pose);

      RenderScene scene;
      scene.gaussians = &avatar.gaussians;
      scene.body = &avatar.body;
      scene.clothing = &avatar.clothing;
      scene.body_positions = &body_obs;
      scene.clothing_positions = &clothing_obs;
      scene.model = &avatar.color;
      scene.descriptor = pose_descriptor(dataset.poses[view.pose_index]);

      const Camera& cam = dataset.cameras[view.camera_id];
      RenderResult fwd = render_all(scene, cam);
      AppearanceResult app = appearance_losses(fwd, view.image, view.mask, view.seg, weights);
      RenderGrads view_grads =
          backward_render(scene, cam, fwd, &app.d_color, &app.d_mask, &app.d_label);
      grads.accumulate(view_grads);

      report.color_mse += app.color_mse / n_views;
      report.ssim_metric += app.ssim_metric / n_views;
      report.mask += app.mask / n_views;
      report.seg += app.seg / n_views;

      CollisionLossResult col = collision_loss(clothing_obs, avatar.body, body_obs,
                                               weights.collision_margin, weights.lambda_collision);
      report.collision += col.value / n_views;
      for (int v = 0; v < avatar.clothing.num_vertices(); ++v) {
        if (col.grad[v].isZero()) continue;
        Vec3 g_obs = col.grad[v] / n_views;
        Mat3 jac = deform_jacobian(avatar.clothing_weights, v, clothing_pose);
        d_clothing[v] += jac.transpose() * g_obs;
        if (schedule.lr_offsets > 0 &&
            view.pose_index < static_cast<int>(d_clothing_offsets.size()))
          d_clothing_offsets[view.pose_index][v] += jac.transpose() * g_obs;
        if (schedule.lr_weights > 0) {
          Vec3 p = avatar.clothing.vertices[v];
          if (!clothing_pose.offsets.empty()) p += clothing_pose.offsets[v];
          Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
          for (int b = 0; b < avatar.clothing_weights.cols(); ++b)
            d_weights(v, b) += g_obs.dot((clothing_pose.bone_transforms[b] * ph).head<3>());
        }
      }
    }

    // Scale render gradients by the view average.
    const double inv_views = 1.0 / n_views;
    for (int i = 0; i < num_gaussians; ++i) {
      grads.d_opacity[i] *= inv_views;
      grads.d_s2[i] *= inv_views;
      grads.d_s3[i] *= inv_views;
      grads.d_delta[i] *= inv_views;
      grads.d_base[i] *= inv_views;
      grads.d_coeffs[i] *= inv_views;
    }
    grads.d_pose *= inv_views;

    std::vector<double> opacities(num_gaussians);
    for (int i = 0; i < num_gaussians; ++i)
      opacities[i] = clamp_opacity(avatar.gaussians[i].opacity);
    OpacityLossResult op = opacity_loss(opacities, weights.lambda_opac);
    report.opac = op.value;
    for (int i = 0; i < num_gaussians; ++i) grads.d_opacity[i] += op.grad[i];

    GeometryLossResult geo =
        geometry_losses(avatar.body, avatar.body.vertices, avatar.clothing,
                        avatar.clothing.vertices, avatar.body_init, weights);
    report.laplacian = geo.laplacian;
    report.normal = geo.normal;
    report.distance = geo.distance;
    for (int v = 0; v < avatar.body.num_vertices(); ++v) d_body[v] += geo.d_body[v];
    for (int v = 0; v < avatar.clothing.num_vertices(); ++v) d_clothing[v] += geo.d_clothing[v];

    // Temporal smoothness on the per-frame offsets.
    if (schedule.lr_offsets > 0 && schedule.lambda_offset_smooth > 0) {
      auto smooth = [&](const std::vector<std::vector<Vec3>>& table,
                        std::vector<std::vector<Vec3>>& grad_table) {
        for (size_t t = 1; t < table.size(); ++t) {
          double norm = static_cast<double>(table.size() * std::max<size_t>(table[t].size(), 1));
          for (size_t v = 0; v < table[t].size(); ++v) {
            Vec3 d = table[t][v] - table[t - 1][v];
            grad_table[t][v] += schedule.lambda_offset_smooth * 2.0 * d / norm;
            grad_table[t - 1][v] -= schedule.lambda_offset_smooth * 2.0 * d / norm;
          }
        }
      };
      smooth(avatar.body_offsets, d_body_offsets);
      smooth(avatar.clothing_offsets, d_clothing_offsets);
    }

    check_finite("render/opacity", grads.d_opacity.data(), grads.d_opacity.size());
    check_finite("render/scales", grads.d_s2.data(), grads.d_s2.size());
    check_finite("render/delta", grads.d_delta.data(), grads.d_delta.size());
    check_finite_vec("geometry+collision/body", d_body);
    check_finite_vec("geometry+collision/clothing", d_clothing);

    // Parameter updates.
    for (int i = 0; i < num_gaussians; ++i) {
      AnchoredGaussian& g = avatar.gaussians[i];
      // Keep base colors inside the displayable range: once the shaded value
      // leaves [0, 1] the output clamp zeroes its gradient, so an unconstrained
      // overshoot would freeze the kernel's color permanently.
      avatar.color.base[i] =
          (avatar.color.base[i] - schedule.lr_color * decay * grads.d_base[i])
              .cwiseMax(0.0)
              .cwiseMin(1.0);
      avatar.color.coeffs[i] -= schedule.lr_color * decay * grads.d_coeffs[i];
      g.opacity = clamp_opacity(g.opacity - schedule.lr_opacity * decay * grads.d_opacity[i]);
      g.s2 = std::max(1e-3, g.s2 - schedule.lr_scales * decay * grads.d_s2[i]);
      g.s3 = std::max(1e-3, g.s3 - schedule.lr_scales * decay * grads.d_s3[i]);
      double delta_max = g.layer_label == 1 ? clothing_delta_max : body_delta_max;
      g.offset = std::clamp(g.offset - schedule.lr_delta * decay * grads.d_delta[i], -delta_max,
                            delta_max);
    }
    avatar.color.pose_correction -= schedule.lr_pose_correction * decay * grads.d_pose;
    if (schedule.lr_vertices > 0) {
      for (int v = 0; v < avatar.body.num_vertices(); ++v)
        avatar.body.vertices[v] -= schedule.lr_vertices * decay * d_body[v];
      for (int v = 0; v < avatar.clothing.num_vertices(); ++v)
        avatar.clothing.vertices[v] -= schedule.lr_vertices * decay * d_clothing[v];
    }
    if (schedule.lr_weights > 0) {
      for (int v = 0; v < avatar.clothing_weights.rows(); ++v) {
        Eigen::VectorXd row =
            avatar.clothing_weights.row(v).transpose() - schedule.lr_weights * decay * d_weights.row(v).transpose();
        avatar.clothing_weights.row(v) = project_to_simplex(row).transpose();
      }
    }
    if (schedule.lr_offsets > 0) {
      for (size_t t = 0; t < avatar.body_offsets.size(); ++t)
        for (size_t v = 0; v < avatar.body_offsets[t].size(); ++v)
          avatar.body_offsets[t][v] -= schedule.lr_offsets * decay * d_body_offsets[t][v];
      for (size_t t = 0; t < avatar.clothing_offsets.size(); ++t)
        for (size_t v = 0; v < avatar.clothing_offsets[t].size(); ++v)
          avatar.clothing_offsets[t][v] -= schedule.lr_offsets * decay * d_clothing_offsets[t][v];
    }

    report.total = report.recompute_total();
    log.push_back(report);
  }
  return log;
}

void save_fit_log(const std::string& path, const std::vector<LossReport>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write fit log: " + path);
  out << LossReport::csv_header() << '\n';
  for (size_t i = 0; i < log.size(); ++i) out << log[i].csv_row(static_cast<int>(i)) << '\n';
}

}  // namespace pica
