#include "pica/splat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace pica {

namespace {

int g_threads = [] {
  if (const char* env = std::getenv("PICA_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}();

Eigen::Matrix<double, 2, 3> pinhole_jacobian(const Camera& cam, const Vec3& t) {
  Eigen::Matrix<double, 2, 3> j;
  double z = t.z(), z2 = z * z;
  j << cam.fx / z, 0, -cam.fx * t.x() / z2,  //
      0, cam.fy / z, -cam.fy * t.y() / z2;
  return j;
}

struct MeshContext {
  const TriMesh* mesh = nullptr;
  const std::vector<Vec3>* positions = nullptr;
  std::vector<FaceFrame> frames;
};

MeshContext make_context(const TriMesh* mesh, const std::vector<Vec3>* positions) {
  MeshContext ctx;
  ctx.mesh = mesh;
  if (!mesh) return ctx;
  ctx.positions = positions ? positions : &mesh->vertices;
  ctx.frames = face_frames(*mesh, *ctx.positions);
  return ctx;
}

std::vector<SplatRecord> prepare_splats(const RenderScene& scene, const Camera& cam) {
  validate_camera(cam);
  if (!scene.gaussians || !scene.model)
    throw FormatError("render: scene is missing gaussians or color model");
  const auto& gaussians = *scene.gaussians;
  if (static_cast<int>(scene.model->base.size()) < static_cast<int>(gaussians.size()))
    throw FormatError("render: color model does not cover every gaussian");

  MeshContext body = make_context(scene.body, scene.body_positions);
  MeshContext clothing = make_context(scene.clothing, scene.clothing_positions);

  const Mat3 r_wc = cam.world_to_camera.topLeftCorner<3, 3>();
  const Vec3 t_wc = cam.world_to_camera.topRightCorner<3, 1>();
  const Vec3 cam_center = cam.center();

  std::vector<SplatRecord> records;
  records.reserve(gaussians.size());
  for (size_t gi = 0; gi < gaussians.size(); ++gi) {
    const AnchoredGaussian& g = gaussians[gi];
    const MeshContext& ctx = g.layer_label == 1 ? clothing : body;
    if (!ctx.mesh) throw FormatError("render: gaussian references a missing mesh layer");
    GaussianGeometry geom =
        gaussian_geometry(g, *ctx.mesh, *ctx.positions, ctx.frames[g.face]);

    Vec3 t = r_wc * geom.mean + t_wc;
    if (t.z() < kNearPlane) continue;

    SplatRecord rec;
    rec.gauss = static_cast<int>(gi);
    rec.cam_mean = t;
    rec.normal_world = ctx.frames[g.face].normal;
    rec.cov_cam = r_wc * geom.covariance * r_wc.transpose();

    Eigen::Matrix<double, 2, 3> j = pinhole_jacobian(cam, t);
    rec.splat.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
    rec.splat.cov2d = j * rec.cov_cam * j.transpose() + kLowPassFloor * Mat2::Identity();
    rec.splat.depth = t.z();
    rec.splat.source = static_cast<int>(gi);
    rec.cov_inv = rec.splat.cov2d.inverse();
    rec.axes = j * r_wc * geom.rotation;

    const auto& f = ctx.mesh->faces[g.face];
    const Vec3 center =
        ((*ctx.positions)[f[0]] + (*ctx.positions)[f[1]] + (*ctx.positions)[f[2]]) / 3.0;
    rec.len2 = ((*ctx.positions)[f[0]] - center).norm();
    rec.len3 = ((*ctx.positions)[f[1]] - center).norm();

    Vec3 view = geom.mean - cam_center;
    double view_len = view.norm();
    if (view_len <= 0) throw NumericalError("render: gaussian at the camera center");
    rec.dprime = geom.rotation.transpose() * (view / view_len);
    rec.basis << 1.0, rec.dprime.x(), rec.dprime.y(), rec.dprime.z();

    Vec3 u = scene.model->base[gi] +
             scene.model->coeffs[gi].transpose() * rec.basis;
    if (scene.model->pose_correction.cols() > 0) {
      if (scene.model->pose_correction.cols() != scene.descriptor.size())
        throw FormatError("render: pose descriptor size does not match the color model");
      u += scene.model->pose_correction * scene.descriptor;
    }
    rec.unclamped = u;
    rec.color = u.cwiseMax(0.0).cwiseMin(1.0);
    rec.alpha = g.opacity;
    rec.label = g.layer_label;

    // 3-sigma bounding box around the projected mean.
    Eigen::SelfAdjointEigenSolver<Mat2> es(rec.splat.cov2d);
    double radius = 3.0 * std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
    rec.x0 = std::max(0, static_cast<int>(std::floor(rec.splat.mean2d.x() - radius)));
    rec.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(rec.splat.mean2d.x() + radius)));
    rec.y0 = std::max(0, static_cast<int>(std::floor(rec.splat.mean2d.y() - radius)));
    rec.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(rec.splat.mean2d.y() + radius)));
    if (rec.x0 > rec.x1 || rec.y0 > rec.y1) continue;

    records.push_back(rec);
  }
  std::sort(records.begin(), records.end(), [](const SplatRecord& a, const SplatRecord& b) {
    if (a.splat.depth != b.splat.depth) return a.splat.depth < b.splat.depth;
    return a.gauss < b.gauss;
  });
  return records;
}

// Front-to-back compositing over a contiguous row range.
void composite_rows(const std::vector<SplatRecord>& splats, const Camera& cam, int row_begin,
                    int row_end, RenderResult& out) {
  std::vector<double> trans(size_t(cam.width) * (row_end - row_begin), 1.0);
  for (const SplatRecord& rec : splats) {
    int y0 = std::max(rec.y0, row_begin), y1 = std::min(rec.y1, row_end - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = rec.x0; x <= rec.x1; ++x) {
        double& t = trans[size_t(y - row_begin) * cam.width + x];
        if (t < kTransmittanceCutoff) continue;
        Vec2 delta(x + 0.5 - rec.splat.mean2d.x(), y + 0.5 - rec.splat.mean2d.y());
        double density = std::exp(-0.5 * delta.dot(rec.cov_inv * delta));
        double alpha = rec.alpha * density;
        if (alpha < kMinSplatAlpha) continue;
        double w = t * alpha;
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) += w * rec.color[c];
        out.mask.at(x, y, 0) += w;
        out.label.at(x, y, 0) += w * rec.label;
        t *= 1.0 - alpha;
      }
    }
  }
}

template <typename Fn>
void run_row_blocks(int height, Fn&& fn) {
  int n = std::min(g_threads, height);
  if (n <= 1) {
    fn(0, 0, height);
    return;
  }
  std::vector<std::thread> workers;
  for (int b = 0; b < n; ++b) {
    int begin = height * b / n, end = height * (b + 1) / n;
    workers.emplace_back([&fn, b, begin, end] { fn(b, begin, end); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace

void set_render_threads(int n) { g_threads = std::max(1, n); }
int render_threads() { return g_threads; }

ColorModel ColorModel::neutral(int num_gaussians, int descriptor_size, const Vec3& gray) {
  ColorModel model;
  model.base.assign(num_gaussians, gray);
  model.coeffs.assign(num_gaussians, Eigen::Matrix<double, 4, 3>::Zero());
  model.pose_correction = Eigen::MatrixXd::Zero(3, descriptor_size);
  return model;
}

Eigen::VectorXd pose_descriptor(const Pose& pose) {
  Eigen::VectorXd d(6 * pose.bone_transforms.size());
  for (size_t b = 0; b < pose.bone_transforms.size(); ++b) {
    Mat3 r = pose.bone_transforms[b].topLeftCorner<3, 3>();
    d.segment<3>(6 * b) = r.col(0);
    d.segment<3>(6 * b + 3) = r.col(1);
  }
  return d;
}

std::optional<Splat2D> project(const GaussianGeometry& geom, const Camera& cam) {
  validate_camera(cam);
  const Mat3 r_wc = cam.world_to_camera.topLeftCorner<3, 3>();
  const Vec3 t_wc = cam.world_to_camera.topRightCorner<3, 1>();
  Vec3 t = r_wc * geom.mean + t_wc;
  if (t.z() < kNearPlane) return std::nullopt;
  Eigen::Matrix<double, 2, 3> j = pinhole_jacobian(cam, t);
  Splat2D s;
  s.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
  s.cov2d = j * (r_wc * geom.covariance * r_wc.transpose()) * j.transpose() +
            kLowPassFloor * Mat2::Identity();
  s.depth = t.z();
  return s;
}

Vec3 canonical_view_dir(const GaussianGeometry& geom, const Camera& cam) {
  Vec3 view = geom.mean - cam.center();
  double len = view.norm();
  if (len <= 0) throw NumericalError("canonical_view_dir: gaussian at the camera center");
  return geom.rotation.transpose() * (view / len);
}

Vec3 shade(const ColorModel& model, int gaussian, const Vec3& dprime,
           const Eigen::VectorXd& descriptor) {
  if (gaussian < 0 || gaussian >= static_cast<int>(model.base.size()))
    throw FormatError("shade: gaussian index out of range");
  Eigen::Vector4d basis(1.0, dprime.x(), dprime.y(), dprime.z());
  Vec3 u = model.base[gaussian] + model.coeffs[gaussian].transpose() * basis;
  if (model.pose_correction.cols() > 0) u += model.pose_correction * descriptor;
  return u.cwiseMax(0.0).cwiseMin(1.0);
}

RenderResult render_all(const RenderScene& scene, const Camera& cam) {
  RenderResult out;
  out.color = Image(cam.width, cam.height, 3);
  out.mask = Image(cam.width, cam.height, 1);
  out.label = Image(cam.width, cam.height, 1);
  out.splats = prepare_splats(scene, cam);
  run_row_blocks(cam.height, [&](int, int begin, int end) {
    composite_rows(out.splats, cam, begin, end, out);
  });
  return out;
}

Image render(const RenderScene& scene, const Camera& cam, RenderChannel channel) {
  RenderResult result = render_all(scene, cam);
  switch (channel) {
    case RenderChannel::color:
      return result.color;
    case RenderChannel::mask:
      return result.mask;
    default:
      return result.label;
  }
}

RenderGrads::RenderGrads(int num_gaussians, int descriptor_size)
    : d_opacity(num_gaussians, 0.0),
      d_s2(num_gaussians, 0.0),
      d_s3(num_gaussians, 0.0),
      d_delta(num_gaussians, 0.0),
      d_base(num_gaussians, Vec3::Zero()),
      d_coeffs(num_gaussians, Eigen::Matrix<double, 4, 3>::Zero()),
      d_pose(Eigen::MatrixXd::Zero(3, descriptor_size)) {}

void RenderGrads::accumulate(const RenderGrads& other) {
  for (size_t i = 0; i < d_opacity.size(); ++i) {
    d_opacity[i] += other.d_opacity[i];
    d_s2[i] += other.d_s2[i];
    d_s3[i] += other.d_s3[i];
    d_delta[i] += other.d_delta[i];
    d_base[i] += other.d_base[i];
    d_coeffs[i] += other.d_coeffs[i];
  }
  d_pose += other.d_pose;
}

namespace {

// Per-splat intermediate gradients, accumulated across pixels.
struct SplatAccum {
  Vec2 d_mean2d = Vec2::Zero();
  Mat2 d_cov2d = Mat2::Zero();
  Vec3 d_color = Vec3::Zero();
  double d_alpha = 0;
};

void backward_rows(const std::vector<SplatRecord>& splats, const Camera& cam,
                   const RenderResult& fwd, const Image* dc, const Image* dm, const Image* dl,
                   int row_begin, int row_end, std::vector<SplatAccum>& accum) {
  const int w = cam.width;
  std::vector<double> trans(size_t(w) * (row_end - row_begin), 1.0);
  // Running front-to-back partial sums per pixel (color, mask, label).
  std::vector<double> partial(size_t(w) * (row_end - row_begin) * 5, 0.0);

  for (size_t si = 0; si < splats.size(); ++si) {
    const SplatRecord& rec = splats[si];
    SplatAccum& acc = accum[si];
    int y0 = std::max(rec.y0, row_begin), y1 = std::min(rec.y1, row_end - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = rec.x0; x <= rec.x1; ++x) {
        size_t pix = size_t(y - row_begin) * w + x;
        double& t = trans[pix];
        if (t < kTransmittanceCutoff) continue;
        Vec2 delta(x + 0.5 - rec.splat.mean2d.x(), y + 0.5 - rec.splat.mean2d.y());
        Vec2 md = rec.cov_inv * delta;
        double density = std::exp(-0.5 * delta.dot(md));
        double alpha = rec.alpha * density;
        if (alpha < kMinSplatAlpha) continue;
        double weight = t * alpha;

        double* part = &partial[pix * 5];
        double gc[3] = {dc ? dc->at(x, y, 0) : 0.0, dc ? dc->at(x, y, 1) : 0.0,
                        dc ? dc->at(x, y, 2) : 0.0};
        double gm = dm ? dm->at(x, y, 0) : 0.0;
        double gl = dl ? dl->at(x, y, 0) : 0.0;

        double d_alpha_prime = 0.0;
        double one_minus = 1.0 - alpha;
        for (int c = 0; c < 3; ++c) {
          acc.d_color[c] += gc[c] * weight;
          double contributed = part[c] + weight * rec.color[c];
          double rest = fwd.color.at(x, y, c) - contributed;
          d_alpha_prime += gc[c] * (t * rec.color[c] - (one_minus > 1e-12 ? rest / one_minus : 0.0));
          part[c] = contributed;
        }
        {
          double contributed = part[3] + weight;
          double rest = fwd.mask.at(x, y, 0) - contributed;
          d_alpha_prime += gm * (t - (one_minus > 1e-12 ? rest / one_minus : 0.0));
          part[3] = contributed;
        }
        {
          double contributed = part[4] + weight * rec.label;
          double rest = fwd.label.at(x, y, 0) - contributed;
          d_alpha_prime += gl * (t * rec.label - (one_minus > 1e-12 ? rest / one_minus : 0.0));
          part[4] = contributed;
        }

        acc.d_alpha += d_alpha_prime * density;
        double d_density = d_alpha_prime * rec.alpha;
        acc.d_mean2d += d_density * density * md;
        acc.d_cov2d += 0.5 * d_density * density * (md * md.transpose());
        t *= one_minus;
      }
    }
  }
}

}  // namespace

RenderGrads backward_render(const RenderScene& scene, const Camera& cam, const RenderResult& fwd,
                            const Image* d_color, const Image* d_mask, const Image* d_label) {
  if (fwd.color.width != cam.width || fwd.color.height != cam.height)
    throw FormatError("backward_render: forward record does not match the camera");
  const int num_gaussians = static_cast<int>(scene.gaussians->size());
  const int descriptor_size = static_cast<int>(scene.model->pose_correction.cols());
  RenderGrads grads(num_gaussians, descriptor_size);

  // Phase 1: per-pixel accumulation into per-splat intermediates; row blocks
  // own disjoint pixels and are merged in block order.
  int n_blocks = std::min(g_threads, cam.height);
  n_blocks = std::max(n_blocks, 1);
  std::vector<std::vector<SplatAccum>> block_accum(n_blocks,
                                                   std::vector<SplatAccum>(fwd.splats.size()));
  run_row_blocks(cam.height, [&](int block, int begin, int end) {
    backward_rows(fwd.splats, cam, fwd, d_color, d_mask, d_label, begin, end,
                  block_accum[block]);
  });
  std::vector<SplatAccum> accum(fwd.splats.size());
  for (int b = 0; b < n_blocks; ++b)
    for (size_t i = 0; i < accum.size(); ++i) {
      accum[i].d_mean2d += block_accum[b][i].d_mean2d;
      accum[i].d_cov2d += block_accum[b][i].d_cov2d;
      accum[i].d_color += block_accum[b][i].d_color;
      accum[i].d_alpha += block_accum[b][i].d_alpha;
    }

  // Phase 2: chain per-splat intermediates to the parameters.
  const Mat3 r_wc = cam.world_to_camera.topLeftCorner<3, 3>();
  const Vec3 t_wc = cam.world_to_camera.topRightCorner<3, 1>();
  const Vec3 cam_center = cam.center();
  MeshContext body_ctx = make_context(scene.body, scene.body_positions);
  MeshContext clothing_ctx = make_context(scene.clothing, scene.clothing_positions);
  for (size_t si = 0; si < fwd.splats.size(); ++si) {
    const SplatRecord& rec = fwd.splats[si];
    const SplatAccum& acc = accum[si];
    const AnchoredGaussian& g = (*scene.gaussians)[rec.gauss];

    grads.d_opacity[rec.gauss] += acc.d_alpha;

    // Color parameters, through the [0,1] clamp.
    Vec3 masked;
    for (int c = 0; c < 3; ++c)
      masked[c] = (rec.unclamped[c] > 0.0 && rec.unclamped[c] < 1.0) ? acc.d_color[c] : 0.0;
    grads.d_base[rec.gauss] += masked;
    grads.d_coeffs[rec.gauss] += rec.basis * masked.transpose();
    if (descriptor_size > 0) grads.d_pose += masked * scene.descriptor.transpose();

    // Tangential scales: cov2d = axes * diag(scale^2) * axes^T + floor.
    Vec2 ax2 = rec.axes.col(1);
    Vec2 ax3 = rec.axes.col(2);
    grads.d_s2[rec.gauss] += 2.0 * rec.len2 * rec.len2 * g.s2 * ax2.dot(acc.d_cov2d * ax2);
    grads.d_s3[rec.gauss] += 2.0 * rec.len3 * rec.len3 * g.s3 * ax3.dot(acc.d_cov2d * ax3);

    // Mean: direct projection path plus the Jacobian dependence of cov2d.
    Eigen::Matrix<double, 2, 3> j = pinhole_jacobian(cam, rec.cam_mean);
    Vec3 d_t = j.transpose() * acc.d_mean2d;
    Eigen::Matrix<double, 2, 3> d_j = 2.0 * acc.d_cov2d * j * rec.cov_cam;
    double z = rec.cam_mean.z(), z2 = z * z, z3 = z2 * z;
    d_t.x() += d_j(0, 2) * (-cam.fx / z2);
    d_t.y() += d_j(1, 2) * (-cam.fy / z2);
    d_t.z() += d_j(0, 0) * (-cam.fx / z2) + d_j(1, 1) * (-cam.fy / z2) +
               d_j(0, 2) * (2.0 * cam.fx * rec.cam_mean.x() / z3) +
               d_j(1, 2) * (2.0 * cam.fy * rec.cam_mean.y() / z3);
    Vec3 d_world = r_wc.transpose() * d_t;

    // Shading also sees the mean through the canonicalized view direction.
    const MeshContext& ctx = g.layer_label == 1 ? clothing_ctx : body_ctx;
    const Mat3& rot = ctx.frames[g.face].rotation;
    const auto& coeffs = scene.model->coeffs[rec.gauss];
    Vec3 d_dprime(coeffs.row(1).dot(masked), coeffs.row(2).dot(masked),
                  coeffs.row(3).dot(masked));
    Vec3 mean_world = r_wc.transpose() * (rec.cam_mean - t_wc);
    Vec3 view = mean_world - cam_center;
    double view_len = view.norm();
    Vec3 vhat = view / view_len;
    Vec3 d_vhat = rot * d_dprime;
    d_world += (d_vhat - vhat * vhat.dot(d_vhat)) / view_len;

    grads.d_delta[rec.gauss] += d_world.dot(rec.normal_world);
  }
  return grads;
}

}  // namespace pica
