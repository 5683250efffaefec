// Acceptance suite: one pass/fail line per criterion, exit status 0 only when
// every criterion holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "pica/avatar.hpp"
#include "pica/losses.hpp"
#include "pica/nearest.hpp"
#include "pica/sim.hpp"
#include "support.hpp"

using namespace pica;
using namespace fixtures;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
}

// ---------------------------------------------------------------------------
// Shared randomized double-layer scene for the renderer criteria.

struct Scene {
  TriMesh body, clothing;
  std::vector<AnchoredGaussian> gaussians;
  ColorModel color;
  Eigen::VectorXd descriptor;
  Camera cam;
  Image adj_color, adj_mask, adj_label;

  RenderScene render_scene() const {
    RenderScene rs;
    rs.gaussians = &gaussians;
    rs.body = &body;
    rs.clothing = &clothing;
    rs.model = &color;
    rs.descriptor = descriptor;
    return rs;
  }

  double loss() const {
    RenderResult r = render_all(render_scene(), cam);
    double total = 0;
    for (size_t i = 0; i < r.color.data.size(); ++i) total += adj_color.data[i] * r.color.data[i];
    for (size_t i = 0; i < r.mask.data.size(); ++i) total += adj_mask.data[i] * r.mask.data[i];
    for (size_t i = 0; i < r.label.data.size(); ++i) total += adj_label.data[i] * r.label.data[i];
    return total;
  }
};

Scene make_scene(Rng& rng, int per_face, int size) {
  Scene s;
  s.body = make_quad(0.5);
  s.clothing = make_quad(0.35, 0.08);
  s.clothing.layer = Layer::clothing;
  s.gaussians = sample_gaussians(s.body, per_face);
  for (AnchoredGaussian& g : sample_gaussians(s.clothing, per_face)) {
    g.layer_label = 1;
    s.gaussians.push_back(g);
  }
  for (AnchoredGaussian& g : s.gaussians) {
    g.opacity = uniform(rng, 0.25, 0.6);
    g.s2 = uniform(rng, 0.25, 0.45);
    g.s3 = uniform(rng, 0.25, 0.45);
    g.offset = uniform(rng, -0.002, 0.002);
  }
  int n = static_cast<int>(s.gaussians.size());
  s.color = ColorModel::neutral(n, 6);
  for (int g = 0; g < n; ++g) {
    s.color.base[g] = Vec3(uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 3; ++c) s.color.coeffs[g](r, c) = uniform(rng, -0.04, 0.04);
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) s.color.pose_correction(r, c) = uniform(rng, -0.02, 0.02);
  s.descriptor = pose_descriptor(Pose::identity(1));
  s.cam = make_lookat_camera(Vec3(uniform(rng, -0.2, 0.2), uniform(rng, -0.3, -0.1), 1.5),
                             Vec3::Zero(), Vec3(0, 1, 0), 1.9 * size, size, size);
  s.adj_color = Image(size, size, 3);
  s.adj_mask = Image(size, size, 1);
  s.adj_label = Image(size, size, 1);
  for (double& v : s.adj_color.data) v = uniform(rng, -1, 1);
  for (double& v : s.adj_mask.data) v = uniform(rng, -1, 1);
  for (double& v : s.adj_label.data) v = uniform(rng, -1, 1);
  return s;
}

// Independent per-pixel replay of the sorted splat records with the renderer's
// guard semantics: front-to-back alpha blending, per-splat bounding boxes,
// minimum splat alpha, and the transmittance cutoff.
void reference_composite(const std::vector<SplatRecord>& splats, int x, int y, Vec3& color,
                         double& mask, double& label) {
  color = Vec3::Zero();
  mask = label = 0;
  double t = 1.0;
  for (const SplatRecord& rec : splats) {
    if (t < kTransmittanceCutoff) break;
    if (x < rec.x0 || x > rec.x1 || y < rec.y0 || y > rec.y1) continue;
    Vec2 d(x + 0.5 - rec.splat.mean2d.x(), y + 0.5 - rec.splat.mean2d.y());
    double alpha = rec.alpha * std::exp(-0.5 * d.dot(rec.cov_inv * d));
    if (alpha < kMinSplatAlpha) continue;
    double w = t * alpha;
    color += w * rec.color;
    mask += w;
    label += w * rec.label;
    t *= 1.0 - alpha;
  }
}

// ---------------------------------------------------------------------------
// 1. Compositing against brute-force alpha blending.

Outcome criterion_compositing() {
  Rng rng(101);
  double worst = 0;
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 1000; ++trial) {
    // At most 10 splats: one Gaussian on a random subset of the four faces.
    Scene s = make_scene(rng, 1, 24);
    while (s.gaussians.size() > 10) s.gaussians.pop_back();
    RenderResult r = render_all(s.render_scene(), s.cam);
    for (int y = 0; y < s.cam.height; ++y)
      for (int x = 0; x < s.cam.width; ++x) {
        if (r.mask.at(x, y, 0) == 0.0) continue;  // nothing composited here
        Vec3 color;
        double mask, label;
        reference_composite(r.splats, x, y, color, mask, label);
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(color[c] - r.color.at(x, y, c)));
        worst = std::max(worst, std::abs(mask - r.mask.at(x, y, 0)));
        worst = std::max(worst, std::abs(label - r.label.at(x, y, 0)));
        ++checked;
      }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d pixel configurations, max per-channel deviation %.3e",
                checked, worst);
  return {checked >= 1000 && worst <= 1e-6, buf};
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.

Outcome criterion_gradients() {
  Rng rng(102);
  const double tol = 1e-3;
  std::string failures;
  auto record = [&](const std::string& name, double err) {
    if (err > tol) failures += (failures.empty() ? "" : "; ") + name;
    return err;
  };
  double worst_reported = 0;

  // Compositing backward: per-parameter FD compared by the median relative
  // error per family (individual parameters can straddle a hard guard, which
  // poisons that one FD sample without indicating a gradient bug).
  {
    std::vector<std::vector<double>> errs(7);
    const char* names[7] = {"render opacity", "render s2",    "render s3",   "render offset",
                            "render base",    "render coeffs", "render pose"};
    for (int inst = 0; inst < 20; ++inst) {
      Scene s = make_scene(rng, 3, 24);
      RenderResult fwd = render_all(s.render_scene(), s.cam);
      RenderGrads g = backward_render(s.render_scene(), s.cam, fwd, &s.adj_color, &s.adj_mask,
                                      &s.adj_label);
      int n = static_cast<int>(s.gaussians.size());
      auto fd = [&](std::function<double&(Scene&)> pick, double eps) {
        Scene plus = s, minus = s;
        pick(plus) += eps;
        pick(minus) -= eps;
        return (plus.loss() - minus.loss()) / (2 * eps);
      };
      for (int k = 0; k < 3; ++k) {
        int gi = static_cast<int>(uniform(rng, 0, n - 1e-9));
        int ch = k % 3, row = static_cast<int>(uniform(rng, 0, 4 - 1e-9));
        int pc = static_cast<int>(uniform(rng, 0, 6 - 1e-9));
        errs[0].push_back(rel_err(g.d_opacity[gi],
                                  fd([gi](Scene& x) -> double& { return x.gaussians[gi].opacity; },
                                     1e-6)));
        errs[1].push_back(rel_err(
            g.d_s2[gi], fd([gi](Scene& x) -> double& { return x.gaussians[gi].s2; }, 1e-6)));
        errs[2].push_back(rel_err(
            g.d_s3[gi], fd([gi](Scene& x) -> double& { return x.gaussians[gi].s3; }, 1e-6)));
        errs[3].push_back(rel_err(
            g.d_delta[gi], fd([gi](Scene& x) -> double& { return x.gaussians[gi].offset; }, 1e-7)));
        errs[4].push_back(rel_err(
            g.d_base[gi][ch],
            fd([gi, ch](Scene& x) -> double& { return x.color.base[gi][ch]; }, 1e-6)));
        errs[5].push_back(rel_err(
            g.d_coeffs[gi](row, ch),
            fd([gi, row, ch](Scene& x) -> double& { return x.color.coeffs[gi](row, ch); }, 1e-6)));
        errs[6].push_back(rel_err(
            g.d_pose(ch, pc),
            fd([ch, pc](Scene& x) -> double& { return x.color.pose_correction(ch, pc); }, 1e-6)));
      }
    }
    for (int f = 0; f < 7; ++f)
      worst_reported = std::max(worst_reported, record(names[f], median(errs[f])));
  }

  // Loss-term gradients: smooth objectives, so the max error must hold.
  {
    LossWeights weights;
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
      RenderResult r;
      auto rnd_img = [&](int c, double lo, double hi) {
        Image img(5, 4, c);
        for (double& v : img.data) v = uniform(rng, lo, hi);
        return img;
      };
      r.color = rnd_img(3, 0.05, 0.95);
      r.mask = rnd_img(1, 0.05, 0.95);
      r.label = rnd_img(1, 0.1, 0.9);
      Image gtc = rnd_img(3, 0.05, 0.95);
      Image gtm(5, 4, 1), gts(5, 4, 1);
      for (double& v : gtm.data) v = uniform(rng, 0, 1) < 0.5 ? 0.0 : 1.0;
      for (double& v : gts.data) v = uniform(rng, 0, 1) < 0.5 ? 0.0 : 1.0;
      AppearanceResult res = appearance_losses(r, gtc, gtm, gts, weights);
      auto scalar = [&](const RenderResult& rr) {
        AppearanceResult a = appearance_losses(rr, gtc, gtm, gts, weights);
        return a.color_mse + a.mask + a.seg;
      };
      const double eps = 1e-6;
      for (int k = 0; k < 6; ++k) {
        size_t ci = static_cast<size_t>(uniform(rng, 0, r.color.data.size() - 1e-9));
        size_t mi = static_cast<size_t>(uniform(rng, 0, r.mask.data.size() - 1e-9));
        RenderResult plus = r, minus = r;
        plus.color.data[ci] += eps;
        minus.color.data[ci] -= eps;
        worst = std::max(worst,
                         rel_err(res.d_color.data[ci], (scalar(plus) - scalar(minus)) / (2 * eps)));
        plus = r;
        minus = r;
        plus.label.data[mi] += eps;
        minus.label.data[mi] -= eps;
        worst = std::max(worst,
                         rel_err(res.d_label.data[mi], (scalar(plus) - scalar(minus)) / (2 * eps)));
      }
    }
    worst_reported = std::max(worst_reported, record("appearance/seg", worst));
  }

  {
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<double> opac;
      for (int i = 0; i < 6; ++i) opac.push_back(uniform(rng, 0.05, 0.95));
      OpacityLossResult res = opacity_loss(opac, 0.01);
      const double eps = 1e-7;
      for (size_t i = 0; i < opac.size(); ++i) {
        std::vector<double> plus = opac, minus = opac;
        plus[i] += eps;
        minus[i] -= eps;
        double fd = (opacity_loss(plus, 0.01).value - opacity_loss(minus, 0.01).value) / (2 * eps);
        worst = std::max(worst, rel_err(res.grad[i], fd));
      }
    }
    worst_reported = std::max(worst_reported, record("opacity loss", worst));
  }

  {
    TriMesh body = make_icosphere(1, 0.3);
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<Vec3> pts;
      for (int i = 0; i < 8; ++i)
        pts.push_back(random_vec(rng).normalized() * uniform(rng, 0.297, 0.315));
      CollisionLossResult res = collision_loss(pts, body, body.vertices, 0.005, 10.0);
      const double eps = 1e-7;
      for (size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < 3; ++c) {
          std::vector<Vec3> plus = pts, minus = pts;
          plus[i][c] += eps;
          minus[i][c] -= eps;
          double fd = (collision_loss(plus, body, body.vertices, 0.005, 10.0).value -
                       collision_loss(minus, body, body.vertices, 0.005, 10.0).value) /
                      (2 * eps);
          if (std::abs(fd) > 1e-8 || std::abs(res.grad[i][c]) > 1e-8)
            worst = std::max(worst, rel_err(res.grad[i][c], fd));
        }
    }
    worst_reported = std::max(worst_reported, record("collision loss", worst));
  }

  {
    LossWeights weights;
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
      TriMesh body = make_grid(4, &rng, 0.1);
      TriMesh clothing = make_grid(3, &rng, 0.1);
      for (Vec3& v : clothing.vertices) v.z() += 0.15;
      clothing.layer = Layer::clothing;
      std::vector<Vec3> init = body.vertices;
      std::vector<Vec3> bp = body.vertices, cp = clothing.vertices;
      for (Vec3& p : bp) p += random_vec(rng, -0.02, 0.02);
      for (Vec3& p : cp) p += random_vec(rng, -0.02, 0.02);
      GeometryLossResult res = geometry_losses(body, bp, clothing, cp, init, weights);
      auto scalar = [&](const std::vector<Vec3>& b, const std::vector<Vec3>& c) {
        GeometryLossResult r = geometry_losses(body, b, clothing, c, init, weights);
        return r.laplacian + r.normal + r.distance;
      };
      const double eps = 1e-6;
      for (int k = 0; k < 6; ++k) {
        size_t v = static_cast<size_t>(uniform(rng, 0, bp.size() - 1e-9));
        int c = k % 3;
        std::vector<Vec3> plus = bp, minus = bp;
        plus[v][c] += eps;
        minus[v][c] -= eps;
        worst = std::max(worst, rel_err(res.d_body[v][c],
                                        (scalar(plus, cp) - scalar(minus, cp)) / (2 * eps)));
        size_t u = static_cast<size_t>(uniform(rng, 0, cp.size() - 1e-9));
        std::vector<Vec3> cplus = cp, cminus = cp;
        cplus[u][c] += eps;
        cminus[u][c] -= eps;
        worst = std::max(worst, rel_err(res.d_clothing[u][c],
                                        (scalar(bp, cplus) - scalar(bp, cminus)) / (2 * eps)));
      }
    }
    worst_reported = std::max(worst_reported, record("laplacian/normal/distance", worst));
  }

  {
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
      int bones = 2 + inst % 3;
      Eigen::MatrixXd weights(5, bones);
      for (int v = 0; v < 5; ++v) {
        for (int b = 0; b < bones; ++b) weights(v, b) = uniform(rng, 0.01, 1.0);
        weights.row(v) /= weights.row(v).sum();
      }
      Pose pose = Pose::identity(bones);
      for (int b = 0; b < bones; ++b)
        pose.bone_transforms[b] = rigid_transform(random_rotation(rng), random_vec(rng));
      std::vector<Vec3> pts;
      for (int v = 0; v < 5; ++v) pts.push_back(random_vec(rng));
      const double eps = 1e-6;
      for (int v = 0; v < 5; ++v) {
        Mat3 jac = deform_jacobian(weights, v, pose);
        for (int c = 0; c < 3; ++c) {
          Pose plus = pose, minus = pose;
          plus.offsets.assign(5, Vec3::Zero());
          minus.offsets.assign(5, Vec3::Zero());
          plus.offsets[v][c] = eps;
          minus.offsets[v][c] = -eps;
          Vec3 fd =
              (deform(pts, weights, plus)[v] - deform(pts, weights, minus)[v]) / (2 * eps);
          for (int r = 0; r < 3; ++r) worst = std::max(worst, rel_err(jac(r, c), fd[r]));
        }
      }
    }
    worst_reported = std::max(worst_reported, record("deform jacobian", worst));
  }

  char buf[192];
  if (failures.empty())
    std::snprintf(buf, sizeof(buf), "all gradient families within tol, worst %.3e", worst_reported);
  else
    std::snprintf(buf, sizeof(buf), "families over tolerance: %s", failures.c_str());
  return {failures.empty(), buf};
}

// ---------------------------------------------------------------------------
// 3. Flat-Gaussian covariance invariants on 10^4 random faces.

Outcome criterion_flatness() {
  Rng rng(103);
  double worst_eig = 0, worst_align = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    TriMesh mesh;
    mesh.faces = {{0, 1, 2}};
    do {
      mesh.vertices = {random_vec(rng), random_vec(rng), random_vec(rng)};
    } while (face_area(mesh, mesh.vertices, 0) < 1e-4);
    AnchoredGaussian g;
    g.bary = Vec3(uniform(rng, 0.1, 0.5), uniform(rng, 0.1, 0.5), 0);
    g.bary.z() = 1.0 - g.bary.x() - g.bary.y();
    g.s2 = uniform(rng, 0.1, 0.8);
    g.s3 = uniform(rng, 0.1, 0.8);
    GaussianGeometry geom = gaussian_geometry(g, mesh, mesh.vertices);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(geom.covariance);
    worst_eig = std::max(worst_eig,
                         std::abs(eig.eigenvalues()[0] - kFlatScale * kFlatScale));
    Vec3 v = eig.eigenvectors().col(0);
    Vec3 n = face_frame(mesh, mesh.vertices, 0).normal;
    worst_align = std::max(worst_align, std::min((v - n).norm(), (v + n).norm()));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "eigenvalue dev %.3e (tol 1e-12), normal dev %.3e (tol 1e-6)",
                worst_eig, worst_align);
  return {worst_eig <= 1e-12 && worst_align <= 1e-6, buf};
}

// ---------------------------------------------------------------------------
// 4. Rigid-motion equivariance of anchored Gaussians.

Outcome criterion_equivariance() {
  Rng rng(104);
  TriMesh mesh = make_icosphere(1, 0.4);
  std::vector<AnchoredGaussian> gaussians = sample_gaussians(mesh, 3);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Mat3 rot = random_rotation(rng);
    Vec3 trans = random_vec(rng, -2, 2);
    std::vector<Vec3> moved;
    for (const Vec3& p : mesh.vertices) moved.push_back(rot * p + trans);
    for (const AnchoredGaussian& g : gaussians) {
      GaussianGeometry a = gaussian_geometry(g, mesh, mesh.vertices);
      GaussianGeometry b = gaussian_geometry(g, mesh, moved);
      worst = std::max(worst, (b.mean - (rot * a.mean + trans)).norm());
      worst = std::max(worst,
                       (b.covariance - rot * a.covariance * rot.transpose()).cwiseAbs().maxCoeff());
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max deviation %.3e (tol 1e-9)", worst);
  return {worst <= 1e-9, buf};
}

// ---------------------------------------------------------------------------
// 5. Linear blend skinning exactness.

Outcome criterion_skinning() {
  Rng rng(105);
  TriMesh mesh = make_icosphere(1, 0.5);
  SkinnedRig rig = single_bone_rig(mesh.num_vertices());

  auto identity_out = deform(mesh.vertices, rig, Pose::identity(1));
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (identity_out[v].x() != mesh.vertices[v].x() ||
        identity_out[v].y() != mesh.vertices[v].y() ||
        identity_out[v].z() != mesh.vertices[v].z())
      return {false, "identity pose is not the bitwise identity map"};

  double worst = 0;
  for (int trial = 0; trial < 25; ++trial) {
    Mat3 rot = random_rotation(rng);
    Vec3 trans = random_vec(rng, -2, 2);
    Pose pose = Pose::identity(1);
    pose.bone_transforms[0] = rigid_transform(rot, trans);
    auto out = deform(mesh.vertices, rig, pose);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      worst = std::max(worst, (out[v] - (rot * mesh.vertices[v] + trans)).norm());
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "identity bitwise; rigid pose dev %.3e (tol 1e-9)", worst);
  return {worst <= 1e-9, buf};
}

// ---------------------------------------------------------------------------
// 6. Collision penalty: cubic growth and exact zero iff the margin holds.

Outcome criterion_collision_law() {
  TriMesh body = make_icosphere(2, 0.3);
  auto normals = vertex_normals(body, body.vertices);
  const double margin = 0.005, lambda = 10.0;

  Vec3 b = body.vertices[31], n = normals[31];
  auto at_depth = [&](double d) {
    std::vector<Vec3> pts = {b + (margin - d) * n};
    return collision_loss(pts, body, body.vertices, margin, lambda).value;
  };
  double ratio = at_depth(0.002) / at_depth(0.001);
  if (std::abs(ratio - 8.0) > 1e-12)
    return {false, "penetration doubling scaled the hinge by " + std::to_string(ratio)};

  Rng rng(106);
  for (int scene = 0; scene < 100; ++scene) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i)
      pts.push_back(random_vec(rng).normalized() * uniform(rng, 0.29, 0.33));
    double loss = collision_loss(pts, body, body.vertices, margin, lambda).value;
    // Brute-force margin audit.
    bool violated = false;
    for (const Vec3& p : pts) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < body.num_vertices(); ++j) {
        double d = (p - body.vertices[j]).norm();
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if ((p - body.vertices[best]).dot(normals[best]) < margin) violated = true;
    }
    if (violated != (loss > 0.0))
      return {false, "loss zero/positive disagrees with the brute-force margin audit"};
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "doubling ratio 8 within 1e-12; 100 margin audits agree");
  return {true, buf};
}

// ---------------------------------------------------------------------------
// 7. Free fall matches the closed-form discrete recurrence bitwise.

Outcome criterion_free_fall() {
  TriMesh clothing = make_quad(0.4);
  clothing.layer = Layer::clothing;
  TriMesh body = make_quad(0.2, -100.0);
  PhysicalParams rho;
  SimOptions options;
  options.dt = 1e-3;
  HierarchicalGraph graph = build_graph(clothing, body, 1, options.body_threshold, rho);
  AnalyticPredictor predictor(options);
  SimState state;
  state.positions = clothing.vertices;
  state.velocities.assign(4, Vec3::Zero());
  state.body_positions = body.vertices;
  state.body_velocities.assign(4, Vec3::Zero());
  update_body_edges(graph, state.positions, state.body_positions);

  double vz = 0.0, z = 0.0;
  for (int t = 0; t < 1000; ++t) {
    state = step(state, graph, predictor, rho, options.dt);
    vz = vz + (-9.81) * options.dt;
    z = z + vz * options.dt;
    for (int i = 0; i < 4; ++i)
      if (state.velocities[i].z() != vz || state.positions[i].z() != z ||
          state.positions[i].x() != clothing.vertices[i].x())
        return {false, "diverged from the closed-form recurrence at step " + std::to_string(t)};
  }
  return {true, "1000 steps bitwise equal to the v/z recurrence"};
}

// ---------------------------------------------------------------------------
// 8. Momentum conservation without gravity or contact.

Outcome criterion_momentum() {
  Rng rng(108);
  TriMesh clothing = make_grid(5, &rng, 0.05);
  clothing.layer = Layer::clothing;
  TriMesh body = make_quad(0.2, -100.0);
  PhysicalParams rho;
  SimOptions options;
  options.gravity = false;
  options.dt = 2e-4;
  HierarchicalGraph graph = build_graph(clothing, body, 2, options.body_threshold, rho);
  AnalyticPredictor predictor(options);
  SimState state;
  state.positions = clothing.vertices;
  for (Vec3& p : state.positions) p += random_vec(rng, -0.02, 0.02);
  state.velocities.assign(state.positions.size(), Vec3::Zero());
  state.body_positions = body.vertices;
  state.body_velocities.assign(4, Vec3::Zero());
  update_body_edges(graph, state.positions, state.body_positions);

  auto momentum = [&](const SimState& s) {
    Vec3 m = Vec3::Zero();
    for (size_t i = 0; i < s.positions.size(); ++i)
      m += rho.mass_density * graph.node_area[i] * s.velocities[i];
    return m;
  };
  Vec3 m0 = momentum(state);
  for (int t = 0; t < 1000; ++t) state = step(state, graph, predictor, rho, options.dt);
  double drift = (momentum(state) - m0).norm();

  std::vector<Vec3> accel = predictor.predict(graph, rho);
  Vec3 net = Vec3::Zero();
  for (size_t i = 0; i < accel.size(); ++i)
    net += rho.mass_density * graph.node_area[i] * accel[i];
  char buf[128];
  std::snprintf(buf, sizeof(buf), "momentum drift %.3e (tol 1e-6), net force %.3e N (tol 1e-9)",
                drift, net.norm());
  return {drift <= 1e-6 && net.norm() <= 1e-9, buf};
}

// ---------------------------------------------------------------------------
// 9. Physical parameter recovery on a 200-triangle cape.

Outcome criterion_rho_recovery() {
  TriMesh body = make_icosphere(2, 0.3);
  TriMesh cape = make_cape(13, 8, 0.3, 0.002, 0.9);  // 8 + 2*8*12 = 200 triangles
  if (cape.num_faces() != 200) return {false, "fixture is not a 200-triangle cape"};
  Avatar avatar = make_avatar(body, cape, single_bone_rig(body.num_vertices()), 1);

  SimOptions options;
  options.dt = 1e-4;  // the fine cape mesh has small node masses; keep omega*dt well below 1
  options.levels = 1;
  AnalyticPredictor predictor(options);
  PhysicalParams planted;
  planted.mass_density = 0.3;
  planted.bending = 5e-4;
  planted.stretch = 80.0;
  planted.friction = 0.6;

  std::vector<Pose> anim;
  const int frames = 40;
  for (int t = 0; t < frames; ++t) {
    Pose p = Pose::identity(1, t);
    double x = 0.002 * std::sin(2 * M_PI * t / frames);
    p.bone_transforms[0] = rigid_transform(Mat3::Identity(), Vec3(x, 0, 0));
    anim.push_back(p);
  }
  auto cloth_traj = simulate(avatar, anim, planted, predictor, options);
  std::vector<std::vector<Vec3>> body_traj;
  for (int t = 0; t < frames; ++t)
    body_traj.push_back(deform(avatar.body.vertices, avatar.rig, anim[t]));

  double at_planted = rho_objective(planted, cloth_traj, body_traj, avatar.clothing, avatar.body,
                                    predictor, options);
  RhoFitResult fitres = fit_physical_params(cloth_traj, body_traj, avatar.clothing, avatar.body,
                                            predictor, options);
  Eigen::Vector4d log_err = fitres.rho.log_vector() - planted.log_vector();
  double worst = log_err.cwiseAbs().maxCoeff();
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "objective at planted %.3e (tol 1e-12); worst log-space error %.4f (tol %.4f)",
                at_planted, worst, std::log(1.1));
  return {at_planted <= 1e-12 && worst <= std::log(1.1), buf};
}

// ---------------------------------------------------------------------------
// 10. Clothing-to-body proximity edges vs brute force over 100 frames.

Outcome criterion_graph_audit() {
  TriMesh body = make_icosphere(1, 0.25);
  TriMesh cape = make_cape(3, 8, 0.25, 0.01, 0.8);
  PhysicalParams rho;
  SimOptions options;
  options.dt = 1e-3;
  HierarchicalGraph graph = build_graph(cape, body, 1, options.body_threshold, rho);
  AnalyticPredictor predictor(options);
  SimState state;
  state.positions = cape.vertices;
  state.velocities.assign(cape.vertices.size(), Vec3::Zero());
  state.body_positions = body.vertices;
  state.body_velocities.assign(body.vertices.size(), Vec3::Zero());
  update_body_edges(graph, state.positions, state.body_positions);

  for (int t = 0; t < 100; ++t) {
    for (Vec3& p : state.body_positions) p += Vec3(0.0006, 0.0004, 0.0);
    state = step(state, graph, predictor, rho, options.dt);
    for (size_t i = 0; i < state.positions.size(); ++i) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < state.body_positions.size(); ++j) {
        double d = (state.positions[i] - state.body_positions[j]).norm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      int expected = best_d <= options.body_threshold ? best : -1;
      int actual = -1;
      for (const BodyEdge& e : graph.body_edges)
        if (e.clothing == static_cast<int>(i)) actual = e.body;
      if (actual != expected)
        return {false, "frame " + std::to_string(t) + ": edge mismatch at clothing node " +
                           std::to_string(i)};
    }
  }
  return {true, "edges match brute-force nearest-within-threshold after all 100 steps"};
}

// ---------------------------------------------------------------------------
// 11. Synthetic end-to-end self-reconstruction.

Outcome criterion_end_to_end() {
  TriMesh body = make_icosphere(2, 0.3);
  TriMesh cape = make_cape(6, 12, 0.3, 0.01, 0.9);
  cape.layer = Layer::clothing;
  SkinnedRig rig = single_bone_rig(body.num_vertices());

  // Ground-truth appearance: a smooth procedural texture, opaque kernels.
  Avatar truth = make_avatar(body, cape, rig);
  for (int g = 0; g < truth.num_gaussians(); ++g) {
    Vec3 p = gaussian_position(truth.gaussians[g],
                               truth.gaussians[g].layer_label ? truth.clothing : truth.body,
                               truth.gaussians[g].layer_label ? truth.clothing.vertices
                                                             : truth.body.vertices);
    if (truth.gaussians[g].layer_label == 0)
      truth.color.base[g] = Vec3(0.5 + 0.4 * std::sin(25.0 * p.x()),
                                 0.5 + 0.4 * std::sin(25.0 * p.y() + 1.0),
                                 0.5 + 0.4 * std::cos(25.0 * p.z()));
    else
      truth.color.base[g] = Vec3(0.7 + 0.25 * std::sin(40.0 * p.z()), 0.25, 0.3);
    truth.gaussians[g].opacity = 0.95;
  }

  std::vector<Pose> poses = {Pose::identity(1, 0)};
  Dataset dataset;
  dataset.poses = poses;
  std::vector<Camera> cams;
  for (int k = 0; k < 9; ++k) {
    double az = 2 * M_PI * k / 9.0;
    Vec3 eye(1.1 * std::cos(az), 1.1 * std::sin(az), 0.45 + 0.2 * ((k % 3) - 1));
    cams.push_back(make_lookat_camera(eye, Vec3::Zero(), Vec3(0, 0, 1), 440, 256, 256));
  }
  RenderScene truth_scene;
  truth_scene.gaussians = &truth.gaussians;
  truth_scene.body = &truth.body;
  truth_scene.clothing = &truth.clothing;
  truth_scene.model = &truth.color;
  truth_scene.descriptor = pose_descriptor(poses[0]);

  RenderResult held_out_gt = render_all(truth_scene, cams[8]);
  for (int k = 0; k < 8; ++k) {
    dataset.cameras.push_back(cams[k]);
    RenderResult gt = render_all(truth_scene, cams[k]);
    DatasetView view;
    view.image = gt.color;
    view.mask = binarize(gt.mask);
    view.seg = binarize(gt.label);
    view.camera_id = k;
    view.pose_index = 0;
    dataset.views.push_back(std::move(view));
  }

  Avatar refit = make_avatar(body, cape, rig);  // fresh neutral-gray start
  LossWeights weights;
  FitSchedule schedule;
  schedule.iterations = 150;
  // Mean-squared-error gradients average over all pixels, so each kernel's
  // color gradient is tiny; large per-kernel rates are needed, while the
  // shared pose correction keeps its own small default rate.
  schedule.lr_color = 1200.0;
  schedule.lr_opacity = 120.0;
  fit(refit, dataset, weights, schedule);

  RenderScene refit_scene;
  refit_scene.gaussians = &refit.gaussians;
  refit_scene.body = &refit.body;
  refit_scene.clothing = &refit.clothing;
  refit_scene.model = &refit.color;
  refit_scene.descriptor = pose_descriptor(poses[0]);
  RenderResult held_out = render_all(refit_scene, cams[8]);

  double db = psnr(held_out.color, held_out_gt.color);
  Image seg_gt = binarize(held_out_gt.label);
  Image seg_fit = binarize(held_out.label);
  double inter = 0, uni = 0;
  for (size_t i = 0; i < seg_gt.data.size(); ++i) {
    inter += seg_gt.data[i] * seg_fit.data[i];
    uni += std::max(seg_gt.data[i], seg_fit.data[i]);
  }
  double iou = uni > 0 ? inter / uni : 1.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "held-out psnr %.2f dB (min 28), seg iou %.4f (min 0.95)", db,
                iou);
  return {db >= 28.0 && iou >= 0.95, buf};
}

// ---------------------------------------------------------------------------
// 12. Try-on collision resolve restores the margin everywhere.

Outcome criterion_tryon_margin() {
  TriMesh body = make_icosphere(2, 0.3);
  TriMesh cape = make_cape(5, 12, 0.3, -0.012, 0.9);  // oversized: starts inside the body
  const double margin = 0.005;
  CollisionResolveResult res =
      resolve_collisions(cape.vertices, cape, body, body.vertices, margin);
  auto normals = vertex_normals(body, body.vertices);
  int violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec3& p : res.positions) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < body.num_vertices(); ++j) {
      double d = (p - body.vertices[j]).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    double s = (p - body.vertices[best]).dot(normals[best]);
    worst = std::min(worst, s);
    if (s < margin - 1e-9) ++violations;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d/%zu vertices violate; tightest clearance %.6e (margin %g)",
                violations, res.positions.size(), worst, margin);
  return {res.converged && violations == 0, buf};
}

// ---------------------------------------------------------------------------
// 13. Determinism: identical seeds give bitwise-identical artifacts.

Outcome criterion_determinism() {
  // Rendering.
  Rng rng_a(113), rng_b(113);
  Scene a = make_scene(rng_a, 3, 32), b = make_scene(rng_b, 3, 32);
  RenderResult ra = render_all(a.render_scene(), a.cam);
  RenderResult rb = render_all(b.render_scene(), b.cam);
  if (ra.color.data != rb.color.data || ra.mask.data != rb.mask.data)
    return {false, "two renders of the same seeded scene differ"};

  // Simulation.
  auto run_sim = [] {
    TriMesh body = make_icosphere(1, 0.25);
    TriMesh cape = make_cape(3, 8, 0.25, 0.01, 0.8);
    Avatar avatar = make_avatar(body, cape, single_bone_rig(body.num_vertices()), 1);
    SimOptions options;
    options.dt = 1e-3;
    PhysicalParams rho;
    AnalyticPredictor predictor(options);
    std::vector<Pose> anim;
    for (int t = 0; t < 20; ++t) anim.push_back(Pose::identity(1, t));
    return simulate(avatar, anim, rho, predictor, options);
  };
  auto traj1 = run_sim(), traj2 = run_sim();
  for (size_t t = 0; t < traj1.size(); ++t)
    for (size_t v = 0; v < traj1[t].size(); ++v)
      if (traj1[t][v] != traj2[t][v]) return {false, "two identical simulations diverged"};

  // Fitting, end to end through the serialized artifact.
  auto run_fit = [](const std::string& out_dir) {
    TriMesh body = make_quad(0.5);
    TriMesh clothing = make_quad(0.4, 0.08);
    clothing.layer = Layer::clothing;
    Avatar truth = make_avatar(body, clothing, single_bone_rig(body.num_vertices()));
    for (int g = 0; g < truth.num_gaussians(); ++g)
      truth.color.base[g] = truth.gaussians[g].layer_label ? Vec3(0.8, 0.2, 0.2)
                                                           : Vec3(0.2, 0.3, 0.8);
    Camera cam = make_lookat_camera(Vec3(0.1, -0.1, 1.0), Vec3::Zero(), Vec3(0, 1, 0), 60, 40, 40);
    std::vector<Pose> poses = {Pose::identity(1, 0)};
    RenderScene scene;
    scene.gaussians = &truth.gaussians;
    scene.body = &truth.body;
    scene.clothing = &truth.clothing;
    scene.model = &truth.color;
    scene.descriptor = pose_descriptor(poses[0]);
    RenderResult gt = render_all(scene, cam);
    Dataset dataset;
    dataset.cameras = {cam};
    dataset.poses = poses;
    DatasetView view;
    view.image = gt.color;
    view.mask = binarize(gt.mask);
    view.seg = binarize(gt.label);
    dataset.views.push_back(std::move(view));

    Avatar avatar = make_avatar(body, clothing, single_bone_rig(body.num_vertices()));
    LossWeights weights;
    FitSchedule schedule;
    schedule.iterations = 5;
    schedule.seed = 11;
    fit(avatar, dataset, weights, schedule);
    save_avatar(out_dir, avatar);
  };
  std::string d1 = scratch_dir("accept_det1"), d2 = scratch_dir("accept_det2");
  run_fit(d1);
  run_fit(d2);
  for (const char* rel : {"/gaussians/gaussians.txt", "/gaussians/pose_correction.txt"}) {
    std::ifstream f1(d1 + rel, std::ios::binary), f2(d2 + rel, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (s1.empty() || s1 != s2)
      return {false, std::string("fitted artifact differs between identical runs: ") + rel};
  }
  return {true, "render, simulation, and fitted artifacts are bitwise identical across reruns"};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {"compositing matches brute-force alpha blending", criterion_compositing},
      {"analytic gradients match central finite differences", criterion_gradients},
      {"flat-Gaussian covariance invariants", criterion_flatness},
      {"rigid-motion equivariance", criterion_equivariance},
      {"linear blend skinning exactness", criterion_skinning},
      {"collision penalty cubic law and margin audit", criterion_collision_law},
      {"free fall matches the discrete closed form bitwise", criterion_free_fall},
      {"momentum conservation without external forces", criterion_momentum},
      {"garment parameter recovery", criterion_rho_recovery},
      {"proximity graph audit over a moving-body simulation", criterion_graph_audit},
      {"synthetic end-to-end self-reconstruction", criterion_end_to_end},
      {"try-on collision resolve restores the margin", criterion_tryon_margin},
      {"seeded runs produce bitwise-identical artifacts", criterion_determinism},
  };

  int failed = 0, index = 0;
  for (const Entry& entry : entries) {
    ++index;
    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", outcome.passed ? "PASS" : "FAIL", index,
                entry.name, outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.passed) ++failed;
  }
  if (failed == 0)
    std::printf("all %d acceptance criteria hold\n", index);
  else
    std::printf("%d of %d acceptance criteria FAILED\n", failed, index);
  return failed == 0 ? 0 : 1;
}
