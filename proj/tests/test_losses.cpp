#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "pica/avatar.hpp"
#include "pica/losses.hpp"
#include "support.hpp"

using namespace pica;
using namespace fixtures;

namespace {

Image random_image(Rng& rng, int w, int h, int c, double lo = 0.05, double hi = 0.95) {
  Image img(w, h, c);
  for (double& v : img.data) v = uniform(rng, lo, hi);
  return img;
}

Image binary_image(Rng& rng, int w, int h) {
  Image img(w, h, 1);
  for (double& v : img.data) v = uniform(rng, 0, 1) < 0.5 ? 0.0 : 1.0;
  return img;
}

// The buffer-dependent part of the appearance objective.
double appearance_scalar(const RenderResult& r, const Image& gt_color, const Image& gt_mask,
                         const Image& gt_seg, const LossWeights& weights) {
  AppearanceResult res = appearance_losses(r, gt_color, gt_mask, gt_seg, weights);
  return res.color_mse + res.mask + res.seg;
}

}  // namespace

TEST_CASE("ssim is 1 on identical images and decreases with distortion") {
  Rng rng(61);
  Image a = random_image(rng, 32, 32, 3);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Image mild = a, strong = a;
  for (size_t i = 0; i < a.data.size(); ++i) {
    mild.data[i] = std::clamp(a.data[i] + uniform(rng, -0.05, 0.05), 0.0, 1.0);
    strong.data[i] = std::clamp(a.data[i] + uniform(rng, -0.4, 0.4), 0.0, 1.0);
  }
  double s_mild = ssim(a, mild), s_strong = ssim(a, strong);
  CHECK(s_mild < 1.0);
  CHECK(s_strong < s_mild);
  CHECK(s_strong > -1.0);

  // Tiny images fall back to global statistics instead of the sliding window.
  Image small_a = random_image(rng, 5, 5, 1);
  CHECK(ssim(small_a, small_a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("appearance gradients match finite differences on all three buffers") {
  Rng rng(62);
  LossWeights weights;
  RenderResult r;
  r.color = random_image(rng, 5, 4, 3);
  r.mask = random_image(rng, 5, 4, 1);
  r.label = random_image(rng, 5, 4, 1, 0.1, 0.9);
  Image gt_color = random_image(rng, 5, 4, 3);
  Image gt_mask = binary_image(rng, 5, 4);
  Image gt_seg = binary_image(rng, 5, 4);

  AppearanceResult res = appearance_losses(r, gt_color, gt_mask, gt_seg, weights);
  const double eps = 1e-6;
  auto fd = [&](Image RenderResult::* buffer, size_t idx) {
    RenderResult plus = r, minus = r;
    (plus.*buffer).data[idx] += eps;
    (minus.*buffer).data[idx] -= eps;
    return (appearance_scalar(plus, gt_color, gt_mask, gt_seg, weights) -
            appearance_scalar(minus, gt_color, gt_mask, gt_seg, weights)) /
           (2 * eps);
  };
  for (size_t i = 0; i < r.color.data.size(); i += 7)
    CHECK(res.d_color.data[i] == doctest::Approx(fd(&RenderResult::color, i)).epsilon(1e-5));
  for (size_t i = 0; i < r.mask.data.size(); i += 3)
    CHECK(res.d_mask.data[i] == doctest::Approx(fd(&RenderResult::mask, i)).epsilon(1e-5));
  for (size_t i = 0; i < r.label.data.size(); i += 3)
    CHECK(res.d_label.data[i] == doctest::Approx(fd(&RenderResult::label, i)).epsilon(1e-5));
}

TEST_CASE("segmentation term clamps extreme labels without blowing up") {
  Rng rng(63);
  LossWeights weights;
  RenderResult r;
  r.color = random_image(rng, 4, 4, 3);
  r.mask = random_image(rng, 4, 4, 1);
  r.label = Image(4, 4, 1);  // exact zeros against seg = 1: clamp keeps BCE finite
  Image gt_seg(4, 4, 1);
  for (double& v : gt_seg.data) v = 1.0;
  AppearanceResult res =
      appearance_losses(r, random_image(rng, 4, 4, 3), binary_image(rng, 4, 4), gt_seg, weights);
  CHECK(std::isfinite(res.seg));
  for (double g : res.d_label.data) CHECK(std::isfinite(g));
}

TEST_CASE("opacity sparsity loss: closed form, gradient, and range guard") {
  Rng rng(64);
  std::vector<double> opac;
  for (int i = 0; i < 9; ++i) opac.push_back(uniform(rng, 0.05, 0.95));
  const double lambda = 0.01;
  OpacityLossResult res = opacity_loss(opac, lambda);

  double expect = 0;
  for (double o : opac) expect += std::log(o) + std::log(1.0 - o);
  expect *= lambda / opac.size();
  CHECK(res.value == doctest::Approx(expect).epsilon(1e-12));

  const double eps = 1e-7;
  for (size_t i = 0; i < opac.size(); ++i) {
    std::vector<double> plus = opac, minus = opac;
    plus[i] += eps;
    minus[i] -= eps;
    double fd = (opacity_loss(plus, lambda).value - opacity_loss(minus, lambda).value) / (2 * eps);
    CHECK(res.grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }

  CHECK_THROWS_AS(opacity_loss({0.5 * kOpacityEps}, lambda), FormatError);
  CHECK_THROWS_AS(opacity_loss({1.0 - 0.5 * kOpacityEps}, lambda), FormatError);
}

TEST_CASE("collision loss: cubic scaling, zero when clear, gradient matches FD") {
  TriMesh body = make_icosphere(2, 0.3);
  const double margin = 0.005, lambda = 10.0;
  auto normals = vertex_normals(body, body.vertices);

  // A point at depth d below the margin along a vertex normal; doubling d
  // scales the hinge term by 8.
  int anchor = 17;
  Vec3 b = body.vertices[anchor], n = normals[anchor];
  auto at_depth = [&](double d) {
    std::vector<Vec3> pts = {b + (margin - d) * n};
    return collision_loss(pts, body, body.vertices, margin, lambda).value;
  };
  double v1 = at_depth(0.001), v2 = at_depth(0.002);
  CHECK(v1 > 0);
  CHECK(v2 / v1 == doctest::Approx(8.0).epsilon(1e-10));
  CHECK(at_depth(-0.002) == 0.0);  // outside the margin: exactly zero

  // FD on a mix of penetrating and clear points.
  Rng rng(65);
  std::vector<Vec3> pts;
  for (int i = 0; i < 12; ++i) {
    Vec3 dir = random_vec(rng).normalized();
    pts.push_back(dir * uniform(rng, 0.297, 0.32));
  }
  CollisionLossResult res = collision_loss(pts, body, body.vertices, margin, lambda);
  const double eps = 1e-7;
  for (size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      std::vector<Vec3> plus = pts, minus = pts;
      plus[i][c] += eps;
      minus[i][c] -= eps;
      double fd = (collision_loss(plus, body, body.vertices, margin, lambda).value -
                   collision_loss(minus, body, body.vertices, margin, lambda).value) /
                  (2 * eps);
      CHECK(res.grad[i][c] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
    }
}

TEST_CASE("geometry gradients match finite differences; init mismatch rejected") {
  Rng rng(66);
  TriMesh body = make_grid(4, &rng, 0.1);
  TriMesh clothing = make_grid(3, &rng, 0.1);
  for (Vec3& v : clothing.vertices) v.z() += 0.15;
  clothing.layer = Layer::clothing;
  LossWeights weights;

  std::vector<Vec3> body_init = body.vertices;
  std::vector<Vec3> body_pos = body.vertices, clothing_pos = clothing.vertices;
  for (Vec3& p : body_pos) p += random_vec(rng, -0.02, 0.02);
  for (Vec3& p : clothing_pos) p += random_vec(rng, -0.02, 0.02);

  auto scalar = [&](const std::vector<Vec3>& bp, const std::vector<Vec3>& cp) {
    GeometryLossResult r = geometry_losses(body, bp, clothing, cp, body_init, weights);
    return r.laplacian + r.normal + r.distance;
  };
  GeometryLossResult res = geometry_losses(body, body_pos, clothing, clothing_pos, body_init,
                                           weights);
  const double eps = 1e-6;
  for (size_t v = 0; v < body_pos.size(); v += 3)
    for (int c = 0; c < 3; ++c) {
      std::vector<Vec3> plus = body_pos, minus = body_pos;
      plus[v][c] += eps;
      minus[v][c] -= eps;
      double fd = (scalar(plus, clothing_pos) - scalar(minus, clothing_pos)) / (2 * eps);
      CHECK(res.d_body[v][c] == doctest::Approx(fd).epsilon(1e-4).scale(1e-8));
    }
  for (size_t v = 0; v < clothing_pos.size(); v += 2)
    for (int c = 0; c < 3; ++c) {
      std::vector<Vec3> plus = clothing_pos, minus = clothing_pos;
      plus[v][c] += eps;
      minus[v][c] -= eps;
      double fd = (scalar(body_pos, plus) - scalar(body_pos, minus)) / (2 * eps);
      CHECK(res.d_clothing[v][c] == doctest::Approx(fd).epsilon(1e-4).scale(1e-8));
    }

  std::vector<Vec3> short_init(body_init.begin(), body_init.end() - 1);
  CHECK_THROWS_AS(geometry_losses(body, body_pos, clothing, clothing_pos, short_init, weights),
                  FormatError);
}

TEST_CASE("dataset manifest: parsing, binarization, and error reporting") {
  std::string dir = scratch_dir("dataset");
  Camera cam = make_lookat_camera(Vec3(0, 0, 2), Vec3::Zero(), Vec3(0, 1, 0), 50, 8, 8);
  save_camera(dir + "/cam0.txt", cam);

  Rng rng(67);
  save_ppm(dir + "/v0.ppm", random_image(rng, 8, 8, 3));
  Image mask(8, 8, 1);
  for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = i % 2 ? 0.9 : 0.1;
  save_pgm(dir + "/v0_mask.pgm", mask);
  save_pgm(dir + "/v0_seg.pgm", mask);

  {
    std::ofstream m(dir + "/manifest.txt");
    m << "# capture\n";
    m << "camera 0 cam0.txt\n";
    m << "view v0.ppm v0_mask.pgm v0_seg.pgm 0 0\n";
  }
  std::vector<Pose> poses = {Pose::identity(1, 0)};
  Dataset ds = load_dataset(dir + "/manifest.txt", poses);
  REQUIRE(ds.cameras.size() == 1);
  REQUIRE(ds.views.size() == 1);
  CHECK(ds.views[0].image.channels == 3);
  for (double v : ds.views[0].mask.data) CHECK((v == 0.0 || v == 1.0));
  CHECK(ds.views[0].camera_id == 0);
  CHECK(ds.views[0].pose_index == 0);

  auto write_manifest = [&](const std::string& body) {
    std::ofstream m(dir + "/bad.txt");
    m << body;
  };
  write_manifest("camera 1 cam0.txt\n");
  CHECK_THROWS_AS(load_dataset(dir + "/bad.txt", poses), FormatError);
  write_manifest("camera 0 cam0.txt\nview v0.ppm v0_mask.pgm v0_seg.pgm 3 0\n");
  CHECK_THROWS_AS(load_dataset(dir + "/bad.txt", poses), FormatError);
  write_manifest("camera 0 cam0.txt\nview v0.ppm v0_mask.pgm v0_seg.pgm 0 5\n");
  CHECK_THROWS_AS(load_dataset(dir + "/bad.txt", poses), FormatError);
  write_manifest("camera 0 cam0.txt\nsplat nope\n");
  CHECK_THROWS_AS(load_dataset(dir + "/bad.txt", poses), FormatError);
  write_manifest("camera 0 cam0.txt\n");
  CHECK_THROWS_AS(load_dataset(dir + "/bad.txt", poses), FormatError);
}

namespace {

struct FitFixture {
  Avatar avatar;
  Dataset dataset;

  FitFixture() {
    TriMesh body = make_quad(0.5);
    TriMesh clothing = make_quad(0.4, 0.08);
    clothing.layer = Layer::clothing;
    avatar = make_avatar(body, clothing, single_bone_rig(body.num_vertices()));

    // Ground truth comes from the same geometry with a different appearance,
    // so color is the only thing the fit has to explain.
    Avatar target = avatar;
    for (size_t g = 0; g < target.color.base.size(); ++g)
      target.color.base[g] = target.gaussians[g].layer_label ? Vec3(0.8, 0.2, 0.2)
                                                            : Vec3(0.2, 0.3, 0.8);
    Camera cam = make_lookat_camera(Vec3(0.1, -0.1, 1.0), Vec3::Zero(), Vec3(0, 1, 0), 60, 40, 40);
    dataset.cameras = {cam};
    dataset.poses = {Pose::identity(1, 0)};

    RenderScene scene;
    scene.gaussians = &target.gaussians;
    scene.body = &target.body;
    scene.clothing = &target.clothing;
    scene.model = &target.color;
    scene.descriptor = pose_descriptor(dataset.poses[0]);
    RenderResult gt = render_all(scene, cam);
    DatasetView view;
    view.image = gt.color;
    view.mask = binarize(gt.mask);
    view.seg = binarize(gt.label);
    view.camera_id = 0;
    view.pose_index = 0;
    dataset.views.push_back(std::move(view));
  }
};

}  // namespace

TEST_CASE("fitting drives the color error down and is seed-deterministic") {
  FitFixture fx;
  LossWeights weights;
  FitSchedule schedule;
  schedule.iterations = 25;
  Avatar a = fx.avatar, b = fx.avatar;
  std::vector<LossReport> log = fit(a, fx.dataset, weights, schedule);
  REQUIRE(static_cast<int>(log.size()) == schedule.iterations);
  CHECK(log.back().color_mse < 0.5 * log.front().color_mse);
  CHECK(log.back().total < log.front().total);
  for (const LossReport& r : log)
    CHECK(r.total == doctest::Approx(r.recompute_total()).epsilon(1e-9));

  std::vector<LossReport> log2 = fit(b, fx.dataset, weights, schedule);
  for (size_t i = 0; i < log.size(); ++i) CHECK(log[i].total == log2[i].total);
  for (size_t g = 0; g < a.color.base.size(); ++g)
    CHECK((a.color.base[g] - b.color.base[g]).norm() == 0.0);
}

TEST_CASE("zero-iteration fit leaves the avatar untouched") {
  FitFixture fx;
  LossWeights weights;
  FitSchedule schedule;
  schedule.iterations = 0;
  Avatar a = fx.avatar;
  std::vector<LossReport> log = fit(a, fx.dataset, weights, schedule);
  CHECK(log.empty());
  for (int g = 0; g < a.num_gaussians(); ++g) {
    CHECK(a.gaussians[g].opacity == fx.avatar.gaussians[g].opacity);
    CHECK((a.color.base[g] - fx.avatar.color.base[g]).norm() == 0.0);
  }
}

TEST_CASE("non-finite inputs surface as a numerical error naming the term") {
  FitFixture fx;
  fx.avatar.color.base[0] = Vec3(std::nan(""), 0.5, 0.5);
  LossWeights weights;
  FitSchedule schedule;
  schedule.iterations = 2;
  CHECK_THROWS_AS(fit(fx.avatar, fx.dataset, weights, schedule), NumericalError);
}

TEST_CASE("fit log round trips through the csv writer") {
  std::vector<LossReport> log(3);
  log[1].color_mse = 0.25;
  log[1].total = 0.5;
  std::string dir = scratch_dir("fitlog");
  save_fit_log(dir + "/fit.csv", log);
  std::ifstream in(dir + "/fit.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == LossReport::csv_header());
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}
