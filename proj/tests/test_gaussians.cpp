#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pica/gaussians.hpp"
#include "support.hpp"

using namespace pica;
using namespace fixtures;

TEST_CASE("barycentric pattern: 13 fixed symmetric interior points") {
  auto pts = barycentric_pattern(13);
  REQUIRE(pts.size() == 13);
  for (const Vec3& b : pts) {
    CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.minCoeff() > 0.0);
  }
  // Centroid first, then cyclic triples: each triple is closed under
  // rotating the coordinates.
  CHECK((pts[0] - Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3)).norm() < 1e-12);
  for (int base = 1; base + 2 < 13; base += 3) {
    Vec3 a = pts[base];
    CHECK((pts[base + 1] - Vec3(a[2], a[0], a[1])).norm() < 1e-12);
    CHECK((pts[base + 2] - Vec3(a[1], a[2], a[0])).norm() < 1e-12);
  }
  // Other counts still give valid interior coordinates.
  for (int n : {1, 5, 20}) {
    auto more = barycentric_pattern(n);
    REQUIRE(static_cast<int>(more.size()) == n);
    for (const Vec3& b : more) {
      CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(b.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("sampling covers every face with tagged layer labels") {
  TriMesh mesh = make_icosphere(1);
  mesh.layer = Layer::clothing;
  auto gaussians = sample_gaussians(mesh, 13);
  REQUIRE(static_cast<int>(gaussians.size()) == 13 * mesh.num_faces());
  std::vector<int> per_face(mesh.num_faces(), 0);
  for (const auto& g : gaussians) {
    per_face[g.face]++;
    CHECK(g.layer_label == 1);
  }
  for (int c : per_face) CHECK(c == 13);
}

TEST_CASE("flat gaussian: smallest covariance eigenvalue is the flat scale squared") {
  Rng rng(11);
  int checked = 0;
  while (checked < 10000) {
    TriMesh mesh;
    mesh.vertices = {random_vec(rng), random_vec(rng), random_vec(rng)};
    mesh.faces = {{0, 1, 2}};
    if (face_area(mesh, mesh.vertices, 0) < 1e-4) continue;
    AnchoredGaussian g;
    g.s2 = uniform(rng, 0.1, 2.0);
    g.s3 = uniform(rng, 0.1, 2.0);
    g.offset = uniform(rng, -0.1, 0.1);
    GaussianGeometry geom = gaussian_geometry(g, mesh, mesh.vertices);
    Eigen::SelfAdjointEigenSolver<Mat3> es(geom.covariance);
    CHECK(std::abs(es.eigenvalues()[0] - kFlatScale * kFlatScale) <= 1e-12);
    Vec3 evec = es.eigenvectors().col(0);
    Vec3 n = geom.rotation.col(0);
    CHECK(std::abs(std::abs(evec.dot(n)) - 1.0) < 1e-6);
    ++checked;
  }
}

TEST_CASE("rigid equivariance: means move rigidly, covariance conjugates") {
  Rng rng(12);
  TriMesh mesh = make_icosphere(1, 0.8);
  auto gaussians = sample_gaussians(mesh, 13);
  for (int trial = 0; trial < 5; ++trial) {
    Mat3 rot = random_rotation(rng);
    Vec3 trans = random_vec(rng, -2, 2);
    std::vector<Vec3> moved(mesh.vertices.size());
    for (size_t v = 0; v < moved.size(); ++v) moved[v] = rot * mesh.vertices[v] + trans;
    for (size_t i = 0; i < gaussians.size(); i += 7) {
      GaussianGeometry before = gaussian_geometry(gaussians[i], mesh, mesh.vertices);
      GaussianGeometry after = gaussian_geometry(gaussians[i], mesh, moved);
      CHECK((after.mean - (rot * before.mean + trans)).norm() <= 1e-9);
      CHECK((after.covariance - rot * before.covariance * rot.transpose()).norm() <= 1e-9);
    }
  }
}

TEST_CASE("position interpolates barycentrically plus the normal offset") {
  TriMesh mesh = make_quad();
  AnchoredGaussian g;
  g.face = 0;
  g.bary = Vec3(0.2, 0.3, 0.5);
  g.offset = 0.07;
  Vec3 expect = 0.2 * mesh.vertices[0] + 0.3 * mesh.vertices[1] + 0.5 * mesh.vertices[2] +
                Vec3(0, 0, 0.07);
  CHECK((gaussian_position(g, mesh, mesh.vertices) - expect).norm() < 1e-12);
}

TEST_CASE("gaussian file round trip") {
  Rng rng(13);
  std::vector<AnchoredGaussian> gaussians;
  for (int i = 0; i < 30; ++i) {
    AnchoredGaussian g;
    g.face = i % 7;
    Vec3 b(uniform(rng, 0.01, 1), uniform(rng, 0.01, 1), uniform(rng, 0.01, 1));
    g.bary = b / b.sum();
    g.offset = uniform(rng, -0.01, 0.01);
    g.s2 = uniform(rng, 0.1, 1);
    g.s3 = uniform(rng, 0.1, 1);
    g.opacity = uniform(rng, 0.01, 0.99);
    g.layer_label = i % 2;
    gaussians.push_back(g);
  }
  std::string dir = scratch_dir("gauss_io");
  save_gaussians(dir + "/g.txt", gaussians);
  auto back = load_gaussians(dir + "/g.txt");
  REQUIRE(back.size() == gaussians.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].face == gaussians[i].face);
    CHECK((back[i].bary - gaussians[i].bary).norm() == 0.0);
    CHECK(back[i].offset == gaussians[i].offset);
    CHECK(back[i].s2 == gaussians[i].s2);
    CHECK(back[i].s3 == gaussians[i].s3);
    CHECK(back[i].opacity == gaussians[i].opacity);
    CHECK(back[i].layer_label == gaussians[i].layer_label);
  }
  CHECK_THROWS_AS(load_gaussians(dir + "/missing.txt"), FormatError);
}

TEST_CASE("opacity clamp keeps the loss domain open") {
  CHECK(clamp_opacity(0.0) == kOpacityEps);
  CHECK(clamp_opacity(1.0) == 1.0 - kOpacityEps);
  CHECK(clamp_opacity(0.5) == 0.5);
  CHECK(clamp_opacity(-3.0) == kOpacityEps);
}
