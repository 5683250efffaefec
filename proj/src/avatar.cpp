#include "pica/avatar.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace pica {

namespace fs = std::filesystem;

Pose Avatar::pose_at(int frame, const std::vector<Pose>& animation) const {
  Pose pose = animation.at(frame);
  if (frame < static_cast<int>(body_offsets.size())) pose.offsets = body_offsets[frame];
  return pose;
}

Pose Avatar::clothing_pose_at(int frame, const std::vector<Pose>& animation) const {
  Pose pose = animation.at(frame);
  if (frame < static_cast<int>(clothing_offsets.size())) pose.offsets = clothing_offsets[frame];
  return pose;
}

Avatar make_avatar(TriMesh body, TriMesh clothing, SkinnedRig rig, int per_face) {
  body.layer = Layer::body;
  clothing.layer = Layer::clothing;
  Avatar avatar;
  avatar.body = std::move(body);
  avatar.clothing = std::move(clothing);
  avatar.body_init = avatar.body.vertices;
  avatar.rig = std::move(rig);
  avatar.clothing_weights = init_blend_weights(avatar.clothing, avatar.body, avatar.rig);
  avatar.gaussians = sample_gaussians(avatar.body, per_face);
  auto clothing_gaussians = sample_gaussians(avatar.clothing, per_face);
  avatar.gaussians.insert(avatar.gaussians.end(), clothing_gaussians.begin(),
                          clothing_gaussians.end());
  avatar.color = ColorModel::neutral(avatar.num_gaussians(), 6 * avatar.rig.num_bones());
  return avatar;
}

void save_avatar(const std::string& dir, const Avatar& avatar) {
  fs::create_directories(fs::path(dir) / "gaussians");
  fs::create_directories(fs::path(dir) / "meshes");

  {  // gaussian records with trailing appearance features: base(3) coeffs(12)
    std::ofstream out(fs::path(dir) / "gaussians" / "gaussians.txt");
    if (!out) throw FormatError("save_avatar: cannot write gaussians");
    char buf[128];
    for (int i = 0; i < avatar.num_gaussians(); ++i) {
      const AnchoredGaussian& g = avatar.gaussians[i];
      std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d", g.face,
                    g.bary[0], g.bary[1], g.bary[2], g.offset, g.s2, g.s3, g.opacity,
                    g.layer_label);
      out << buf;
      const Vec3& base = avatar.color.base[i];
      for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof(buf), " %.17g", base[c]);
        out << buf;
      }
      for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 3; ++c) {
          std::snprintf(buf, sizeof(buf), " %.17g", avatar.color.coeffs[i](k, c));
          out << buf;
        }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "gaussians" / "pose_correction.txt");
    out << avatar.color.pose_correction.cols() << '\n';
    char buf[64];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < avatar.color.pose_correction.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g ", avatar.color.pose_correction(r, c));
        out << buf;
      }
      out << '\n';
    }
  }
  save_mesh((fs::path(dir) / "meshes" / "body.obj").string(), avatar.body);
  save_mesh((fs::path(dir) / "meshes" / "clothing.obj").string(), avatar.clothing);
  TriMesh init = avatar.body;
  init.vertices = avatar.body_init;
  save_mesh((fs::path(dir) / "meshes" / "body_init.obj").string(), init);
  save_rig((fs::path(dir) / "rig.txt").string(), avatar.rig);

  {
    std::ofstream out(fs::path(dir) / "clothing_weights.txt");
    char buf[64];
    for (int v = 0; v < avatar.clothing_weights.rows(); ++v) {
      out << v;
      for (int b = 0; b < avatar.clothing_weights.cols(); ++b)
        if (avatar.clothing_weights(v, b) != 0.0) {
          std::snprintf(buf, sizeof(buf), " %d:%.17g", b, avatar.clothing_weights(v, b));
          out << buf;
        }
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "offsets.txt");
    char buf[96];
    auto dump = [&](const char* tag, const std::vector<std::vector<Vec3>>& table) {
      for (size_t t = 0; t < table.size(); ++t)
        for (size_t v = 0; v < table[t].size(); ++v) {
          std::snprintf(buf, sizeof(buf), "%s %zu %zu %.17g %.17g %.17g\n", tag, t, v,
                        table[t][v].x(), table[t][v].y(), table[t][v].z());
          out << buf;
        }
    };
    dump("body", avatar.body_offsets);
    dump("clothing", avatar.clothing_offsets);
  }
}

Avatar load_avatar(const std::string& dir) {
  Avatar avatar;
  avatar.body = load_mesh((fs::path(dir) / "meshes" / "body.obj").string(), Layer::body);
  avatar.clothing =
      load_mesh((fs::path(dir) / "meshes" / "clothing.obj").string(), Layer::clothing);
  avatar.body_init =
      load_mesh((fs::path(dir) / "meshes" / "body_init.obj").string(), Layer::body).vertices;
  avatar.rig = load_rig((fs::path(dir) / "rig.txt").string());

  {
    std::ifstream in(fs::path(dir) / "gaussians" / "gaussians.txt");
    if (!in) throw FormatError("load_avatar: missing gaussians file");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      AnchoredGaussian g;
      Vec3 base;
      Eigen::Matrix<double, 4, 3> coeffs;
      if (!(ls >> g.face >> g.bary[0] >> g.bary[1] >> g.bary[2] >> g.offset >> g.s2 >> g.s3 >>
            g.opacity >> g.layer_label >> base[0] >> base[1] >> base[2]))
        throw FormatError("load_avatar: bad gaussian record");
      for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 3; ++c)
          if (!(ls >> coeffs(k, c))) throw FormatError("load_avatar: bad appearance record");
      avatar.gaussians.push_back(g);
      avatar.color.base.push_back(base);
      avatar.color.coeffs.push_back(coeffs);
    }
  }
  {
    std::ifstream in(fs::path(dir) / "gaussians" / "pose_correction.txt");
    if (!in) throw FormatError("load_avatar: missing pose correction file");
    int cols = 0;
    in >> cols;
    avatar.color.pose_correction = Eigen::MatrixXd::Zero(3, cols);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < cols; ++c) in >> avatar.color.pose_correction(r, c);
  }
  {
    std::ifstream in(fs::path(dir) / "clothing_weights.txt");
    if (!in) throw FormatError("load_avatar: missing clothing weights");
    avatar.clothing_weights =
        Eigen::MatrixXd::Zero(avatar.clothing.num_vertices(), avatar.rig.num_bones());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      int v;
      ls >> v;
      std::string entry;
      while (ls >> entry) {
        auto colon = entry.find(':');
        avatar.clothing_weights(v, std::stoi(entry.substr(0, colon))) =
            std::stod(entry.substr(colon + 1));
      }
    }
  }
  {
    std::ifstream in(fs::path(dir) / "offsets.txt");
    if (in) {
      std::string tag;
      size_t t, v;
      Vec3 p;
      while (in >> tag >> t >> v >> p.x() >> p.y() >> p.z()) {
        auto& table = tag == "body" ? avatar.body_offsets : avatar.clothing_offsets;
        const auto& mesh = tag == "body" ? avatar.body : avatar.clothing;
        if (table.size() <= t)
          table.resize(t + 1, std::vector<Vec3>(mesh.num_vertices(), Vec3::Zero()));
        table[t][v] = p;
      }
    }
  }
  return avatar;
}

}  // namespace pica
