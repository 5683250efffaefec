#include "pica/skinning.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pica/nearest.hpp"

namespace pica {

namespace {

void check_rigid(const Mat4& g, const std::string& what) {
  Mat3 r = g.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6)
    throw FormatError(what + ": transform is not rigid");
  if ((g.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
    throw FormatError(what + ": bottom row is not (0 0 0 1)");
}

Mat4 transform_from_tq(double tx, double ty, double tz, double qx, double qy, double qz,
                       double qw) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  if (std::abs(q.norm() - 1.0) > 1e-6) throw FormatError("quaternion is not unit length");
  Mat4 g = Mat4::Identity();
  g.topLeftCorner<3, 3>() = q.normalized().toRotationMatrix();
  g.topRightCorner<3, 1>() = Vec3(tx, ty, tz);
  return g;
}

void write_transform_tq(std::ostream& out, const Mat4& g) {
  Eigen::Quaterniond q(Mat3(g.topLeftCorner<3, 3>()));
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g", g(0, 3), g(1, 3),
                g(2, 3), q.x(), q.y(), q.z(), q.w());
  out << buf;
}

}  // namespace

Pose Pose::identity(int num_bones, int frame) {
  Pose p;
  p.frame = frame;
  p.bone_transforms.assign(num_bones, Mat4::Identity());
  return p;
}

Mat4 rigid_transform(const Mat3& rotation, const Vec3& translation) {
  Mat4 g = Mat4::Identity();
  g.topLeftCorner<3, 3>() = rotation;
  g.topRightCorner<3, 1>() = translation;
  return g;
}

SkinnedRig load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open rig file: " + path);
  SkinnedRig rig;
  std::vector<std::vector<std::pair<int, double>>> sparse;
  std::string line;
  int line_no = 0;
  bool in_weights = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "bone") {
      Bone bone;
      double tx, ty, tz, qx, qy, qz, qw;
      if (!(ls >> bone.name >> bone.parent >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
        throw FormatError("rig line " + std::to_string(line_no) + ": bad bone record");
      if (bone.parent >= static_cast<int>(rig.bones.size()))
        throw FormatError("rig line " + std::to_string(line_no) +
                          ": parent must precede bone (topological order)");
      bone.rest = transform_from_tq(tx, ty, tz, qx, qy, qz, qw);
      rig.bones.push_back(bone);
    } else if (tag == "weights") {
      in_weights = true;
    } else if (in_weights) {
      int vertex = std::stoi(tag);
      if (vertex != static_cast<int>(sparse.size()))
        throw FormatError("rig line " + std::to_string(line_no) +
                          ": weights rows must be listed in vertex order");
      std::vector<std::pair<int, double>> row;
      std::string entry;
      while (ls >> entry) {
        auto colon = entry.find(':');
        if (colon == std::string::npos)
          throw FormatError("rig line " + std::to_string(line_no) + ": expected bone:weight");
        row.emplace_back(std::stoi(entry.substr(0, colon)), std::stod(entry.substr(colon + 1)));
      }
      sparse.push_back(row);
    } else {
      throw FormatError("rig line " + std::to_string(line_no) + ": unknown record '" + tag + "'");
    }
  }
  rig.weights = Eigen::MatrixXd::Zero(static_cast<int>(sparse.size()), rig.num_bones());
  for (size_t v = 0; v < sparse.size(); ++v)
    for (const auto& [bone, w] : sparse[v]) {
      if (bone < 0 || bone >= rig.num_bones())
        throw FormatError("rig weights: bone index out of range for vertex " + std::to_string(v));
      rig.weights(static_cast<int>(v), bone) = w;
    }
  validate_rig(rig);
  return rig;
}

void save_rig(const std::string& path, const SkinnedRig& rig) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write rig file: " + path);
  for (const Bone& bone : rig.bones) {
    out << "bone " << bone.name << ' ' << bone.parent << ' ';
    write_transform_tq(out, bone.rest);
    out << '\n';
  }
  out << "weights\n";
  for (int v = 0; v < rig.weights.rows(); ++v) {
    out << v;
    for (int b = 0; b < rig.weights.cols(); ++b)
      if (rig.weights(v, b) != 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " %d:%.17g", b, rig.weights(v, b));
        out << buf;
      }
    out << '\n';
  }
}

std::vector<Pose> load_animation(const std::string& path, int num_bones) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open animation file: " + path);
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "frame") {
      Pose pose;
      if (!(ls >> pose.frame))
        throw FormatError("animation line " + std::to_string(line_no) + ": bad frame record");
      poses.push_back(pose);
    } else if (tag == "g") {
      if (poses.empty())
        throw FormatError("animation line " + std::to_string(line_no) + ": transform before frame");
      double tx, ty, tz, qx, qy, qz, qw;
      if (!(ls >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
        throw FormatError("animation line " + std::to_string(line_no) + ": bad transform");
      poses.back().bone_transforms.push_back(transform_from_tq(tx, ty, tz, qx, qy, qz, qw));
    } else {
      throw FormatError("animation line " + std::to_string(line_no) + ": unknown record");
    }
  }
  for (const Pose& pose : poses) {
    if (static_cast<int>(pose.bone_transforms.size()) != num_bones)
      throw FormatError("animation frame " + std::to_string(pose.frame) + ": expected " +
                        std::to_string(num_bones) + " transforms, got " +
                        std::to_string(pose.bone_transforms.size()));
    validate_pose(pose);
  }
  return poses;
}

void save_animation(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write animation file: " + path);
  for (const Pose& pose : poses) {
    out << "frame " << pose.frame << '\n';
    for (const Mat4& g : pose.bone_transforms) {
      out << "g ";
      write_transform_tq(out, g);
      out << '\n';
    }
  }
}

void validate_rig(const SkinnedRig& rig) {
  for (size_t i = 0; i < rig.bones.size(); ++i) {
    if (rig.bones[i].parent >= static_cast<int>(i))
      throw FormatError("rig: bone " + std::to_string(i) + " not in topological order");
    check_rigid(rig.bones[i].rest, "rig bone " + rig.bones[i].name);
  }
  for (int v = 0; v < rig.weights.rows(); ++v) {
    if (rig.weights.row(v).minCoeff() < 0.0)
      throw FormatError("rig: negative weight at vertex " + std::to_string(v));
    if (std::abs(rig.weights.row(v).sum() - 1.0) > kWeightRowTolerance)
      throw FormatError("rig: weight row " + std::to_string(v) + " does not sum to 1");
  }
}

void validate_pose(const Pose& pose) {
  for (size_t i = 0; i < pose.bone_transforms.size(); ++i)
    check_rigid(pose.bone_transforms[i],
                "pose frame " + std::to_string(pose.frame) + " bone " + std::to_string(i));
}

Eigen::MatrixXd init_blend_weights(const TriMesh& clothing, const TriMesh& body,
                                   const SkinnedRig& body_rig) {
  if (body.vertices.empty()) throw FormatError("init_blend_weights: empty body mesh");
  if (body_rig.weights.rows() != body.num_vertices())
    throw FormatError("init_blend_weights: rig weights do not cover the body mesh");
  auto nearest = nearest_vertex(clothing.vertices, body.vertices);
  Eigen::MatrixXd weights(clothing.num_vertices(), body_rig.num_bones());
  for (int v = 0; v < clothing.num_vertices(); ++v)
    weights.row(v) = body_rig.weights.row(nearest[v].first);
  return weights;
}

std::vector<Vec3> deform(const std::vector<Vec3>& positions, const Eigen::MatrixXd& weights,
                         const Pose& pose) {
  if (weights.rows() != static_cast<int>(positions.size()))
    throw FormatError("deform: weight rows do not match vertex count");
  if (weights.cols() != static_cast<int>(pose.bone_transforms.size()))
    throw FormatError("deform: weight columns do not match bone count");
  if (!pose.offsets.empty() && pose.offsets.size() != positions.size())
    throw FormatError("deform: offset table does not match vertex count");
  // Rest pose short-circuit: with every transform exactly the identity the
  // blend is the identity map, bitwise, independent of weight rounding.
  bool rest_pose = true;
  for (const Mat4& g : pose.bone_transforms)
    if (g != Mat4::Identity()) {
      rest_pose = false;
      break;
    }
  if (rest_pose) {
    std::vector<Vec3> out = positions;
    if (!pose.offsets.empty())
      for (size_t v = 0; v < out.size(); ++v) out[v] += pose.offsets[v];
    return out;
  }
  std::vector<Vec3> out(positions.size());
  for (size_t v = 0; v < positions.size(); ++v) {
    double row_sum = weights.row(static_cast<int>(v)).sum();
    if (std::abs(row_sum - 1.0) > kWeightRowTolerance)
      throw FormatError("deform: weight row " + std::to_string(v) + " not normalized");
    Vec3 p = positions[v];
    if (!pose.offsets.empty()) p += pose.offsets[v];
    Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int b = 0; b < weights.cols(); ++b) {
      double w = weights(static_cast<int>(v), b);
      if (w != 0.0) acc += w * (pose.bone_transforms[b] * ph);
    }
    out[v] = acc.head<3>();
  }
  return out;
}

std::vector<Vec3> deform(const std::vector<Vec3>& positions, const SkinnedRig& rig,
                         const Pose& pose) {
  return deform(positions, rig.weights, pose);
}

Mat3 deform_jacobian(const Eigen::MatrixXd& weights, int vertex, const Pose& pose) {
  Mat3 j = Mat3::Zero();
  for (int b = 0; b < weights.cols(); ++b) {
    double w = weights(vertex, b);
    if (w != 0.0) j += w * pose.bone_transforms[b].topLeftCorner<3, 3>();
  }
  return j;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& row) {
  // Sort-based Euclidean projection onto { w : w >= 0, sum w = 1 }.
  const int n = static_cast<int>(row.size());
  std::vector<double> u(row.data(), row.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cssv = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    cssv += u[i];
    double t = (cssv - 1.0) / (i + 1);
    if (u[i] - t > 0) {
      rho = i + 1;
      theta = t;
    }
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(row[i] - theta, 0.0);
  return out;
}

}  // namespace pica
