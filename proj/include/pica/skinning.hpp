#pragma once

#include <string>
#include <vector>

#include "pica/mesh.hpp"
#include "pica/types.hpp"

namespace pica {

struct Bone {
  std::string name;
  int parent = -1;        // parent index, < own index
  Mat4 rest = Mat4::Identity();
};

// Bone hierarchy with per-vertex blend weights. Weights are stored dense
// (vertices x bones); rows are nonnegative and sum to 1.
struct SkinnedRig {
  std::vector<Bone> bones;
  Eigen::MatrixXd weights;

  int num_bones() const { return static_cast<int>(bones.size()); }
};

struct Pose {
  int frame = 0;
  std::vector<Mat4> bone_transforms;      // rigid, one per bone
  std::vector<Vec3> offsets;              // optional per-vertex canonical-space deltas

  static Pose identity(int num_bones, int frame = 0);
};

constexpr double kWeightRowTolerance = 1e-6;

SkinnedRig load_rig(const std::string& path);
void save_rig(const std::string& path, const SkinnedRig& rig);

std::vector<Pose> load_animation(const std::string& path, int num_bones);
void save_animation(const std::string& path, const std::vector<Pose>& poses);

// Throws FormatError when a transform is not rigid within 1e-6 or a weight
// row does not sum to 1 within kWeightRowTolerance.
void validate_rig(const SkinnedRig& rig);
void validate_pose(const Pose& pose);

// Clothing blend weights: each clothing vertex copies the weight row of its
// nearest body vertex.
Eigen::MatrixXd init_blend_weights(const TriMesh& clothing, const TriMesh& body,
                                   const SkinnedRig& body_rig);

// p' = sum_i w_i G_i (p + dp). Offsets may be empty (treated as zero).
std::vector<Vec3> deform(const std::vector<Vec3>& positions, const Eigen::MatrixXd& weights,
                         const Pose& pose);
std::vector<Vec3> deform(const std::vector<Vec3>& positions, const SkinnedRig& rig,
                         const Pose& pose);

// Jacobian of deform w.r.t. the per-vertex offset: sum_i w_i R_i.
Mat3 deform_jacobian(const Eigen::MatrixXd& weights, int vertex, const Pose& pose);

// Euclidean projection of a weight row onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& row);

Mat4 rigid_transform(const Mat3& rotation, const Vec3& translation);

}  // namespace pica
