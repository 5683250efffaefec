#pragma once

#include <string>
#include <vector>

#include "pica/gaussians.hpp"
#include "pica/mesh.hpp"
#include "pica/skinning.hpp"
#include "pica/splat.hpp"
#include "pica/types.hpp"

namespace pica {

// Double-layer avatar: body and clothing meshes, their anchored Gaussians,
// the skinning data, and the appearance model. Per-frame non-rigid offsets
// are indexed by animation frame order and may be empty.
struct Avatar {
  TriMesh body, clothing;
  std::vector<Vec3> body_init;  // canonical body at initialization, for the distance loss
  SkinnedRig rig;
  Eigen::MatrixXd clothing_weights;
  std::vector<AnchoredGaussian> gaussians;  // body and clothing mixed, tagged by layer_label
  ColorModel color;
  std::vector<std::vector<Vec3>> body_offsets, clothing_offsets;

  Pose pose_at(int frame, const std::vector<Pose>& animation) const;
  Pose clothing_pose_at(int frame, const std::vector<Pose>& animation) const;

  int num_gaussians() const { return static_cast<int>(gaussians.size()); }
};

// Builds a fresh avatar: Gaussians sampled on both meshes, clothing blend
// weights from nearest body vertices, neutral gray appearance.
Avatar make_avatar(TriMesh body, TriMesh clothing, SkinnedRig rig, int per_face = 13);

// Directory layout: gaussians/gaussians.txt (records with appearance
// features), gaussians/pose_correction.txt, meshes/body.obj,
// meshes/clothing.obj, meshes/body_init.obj, rig.txt, clothing_weights.txt,
// offsets.txt (optional).
void save_avatar(const std::string& dir, const Avatar& avatar);
Avatar load_avatar(const std::string& dir);

}  // namespace pica
