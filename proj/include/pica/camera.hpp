#pragma once

#include <string>

#include "pica/types.hpp"

namespace pica {

struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;  // pixels
  int width = 0, height = 0;
  Mat4 world_to_camera = Mat4::Identity();  // rigid

  Vec3 center() const {
    Mat3 r = world_to_camera.topLeftCorner<3, 3>();
    Vec3 t = world_to_camera.topRightCorner<3, 1>();
    return -r.transpose() * t;
  }
};

void validate_camera(const Camera& cam);

// Text format: `fx fy cx cy w h` then the 4x4 world-to-camera, row-major.
Camera load_camera(const std::string& path);
void save_camera(const std::string& path, const Camera& cam);

// Simple look-at constructor used by fixtures and tools. `up` must not be
// parallel to the view direction.
Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double focal_px,
                          int width, int height);

}  // namespace pica
