#include "pica/camera.hpp"

#include <cstdio>
#include <fstream>

namespace pica {

void validate_camera(const Camera& cam) {
  if (cam.fx <= 0 || cam.fy <= 0) throw FormatError("camera: focal lengths must be positive");
  if (cam.width <= 0 || cam.height <= 0) throw FormatError("camera: bad resolution");
  Mat3 r = cam.world_to_camera.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6)
    throw FormatError("camera: world_to_camera is not rigid");
}

Camera load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open camera file: " + path);
  Camera cam;
  if (!(in >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height))
    throw FormatError(path + ": bad camera intrinsics line");
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> cam.world_to_camera(r, c)))
        throw FormatError(path + ": bad world-to-camera matrix");
  validate_camera(cam);
  return cam;
}

void save_camera(const std::string& path, const Camera& cam) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write camera file: " + path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %d %d\n", cam.fx, cam.fy, cam.cx,
                cam.cy, cam.width, cam.height);
  out << buf;
  for (int r = 0; r < 4; ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", cam.world_to_camera(r, 0),
                  cam.world_to_camera(r, 1), cam.world_to_camera(r, 2), cam.world_to_camera(r, 3));
    out << buf;
  }
}

Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double focal_px,
                          int width, int height) {
  Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up).normalized();
  Vec3 down = forward.cross(right);
  Mat3 r;  // camera axes: +x right, +y down, +z forward
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  Camera cam;
  cam.fx = cam.fy = focal_px;
  cam.cx = width * 0.5;
  cam.cy = height * 0.5;
  cam.width = width;
  cam.height = height;
  cam.world_to_camera = Mat4::Identity();
  cam.world_to_camera.topLeftCorner<3, 3>() = r;
  cam.world_to_camera.topRightCorner<3, 1>() = -r * eye;
  validate_camera(cam);
  return cam;
}

}  // namespace pica
