#pragma once
#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hoifit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// All 3D coordinates are millimeters, camera frame: x right, y down,
// z forward (visible points have z > 0). Pixels are (u, v) with u right,
// v down; pixel (i, j) has center (i + 0.5, j + 0.5) in that frame.

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  Vec3 centroid() const;  // vertex mean
  void bounds(Vec3& lo, Vec3& hi) const;
  // Throws ValidationError on out-of-range indices or empty vertex list.
  void validate() const;
};

struct PerspectiveCamera {
  double f = 1000.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

// u = f*x/z + cx. Throws BehindCameraError if z <= 0.
Vec2 project(const PerspectiveCamera& cam, const Vec3& p);
// d(u,v)/d(x,y,z), for p with z > 0.
Eigen::Matrix<double, 2, 3> project_jacobian(const PerspectiveCamera& cam,
                                             const Vec3& p);

// Weak-perspective hand alignment: scale s (px/mm at the hand's depth) and
// image-plane offset (tx, ty) in px.
struct WeakPerspective {
  double tx = 0.0;
  double ty = 0.0;
  double s = 1.0;
};

// Camera-frame offset that reproduces a weak-perspective fit under the real
// camera: (tx/s, ty/s, f/s) when offsets are converted to mm at depth f/s.
Vec3 weak_to_perspective_offset(const WeakPerspective& wp, double focal);

// Object pose: world = scale * (R(rotation) * v + translation).
struct ObjectPose {
  double scale = 1.0;
  Vec3 rotation = Vec3::Zero();     // axis-angle, radians
  Vec3 translation = Vec3::Zero();  // mm (pre-scale frame)
};

Mat3 rodrigues(const Vec3& r);
// out[i] = dR/dr_i. Exact near r = 0 (series expansion of the coefficients).
void rodrigues_jacobian(const Vec3& r, std::array<Mat3, 3>& out);

TriMesh apply_object_pose(const TriMesh& mesh, const ObjectPose& pose);

struct ObjectPoseGrad {
  double d_scale = 0.0;
  Vec3 d_rotation = Vec3::Zero();
  Vec3 d_translation = Vec3::Zero();
};

// Pulls per-posed-vertex gradients back to the pose parameters.
ObjectPoseGrad apply_object_pose_backward(const TriMesh& mesh,
                                          const ObjectPose& pose,
                                          const std::vector<Vec3>& d_vertices);

// Warns to stderr (once per call) when the mesh exceeds this; fitting cost is
// linear in face count.
inline constexpr int kFaceCountWarnThreshold = 2000;

}  // namespace hoifit
