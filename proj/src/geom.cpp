#include "hoifit/geom.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hoifit/errors.hpp"

namespace hoifit {

Vec3 TriMesh::centroid() const {
  if (vertices.empty()) throw ValidationError("centroid of empty mesh");
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

void TriMesh::bounds(Vec3& lo, Vec3& hi) const {
  if (vertices.empty()) throw ValidationError("bounds of empty mesh");
  lo = hi = vertices[0];
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

void TriMesh::validate() const {
  if (vertices.empty()) throw ValidationError("mesh has no vertices");
  const int n = static_cast<int>(vertices.size());
  for (size_t fi = 0; fi < faces.size(); ++fi) {
    for (int k = 0; k < 3; ++k) {
      const int idx = faces[fi][k];
      if (idx < 0 || idx >= n) {
        throw ValidationError("face " + std::to_string(fi) +
                              " references vertex " + std::to_string(idx) +
                              " outside [0, " + std::to_string(n) + ")");
      }
    }
  }
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw ValidationError("mesh has non-finite vertex");
  }
}

Vec2 project(const PerspectiveCamera& cam, const Vec3& p) {
  if (!(p.z() > 0.0)) {
    throw BehindCameraError("projection of point with z = " +
                            std::to_string(p.z()) + " <= 0");
  }
  return {cam.f * p.x() / p.z() + cam.cx, cam.f * p.y() / p.z() + cam.cy};
}

Eigen::Matrix<double, 2, 3> project_jacobian(const PerspectiveCamera& cam,
                                             const Vec3& p) {
  if (!(p.z() > 0.0)) {
    throw BehindCameraError("projection jacobian at z <= 0");
  }
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> J;
  J << cam.f * iz, 0.0, -cam.f * p.x() * iz * iz,
       0.0, cam.f * iz, -cam.f * p.y() * iz * iz;
  return J;
}

Vec3 weak_to_perspective_offset(const WeakPerspective& wp, double focal) {
  if (!(wp.s > 0.0)) {
    throw ValidationError("weak-perspective scale must be positive, got " +
                          std::to_string(wp.s));
  }
  return {wp.tx / wp.s, wp.ty / wp.s, focal / wp.s};
}

namespace {
inline Mat3 skew(const Vec3& v) {
  Mat3 K;
  K << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return K;
}
}  // namespace

Mat3 rodrigues(const Vec3& r) {
  const double t2 = r.squaredNorm();
  const Mat3 K = skew(r);
  double a, b;
  if (t2 < 1e-16) {
    // sin(t)/t and (1-cos(t))/t^2 small-angle series
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  return Mat3::Identity() + a * K + b * (K * K);
}

void rodrigues_jacobian(const Vec3& r, std::array<Mat3, 3>& out) {
  // R = I + a K + b K^2 with a = sin t / t, b = (1 - cos t)/t^2, t = |r|.
  // dR/dr_i = (da/dt)(r_i/t) K + a E_i + (db/dt)(r_i/t) K^2 + b (E_i K + K E_i)
  // where E_i = skew(e_i). c1 = (da/dt)/t and c2 = (db/dt)/t stay finite at 0.
  const double t2 = r.squaredNorm();
  double a, b, c1, c2;
  if (t2 < 1e-10) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    c1 = -1.0 / 3.0 + t2 / 30.0;
    c2 = -1.0 / 12.0 + t2 / 180.0;
  } else {
    const double t = std::sqrt(t2);
    const double st = std::sin(t), ct = std::cos(t);
    a = st / t;
    b = (1.0 - ct) / t2;
    c1 = (t * ct - st) / (t2 * t);
    c2 = (t * st - 2.0 * (1.0 - ct)) / (t2 * t2);
  }
  const Mat3 K = skew(r);
  const Mat3 K2 = K * K;
  for (int i = 0; i < 3; ++i) {
    const Mat3 Ei = skew(Vec3::Unit(i));
    out[i] = c1 * r[i] * K + a * Ei + c2 * r[i] * K2 + b * (Ei * K + K * Ei);
  }
}

TriMesh apply_object_pose(const TriMesh& mesh, const ObjectPose& pose) {
  if (!(pose.scale > 0.0)) {
    throw ValidationError("object scale must be positive, got " +
                          std::to_string(pose.scale));
  }
  const Mat3 R = rodrigues(pose.rotation);
  TriMesh out;
  out.faces = mesh.faces;
  out.vertices.resize(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    out.vertices[i] = pose.scale * (R * mesh.vertices[i] + pose.translation);
  }
  return out;
}

ObjectPoseGrad apply_object_pose_backward(
    const TriMesh& mesh, const ObjectPose& pose,
    const std::vector<Vec3>& d_vertices) {
  if (d_vertices.size() != mesh.vertices.size()) {
    throw InternalError("pose backward: gradient size mismatch");
  }
  const Mat3 R = rodrigues(pose.rotation);
  std::array<Mat3, 3> dR;
  rodrigues_jacobian(pose.rotation, dR);
  ObjectPoseGrad g;
  Vec3 d_rv = Vec3::Zero();   // sum over verts of dL/dv* . (dv*/dRv) parts
  Mat3 dL_dR = Mat3::Zero();  // accumulated via outer products
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const Vec3& gv = d_vertices[i];
    // v* = s (R v + T)
    g.d_scale += gv.dot(R * v + pose.translation);
    g.d_translation += pose.scale * gv;
    dL_dR += (pose.scale * gv) * v.transpose();
  }
  for (int k = 0; k < 3; ++k) {
    d_rv[k] = (dL_dR.array() * dR[k].array()).sum();
  }
  g.d_rotation = d_rv;
  return g;
}

}  // namespace hoifit
