#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hoifit/geom.hpp"

namespace hoifit {

inline constexpr int kHandJoints = 16;       // wrist + 3 per finger
inline constexpr int kHandThetaJoints = 15;  // articulated (all but root)
inline constexpr int kHandBetas = 10;
inline constexpr int kHandKeypoints = 21;    // 16 joints + 5 fingertips
inline constexpr int kHandParamDim = 61;     // 3 + 45 + 10 + 3

// Linear-blend-skinned hand. Vertex count is arbitrary; joint layout is
// fixed at 16 with parents[0] == -1 and parents[j] < j.
struct HandModel {
  std::vector<Vec3> template_verts;                      // V
  std::vector<Eigen::Matrix<double, 3, kHandBetas>> shape_basis;  // V
  Eigen::MatrixXd joint_regressor;                       // 16 x V, rows sum 1
  std::array<int, kHandJoints> parents;
  Eigen::MatrixXd skin_weights;                          // V x 16, rows sum 1
  std::array<int, 5> tip_vertex_ids;
  std::vector<std::array<int, 3>> faces;

  int num_vertices() const { return static_cast<int>(template_verts.size()); }
  void validate() const;  // throws ValidationError with the failing field
};

// Eigen types do not zero themselves on value-init, hence the explicit fill.
inline std::array<Vec3, kHandThetaJoints> zero_theta() {
  std::array<Vec3, kHandThetaJoints> a;
  a.fill(Vec3::Zero());
  return a;
}

struct HandParams {
  Vec3 global_rot = Vec3::Zero();                       // about the posed wrist
  std::array<Vec3, kHandThetaJoints> theta = zero_theta();  // per-joint axis-angle
  Eigen::Matrix<double, kHandBetas, 1> beta = Eigen::Matrix<double, kHandBetas, 1>::Zero();
  WeakPerspective wp;
};

// Flat parameter vector [global_rot, theta, beta, tx, ty, log s]; the scale
// enters optimization in log space so it stays positive.
Eigen::Matrix<double, kHandParamDim, 1> pack_hand_params(const HandParams& p);
HandParams unpack_hand_params(
    const Eigen::Matrix<double, kHandParamDim, 1>& x);

// Forward pass output plus everything the backward pass reuses.
struct HandForward {
  TriMesh mesh;                               // posed, camera frame, mm
  std::array<Vec3, kHandKeypoints> joints21;  // 16 joints then 5 tips

  // cache
  std::vector<Vec3> shaped;            // template + blendshapes
  std::array<Vec3, kHandJoints> rest_joints;
  std::array<Mat3, kHandJoints> R;     // world (chained) joint rotations
  std::array<Vec3, kHandJoints> posed_joints;
  Mat3 R_global;
  Vec3 pivot;                          // posed wrist before global rotation
  Vec3 offset;                         // camera-frame translation
  std::vector<Vec3> skinned;           // after LBS, before global rot
};

// Composition order: blendshapes -> joint regression -> LBS over the theta
// chain -> global rotation about the posed wrist -> weak-perspective camera
// offset (tx/s, ty/s, f/s).
HandForward hand_forward(const HandModel& model, const HandParams& params,
                         double focal);

struct HandGrad {
  Vec3 d_global_rot = Vec3::Zero();
  std::array<Vec3, kHandThetaJoints> d_theta = zero_theta();
  Eigen::Matrix<double, kHandBetas, 1> d_beta = Eigen::Matrix<double, kHandBetas, 1>::Zero();
  double d_tx = 0.0, d_ty = 0.0, d_s = 0.0;  // d_s w.r.t. s itself

  Eigen::Matrix<double, kHandParamDim, 1> pack_log_s(double s) const;
};

// Pulls gradients w.r.t. mesh vertices and the 21 keypoints back to the
// parameters. Either input may be empty/zero.
HandGrad hand_backward(const HandModel& model, const HandParams& params,
                       const HandForward& fwd, double focal,
                       const std::vector<Vec3>& d_vertices,
                       const std::array<Vec3, kHandKeypoints>& d_joints21);

HandModel load_hand_model(const std::string& path);
void save_hand_model(const std::string& path, const HandModel& model);

// Procedural articulated hand for synthetic scenes: palm block plus five
// 3-segment fingers, ~70 mm across. complexity scales tessellation.
HandModel generate_synthetic_model(std::uint64_t seed, int complexity = 2);

}  // namespace hoifit
