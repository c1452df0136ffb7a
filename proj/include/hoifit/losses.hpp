#pragma once
#include <array>
#include <vector>

#include "hoifit/geom.hpp"
#include "hoifit/hand_model.hpp"
#include "hoifit/raster.hpp"
#include "hoifit/sdf.hpp"

namespace hoifit {

struct LossWeights {
  double lambda_d = 20.0;     // ordinal depth
  double lambda_i = 1000.0;   // interaction
  double lambda_p = 5.0;      // penetration
  double lambda_beta = 10.0;  // shape regularizer (hand stage)
};

// 21 image keypoints (u, v, confidence in [0, 1]), hand keypoint order:
// wrist, then MCP/PIP/DIP per finger (thumb, index, middle, ring, pinky),
// then the five fingertips in the same finger order.
inline std::array<Vec3, kHandKeypoints> zero_keypoints() {
  std::array<Vec3, kHandKeypoints> a;
  a.fill(Vec3::Zero());
  return a;
}

struct Keypoints2D {
  std::array<Vec3, kHandKeypoints> pts = zero_keypoints();  // (u, v, conf)
  void validate(int width, int height) const;
};

struct KeypointLossGrad {
  double loss = 0.0;
  std::array<Vec3, kHandKeypoints> d_joints = zero_keypoints();
  Eigen::Matrix<double, kHandBetas, 1> d_beta =
      Eigen::Matrix<double, kHandBetas, 1>::Zero();
};

// Confidence-weighted mean squared reprojection error (px^2) plus
// lambda_beta * |beta|^2. Weights are normalized by their sum; throws
// DegenerateEvidenceError when every confidence is zero.
KeypointLossGrad keypoint_loss(const std::array<Vec3, kHandKeypoints>& joints,
                               const PerspectiveCamera& cam,
                               const Keypoints2D& target,
                               const Eigen::Matrix<double, kHandBetas, 1>& beta,
                               double lambda_beta);

// Ordinal depth: at pixels where the rendered front label disagrees with the
// evidence label, softplus-penalize the depth ordering implied by the
// evidence (label 1: hand should be in front, 2: object, 0: skipped).
// Gradients flow to both meshes through the stored face assignments.
struct OrdinalDepthGrad {
  double loss = 0.0;
  std::vector<Vec3> d_hand;  // per hand vertex
  std::vector<Vec3> d_obj;
  int pixels = 0;  // disagreeing pixels with both depths defined
};

OrdinalDepthGrad ordinal_depth_loss(const LabelMask& evidence,
                                    const DepthRender& rend,
                                    const TriMesh& hand, const TriMesh& obj,
                                    const PerspectiveCamera& cam);

// Value-only variant for prebuilt depth images (hand = layer 0, obj = 1).
double ordinal_depth_value(const LabelMask& evidence, const LabelMask& rendered,
                           const DepthImage& hand_depth,
                           const DepthImage& obj_depth);

// || mean(hand) - mean(obj) ||_2 in mm (unsquared).
struct InteractionGrad {
  double loss = 0.0;
  Vec3 d_hand_mean = Vec3::Zero();  // per-vertex grad = this / n_hand
  Vec3 d_obj_mean = Vec3::Zero();
};
InteractionGrad interaction_loss(const std::vector<Vec3>& hand_verts,
                                 const std::vector<Vec3>& obj_verts);

// Joint arrangement objective (weighted depth + interaction + penetration)
// evaluated at explicit meshes; the hand SDF is rebuilt per call.
struct JointObjectiveGrad {
  double loss = 0.0;
  double depth_term = 0.0;        // unweighted
  double interaction_term = 0.0;  // unweighted, mm
  double penetration_term = 0.0;  // unweighted, mm
  std::vector<Vec3> d_hand;
  std::vector<Vec3> d_obj;
};

JointObjectiveGrad joint_objective(const LabelMask& evidence,
                                   const TriMesh& hand, const TriMesh& obj,
                                   const PerspectiveCamera& cam,
                                   const LossWeights& w, bool with_grad = true);

}  // namespace hoifit
