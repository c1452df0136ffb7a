#include "hoifit/losses.hpp"

#include <cmath>

#include "hoifit/errors.hpp"

namespace hoifit {

namespace {

// overflow-safe log(1 + exp(x)) and its derivative
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Keypoints2D::validate(int width, int height) const {
  for (int k = 0; k < kHandKeypoints; ++k) {
    const Vec3& p = pts[static_cast<size_t>(k)];
    const double conf = p.z();
    if (!(conf >= 0.0 && conf <= 1.0)) {
      throw ValidationError("keypoint " + std::to_string(k) +
                            ": confidence outside [0, 1]");
    }
    if (conf == 0.0) continue;  // position unused
    if (!(p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height)) {
      throw ValidationError("keypoint " + std::to_string(k) +
                            ": position outside the image");
    }
  }
}

KeypointLossGrad keypoint_loss(const std::array<Vec3, kHandKeypoints>& joints,
                               const PerspectiveCamera& cam,
                               const Keypoints2D& target,
                               const Eigen::Matrix<double, kHandBetas, 1>& beta,
                               double lambda_beta) {
  double wsum = 0.0;
  for (const Vec3& t : target.pts) wsum += t.z();
  if (!(wsum > 0.0)) {
    throw DegenerateEvidenceError("keypoint_loss: every confidence is zero");
  }

  KeypointLossGrad out;
  for (int k = 0; k < kHandKeypoints; ++k) {
    const Vec3& t = target.pts[static_cast<size_t>(k)];
    const double conf = t.z();
    if (conf == 0.0) continue;
    const Vec3& J = joints[static_cast<size_t>(k)];
    const Vec2 uv = project(cam, J);
    const Vec2 r = uv - Vec2(t.x(), t.y());
    out.loss += conf * r.squaredNorm();
    const Vec2 d_uv = (2.0 * conf / wsum) * r;
    out.d_joints[static_cast<size_t>(k)] =
        project_jacobian(cam, J).transpose() * d_uv;
  }
  out.loss /= wsum;
  out.loss += lambda_beta * beta.squaredNorm();
  out.d_beta = 2.0 * lambda_beta * beta;
  return out;
}

OrdinalDepthGrad ordinal_depth_loss(const LabelMask& evidence,
                                    const DepthRender& rend,
                                    const TriMesh& hand, const TriMesh& obj,
                                    const PerspectiveCamera& cam) {
  if (rend.layers.size() != 2) {
    throw ValidationError("ordinal_depth_loss: expected hand + object layers");
  }
  const DepthLayer& hl = rend.layers[0];
  const DepthLayer& ol = rend.layers[1];
  if (evidence.width != rend.labels.width ||
      evidence.height != rend.labels.height) {
    throw ValidationError("ordinal_depth_loss: evidence size mismatch");
  }

  OrdinalDepthGrad out;
  std::vector<std::pair<int, double>> d_hand_depth, d_obj_depth;
  const int n = evidence.width * evidence.height;
  for (int p = 0; p < n; ++p) {
    const int ev = evidence.labels[static_cast<size_t>(p)];
    if (ev == 0) continue;
    if (ev == rend.labels.labels[static_cast<size_t>(p)]) continue;
    const double dh = hl.depth.depth[static_cast<size_t>(p)];
    const double dob = ol.depth.depth[static_cast<size_t>(p)];
    if (!std::isfinite(dh) || !std::isfinite(dob)) continue;
    // evidence 1: hand should win, penalize dh - dob; 2: the reverse
    const double x = ev == 1 ? dh - dob : dob - dh;
    const double sgn = ev == 1 ? 1.0 : -1.0;
    out.loss += softplus(x);
    const double s = sigmoid(x);
    d_hand_depth.emplace_back(p, sgn * s);
    d_obj_depth.emplace_back(p, -sgn * s);
    ++out.pixels;
  }
  out.d_hand = depth_backward(hl, hand, cam, d_hand_depth);
  out.d_obj = depth_backward(ol, obj, cam, d_obj_depth);
  return out;
}

double ordinal_depth_value(const LabelMask& evidence, const LabelMask& rendered,
                           const DepthImage& hand_depth,
                           const DepthImage& obj_depth) {
  if (evidence.width != rendered.width || evidence.height != rendered.height ||
      evidence.width != hand_depth.width ||
      evidence.height != hand_depth.height ||
      evidence.width != obj_depth.width ||
      evidence.height != obj_depth.height) {
    throw ValidationError("ordinal_depth_value: image size mismatch");
  }
  double loss = 0.0;
  const int n = evidence.width * evidence.height;
  for (int p = 0; p < n; ++p) {
    const int ev = evidence.labels[static_cast<size_t>(p)];
    if (ev == 0) continue;
    if (ev == rendered.labels[static_cast<size_t>(p)]) continue;
    const double dh = hand_depth.depth[static_cast<size_t>(p)];
    const double dob = obj_depth.depth[static_cast<size_t>(p)];
    if (!std::isfinite(dh) || !std::isfinite(dob)) continue;
    loss += softplus(ev == 1 ? dh - dob : dob - dh);
  }
  return loss;
}

InteractionGrad interaction_loss(const std::vector<Vec3>& hand_verts,
                                 const std::vector<Vec3>& obj_verts) {
  if (hand_verts.empty() || obj_verts.empty()) {
    throw ValidationError("interaction_loss: empty vertex list");
  }
  Vec3 mh = Vec3::Zero(), mo = Vec3::Zero();
  for (const Vec3& v : hand_verts) mh += v;
  for (const Vec3& v : obj_verts) mo += v;
  mh /= static_cast<double>(hand_verts.size());
  mo /= static_cast<double>(obj_verts.size());

  InteractionGrad out;
  const Vec3 d = mh - mo;
  out.loss = d.norm();
  if (out.loss > 1e-12) {
    out.d_hand_mean = d / out.loss;
    out.d_obj_mean = -out.d_hand_mean;
  }
  return out;
}

JointObjectiveGrad joint_objective(const LabelMask& evidence,
                                   const TriMesh& hand, const TriMesh& obj,
                                   const PerspectiveCamera& cam,
                                   const LossWeights& w, bool with_grad) {
  JointObjectiveGrad out;
  const size_t nh = hand.vertices.size(), no = obj.vertices.size();
  out.d_hand.assign(nh, Vec3::Zero());
  out.d_obj.assign(no, Vec3::Zero());

  // ordinal depth
  const DepthRender rend =
      render_depth({{&hand, 1}, {&obj, 2}}, cam);
  if (with_grad) {
    OrdinalDepthGrad dg = ordinal_depth_loss(evidence, rend, hand, obj, cam);
    out.depth_term = dg.loss;
    for (size_t v = 0; v < nh; ++v) out.d_hand[v] += w.lambda_d * dg.d_hand[v];
    for (size_t v = 0; v < no; ++v) out.d_obj[v] += w.lambda_d * dg.d_obj[v];
  } else {
    out.depth_term = ordinal_depth_value(evidence, rend.labels,
                                         rend.layers[0].depth,
                                         rend.layers[1].depth);
  }

  // interaction
  const InteractionGrad ig = interaction_loss(hand.vertices, obj.vertices);
  out.interaction_term = ig.loss;
  if (with_grad) {
    const Vec3 gh = ig.d_hand_mean / static_cast<double>(nh);
    const Vec3 go = ig.d_obj_mean / static_cast<double>(no);
    for (size_t v = 0; v < nh; ++v) out.d_hand[v] += w.lambda_i * gh;
    for (size_t v = 0; v < no; ++v) out.d_obj[v] += w.lambda_i * go;
  }

  // penetration of object vertices into the hand; the grid is frozen, so no
  // gradient reaches the hand through this term
  const SdfGrid grid = build_grid(hand);
  if (with_grad) {
    std::vector<Vec3> d_pts;
    out.penetration_term = penetration_loss(grid, obj.vertices, &d_pts);
    for (size_t v = 0; v < no; ++v) out.d_obj[v] += w.lambda_p * d_pts[v];
  } else {
    out.penetration_term = penetration_loss(grid, obj.vertices, nullptr);
  }

  out.loss = w.lambda_d * out.depth_term + w.lambda_i * out.interaction_term +
             w.lambda_p * out.penetration_term;
  return out;
}

}  // namespace hoifit
