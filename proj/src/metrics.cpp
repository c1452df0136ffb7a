#include "hoifit/metrics.hpp"

#include <cmath>

#include "hoifit/errors.hpp"
#include "hoifit/losses.hpp"
#include "hoifit/refine.hpp"
#include "hoifit/sdf.hpp"

namespace hoifit {

namespace {

std::vector<Vec3> centered(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(p - c);
  return out;
}

}  // namespace

double hand_mae(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                int root_index) {
  if (pred.empty() || pred.size() != gt.size()) {
    throw ValidationError("hand_mae: point sets must be non-empty and equal size");
  }
  if (root_index < 0 || static_cast<size_t>(root_index) >= pred.size()) {
    throw ValidationError("hand_mae: root_index out of range");
  }
  const Vec3 proot = pred[static_cast<size_t>(root_index)];
  const Vec3 groot = gt[static_cast<size_t>(root_index)];
  double pnorm = 0.0, gnorm = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    pnorm += (pred[k] - proot).norm();
    gnorm += (gt[k] - groot).norm();
  }
  const double scale = pnorm > 0.0 ? gnorm / pnorm : 1.0;
  double err = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    err += (scale * (pred[k] - proot) - (gt[k] - groot)).norm();
  }
  return err / static_cast<double>(pred.size());
}

double hand_mae(const std::array<Vec3, kHandKeypoints>& pred,
                const std::array<Vec3, kHandKeypoints>& gt) {
  return hand_mae(std::vector<Vec3>(pred.begin(), pred.end()),
                  std::vector<Vec3>(gt.begin(), gt.end()), 0);
}

double chamfer_distance(const std::vector<Vec3>& pred,
                        const std::vector<Vec3>& gt) {
  if (pred.empty() || gt.empty()) {
    throw ValidationError("chamfer_distance: empty point set");
  }
  const std::vector<Vec3> p = centered(pred), g = centered(gt);
  const DistanceField pg = distance_field(p, g);
  const DistanceField gp = distance_field(g, p);
  double dp = 0.0, dg = 0.0;
  for (double d2 : pg.values) dp += std::sqrt(d2);
  for (double d2 : gp.values) dg += std::sqrt(d2);
  return dp / static_cast<double>(p.size()) + dg / static_cast<double>(g.size());
}

double f_score(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
               double tau) {
  if (pred.empty() || gt.empty()) {
    throw ValidationError("f_score: empty point set");
  }
  if (!(tau > 0.0)) throw ValidationError("f_score: tau must be positive");
  const std::vector<Vec3> p = centered(pred), g = centered(gt);
  const DistanceField pg = distance_field(p, g);
  const DistanceField gp = distance_field(g, p);
  const double t2 = tau * tau;
  int phit = 0, ghit = 0;
  for (double d2 : pg.values) phit += d2 <= t2 ? 1 : 0;
  for (double d2 : gp.values) ghit += d2 <= t2 ? 1 : 0;
  const double precision = static_cast<double>(phit) / static_cast<double>(p.size());
  const double recall = static_cast<double>(ghit) / static_cast<double>(g.size());
  if (precision == 0.0 && recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double collision_score(const TriMesh& hand, const std::vector<Vec3>& obj_verts) {
  const SdfGrid grid = build_grid(hand);
  return penetration_loss(grid, obj_verts, nullptr);
}

double ho_distance(const std::vector<Vec3>& hand_verts,
                   const std::vector<Vec3>& obj_verts) {
  return interaction_loss(hand_verts, obj_verts).loss;
}

EvalReport evaluate(const std::array<Vec3, kHandKeypoints>& pred_joints,
                    const std::array<Vec3, kHandKeypoints>& gt_joints,
                    const TriMesh& pred_hand, const TriMesh& gt_hand,
                    const TriMesh& pred_obj, const TriMesh& gt_obj) {
  EvalReport r;
  r.hand_mae = hand_mae(pred_joints, gt_joints);
  r.hand_vert_mae = hand_mae(pred_hand.vertices, gt_hand.vertices, 0);
  r.chamfer = chamfer_distance(pred_obj.vertices, gt_obj.vertices);
  r.f_score_5 = f_score(pred_obj.vertices, gt_obj.vertices, 5.0);
  r.f_score_15 = f_score(pred_obj.vertices, gt_obj.vertices, 15.0);
  r.collision_score = collision_score(pred_hand, pred_obj.vertices);
  r.ho_distance = ho_distance(pred_hand.vertices, pred_obj.vertices);
  return r;
}

}  // namespace hoifit
