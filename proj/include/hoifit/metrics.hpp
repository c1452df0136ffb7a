#pragma once
#include <array>
#include <vector>

#include "hoifit/geom.hpp"
#include "hoifit/hand_model.hpp"

namespace hoifit {

struct EvalReport {
  double hand_mae = 0.0;        // mm, aligned keypoints
  double hand_vert_mae = 0.0;   // mm, aligned hand mesh vertices
  double chamfer = 0.0;         // mm, centroid-aligned directed-mean sum
  double f_score_5 = 0.0;       // at 5 mm
  double f_score_15 = 0.0;      // at 15 mm
  double collision_score = 0.0; // object-into-hand penetration sum, mm
  double ho_distance = 0.0;     // centroid distance, mm
};

// Mean euclidean error after alignment: both sets are centered on the point
// at root_index, the prediction is rescaled by the ratio of mean
// root-relative norms, and the per-point errors are averaged. Works for
// joint lists and full vertex clouds alike.
double hand_mae(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                int root_index = 0);
double hand_mae(const std::array<Vec3, kHandKeypoints>& pred,
                const std::array<Vec3, kHandKeypoints>& gt);

// Symmetric chamfer distance (mm, unsquared) after moving both point sets
// to a common centroid; sum of the two directed means.
double chamfer_distance(const std::vector<Vec3>& pred,
                        const std::vector<Vec3>& gt);

// F-score at tau mm after the same centroid alignment; 0 when precision and
// recall are both 0.
double f_score(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
               double tau);

// Penetration of object vertices into the hand mesh; identical to the
// penetration term the optimizer sees (same grid, same sum).
double collision_score(const TriMesh& hand, const std::vector<Vec3>& obj_verts);

// || mean(hand) - mean(obj) ||, identical to the interaction loss value.
double ho_distance(const std::vector<Vec3>& hand_verts,
                   const std::vector<Vec3>& obj_verts);

EvalReport evaluate(const std::array<Vec3, kHandKeypoints>& pred_joints,
                    const std::array<Vec3, kHandKeypoints>& gt_joints,
                    const TriMesh& pred_hand, const TriMesh& gt_hand,
                    const TriMesh& pred_obj, const TriMesh& gt_obj);

}  // namespace hoifit
