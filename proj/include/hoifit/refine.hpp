#pragma once
#include <cstdint>
#include <vector>

#include "hoifit/geom.hpp"
#include "hoifit/hand_model.hpp"

namespace hoifit {

// Squared distance (mm^2) from each hand vertex to its nearest object
// point, with the minimizing point recorded.
struct DistanceField {
  std::vector<double> values;
  std::vector<int> nearest;  // index into the object point set
};

// Per-hand-vertex contact likelihood in [0, 1].
struct ContactPrior {
  std::vector<double> weights;
  void validate(int num_hand_verts) const;
};

// Exact nearest neighbors via a spatial hash; matches brute force bit for
// bit. object_points must be nonempty.
DistanceField distance_field(const std::vector<Vec3>& hand_verts,
                             const std::vector<Vec3>& object_points);

// Deterministic resampling of a mesh surface to exactly n points:
// subsamples vertices when there are more, otherwise keeps all vertices and
// adds area-weighted uniform surface samples.
std::vector<Vec3> resample_surface(const TriMesh& mesh, int n,
                                   std::uint64_t seed);

struct RefineConfig {
  int outer_iters = 3;
  int inner_steps = 50;
  double step_size = 1e-3;
  double lambda_theta = 1.0;  // pull toward the incoming articulation
  double lambda_pen = 5.0;
  int max_object_points = 10000;
  std::uint64_t seed = 0;
};

// Contact refinement: per outer iteration the hand mesh and distance field
// are rebuilt, nearest assignments freeze, and prior-weighted contact energy
// plus penetration and articulation priors are minimized over theta, the
// global rotation and the weak-perspective alignment. An iterate that
// increases the penetration term beyond the incoming level is rejected.
HandParams refine_hand(const HandModel& model, const HandParams& init,
                       const TriMesh& object, const ContactPrior& prior,
                       double focal, const RefineConfig& cfg,
                       double* final_energy = nullptr);

}  // namespace hoifit
