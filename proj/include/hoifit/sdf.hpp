#pragma once
#include <vector>

#include "hoifit/geom.hpp"

namespace hoifit {

// Voxelized penetration field of a closed mesh on a fixed 32^3 grid:
// phi(c) = -min(sdf(c), 0), i.e. zero outside and on the surface, and the
// distance (mm) to the surface inside. Grid covers the mesh bounds plus a
// one-cell margin; cubic cells.
struct SdfGrid {
  static constexpr int kDim = 32;
  Vec3 origin;       // corner of cell (0,0,0); centers at origin + (i+.5)h
  double cell_size;  // mm, identical along all axes
  std::vector<double> phi;  // kDim^3, x fastest

  double at(int i, int j, int k) const {
    return phi[(static_cast<size_t>(k) * kDim + j) * kDim + i];
  }
};

// Inside test uses signed ray-crossing counts, so faces must be consistently
// oriented (outward); overlapping closed components are handled.
SdfGrid build_grid(const TriMesh& mesh);

struct SdfSample {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();  // d value / d point, zero outside the grid
};

// Trilinear interpolation of phi; identically zero (with zero gradient)
// outside the cell-center hull.
SdfSample sample(const SdfGrid& grid, const Vec3& p);

// sum over points of phi(p); d_points accumulates the gradient when given.
double penetration_loss(const SdfGrid& grid, const std::vector<Vec3>& points,
                        std::vector<Vec3>* d_points = nullptr);

}  // namespace hoifit
