#pragma once
#include <cstdint>
#include <limits>
#include <vector>

#include "hoifit/geom.hpp"

namespace hoifit {

inline constexpr int kMaxRenderDim = 256;

struct SoftMask {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, [0, 1]
  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

struct BinaryMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> values;  // 0 or 1
  int at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

struct LabelMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> labels;  // 0 background, 1 hand, 2 object
  int at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> depth;  // +inf where empty, else camera z > 0
  double at(int x, int y) const { return depth[static_cast<size_t>(y) * width + x]; }
  static constexpr double kEmpty = std::numeric_limits<double>::infinity();
};

// Occupancy probability per pixel: p_j = sigmoid(delta_j / sigma) per face,
// delta_j the signed 2D distance (px, positive inside) from the pixel center
// to face j's projected triangle, aggregated as 1 - prod_j (1 - p_j).
// Faces contribute only within kSigmoidSupport sigmas of their boundary; the
// sigmoid is shifted and rescaled to reach exactly zero there, keeping the
// function continuous.
inline constexpr double kSigmoidSupport = 4.0;

// Throws BehindCameraError if any vertex has z <= 0, ClippedGeometryError if
// any projected vertex falls outside the image, ValidationError if the image
// exceeds kMaxRenderDim.
SoftMask render_soft_mask(const TriMesh& mesh, const PerspectiveCamera& cam,
                          double sigma);

// d(loss)/d(vertex) given d(loss)/d(mask value); recomputes the forward pass
// internally, so `mask` must be the unmodified output for this mesh/sigma.
std::vector<Vec3> soft_mask_backward(const TriMesh& mesh,
                                     const PerspectiveCamera& cam, double sigma,
                                     const SoftMask& mask,
                                     const std::vector<double>& d_values);

// MSE against a binary target plus its gradient w.r.t. mask values.
double mask_loss(const SoftMask& mask, const BinaryMask& target);
double mask_loss_backward(const SoftMask& mask, const BinaryMask& target,
                          std::vector<double>& d_values);

// Hard z-buffer depth render of several labeled meshes. Per pixel the
// nearest surface wins across all meshes; per mesh the nearest of its own
// faces is also kept so occluded-layer depths are available to losses.
struct DepthLayer {
  DepthImage depth;
  std::vector<std::int32_t> face;  // -1 where empty
  std::vector<double> w0, w1;      // perspective-correct barycentrics
};

struct DepthRender {
  LabelMask labels;                // label of the winning mesh, 0 if none
  std::vector<DepthLayer> layers;  // parallel to the input mesh list
};

struct LabeledMesh {
  const TriMesh* mesh;
  std::uint8_t label;  // nonzero
};

DepthRender render_depth(const std::vector<LabeledMesh>& meshes,
                         const PerspectiveCamera& cam);

// Gradient of per-pixel depths at the fixed face assignment stored in the
// layer. d_depth lists (pixel index, d loss / d depth) pairs.
std::vector<Vec3> depth_backward(const DepthLayer& layer, const TriMesh& mesh,
                                 const PerspectiveCamera& cam,
                                 const std::vector<std::pair<int, double>>& d_depth);

}  // namespace hoifit
