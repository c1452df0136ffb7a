#include "hoifit/raster.hpp"

#include <cmath>
#include <string>

#include "hoifit/errors.hpp"

namespace hoifit {

namespace {

void check_render_target(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("render target must be positive-sized");
  }
  if (width > kMaxRenderDim || height > kMaxRenderDim) {
    throw ValidationError("render target " + std::to_string(width) + "x" +
                          std::to_string(height) + " exceeds cap of " +
                          std::to_string(kMaxRenderDim));
  }
}

// Projects every vertex, enforcing z > 0 and on-screen position.
std::vector<Vec2> project_all(const TriMesh& mesh,
                              const PerspectiveCamera& cam) {
  std::vector<Vec2> proj(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    if (!(p.z() > 0.0)) {
      throw BehindCameraError("vertex " + std::to_string(i) +
                              " has z = " + std::to_string(p.z()) + " <= 0");
    }
    const Vec2 uv(cam.f * p.x() / p.z() + cam.cx,
                  cam.f * p.y() / p.z() + cam.cy);
    if (uv.x() < 0.0 || uv.x() > cam.width || uv.y() < 0.0 ||
        uv.y() > cam.height) {
      throw ClippedGeometryError(
          "vertex " + std::to_string(i) + " projects to (" +
          std::to_string(uv.x()) + ", " + std::to_string(uv.y()) +
          ") outside the " + std::to_string(cam.width) + "x" +
          std::to_string(cam.height) + " image");
    }
    proj[i] = uv;
  }
  return proj;
}

struct FaceGeom {
  Vec2 a[3];      // projected corners
  Vec2 e[3];      // edge vectors a[i] -> a[(i+1)%3]
  double inv_l2[3];
  double orient;  // sign of the doubled signed area, 0 if degenerate
  double min_u, max_u, min_v, max_v;
};

FaceGeom face_geom(const std::vector<Vec2>& proj,
                   const std::array<int, 3>& f) {
  FaceGeom g;
  for (int k = 0; k < 3; ++k) g.a[k] = proj[static_cast<size_t>(f[k])];
  for (int k = 0; k < 3; ++k) {
    g.e[k] = g.a[(k + 1) % 3] - g.a[k];
    const double l2 = g.e[k].squaredNorm();
    g.inv_l2[k] = l2 > 0.0 ? 1.0 / l2 : 0.0;
  }
  const double area2 =
      g.e[0].x() * (g.a[2].y() - g.a[0].y()) - g.e[0].y() * (g.a[2].x() - g.a[0].x());
  g.orient = area2 > 0.0 ? 1.0 : (area2 < 0.0 ? -1.0 : 0.0);
  g.min_u = std::min({g.a[0].x(), g.a[1].x(), g.a[2].x()});
  g.max_u = std::max({g.a[0].x(), g.a[1].x(), g.a[2].x()});
  g.min_v = std::min({g.a[0].y(), g.a[1].y(), g.a[2].y()});
  g.max_v = std::max({g.a[0].y(), g.a[1].y(), g.a[2].y()});
  return g;
}

// Signed distance (px, positive inside) from q to the triangle boundary,
// with the minimizing edge and its segment parameter for the backward pass.
struct SignedDist {
  double delta;
  int edge;
  double t;
};

inline SignedDist signed_dist(const FaceGeom& g, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  int best_edge = 0;
  double best_t = 0.0;
  bool inside = g.orient != 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2 w = q - g.a[k];
    const double cross = g.e[k].x() * w.y() - g.e[k].y() * w.x();
    if (cross * g.orient < 0.0) inside = false;
    double t = (w.dot(g.e[k])) * g.inv_l2[k];
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const Vec2 d = w - t * g.e[k];
    const double d2 = d.squaredNorm();
    if (d2 < best) {
      best = d2;
      best_edge = k;
      best_t = t;
    }
  }
  const double dist = std::sqrt(best);
  return {inside ? dist : -dist, best_edge, best_t};
}

// 1 - sigmoid support complement, rescaled to hit exactly zero at the
// support boundary: q = (1 - sigmoid(x)) / (1 - c0); p = 1 - q.
struct SigmoidShift {
  double c0;      // sigmoid(-kSigmoidSupport)
  double inv_1mc0;
  double one_minus_p(double x) const {
    const double s = x > 0.0 ? std::exp(-x) / (1.0 + std::exp(-x))
                             : 1.0 / (1.0 + std::exp(x));
    return s * inv_1mc0;  // (1 - sigmoid(x)) / (1 - c0)
  }
  // d p / d x
  double dp_dx(double x) const {
    const double ax = std::abs(x);
    const double e = std::exp(-ax);
    const double sp = e / ((1.0 + e) * (1.0 + e));  // sigmoid'(x)
    return sp * inv_1mc0;
  }
};

SigmoidShift make_shift() {
  const double c0 = 1.0 / (1.0 + std::exp(kSigmoidSupport));
  return {c0, 1.0 / (1.0 - c0)};
}

}  // namespace

SoftMask render_soft_mask(const TriMesh& mesh, const PerspectiveCamera& cam,
                          double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  check_render_target(cam.width, cam.height);
  mesh.validate();
  const std::vector<Vec2> proj = project_all(mesh, cam);
  const SigmoidShift sh = make_shift();
  const double pad = kSigmoidSupport * sigma;
  const double inv_sigma = 1.0 / sigma;

  SoftMask out;
  out.width = cam.width;
  out.height = cam.height;
  // running product of (1 - p_j); value = 1 - product
  std::vector<double> prod(static_cast<size_t>(cam.width) * cam.height, 1.0);

  for (const auto& f : mesh.faces) {
    const FaceGeom g = face_geom(proj, f);
    const int x0 = std::max(0, static_cast<int>(std::ceil(g.min_u - pad - 0.5)));
    const int x1 = std::min(cam.width - 1,
                            static_cast<int>(std::floor(g.max_u + pad - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(g.min_v - pad - 0.5)));
    const int y1 = std::min(cam.height - 1,
                            static_cast<int>(std::floor(g.max_v + pad - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      double* row = prod.data() + static_cast<size_t>(y) * cam.width;
      for (int x = x0; x <= x1; ++x) {
        const Vec2 q(x + 0.5, y + 0.5);
        const SignedDist sd = signed_dist(g, q);
        if (sd.delta <= -pad) continue;
        row[x] *= sh.one_minus_p(sd.delta * inv_sigma);
      }
    }
  }
  out.values.resize(prod.size());
  for (size_t i = 0; i < prod.size(); ++i) out.values[i] = 1.0 - prod[i];
  return out;
}

std::vector<Vec3> soft_mask_backward(const TriMesh& mesh,
                                     const PerspectiveCamera& cam, double sigma,
                                     const SoftMask& mask,
                                     const std::vector<double>& d_values) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  check_render_target(cam.width, cam.height);
  if (mask.width != cam.width || mask.height != cam.height ||
      d_values.size() != mask.values.size()) {
    throw InternalError("soft_mask_backward: size mismatch");
  }
  const std::vector<Vec2> proj = project_all(mesh, cam);
  const SigmoidShift sh = make_shift();
  const double pad = kSigmoidSupport * sigma;
  const double inv_sigma = 1.0 / sigma;
  const size_t npix = mask.values.size();

  // First sweep mirrors the forward pass and caches every in-support
  // pixel/face pair so the distance computation runs once, not twice. It
  // also separates saturated factors (1 - p == 0 to machine precision) so
  // d value / d p_j stays well defined when the product collapses to zero.
  struct Pair {
    std::int32_t pixel;
    std::int32_t face;
    float t;
    std::int8_t edge;
    double delta;
    double om;  // 1 - p
  };
  constexpr double kSatEps = 1e-14;
  std::vector<Pair> pairs;
  pairs.reserve(mesh.faces.size() * 64);
  std::vector<double> prod_nonsat(npix, 1.0);
  std::vector<std::uint8_t> sat_count(npix, 0);
  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const FaceGeom g = face_geom(proj, mesh.faces[fi]);
    const int x0 = std::max(0, static_cast<int>(std::ceil(g.min_u - pad - 0.5)));
    const int x1 = std::min(cam.width - 1,
                            static_cast<int>(std::floor(g.max_u + pad - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(g.min_v - pad - 0.5)));
    const int y1 = std::min(cam.height - 1,
                            static_cast<int>(std::floor(g.max_v + pad - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 q(x + 0.5, y + 0.5);
        const SignedDist sd = signed_dist(g, q);
        if (sd.delta <= -pad) continue;
        const double om = sh.one_minus_p(sd.delta * inv_sigma);
        const size_t idx = static_cast<size_t>(y) * cam.width + x;
        if (om <= kSatEps) {
          if (sat_count[idx] < 255) ++sat_count[idx];
        } else {
          prod_nonsat[idx] *= om;
        }
        pairs.push_back({static_cast<std::int32_t>(idx),
                         static_cast<std::int32_t>(fi),
                         static_cast<float>(sd.t),
                         static_cast<std::int8_t>(sd.edge), sd.delta, om});
      }
    }
  }

  // Second sweep: chain d value -> p_j -> delta -> projected corners.
  std::vector<Vec2> d_proj(proj.size(), Vec2::Zero());
  for (const Pair& pr : pairs) {
    const double dv = d_values[static_cast<size_t>(pr.pixel)];
    if (dv == 0.0) continue;
    // d value / d p_j = prod over k != j of (1 - p_k)
    double others;
    if (pr.om <= kSatEps) {
      others = sat_count[pr.pixel] == 1 ? prod_nonsat[pr.pixel] : 0.0;
    } else {
      others = sat_count[pr.pixel] == 0 ? prod_nonsat[pr.pixel] / pr.om : 0.0;
    }
    if (others == 0.0) continue;
    const double d_delta = dv * others * sh.dp_dx(pr.delta * inv_sigma) * inv_sigma;
    if (d_delta == 0.0) continue;
    // delta = sign * |q - (a + t e)|; envelope over the minimizing edge
    const auto& f = mesh.faces[static_cast<size_t>(pr.face)];
    const int k = pr.edge;
    const int ia = f[k];
    const int ib = f[(k + 1) % 3];
    const Vec2& a = proj[static_cast<size_t>(ia)];
    const Vec2 e = proj[static_cast<size_t>(ib)] - a;
    const double t = static_cast<double>(pr.t);
    const int x = pr.pixel % cam.width;
    const int y = pr.pixel / cam.width;
    const Vec2 diff = Vec2(x + 0.5, y + 0.5) - (a + t * e);
    const double dist = diff.norm();
    if (dist <= 0.0) continue;  // on the boundary; measure zero
    const double sign = pr.delta >= 0.0 ? 1.0 : -1.0;
    const Vec2 u = (sign * d_delta / dist) * diff;
    // d dist / d a = -(1 - t) u_hat, d dist / d b = -t u_hat
    d_proj[static_cast<size_t>(ia)] -= (1.0 - t) * u;
    d_proj[static_cast<size_t>(ib)] -= t * u;
  }

  std::vector<Vec3> d_verts(mesh.vertices.size(), Vec3::Zero());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (d_proj[i].isZero(0.0)) continue;
    const auto J = project_jacobian(cam, mesh.vertices[i]);
    d_verts[i] = J.transpose() * d_proj[i];
  }
  return d_verts;
}

double mask_loss(const SoftMask& mask, const BinaryMask& target) {
  if (mask.width != target.width || mask.height != target.height) {
    throw ValidationError("mask_loss: size mismatch " +
                          std::to_string(mask.width) + "x" +
                          std::to_string(mask.height) + " vs " +
                          std::to_string(target.width) + "x" +
                          std::to_string(target.height));
  }
  const size_t n = mask.values.size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = mask.values[i] - static_cast<double>(target.values[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

double mask_loss_backward(const SoftMask& mask, const BinaryMask& target,
                          std::vector<double>& d_values) {
  const double loss = mask_loss(mask, target);
  const size_t n = mask.values.size();
  d_values.assign(n, 0.0);
  const double scale = 2.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    d_values[i] =
        scale * (mask.values[i] - static_cast<double>(target.values[i]));
  }
  return loss;
}

DepthRender render_depth(const std::vector<LabeledMesh>& meshes,
                         const PerspectiveCamera& cam) {
  check_render_target(cam.width, cam.height);
  if (meshes.empty()) throw ValidationError("render_depth: no meshes");
  const size_t npix = static_cast<size_t>(cam.width) * cam.height;

  DepthRender out;
  out.labels.width = cam.width;
  out.labels.height = cam.height;
  out.labels.labels.assign(npix, 0);
  out.layers.resize(meshes.size());

  for (size_t mi = 0; mi < meshes.size(); ++mi) {
    if (meshes[mi].label == 0) {
      throw ValidationError("render_depth: mesh label must be nonzero");
    }
    const TriMesh& mesh = *meshes[mi].mesh;
    mesh.validate();
    const std::vector<Vec2> proj = project_all(mesh, cam);
    DepthLayer& layer = out.layers[mi];
    layer.depth.width = cam.width;
    layer.depth.height = cam.height;
    layer.depth.depth.assign(npix, DepthImage::kEmpty);
    layer.face.assign(npix, -1);
    layer.w0.assign(npix, 0.0);
    layer.w1.assign(npix, 0.0);

    for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
      const auto& f = mesh.faces[fi];
      const Vec2& p0 = proj[static_cast<size_t>(f[0])];
      const Vec2& p1 = proj[static_cast<size_t>(f[1])];
      const Vec2& p2 = proj[static_cast<size_t>(f[2])];
      const double area =
          (p1.x() - p0.x()) * (p2.y() - p0.y()) -
          (p1.y() - p0.y()) * (p2.x() - p0.x());
      if (area == 0.0) continue;
      const double inv_area = 1.0 / area;
      const int x0 = std::max(
          0, static_cast<int>(std::ceil(std::min({p0.x(), p1.x(), p2.x()}) - 0.5)));
      const int x1 = std::min(
          cam.width - 1,
          static_cast<int>(std::floor(std::max({p0.x(), p1.x(), p2.x()}) - 0.5)));
      const int y0 = std::max(
          0, static_cast<int>(std::ceil(std::min({p0.y(), p1.y(), p2.y()}) - 0.5)));
      const int y1 = std::min(
          cam.height - 1,
          static_cast<int>(std::floor(std::max({p0.y(), p1.y(), p2.y()}) - 0.5)));
      const double z0 = mesh.vertices[static_cast<size_t>(f[0])].z();
      const double z1v = mesh.vertices[static_cast<size_t>(f[1])].z();
      const double z2 = mesh.vertices[static_cast<size_t>(f[2])].z();
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Vec2 q(x + 0.5, y + 0.5);
          const double a0 = ((p1.x() - q.x()) * (p2.y() - q.y()) -
                             (p1.y() - q.y()) * (p2.x() - q.x())) * inv_area;
          const double a1 = ((q.x() - p0.x()) * (p2.y() - p0.y()) -
                             (q.y() - p0.y()) * (p2.x() - p0.x())) * inv_area;
          const double a2 = 1.0 - a0 - a1;
          if (a0 < 0.0 || a1 < 0.0 || a2 < 0.0) continue;
          const double depth = 1.0 / (a0 / z0 + a1 / z1v + a2 / z2);
          const size_t idx = static_cast<size_t>(y) * cam.width + x;
          if (depth < layer.depth.depth[idx]) {
            layer.depth.depth[idx] = depth;
            layer.face[idx] = static_cast<std::int32_t>(fi);
            layer.w0[idx] = a0;
            layer.w1[idx] = a1;
          }
        }
      }
    }
  }

  for (size_t idx = 0; idx < npix; ++idx) {
    double best = DepthImage::kEmpty;
    std::uint8_t label = 0;
    for (size_t mi = 0; mi < meshes.size(); ++mi) {
      const double d = out.layers[mi].depth.depth[idx];
      if (d < best) {
        best = d;
        label = meshes[mi].label;
      }
    }
    out.labels.labels[idx] = label;
  }
  return out;
}

std::vector<Vec3> depth_backward(
    const DepthLayer& layer, const TriMesh& mesh, const PerspectiveCamera& cam,
    const std::vector<std::pair<int, double>>& d_depth) {
  std::vector<Vec2> proj(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    proj[i] = project(cam, mesh.vertices[i]);
  }
  std::vector<Vec3> d_verts(mesh.vertices.size(), Vec3::Zero());
  for (const auto& [idx, gd] : d_depth) {
    if (idx < 0 || static_cast<size_t>(idx) >= layer.face.size()) {
      throw InternalError("depth_backward: pixel index out of range");
    }
    const std::int32_t fi = layer.face[static_cast<size_t>(idx)];
    if (fi < 0) throw InternalError("depth_backward: empty pixel in gradient");
    const auto& f = mesh.faces[static_cast<size_t>(fi)];
    const int x = idx % cam.width;
    const int y = idx / cam.width;
    const Vec2 q(x + 0.5, y + 0.5);
    const Vec2& p0 = proj[static_cast<size_t>(f[0])];
    const Vec2& p1 = proj[static_cast<size_t>(f[1])];
    const Vec2& p2 = proj[static_cast<size_t>(f[2])];
    const double z[3] = {mesh.vertices[static_cast<size_t>(f[0])].z(),
                         mesh.vertices[static_cast<size_t>(f[1])].z(),
                         mesh.vertices[static_cast<size_t>(f[2])].z()};
    const double area = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                        (p1.y() - p0.y()) * (p2.x() - p0.x());
    if (area == 0.0) throw InternalError("depth_backward: degenerate face");
    const double inv_area = 1.0 / area;
    const double w[3] = {layer.w0[static_cast<size_t>(idx)],
                         layer.w1[static_cast<size_t>(idx)],
                         1.0 - layer.w0[static_cast<size_t>(idx)] -
                             layer.w1[static_cast<size_t>(idx)]};
    const double S = w[0] / z[0] + w[1] / z[1] + w[2] / z[2];
    const double D = 1.0 / S;
    const double D2 = D * D;
    // d depth / d w_i and d depth / d z_i
    double dw[3], dz[3];
    for (int i = 0; i < 3; ++i) {
      dw[i] = -D2 / z[i];
      dz[i] = D2 * w[i] / (z[i] * z[i]);
    }
    // w_i = A_i / A with A_i the area with corner i replaced by q.
    // dA/d(corner j) and dA_i/d(corner j) are linear in the coordinates.
    const Vec2 p[3] = {p0, p1, p2};
    Vec2 dA[3];
    for (int j = 0; j < 3; ++j) {
      const Vec2& pn = p[(j + 1) % 3];
      const Vec2& pp = p[(j + 2) % 3];
      dA[j] = Vec2(pn.y() - pp.y(), pp.x() - pn.x());
    }
    for (int j = 0; j < 3; ++j) {
      Vec2 acc = Vec2::Zero();
      for (int i = 0; i < 3; ++i) {
        // dA_i/d corner j: the signed area of the triangle with corner i
        // replaced by q; its derivative w.r.t. corner j is
        // (next.y - prev.y, prev.x - next.x) in cyclic order. Zero when the
        // replaced corner is j itself.
        Vec2 dAi = Vec2::Zero();
        if (i != j) {
          Vec2 tri[3] = {p[0], p[1], p[2]};
          tri[i] = q;
          const Vec2& nn = tri[(j + 1) % 3];
          const Vec2& prv = tri[(j + 2) % 3];
          dAi = Vec2(nn.y() - prv.y(), prv.x() - nn.x());
        }
        // w_i = A_i / A -> dw_i/dcj = (dAi - w_i dA_j) / A
        const Vec2 dwi = (dAi - w[i] * dA[j]) * inv_area;
        acc += dw[i] * dwi;
      }
      const auto J = project_jacobian(cam, mesh.vertices[static_cast<size_t>(f[j])]);
      Vec3 g3 = J.transpose() * acc;
      g3.z() += dz[j];
      d_verts[static_cast<size_t>(f[j])] += gd * g3;
    }
  }
  return d_verts;
}

}  // namespace hoifit
