#include "hoifit/sdf.hpp"

#include <algorithm>
#include <cmath>

#include "hoifit/errors.hpp"

namespace hoifit {

namespace {

constexpr int kDim = SdfGrid::kDim;

// Ericson-style exact point-triangle squared distance.
double point_tri_dist2(const Vec3& p, const Vec3& a, const Vec3& b,
                       const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.squaredNorm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.squaredNorm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return (ap - v * ab).squaredNorm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.squaredNorm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return (ap - w * ac).squaredNorm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (bp - w * (c - b)).squaredNorm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (ap - v * ab - w * ac).squaredNorm();
}

// Net signed crossings of the +axis ray from p against all faces; > 0 means
// inside an (outward-oriented) closed surface, and overlapping closed
// components only push the count higher.
struct AxisRows {
  // per (u,v) row: list of face indices whose projected bbox covers it
  std::vector<std::vector<std::int32_t>> bins;
};

}  // namespace

SdfGrid build_grid(const TriMesh& mesh) {
  mesh.validate();
  if (mesh.faces.empty()) throw ValidationError("build_grid: mesh has no faces");
  Vec3 lo, hi;
  mesh.bounds(lo, hi);
  const Vec3 extent = hi - lo;
  const double max_extent = extent.maxCoeff();
  if (!(max_extent > 0.0)) {
    throw ValidationError("build_grid: degenerate (zero-extent) mesh");
  }
  SdfGrid grid;
  grid.cell_size = max_extent / (kDim - 2);
  const Vec3 center = 0.5 * (lo + hi);
  grid.origin = center - Vec3::Constant(0.5 * kDim * grid.cell_size);
  grid.phi.assign(static_cast<size_t>(kDim) * kDim * kDim, 0.0);
  const double h = grid.cell_size;

  // explicit Vec3 return: a deduced Eigen expression would dangle
  auto cell_center = [&](int i, int j, int k) -> Vec3 {
    return grid.origin + Vec3((i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
  };

  // --- inside test: majority vote over +x, +y, +z ray crossing counts ---
  // crossing parity votes accumulated per cell
  std::vector<std::uint8_t> votes(grid.phi.size(), 0);
  const int nf = static_cast<int>(mesh.faces.size());
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    // bin faces by the rows their (u, v) bbox touches
    AxisRows rows;
    rows.bins.assign(static_cast<size_t>(kDim) * kDim, {});
    auto row_coord = [&](double w, int ax) {
      // cell index whose center coordinate is nearest below/above
      return (w - grid.origin[ax]) / h - 0.5;
    };
    for (int fi = 0; fi < nf; ++fi) {
      const auto& f = mesh.faces[static_cast<size_t>(fi)];
      double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
      for (int k = 0; k < 3; ++k) {
        const Vec3& p = mesh.vertices[static_cast<size_t>(f[k])];
        ulo = std::min(ulo, p[ua]);
        uhi = std::max(uhi, p[ua]);
        vlo = std::min(vlo, p[va]);
        vhi = std::max(vhi, p[va]);
      }
      const int u0 = std::max(0, static_cast<int>(std::ceil(row_coord(ulo, ua))));
      const int u1 = std::min(kDim - 1, static_cast<int>(std::floor(row_coord(uhi, ua)) + 1.0));
      const int v0 = std::max(0, static_cast<int>(std::ceil(row_coord(vlo, va))));
      const int v1 = std::min(kDim - 1, static_cast<int>(std::floor(row_coord(vhi, va)) + 1.0));
      for (int u = u0; u <= u1; ++u) {
        for (int v = v0; v <= v1; ++v) {
          rows.bins[static_cast<size_t>(u) * kDim + v].push_back(fi);
        }
      }
    }
    for (int u = 0; u < kDim; ++u) {
      for (int v = 0; v < kDim; ++v) {
        const auto& bin = rows.bins[static_cast<size_t>(u) * kDim + v];
        if (bin.empty()) continue;
        const double uc = grid.origin[ua] + (u + 0.5) * h;
        const double vc = grid.origin[va] + (v + 0.5) * h;
        // gather signed crossings (t along axis, sign of face normal there)
        struct Hit {
          double t;
          int s;
        };
        std::vector<Hit> hits;
        for (std::int32_t fi : bin) {
          const auto& f = mesh.faces[static_cast<size_t>(fi)];
          const Vec3& A = mesh.vertices[static_cast<size_t>(f[0])];
          const Vec3& B = mesh.vertices[static_cast<size_t>(f[1])];
          const Vec3& C = mesh.vertices[static_cast<size_t>(f[2])];
          // 2D barycentric test in the (u, v) projection
          const double au = A[ua] - uc, av = A[va] - vc;
          const double bu = B[ua] - uc, bv = B[va] - vc;
          const double cu = C[ua] - uc, cv = C[va] - vc;
          const double area = (bu - au) * (cv - av) - (bv - av) * (cu - au);
          if (area == 0.0) continue;  // edge-on
          const double w0 = (bu * cv - bv * cu) / area;
          const double w1 = (cu * av - cv * au) / area;
          const double w2 = 1.0 - w0 - w1;
          if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
          const double t = w0 * A[axis] + w1 * B[axis] + w2 * C[axis];
          hits.push_back({t, area > 0.0 ? 1 : -1});
        }
        if (hits.empty()) continue;
        std::sort(hits.begin(), hits.end(),
                  [](const Hit& a, const Hit& b) { return a.t < b.t; });
        // walking from +infinity toward -infinity: net = sum of signs ahead
        int w = 0;
        std::vector<int> net(static_cast<size_t>(kDim));
        size_t hidx = hits.size();
        for (int c = kDim - 1; c >= 0; --c) {
          const double t = grid.origin[axis] + (c + 0.5) * h;
          while (hidx > 0 && hits[hidx - 1].t > t) {
            w += hits[hidx - 1].s;
            --hidx;
          }
          net[static_cast<size_t>(c)] = w;
        }
        for (int c = 0; c < kDim; ++c) {
          if (net[static_cast<size_t>(c)] <= 0) continue;
          int idx[3];
          idx[axis] = c;
          idx[ua] = u;
          idx[va] = v;
          ++votes[(static_cast<size_t>(idx[2]) * kDim + idx[1]) * kDim + idx[0]];
        }
      }
    }
  }

  // --- exact surface distance for inside cells ---
  // triangles binned by centroid cell; ring search with a global radius pad
  std::vector<std::vector<std::int32_t>> tri_bins(grid.phi.size());
  double tri_radius = 0.0;
  for (int fi = 0; fi < nf; ++fi) {
    const auto& f = mesh.faces[static_cast<size_t>(fi)];
    const Vec3& A = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& B = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& C = mesh.vertices[static_cast<size_t>(f[2])];
    const Vec3 cen = (A + B + C) / 3.0;
    tri_radius = std::max({tri_radius, (A - cen).norm(), (B - cen).norm(),
                           (C - cen).norm()});
    int ci[3];
    for (int a = 0; a < 3; ++a) {
      ci[a] = std::clamp(
          static_cast<int>(std::floor((cen[a] - grid.origin[a]) / h)), 0,
          kDim - 1);
    }
    tri_bins[(static_cast<size_t>(ci[2]) * kDim + ci[1]) * kDim + ci[0]]
        .push_back(fi);
  }

  for (int k = 0; k < kDim; ++k) {
    for (int j = 0; j < kDim; ++j) {
      for (int i = 0; i < kDim; ++i) {
        const size_t idx = (static_cast<size_t>(k) * kDim + j) * kDim + i;
        if (votes[idx] < 2) continue;  // outside by majority vote
        const Vec3 p = cell_center(i, j, k);
        double best2 = std::numeric_limits<double>::infinity();
        for (int r = 0; r < kDim; ++r) {
          // cells in the Chebyshev ring r around (i, j, k)
          const int i0 = std::max(0, i - r), i1 = std::min(kDim - 1, i + r);
          const int j0 = std::max(0, j - r), j1 = std::min(kDim - 1, j + r);
          const int k0 = std::max(0, k - r), k1 = std::min(kDim - 1, k + r);
          for (int kk = k0; kk <= k1; ++kk) {
            for (int jj = j0; jj <= j1; ++jj) {
              for (int ii = i0; ii <= i1; ++ii) {
                if (std::max({std::abs(ii - i), std::abs(jj - j),
                              std::abs(kk - k)}) != r) {
                  continue;
                }
                const auto& bin =
                    tri_bins[(static_cast<size_t>(kk) * kDim + jj) * kDim + ii];
                for (std::int32_t fi : bin) {
                  const auto& f = mesh.faces[static_cast<size_t>(fi)];
                  best2 = std::min(
                      best2,
                      point_tri_dist2(p, mesh.vertices[static_cast<size_t>(f[0])],
                                      mesh.vertices[static_cast<size_t>(f[1])],
                                      mesh.vertices[static_cast<size_t>(f[2])]));
                }
              }
            }
          }
          // any unseen triangle has centroid at Chebyshev ring > r, i.e.
          // beyond (r + 0.5 - 1) cells... use the safe Euclidean bound
          const double ring_min = (r - 0.5) * h - tri_radius;
          if (ring_min > 0.0 && ring_min * ring_min > best2) break;
        }
        grid.phi[idx] = std::sqrt(best2);
      }
    }
  }
  return grid;
}

SdfSample sample(const SdfGrid& grid, const Vec3& p) {
  const double h = grid.cell_size;
  // continuous coordinates in cell-center lattice space
  const Vec3 q = (p - grid.origin) / h - Vec3::Constant(0.5);
  SdfSample out;
  for (int a = 0; a < 3; ++a) {
    if (q[a] < 0.0 || q[a] >= kDim - 1) return out;  // zero outside the hull
  }
  const int i = static_cast<int>(q.x());
  const int j = static_cast<int>(q.y());
  const int k = static_cast<int>(q.z());
  const double fx = q.x() - i, fy = q.y() - j, fz = q.z() - k;
  double c[2][2][2];
  for (int dk = 0; dk < 2; ++dk) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int di = 0; di < 2; ++di) {
        c[di][dj][dk] = grid.at(i + di, j + dj, k + dk);
      }
    }
  }
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  // value
  const double c00 = lerp(c[0][0][0], c[1][0][0], fx);
  const double c10 = lerp(c[0][1][0], c[1][1][0], fx);
  const double c01 = lerp(c[0][0][1], c[1][0][1], fx);
  const double c11 = lerp(c[0][1][1], c[1][1][1], fx);
  const double c0 = lerp(c00, c10, fy);
  const double c1 = lerp(c01, c11, fy);
  out.value = lerp(c0, c1, fz);
  // analytic partials of the trilinear form
  const double dx00 = c[1][0][0] - c[0][0][0];
  const double dx10 = c[1][1][0] - c[0][1][0];
  const double dx01 = c[1][0][1] - c[0][0][1];
  const double dx11 = c[1][1][1] - c[0][1][1];
  out.grad.x() = lerp(lerp(dx00, dx10, fy), lerp(dx01, dx11, fy), fz) / h;
  out.grad.y() = lerp(c10 - c00, c11 - c01, fz) / h;
  out.grad.z() = (c1 - c0) / h;
  return out;
}

double penetration_loss(const SdfGrid& grid, const std::vector<Vec3>& points,
                        std::vector<Vec3>* d_points) {
  double acc = 0.0;
  if (d_points) d_points->assign(points.size(), Vec3::Zero());
  for (size_t i = 0; i < points.size(); ++i) {
    const SdfSample s = sample(grid, points[i]);
    acc += s.value;
    if (d_points) (*d_points)[i] = s.grad;
  }
  return acc;
}

}  // namespace hoifit
