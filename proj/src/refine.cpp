#include "hoifit/refine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hoifit/errors.hpp"
#include "hoifit/optim.hpp"
#include "hoifit/rng.hpp"
#include "hoifit/sdf.hpp"

namespace hoifit {

void ContactPrior::validate(int num_hand_verts) const {
  if (static_cast<int>(weights.size()) != num_hand_verts) {
    throw ValidationError("contact prior: weight count " +
                          std::to_string(weights.size()) + " != vertex count " +
                          std::to_string(num_hand_verts));
  }
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ValidationError("contact prior: weight outside [0, 1]");
    }
    any = any || w > 0.0;
  }
  if (!any) throw ValidationError("contact prior: all weights zero");
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey& o) const {
    return x == o.x && y == o.y && z == o.z;
  }
};

struct CellHash {
  size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xbf58476d1ce4e5b9ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return static_cast<size_t>(h);
  }
};

}  // namespace

DistanceField distance_field(const std::vector<Vec3>& hand_verts,
                             const std::vector<Vec3>& object_points) {
  if (hand_verts.empty() || object_points.empty()) {
    throw ValidationError("distance_field: empty point set");
  }
  Vec3 lo = object_points[0], hi = object_points[0];
  for (const Vec3& p : object_points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double cell = (hi - lo).norm() / 32.0;
  if (!(cell > 0.0)) cell = 1.0;  // all object points coincide

  std::unordered_map<CellKey, std::vector<int>, CellHash> buckets;
  auto cell_of = [&](double w) {
    return static_cast<std::int64_t>(std::floor(w / cell));
  };
  auto key_of = [&](const Vec3& p) {
    return CellKey{cell_of(p.x()), cell_of(p.y()), cell_of(p.z())};
  };
  for (int i = 0; i < static_cast<int>(object_points.size()); ++i) {
    buckets[key_of(object_points[static_cast<size_t>(i)])].push_back(i);
  }
  // occupied cell bounds; shells are clipped against this box
  const std::int64_t cmin[3] = {cell_of(lo.x()), cell_of(lo.y()),
                                cell_of(lo.z())};
  const std::int64_t cmax[3] = {cell_of(hi.x()), cell_of(hi.y()),
                                cell_of(hi.z())};

  DistanceField out;
  out.values.resize(hand_verts.size());
  out.nearest.resize(hand_verts.size());
  for (size_t v = 0; v < hand_verts.size(); ++v) {
    const Vec3& q = hand_verts[v];
    const std::int64_t b[3] = {cell_of(q.x()), cell_of(q.y()), cell_of(q.z())};
    std::int64_t r0 = 0, rmax = 0;
    for (int a = 0; a < 3; ++a) {
      if (b[a] < cmin[a]) r0 = std::max(r0, cmin[a] - b[a]);
      if (b[a] > cmax[a]) r0 = std::max(r0, b[a] - cmax[a]);
      rmax = std::max({rmax, cmax[a] - b[a], b[a] - cmin[a]});
    }
    double best2 = std::numeric_limits<double>::infinity();
    int best = -1;
    auto visit = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
      const auto it = buckets.find(CellKey{x, y, z});
      if (it == buckets.end()) return;
      for (int i : it->second) {
        const double d2 =
            (q - object_points[static_cast<size_t>(i)]).squaredNorm();
        if (d2 < best2 || (d2 == best2 && i < best)) {
          best2 = d2;
          best = i;
        }
      }
    };
    for (std::int64_t r = r0; r <= rmax; ++r) {
      const std::int64_t z0 = std::max(b[2] - r, cmin[2]);
      const std::int64_t z1 = std::min(b[2] + r, cmax[2]);
      const std::int64_t y0 = std::max(b[1] - r, cmin[1]);
      const std::int64_t y1 = std::min(b[1] + r, cmax[1]);
      const std::int64_t x0 = std::max(b[0] - r, cmin[0]);
      const std::int64_t x1 = std::min(b[0] + r, cmax[0]);
      for (std::int64_t z = z0; z <= z1; ++z) {
        for (std::int64_t y = y0; y <= y1; ++y) {
          if (std::abs(z - b[2]) == r || std::abs(y - b[1]) == r) {
            for (std::int64_t x = x0; x <= x1; ++x) visit(x, y, z);
          } else {
            // interior row: only the two shell faces in x
            if (b[0] - r >= cmin[0]) visit(b[0] - r, y, z);
            if (b[0] + r <= cmax[0] && r > 0) visit(b[0] + r, y, z);
          }
        }
      }
      // cells beyond shell r hold points at least r * cell from q
      if (best >= 0 && static_cast<double>(r) * cell *
                               (static_cast<double>(r) * cell) >
                           best2) {
        break;
      }
    }
    out.values[v] = best2;
    out.nearest[v] = best;
  }
  return out;
}

std::vector<Vec3> resample_surface(const TriMesh& mesh, int n,
                                   std::uint64_t seed) {
  if (n < 1) throw ValidationError("resample_surface: n < 1");
  mesh.validate();
  const int nv = static_cast<int>(mesh.vertices.size());
  Rng rng(derive_seed(seed, 0x5a6d70ULL));
  std::vector<Vec3> out;
  out.reserve(static_cast<size_t>(n));
  if (nv >= n) {
    // partial Fisher-Yates over vertex indices
    std::vector<int> idx(static_cast<size_t>(nv));
    for (int i = 0; i < nv; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < n; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform() * static_cast<double>(nv - i));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    for (int i = 0; i < n; ++i) {
      out.push_back(mesh.vertices[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
    }
    return out;
  }
  // keep all vertices, then area-weighted uniform surface samples
  out = mesh.vertices;
  std::vector<double> cum;
  cum.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<size_t>(f[2])];
    total += 0.5 * (b - a).cross(c - a).norm();
    cum.push_back(total);
  }
  if (!(total > 0.0)) {
    throw ValidationError("resample_surface: zero total surface area");
  }
  for (int i = nv; i < n; ++i) {
    const double u = rng.uniform() * total;
    const size_t fi = static_cast<size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const auto& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<size_t>(f[2])];
    out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

namespace {

double canonical_penetration(const HandModel& model, const HandParams& p,
                             double focal, const TriMesh& object) {
  const HandForward fwd = hand_forward(model, p, focal);
  const SdfGrid grid = build_grid(fwd.mesh);
  return penetration_loss(grid, object.vertices, nullptr);
}

}  // namespace

HandParams refine_hand(const HandModel& model, const HandParams& init,
                       const TriMesh& object, const ContactPrior& prior,
                       double focal, const RefineConfig& cfg,
                       double* final_energy) {
  model.validate();
  prior.validate(model.num_vertices());
  object.validate();

  const std::vector<Vec3> obj_points =
      resample_surface(object, cfg.max_object_points, cfg.seed);
  const SdfGrid obj_grid = build_grid(object);
  const Eigen::Matrix<double, kHandParamDim, 1> x_init = pack_hand_params(init);
  const double input_pen = canonical_penetration(model, init, focal, object);

  // beta and log s stay frozen; translations step in tenths of a pixel
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(kHandParamDim);
  scales.segment(3 + 3 * kHandThetaJoints, kHandBetas).setZero();
  scales[58] = 100.0;
  scales[59] = 100.0;
  scales[60] = 0.0;

  std::array<Vec3, kHandKeypoints> zero_joint_grads;
  zero_joint_grads.fill(Vec3::Zero());

  HandParams cur = init;
  double last_energy = 0.0;
  {
    // incoming energy, for callers that skip every iterate
    const HandForward fwd = hand_forward(model, cur, focal);
    const DistanceField df = distance_field(fwd.mesh.vertices, obj_points);
    double e = 0.0;
    for (size_t v = 0; v < fwd.mesh.vertices.size(); ++v) {
      e += prior.weights[v] * df.values[v];
    }
    e += cfg.lambda_pen * penetration_loss(obj_grid, fwd.mesh.vertices, nullptr);
    last_energy = e;
  }

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    const HandForward fwd0 = hand_forward(model, cur, focal);
    const DistanceField df = distance_field(fwd0.mesh.vertices, obj_points);

    Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      const HandParams p = unpack_hand_params(x);
      const HandForward fwd = hand_forward(model, p, focal);
      const size_t nverts = fwd.mesh.vertices.size();
      std::vector<Vec3> d_verts(nverts, Vec3::Zero());
      double e = 0.0;
      // frozen-assignment contact term
      for (size_t v = 0; v < nverts; ++v) {
        const double w = prior.weights[v];
        if (w == 0.0) continue;
        const Vec3 diff =
            fwd.mesh.vertices[v] -
            obj_points[static_cast<size_t>(df.nearest[v])];
        e += w * diff.squaredNorm();
        d_verts[v] += 2.0 * w * diff;
      }
      // penetration into the static object
      std::vector<Vec3> d_pen;
      e += cfg.lambda_pen *
           penetration_loss(obj_grid, fwd.mesh.vertices, &d_pen);
      for (size_t v = 0; v < nverts; ++v) {
        d_verts[v] += cfg.lambda_pen * d_pen[v];
      }
      const HandGrad hg = hand_backward(model, p, fwd, focal, d_verts,
                                        zero_joint_grads);
      Eigen::Matrix<double, kHandParamDim, 1> gx =
          hg.pack_log_s(p.wp.s);
      // articulation prior on theta
      for (int j = 0; j < kHandThetaJoints; ++j) {
        for (int c = 0; c < 3; ++c) {
          const double d = x[3 + 3 * j + c] - x_init[3 + 3 * j + c];
          e += cfg.lambda_theta * d * d;
          gx[3 + 3 * j + c] += 2.0 * cfg.lambda_theta * d;
        }
      }
      g = gx;
      return e;
    };

    OptimConfig oc;
    oc.step_size = cfg.step_size;
    oc.max_iters = cfg.inner_steps;
    oc.convergence_tol = 0.0;  // fixed inner budget
    const Hypothesis hyp = minimize(f, pack_hand_params(cur), oc, &scales);

    const HandParams cand = unpack_hand_params(hyp.params);
    if (canonical_penetration(model, cand, focal, object) >
        input_pen + 1e-6) {
      break;  // worsening iterate rejected
    }
    cur = cand;
    last_energy = hyp.final_loss;
  }
  if (final_energy) *final_energy = last_energy;
  return cur;
}

}  // namespace hoifit
