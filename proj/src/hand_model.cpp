#include "hoifit/hand_model.hpp"

#include <cmath>
#include <set>
#include <string>

#include "hoifit/errors.hpp"
#include "hoifit/rng.hpp"

namespace hoifit {

void HandModel::validate() const {
  const int V = num_vertices();
  if (V == 0) throw ValidationError("hand model: empty template");
  if (static_cast<int>(shape_basis.size()) != V) {
    throw ValidationError("hand model: shape_basis count " +
                          std::to_string(shape_basis.size()) +
                          " != vertex count " + std::to_string(V));
  }
  if (joint_regressor.rows() != kHandJoints || joint_regressor.cols() != V) {
    throw ValidationError("hand model: joint_regressor must be 16 x V");
  }
  if (skin_weights.rows() != V || skin_weights.cols() != kHandJoints) {
    throw ValidationError("hand model: skin_weights must be V x 16");
  }
  if (parents[0] != -1) {
    throw ValidationError("hand model: parents[0] must be -1");
  }
  for (int j = 1; j < kHandJoints; ++j) {
    if (parents[j] < 0 || parents[j] >= j) {
      throw ValidationError("hand model: parents[" + std::to_string(j) +
                            "] = " + std::to_string(parents[j]) +
                            " must lie in [0, j)");
    }
  }
  for (int j = 0; j < kHandJoints; ++j) {
    const double rsum = joint_regressor.row(j).sum();
    if (std::abs(rsum - 1.0) > 1e-6) {
      throw ValidationError("hand model: joint_regressor row " +
                            std::to_string(j) + " sums to " +
                            std::to_string(rsum) + ", expected 1");
    }
  }
  for (int v = 0; v < V; ++v) {
    double wsum = 0.0;
    for (int j = 0; j < kHandJoints; ++j) {
      const double w = skin_weights(v, j);
      if (w < -1e-12) {
        throw ValidationError("hand model: negative skin weight at vertex " +
                              std::to_string(v));
      }
      wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-6) {
      throw ValidationError("hand model: skin weights of vertex " +
                            std::to_string(v) + " sum to " +
                            std::to_string(wsum) + ", expected 1");
    }
  }
  std::set<int> tips;
  for (int t : tip_vertex_ids) {
    if (t < 0 || t >= V) {
      throw ValidationError("hand model: tip vertex id " + std::to_string(t) +
                            " out of range");
    }
    tips.insert(t);
  }
  if (tips.size() != 5) {
    throw ValidationError("hand model: tip vertex ids must be distinct");
  }
  TriMesh m;
  m.vertices = template_verts;
  m.faces = faces;
  m.validate();
}

Eigen::Matrix<double, kHandParamDim, 1> pack_hand_params(const HandParams& p) {
  Eigen::Matrix<double, kHandParamDim, 1> x;
  x.segment<3>(0) = p.global_rot;
  for (int j = 0; j < kHandThetaJoints; ++j) {
    x.segment<3>(3 + 3 * j) = p.theta[j];
  }
  x.segment<kHandBetas>(48) = p.beta;
  x[58] = p.wp.tx;
  x[59] = p.wp.ty;
  if (!(p.wp.s > 0.0)) {
    throw ValidationError("hand params: weak-perspective scale must be > 0");
  }
  x[60] = std::log(p.wp.s);
  return x;
}

HandParams unpack_hand_params(
    const Eigen::Matrix<double, kHandParamDim, 1>& x) {
  HandParams p;
  p.global_rot = x.segment<3>(0);
  for (int j = 0; j < kHandThetaJoints; ++j) {
    p.theta[j] = x.segment<3>(3 + 3 * j);
  }
  p.beta = x.segment<kHandBetas>(48);
  p.wp.tx = x[58];
  p.wp.ty = x[59];
  p.wp.s = std::exp(x[60]);
  return p;
}

Eigen::Matrix<double, kHandParamDim, 1> HandGrad::pack_log_s(double s) const {
  Eigen::Matrix<double, kHandParamDim, 1> g;
  g.segment<3>(0) = d_global_rot;
  for (int j = 0; j < kHandThetaJoints; ++j) {
    g.segment<3>(3 + 3 * j) = d_theta[j];
  }
  g.segment<kHandBetas>(48) = d_beta;
  g[58] = d_tx;
  g[59] = d_ty;
  g[60] = d_s * s;
  return g;
}

HandForward hand_forward(const HandModel& model, const HandParams& params,
                         double focal) {
  const int V = model.num_vertices();
  if (!(params.wp.s > 0.0)) {
    throw ValidationError("hand forward: weak-perspective scale must be > 0");
  }
  HandForward f;
  f.shaped.resize(V);
  for (int v = 0; v < V; ++v) {
    f.shaped[v] = model.template_verts[v] + model.shape_basis[v] * params.beta;
  }
  for (int j = 0; j < kHandJoints; ++j) {
    Vec3 rj = Vec3::Zero();
    for (int v = 0; v < V; ++v) {
      const double w = model.joint_regressor(j, v);
      if (w != 0.0) rj += w * f.shaped[v];
    }
    f.rest_joints[j] = rj;
  }
  f.R[0] = Mat3::Identity();
  f.posed_joints[0] = f.rest_joints[0];
  for (int j = 1; j < kHandJoints; ++j) {
    const int par = model.parents[j];
    f.R[j] = f.R[par] * rodrigues(params.theta[j - 1]);
    f.posed_joints[j] =
        f.posed_joints[par] + f.R[par] * (f.rest_joints[j] - f.rest_joints[par]);
  }
  f.skinned.resize(V);
  for (int v = 0; v < V; ++v) {
    Vec3 acc = Vec3::Zero();
    for (int j = 0; j < kHandJoints; ++j) {
      const double w = model.skin_weights(v, j);
      if (w != 0.0) {
        acc += w * (f.R[j] * (f.shaped[v] - f.rest_joints[j]) +
                    f.posed_joints[j]);
      }
    }
    f.skinned[v] = acc;
  }
  f.R_global = rodrigues(params.global_rot);
  f.pivot = f.posed_joints[0];
  f.offset = Vec3(params.wp.tx / params.wp.s, params.wp.ty / params.wp.s,
                  focal / params.wp.s);
  f.mesh.faces = model.faces;
  f.mesh.vertices.resize(V);
  for (int v = 0; v < V; ++v) {
    f.mesh.vertices[v] =
        f.R_global * (f.skinned[v] - f.pivot) + f.pivot + f.offset;
  }
  for (int j = 0; j < kHandJoints; ++j) {
    f.joints21[j] =
        f.R_global * (f.posed_joints[j] - f.pivot) + f.pivot + f.offset;
  }
  for (int k = 0; k < 5; ++k) {
    f.joints21[kHandJoints + k] = f.mesh.vertices[model.tip_vertex_ids[k]];
  }
  return f;
}

HandGrad hand_backward(const HandModel& model, const HandParams& params,
                       const HandForward& fwd, double focal,
                       const std::vector<Vec3>& d_vertices,
                       const std::array<Vec3, kHandKeypoints>& d_joints21) {
  const int V = model.num_vertices();
  if (!d_vertices.empty() && static_cast<int>(d_vertices.size()) != V) {
    throw InternalError("hand backward: vertex gradient size mismatch");
  }
  HandGrad g;

  // fold fingertip keypoint gradients into the mesh vertex gradients
  std::vector<Vec3> d_out(static_cast<size_t>(V), Vec3::Zero());
  if (!d_vertices.empty()) {
    for (int v = 0; v < V; ++v) d_out[v] = d_vertices[v];
  }
  for (int k = 0; k < 5; ++k) {
    d_out[model.tip_vertex_ids[k]] += d_joints21[kHandJoints + k];
  }

  // out[v] = R_g (skinned[v] - pivot) + pivot + offset, same for joints
  const Mat3 Rg_t = fwd.R_global.transpose();
  Mat3 d_Rg = Mat3::Zero();
  Vec3 d_pivot = Vec3::Zero();
  Vec3 d_offset = Vec3::Zero();
  std::vector<Vec3> d_skinned(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) {
    const Vec3& go = d_out[v];
    const Vec3 back = Rg_t * go;
    d_skinned[v] = back;
    d_Rg += go * (fwd.skinned[v] - fwd.pivot).transpose();
    d_pivot += go - back;
    d_offset += go;
  }
  std::array<Vec3, kHandJoints> d_poseJ;
  d_poseJ.fill(Vec3::Zero());
  for (int j = 0; j < kHandJoints; ++j) {
    const Vec3& gj = d_joints21[j];
    const Vec3 back = Rg_t * gj;
    d_poseJ[j] += back;
    d_Rg += gj * (fwd.posed_joints[j] - fwd.pivot).transpose();
    d_pivot += gj - back;
    d_offset += gj;
  }

  {
    std::array<Mat3, 3> jac;
    rodrigues_jacobian(params.global_rot, jac);
    for (int i = 0; i < 3; ++i) {
      g.d_global_rot[i] = (d_Rg.array() * jac[i].array()).sum();
    }
  }
  {
    const double s = params.wp.s;
    g.d_tx = d_offset.x() / s;
    g.d_ty = d_offset.y() / s;
    g.d_s = -(d_offset.x() * params.wp.tx + d_offset.y() * params.wp.ty +
              d_offset.z() * focal) /
            (s * s);
  }
  d_poseJ[0] += d_pivot;  // pivot = posed_joints[0]

  // LBS
  std::vector<Vec3> d_shaped(static_cast<size_t>(V), Vec3::Zero());
  std::array<Mat3, kHandJoints> d_R;
  d_R.fill(Mat3::Zero());
  std::array<Vec3, kHandJoints> d_restJ;
  d_restJ.fill(Vec3::Zero());
  for (int v = 0; v < V; ++v) {
    const Vec3& gs = d_skinned[v];
    for (int j = 0; j < kHandJoints; ++j) {
      const double w = model.skin_weights(v, j);
      if (w == 0.0) continue;
      const Vec3 wg = w * gs;
      const Vec3 back = fwd.R[j].transpose() * wg;
      d_shaped[v] += back;
      d_restJ[j] -= back;
      d_R[j] += wg * (fwd.shaped[v] - fwd.rest_joints[j]).transpose();
      d_poseJ[j] += wg;
    }
  }

  // joint chains, reverse topological order
  for (int j = kHandJoints - 1; j >= 1; --j) {
    const int par = model.parents[j];
    // posed_joints[j] = posed_joints[par] + R[par] (restJ[j] - restJ[par])
    const Vec3 bone = fwd.rest_joints[j] - fwd.rest_joints[par];
    const Vec3& gp = d_poseJ[j];
    d_poseJ[par] += gp;
    d_R[par] += gp * bone.transpose();
    const Vec3 back = fwd.R[par].transpose() * gp;
    d_restJ[j] += back;
    d_restJ[par] -= back;
    // R[j] = R[par] L(theta[j-1])
    const Mat3 L = fwd.R[par].transpose() * fwd.R[j];
    d_R[par] += d_R[j] * L.transpose();
    const Mat3 dL = fwd.R[par].transpose() * d_R[j];
    std::array<Mat3, 3> jac;
    rodrigues_jacobian(params.theta[j - 1], jac);
    for (int i = 0; i < 3; ++i) {
      g.d_theta[j - 1][i] = (dL.array() * jac[i].array()).sum();
    }
  }
  d_restJ[0] += d_poseJ[0];  // posed_joints[0] = rest_joints[0]

  // rest_joints = regressor . shaped
  for (int j = 0; j < kHandJoints; ++j) {
    const Vec3& gr = d_restJ[j];
    if (gr.isZero(0.0)) continue;
    for (int v = 0; v < V; ++v) {
      const double w = model.joint_regressor(j, v);
      if (w != 0.0) d_shaped[v] += w * gr;
    }
  }

  // shaped[v] = template[v] + basis[v] beta
  for (int v = 0; v < V; ++v) {
    g.d_beta += model.shape_basis[v].transpose() * d_shaped[v];
  }
  return g;
}

namespace {

// Axis-aligned-in-local-frame box, local x in [-hx, hx], y in [0, len],
// z in [-hz, hz], mapped by p -> base + rot * p. Surface is an (n+1)^3
// lattice shell; returns ids of the y=0 face ring and the y=len face center.
struct BoxRefs {
  std::vector<int> base_face;
  int top_center = -1;
};

BoxRefs append_box(std::vector<Vec3>& verts,
                   std::vector<std::array<int, 3>>& faces, const Vec3& base,
                   const Mat3& rot, double hx, double len, double hz, int n) {
  const int first = static_cast<int>(verts.size());
  std::vector<int> lattice(static_cast<size_t>((n + 1) * (n + 1) * (n + 1)),
                           -1);
  auto lid = [n](int i, int j, int k) {
    return (i * (n + 1) + j) * (n + 1) + k;
  };
  auto vid = [&](int i, int j, int k) {
    int& slot = lattice[static_cast<size_t>(lid(i, j, k))];
    if (slot < 0) {
      const Vec3 local(-hx + 2.0 * hx * i / n, len * j / n,
                       -hz + 2.0 * hz * k / n);
      slot = static_cast<int>(verts.size());
      verts.push_back(base + rot * local);
    }
    return slot;
  };
  // six faces: (fixed axis, fixed value 0|n, outward sign)
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const int fixed = side == 0 ? 0 : n;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          auto at = [&](int da, int db) {
            int c[3];
            c[axis] = fixed;
            c[(axis + 1) % 3] = a + da;
            c[(axis + 2) % 3] = b + db;
            return vid(c[0], c[1], c[2]);
          };
          const int p00 = at(0, 0), p10 = at(1, 0), p11 = at(1, 1),
                    p01 = at(0, 1);
          // outward orientation: +side faces wind (00,10,11), -side reversed
          if (side == 1) {
            faces.push_back({p00, p10, p11});
            faces.push_back({p00, p11, p01});
          } else {
            faces.push_back({p00, p11, p10});
            faces.push_back({p00, p01, p11});
          }
        }
      }
    }
  }
  BoxRefs refs;
  for (int i = 0; i <= n; ++i) {
    for (int k = 0; k <= n; ++k) {
      refs.base_face.push_back(vid(i, 0, k));
    }
  }
  // nearest lattice vertex to the top-face center (exact for even n)
  refs.top_center = vid(n / 2, n, n / 2);
  (void)first;
  return refs;
}

Mat3 yaw_to(const Vec3& dir) {
  // rotation about z taking +y to the (unit, in-plane) dir
  const double phi = std::atan2(dir.x(), dir.y());
  Mat3 R;
  R << std::cos(phi), std::sin(phi), 0.0,
       -std::sin(phi), std::cos(phi), 0.0,
       0.0, 0.0, 1.0;
  return R;
}

}  // namespace

HandModel generate_synthetic_model(std::uint64_t seed, int complexity) {
  if (complexity < 1 || complexity > 4) {
    throw ValidationError("hand model complexity must be in [1, 4]");
  }
  Rng rng(derive_seed(seed, 0x4a5d));
  const int n = complexity;

  HandModel m;
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::array<std::vector<int>, kHandJoints> joint_base_verts;
  std::array<std::vector<int>, kHandJoints> joint_box_verts;

  auto record_box = [&](int joint, const BoxRefs& refs, int vert_begin,
                        int vert_end) {
    joint_base_verts[joint] = refs.base_face;
    for (int v = vert_begin; v < vert_end; ++v) {
      joint_box_verts[joint].push_back(v);
    }
  };

  // palm: wrist joint at the y=0 face center
  {
    const int begin = static_cast<int>(verts.size());
    BoxRefs refs =
        append_box(verts, faces, Vec3::Zero(), Mat3::Identity(), 36.0, 72.0,
                   10.0, n);
    record_box(0, refs, begin, static_cast<int>(verts.size()));
  }

  m.parents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 0, 10, 11, 0, 13, 14};

  struct FingerSpec {
    Vec3 base;
    Vec3 dir;
    double half_w;
    std::array<double, 3> seg_len;
  };
  std::array<FingerSpec, 5> fingers = {{
      {{30.0, 18.0, 0.0}, Vec3(0.77, 0.64, 0.0).normalized(), 8.5,
       {30.0, 22.0, 18.0}},
      {{27.0, 70.0, 0.0}, Vec3(0.0, 1.0, 0.0), 7.5, {32.0, 22.0, 17.0}},
      {{9.0, 70.0, 0.0}, Vec3(0.0, 1.0, 0.0), 7.5, {35.0, 25.0, 18.0}},
      {{-9.0, 70.0, 0.0}, Vec3(0.0, 1.0, 0.0), 7.5, {32.0, 22.0, 17.0}},
      {{-27.0, 70.0, 0.0}, Vec3(0.0, 1.0, 0.0), 7.0, {26.0, 18.0, 14.0}},
  }};

  for (int f = 0; f < 5; ++f) {
    FingerSpec spec = fingers[static_cast<size_t>(f)];
    const double jitter = rng.uniform(0.92, 1.08);
    Vec3 base = spec.base;
    const Mat3 rot = yaw_to(spec.dir);
    for (int s = 0; s < 3; ++s) {
      const int joint = 1 + 3 * f + s;
      const double len = spec.seg_len[static_cast<size_t>(s)] * jitter;
      const double hw = spec.half_w * (1.0 - 0.12 * s);
      const int begin = static_cast<int>(verts.size());
      BoxRefs refs = append_box(verts, faces, base, rot, hw, len, hw, n);
      record_box(joint, refs, begin, static_cast<int>(verts.size()));
      if (s == 2) {
        if (refs.top_center < 0) {
          throw InternalError("synthetic hand: no tip vertex (odd tessellation)");
        }
        m.tip_vertex_ids[static_cast<size_t>(f)] = refs.top_center;
      }
      // embed the next segment 2 mm so no two boxes share a boundary plane
      base += rot * Vec3(0.0, len - 2.0, 0.0);
    }
  }

  const int V = static_cast<int>(verts.size());
  m.template_verts = std::move(verts);
  m.faces = std::move(faces);

  m.joint_regressor = Eigen::MatrixXd::Zero(kHandJoints, V);
  for (int j = 0; j < kHandJoints; ++j) {
    const auto& ids = joint_base_verts[j];
    const double w = 1.0 / static_cast<double>(ids.size());
    for (int v : ids) m.joint_regressor(j, v) = w;
  }
  m.skin_weights = Eigen::MatrixXd::Zero(V, kHandJoints);
  for (int j = 0; j < kHandJoints; ++j) {
    for (int v : joint_box_verts[j]) m.skin_weights(v, j) = 1.0;
  }

  // smooth blendshape modes: three axis stretches plus seeded low-frequency
  // displacement fields
  m.shape_basis.assign(static_cast<size_t>(V),
                       Eigen::Matrix<double, 3, kHandBetas>::Zero());
  std::array<Vec3, kHandBetas> wave_dir, wave_freq;
  std::array<double, kHandBetas> wave_phase;
  for (int k = 0; k < kHandBetas; ++k) {
    Vec3 u = rng.vec3_normal(1.0);
    while (u.norm() < 1e-6) u = rng.vec3_normal(1.0);
    wave_dir[k] = u.normalized();
    wave_freq[k] = rng.vec3_uniform(0.5, 1.5) / 40.0;
    wave_phase[k] = rng.uniform(0.0, 2.0 * M_PI);
  }
  for (int v = 0; v < V; ++v) {
    const Vec3& p = m.template_verts[static_cast<size_t>(v)];
    auto& B = m.shape_basis[static_cast<size_t>(v)];
    B.col(0) = Vec3(2.0 * p.x() / 70.0, 0.0, 0.0);
    B.col(1) = Vec3(0.0, 3.0 * p.y() / 140.0, 0.0);
    B.col(2) = Vec3(0.0, 0.0, 1.5 * p.z() / 10.0);
    for (int k = 3; k < kHandBetas; ++k) {
      const double arg = p.dot(wave_freq[k]) + wave_phase[k];
      B.col(k) = std::sin(arg) * wave_dir[k];
    }
  }

  m.validate();
  return m;
}

}  // namespace hoifit
