#include <doctest.h>

#include <cmath>

#include "hoifit/errors.hpp"
#include "hoifit/hand_model.hpp"
#include "hoifit/rng.hpp"

using namespace hoifit;

namespace {

HandParams random_params(Rng& rng) {
  HandParams p;
  p.global_rot = rng.vec3_uniform(-0.8, 0.8);
  for (auto& t : p.theta) t = rng.vec3_uniform(-0.5, 0.5);
  for (int k = 0; k < kHandBetas; ++k) p.beta[k] = rng.uniform(-1.0, 1.0);
  p.wp.tx = rng.uniform(-30.0, 30.0);
  p.wp.ty = rng.uniform(-30.0, 30.0);
  p.wp.s = rng.uniform(1.5, 3.0);
  return p;
}

}  // namespace

TEST_CASE("synthetic model is valid and sized sensibly") {
  const HandModel m = generate_synthetic_model(1);
  CHECK_NOTHROW(m.validate());
  CHECK(m.num_vertices() > 300);
  CHECK(m.faces.size() > 500);
  CHECK(m.faces.size() < 1000);

  // different seeds give different geometry, same topology
  const HandModel m2 = generate_synthetic_model(2);
  CHECK(m2.num_vertices() == m.num_vertices());
  bool moved = false;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if ((m.template_verts[v] - m2.template_verts[v]).norm() > 1e-9) {
      moved = true;
      break;
    }
  }
  CHECK(moved);

  // same seed reproduces bit for bit
  const HandModel m1b = generate_synthetic_model(1);
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(m.template_verts[v] == m1b.template_verts[v]);
  }
}

TEST_CASE("rest pose places joints at regressed positions") {
  const HandModel m = generate_synthetic_model(5);
  HandParams p;  // all zero rotations
  p.wp.s = 2.0;
  const HandForward f = hand_forward(m, p, 1000.0);

  // with zero articulation the posed joints equal the rest joints, so the
  // camera-frame keypoints are rest joints plus the offset
  const Vec3 off(0.0, 0.0, 500.0);
  for (int j = 0; j < kHandJoints; ++j) {
    CHECK((f.joints21[j] - (f.rest_joints[j] + off)).norm() < 1e-12);
  }
  // wrist sits at the palm base by construction
  CHECK(f.rest_joints[0].norm() < 1e-9);
  // fingertips are mesh vertices
  for (int k = 0; k < 5; ++k) {
    CHECK((f.joints21[16 + k] - f.mesh.vertices[m.tip_vertex_ids[k]]).norm() ==
          0.0);
  }
}

TEST_CASE("pack/unpack round trip") {
  Rng rng(23);
  const HandParams p = random_params(rng);
  const auto x = pack_hand_params(p);
  const HandParams q = unpack_hand_params(x);
  CHECK((p.global_rot - q.global_rot).norm() < 1e-15);
  for (int j = 0; j < kHandThetaJoints; ++j) {
    CHECK((p.theta[j] - q.theta[j]).norm() < 1e-15);
  }
  CHECK((p.beta - q.beta).norm() < 1e-15);
  CHECK(p.wp.tx == q.wp.tx);
  CHECK(p.wp.s == doctest::Approx(q.wp.s).epsilon(1e-15));
}

TEST_CASE("hand backward matches finite differences over all 61 params") {
  const HandModel model = generate_synthetic_model(3);
  Rng rng(101);
  const HandParams params = random_params(rng);
  const double focal = 1000.0;

  // random linear functional over vertices and keypoints
  std::vector<Vec3> dV(model.num_vertices());
  for (auto& g : dV) g = rng.vec3_uniform(-1.0, 1.0);
  std::array<Vec3, kHandKeypoints> dJ;
  for (auto& g : dJ) g = rng.vec3_uniform(-1.0, 1.0);

  auto value = [&](const HandParams& p) {
    const HandForward f = hand_forward(model, p, focal);
    double acc = 0.0;
    for (int v = 0; v < model.num_vertices(); ++v) {
      acc += dV[v].dot(f.mesh.vertices[v]);
    }
    for (int j = 0; j < kHandKeypoints; ++j) acc += dJ[j].dot(f.joints21[j]);
    return acc;
  };

  const HandForward fwd = hand_forward(model, params, focal);
  const HandGrad g = hand_backward(model, params, fwd, focal, dV, dJ);
  const auto packed = g.pack_log_s(params.wp.s);

  auto x0 = pack_hand_params(params);
  const double h = 1e-6;
  double max_rel = 0.0;
  for (int i = 0; i < kHandParamDim; ++i) {
    auto xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const double fd =
        (value(unpack_hand_params(xp)) - value(unpack_hand_params(xm))) /
        (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(packed[i]), 1.0});
    max_rel = std::max(max_rel, std::abs(packed[i] - fd) / scale);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("hand forward validates scale") {
  const HandModel m = generate_synthetic_model(1);
  HandParams p;
  p.wp.s = -1.0;
  CHECK_THROWS_AS(hand_forward(m, p, 1000.0), ValidationError);
}

TEST_CASE("model validation catches broken fields") {
  HandModel m = generate_synthetic_model(4);
  CHECK_NOTHROW(m.validate());

  auto broken = m;
  broken.parents[0] = 0;
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = m;
  broken.parents[5] = 9;  // not < j
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = m;
  broken.joint_regressor(2, 0) += 0.5;
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = m;
  broken.skin_weights(10, 0) += 0.25;
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = m;
  broken.tip_vertex_ids[1] = broken.tip_vertex_ids[0];
  CHECK_THROWS_AS(broken.validate(), ValidationError);

  broken = m;
  broken.faces[0][0] = broken.num_vertices();
  CHECK_THROWS_AS(broken.validate(), ValidationError);
}
