#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "hoifit/errors.hpp"
#include "hoifit/losses.hpp"
#include "hoifit/metrics.hpp"
#include "hoifit/rng.hpp"
#include "hoifit/sdf.hpp"

using namespace hoifit;

namespace {

TriMesh box_mesh(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  const double xs[2] = {lo.x(), hi.x()};
  const double ys[2] = {lo.y(), hi.y()};
  const double zs[2] = {lo.z(), hi.z()};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        m.vertices.push_back(Vec3(xs[i], ys[j], zs[k]));
  auto id = [](int i, int j, int k) { return 4 * i + 2 * j + k; };
  auto quad = [&m](int a, int b, int c, int d) {
    m.faces.push_back({a, b, c});
    m.faces.push_back({a, c, d});
  };
  quad(id(0, 0, 0), id(0, 0, 1), id(0, 1, 1), id(0, 1, 0));
  quad(id(1, 0, 0), id(1, 1, 0), id(1, 1, 1), id(1, 0, 1));
  quad(id(0, 0, 0), id(1, 0, 0), id(1, 0, 1), id(0, 0, 1));
  quad(id(0, 1, 0), id(0, 1, 1), id(1, 1, 1), id(1, 1, 0));
  quad(id(0, 0, 0), id(0, 1, 0), id(1, 1, 0), id(1, 0, 0));
  quad(id(0, 0, 1), id(1, 0, 1), id(1, 1, 1), id(0, 1, 1));
  return m;
}

std::vector<Vec3> random_cloud(Rng& rng, int n, double spread) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pts.push_back(rng.vec3_uniform(-spread, spread));
  return pts;
}

// mirror of the library's centering so nearest-neighbor oracles below start
// from bit-identical coordinates
std::vector<Vec3> center_cloud(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::vector<Vec3> out;
  for (const Vec3& p : pts) out.push_back(p - c);
  return out;
}

double brute_min_dist(const Vec3& q, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts) best = std::min(best, (q - p).squaredNorm());
  return std::sqrt(best);
}

}  // namespace

TEST_CASE("hand mae removes translation and root-relative scale") {
  Rng rng(991);
  std::array<Vec3, kHandKeypoints> gt;
  for (auto& p : gt) p = Vec3(100, 200, 600) + rng.vec3_normal(40.0);

  std::array<Vec3, kHandKeypoints> shifted;
  for (int k = 0; k < kHandKeypoints; ++k)
    shifted[static_cast<size_t>(k)] = gt[static_cast<size_t>(k)] + Vec3(5, 5, 5);
  CHECK(hand_mae(shifted, gt) <= 1e-9);

  std::array<Vec3, kHandKeypoints> doubled;
  for (int k = 0; k < kHandKeypoints; ++k)
    doubled[static_cast<size_t>(k)] = gt[0] + 2.0 * (gt[static_cast<size_t>(k)] - gt[0]);
  // gt[0] + 2d - gt[0] reassociates, so exact zero is not guaranteed
  CHECK(hand_mae(doubled, gt) <= 1e-12);

  CHECK(hand_mae(gt, gt) == 0.0);
}

TEST_CASE("hand mae equals the naive three-step loop") {
  Rng rng(4185);
  std::vector<Vec3> gt, pred;
  for (int k = 0; k < 37; ++k) {
    gt.push_back(rng.vec3_normal(50.0));
    pred.push_back(gt.back() + rng.vec3_normal(3.0) + Vec3(20, -7, 11));
  }

  // independent formulation: center, compute the closed-form scale from mean
  // norms, average the residuals
  const int root = 4;
  std::vector<Vec3> pc, gc;
  for (size_t k = 0; k < gt.size(); ++k) {
    pc.push_back(pred[k] - pred[static_cast<size_t>(root)]);
    gc.push_back(gt[k] - gt[static_cast<size_t>(root)]);
  }
  double pmean = 0.0, gmean = 0.0;
  for (size_t k = 0; k < gt.size(); ++k) {
    pmean += pc[k].norm() / static_cast<double>(gt.size());
    gmean += gc[k].norm() / static_cast<double>(gt.size());
  }
  const double s = gmean / pmean;
  double expected = 0.0;
  for (size_t k = 0; k < gt.size(); ++k)
    expected += (s * pc[k] - gc[k]).norm() / static_cast<double>(gt.size());

  CHECK(hand_mae(pred, gt, root) == doctest::Approx(expected).epsilon(1e-12));

  // array overload routes through the same computation with root 0
  std::array<Vec3, kHandKeypoints> ga, pa;
  for (int k = 0; k < kHandKeypoints; ++k) {
    ga[static_cast<size_t>(k)] = gt[static_cast<size_t>(k)];
    pa[static_cast<size_t>(k)] = pred[static_cast<size_t>(k)];
  }
  const std::vector<Vec3> gv(ga.begin(), ga.end()), pv(pa.begin(), pa.end());
  CHECK(hand_mae(pa, ga) == hand_mae(pv, gv, 0));
}

TEST_CASE("hand mae rejects bad inputs") {
  const std::vector<Vec3> a(5, Vec3::Zero()), b(6, Vec3::Zero());
  CHECK_THROWS_AS(hand_mae(a, b, 0), ValidationError);
  CHECK_THROWS_AS(hand_mae(a, a, -1), ValidationError);
  CHECK_THROWS_AS(hand_mae(a, a, 5), ValidationError);
  CHECK_THROWS_AS(hand_mae(std::vector<Vec3>{}, std::vector<Vec3>{}, 0),
                  ValidationError);
}

TEST_CASE("chamfer distance matches the quadratic loop") {
  Rng rng(7130);
  const std::vector<Vec3> pred = random_cloud(rng, 120, 80.0);
  const std::vector<Vec3> gt = random_cloud(rng, 95, 80.0);

  const std::vector<Vec3> pc = center_cloud(pred);
  const std::vector<Vec3> gc = center_cloud(gt);
  double dp = 0.0, dg = 0.0;
  for (const Vec3& p : pc) dp += brute_min_dist(p, gc);
  for (const Vec3& g : gc) dg += brute_min_dist(g, pc);
  const double expected =
      dp / static_cast<double>(pc.size()) + dg / static_cast<double>(gc.size());

  CHECK(chamfer_distance(pred, gt) == expected);
}

TEST_CASE("chamfer distance invariances") {
  Rng rng(512);
  const std::vector<Vec3> pts = random_cloud(rng, 60, 50.0);
  CHECK(chamfer_distance(pts, pts) == 0.0);

  std::vector<Vec3> moved;
  for (const Vec3& p : pts) moved.push_back(p + Vec3(250, -90, 30));
  CHECK(chamfer_distance(moved, pts) <= 1e-9);

  // permutation of either cloud only reorders the sums
  std::vector<Vec3> pred = random_cloud(rng, 40, 50.0);
  std::vector<Vec3> gt = random_cloud(rng, 55, 50.0);
  const double base = chamfer_distance(pred, gt);
  std::reverse(pred.begin(), pred.end());
  std::rotate(gt.begin(), gt.begin() + 17, gt.end());
  CHECK(chamfer_distance(pred, gt) == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS_AS(chamfer_distance({}, pts), ValidationError);
  CHECK_THROWS_AS(chamfer_distance(pts, {}), ValidationError);
}

TEST_CASE("f score against the definition loop") {
  Rng rng(2209);
  const std::vector<Vec3> pred = random_cloud(rng, 80, 30.0);
  const std::vector<Vec3> gt = random_cloud(rng, 70, 30.0);
  const double tau = 15.0;

  const std::vector<Vec3> pc = center_cloud(pred);
  const std::vector<Vec3> gc = center_cloud(gt);
  int phit = 0, ghit = 0;
  for (const Vec3& p : pc) phit += brute_min_dist(p, gc) <= tau ? 1 : 0;
  for (const Vec3& g : gc) ghit += brute_min_dist(g, pc) <= tau ? 1 : 0;
  const double precision = phit / static_cast<double>(pc.size());
  const double recall = ghit / static_cast<double>(gc.size());
  const double expected = (precision == 0.0 && recall == 0.0)
                              ? 0.0
                              : 2.0 * precision * recall / (precision + recall);

  CHECK(f_score(pred, gt, tau) == expected);
}

TEST_CASE("f score endpoints") {
  Rng rng(88);
  const std::vector<Vec3> pts = random_cloud(rng, 25, 40.0);
  CHECK(f_score(pts, pts, 1e-6) == 1.0);

  // shared centroid; half the predictions far outside tau
  const std::vector<Vec3> gt = {Vec3(0, 0, 0), Vec3(10, 0, 0)};
  const std::vector<Vec3> pred = {Vec3(0, 0, 0), Vec3(10, 0, 0),
                                  Vec3(100, 0, 0), Vec3(-90, 0, 0)};
  CHECK(f_score(pred, gt, 1.0) == 2.0 / 3.0);

  // everything farther than tau in both directions
  std::vector<Vec3> spread;
  for (int i = 0; i < 8; ++i)
    spread.push_back(Vec3(std::pow(-1.0, i) * 500.0 * (1 + i / 2), 0, 0));
  CHECK(f_score(spread, gt, 0.5) == 0.0);

  CHECK_THROWS_AS(f_score(pred, gt, 0.0), ValidationError);
  CHECK_THROWS_AS(f_score(pred, gt, -3.0), ValidationError);
  CHECK_THROWS_AS(f_score({}, gt, 1.0), ValidationError);
}

TEST_CASE("collision score mirrors the penetration term") {
  const TriMesh hand = box_mesh(Vec3(0, 0, 0), Vec3(100, 80, 60));

  // disjoint: every query outside the hand
  std::vector<Vec3> outside;
  Rng rng(61);
  for (int i = 0; i < 50; ++i)
    outside.push_back(Vec3(200, 0, 0) + rng.vec3_uniform(0.0, 50.0));
  CHECK(collision_score(hand, outside) == 0.0);

  // overlapping cloud: bit-exact agreement with the optimizer's term
  std::vector<Vec3> overlap;
  for (int i = 0; i < 200; ++i)
    overlap.push_back(rng.vec3_uniform(-20.0, 120.0));
  const SdfGrid grid = build_grid(hand);
  CHECK(collision_score(hand, overlap) ==
        penetration_loss(grid, overlap, nullptr));
  CHECK(collision_score(hand, overlap) > 0.0);

  // pushing the same cloud deeper toward the hand center increases the score
  std::vector<Vec3> shallow, deep;
  for (int i = 0; i < 60; ++i) {
    const Vec3 p(95.0 + 0.1 * i, 40.0, 30.0);  // straddles the +x face
    shallow.push_back(p);
    deep.push_back(p - Vec3(2.0 * grid.cell_size, 0, 0));
  }
  CHECK(collision_score(hand, deep) > collision_score(hand, shallow));
}

TEST_CASE("hand object distance equals the interaction loss") {
  Rng rng(333);
  const std::vector<Vec3> hand = random_cloud(rng, 40, 30.0);
  std::vector<Vec3> obj;
  for (const Vec3& p : hand) obj.push_back(p + Vec3(3, 4, 0));
  CHECK(ho_distance(hand, obj) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(ho_distance(hand, hand) == 0.0);

  const std::vector<Vec3> other = random_cloud(rng, 55, 60.0);
  CHECK(ho_distance(hand, other) == interaction_loss(hand, other).loss);
}

TEST_CASE("evaluate composes the individual metrics") {
  Rng rng(140);
  std::array<Vec3, kHandKeypoints> gt_j, pred_j;
  for (int k = 0; k < kHandKeypoints; ++k) {
    gt_j[static_cast<size_t>(k)] = Vec3(0, 0, 500) + rng.vec3_normal(30.0);
    pred_j[static_cast<size_t>(k)] =
        gt_j[static_cast<size_t>(k)] + rng.vec3_normal(2.0);
  }
  const TriMesh pred_hand = box_mesh(Vec3(0, 0, 480), Vec3(40, 30, 520));
  TriMesh gt_hand = pred_hand;
  for (Vec3& v : gt_hand.vertices) v += Vec3(1, 0, 0);
  const TriMesh pred_obj = box_mesh(Vec3(30, 0, 480), Vec3(70, 30, 520));
  TriMesh gt_obj = pred_obj;
  for (Vec3& v : gt_obj.vertices) v += rng.vec3_normal(0.5);

  const EvalReport r =
      evaluate(pred_j, gt_j, pred_hand, gt_hand, pred_obj, gt_obj);
  CHECK(r.hand_mae == hand_mae(pred_j, gt_j));
  CHECK(r.hand_vert_mae ==
        hand_mae(pred_hand.vertices, gt_hand.vertices, 0));
  CHECK(r.chamfer == chamfer_distance(pred_obj.vertices, gt_obj.vertices));
  CHECK(r.f_score_5 == f_score(pred_obj.vertices, gt_obj.vertices, 5.0));
  CHECK(r.f_score_15 == f_score(pred_obj.vertices, gt_obj.vertices, 15.0));
  CHECK(r.collision_score == collision_score(pred_hand, pred_obj.vertices));
  CHECK(r.ho_distance ==
        ho_distance(pred_hand.vertices, pred_obj.vertices));
}
