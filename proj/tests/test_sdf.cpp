#include <doctest.h>

#include <cmath>

#include "hoifit/errors.hpp"
#include "hoifit/rng.hpp"
#include "hoifit/sdf.hpp"

using namespace hoifit;

namespace {

// closed axis-aligned box with outward winding
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
  // outward normals
  quad(id(0, 0, 0), id(0, 0, 1), id(0, 1, 1), id(0, 1, 0));  // -x
  quad(id(1, 0, 0), id(1, 1, 0), id(1, 1, 1), id(1, 0, 1));  // +x
  quad(id(0, 0, 0), id(1, 0, 0), id(1, 0, 1), id(0, 0, 1));  // -y
  quad(id(0, 1, 0), id(0, 1, 1), id(1, 1, 1), id(1, 1, 0));  // +y
  quad(id(0, 0, 0), id(0, 1, 0), id(1, 1, 0), id(1, 0, 0));  // -z
  quad(id(0, 0, 1), id(1, 0, 1), id(1, 1, 1), id(0, 1, 1));  // +z
  return m;
}

// exact penetration depth for a box: distance to the nearest face if inside
double box_phi(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (p[a] <= lo[a] || p[a] >= hi[a]) return 0.0;
    d = std::min({d, p[a] - lo[a], hi[a] - p[a]});
  }
  return d;
}

}  // namespace

TEST_CASE("grid geometry for a 1000mm cube") {
  const Vec3 lo(0, 0, 0), hi(1000, 1000, 1000);
  const TriMesh m = box_mesh(lo, hi);
  const SdfGrid g = build_grid(m);
  CHECK(g.cell_size == doctest::Approx(1000.0 / 30.0).epsilon(1e-12));
  // grid centered on the box with a one-cell margin per side
  CHECK(g.origin.x() == doctest::Approx(500.0 - 16.0 * g.cell_size));

  // every cell matches the analytic box depth exactly (the perpendicular
  // foot on the nearest face lies inside that face)
  double maxv = 0.0;
  for (int k = 0; k < SdfGrid::kDim; ++k) {
    for (int j = 0; j < SdfGrid::kDim; ++j) {
      for (int i = 0; i < SdfGrid::kDim; ++i) {
        const Vec3 c = g.origin + Vec3((i + 0.5) * g.cell_size,
                                       (j + 0.5) * g.cell_size,
                                       (k + 0.5) * g.cell_size);
        const double expect = box_phi(c, lo, hi);
        CHECK(g.at(i, j, k) == doctest::Approx(expect).epsilon(1e-9));
        maxv = std::max(maxv, g.at(i, j, k));
      }
    }
  }
  // the deepest cell center sits half a cell off the true center, so the
  // peak sampled depth is 500 - h/2
  CHECK(maxv == doctest::Approx(500.0 - 0.5 * g.cell_size).epsilon(1e-9));
  // and by symmetry the trilinear value at the exact center equals the peak
  const SdfSample s = sample(g, Vec3(500, 500, 500));
  CHECK(s.value == doctest::Approx(500.0 - 0.5 * g.cell_size).epsilon(1e-9));
  CHECK(s.grad.norm() < 1e-9);
}

TEST_CASE("sample is trilinear, zero outside, FD-consistent inside") {
  const Vec3 lo(-40, -25, 300), hi(35, 45, 390);
  const TriMesh m = box_mesh(lo, hi);
  const SdfGrid g = build_grid(m);

  // outside the lattice hull
  CHECK(sample(g, Vec3(-500, 0, 0)).value == 0.0);
  CHECK(sample(g, Vec3(-500, 0, 0)).grad.norm() == 0.0);

  Rng rng(31);
  int tested = 0;
  while (tested < 40) {
    const Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                 rng.uniform(lo.z(), hi.z()));
    // stay away from lattice planes so the FD probe sees one trilinear cell
    const Vec3 q = (p - g.origin) / g.cell_size - Vec3::Constant(0.5);
    bool safe = true;
    for (int a = 0; a < 3; ++a) {
      const double fr = q[a] - std::floor(q[a]);
      if (fr < 1e-3 || fr > 1.0 - 1e-3) safe = false;
    }
    if (!safe) continue;
    ++tested;
    const SdfSample s = sample(g, p);
    const double h = 1e-5;
    for (int a = 0; a < 3; ++a) {
      Vec3 pp = p, pm = p;
      pp[a] += h;
      pm[a] -= h;
      const double fd = (sample(g, pp).value - sample(g, pm).value) / (2 * h);
      CHECK(std::abs(fd - s.grad[a]) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }

  // trilinear interpolation error vs the analytic depth stays under a cell
  Rng rng2(77);
  for (int t = 0; t < 200; ++t) {
    const Vec3 p(rng2.uniform(lo.x() - 20, hi.x() + 20),
                 rng2.uniform(lo.y() - 20, hi.y() + 20),
                 rng2.uniform(lo.z() - 20, hi.z() + 20));
    const double expect = box_phi(p, lo, hi);
    CHECK(std::abs(sample(g, p).value - expect) <= g.cell_size);
  }
}

TEST_CASE("overlapping closed components classify as inside") {
  // two boxes sharing interior volume; the signed-crossing count keeps the
  // overlap inside (plain parity would flip it)
  TriMesh a = box_mesh(Vec3(0, 0, 0), Vec3(60, 40, 40));
  const TriMesh b = box_mesh(Vec3(30, 10, 5), Vec3(90, 35, 38));
  TriMesh merged = a;
  const int off = static_cast<int>(a.vertices.size());
  for (const auto& v : b.vertices) merged.vertices.push_back(v);
  for (const auto& f : b.faces) {
    merged.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  }
  const SdfGrid g = build_grid(merged);
  // a deep point of the overlap region
  CHECK(sample(g, Vec3(40, 22, 20)).value > 0.0);
  // inside only the second box
  CHECK(sample(g, Vec3(80, 22, 20)).value > 0.0);
  // outside both
  CHECK(sample(g, Vec3(40, 40, 60)).value == 0.0);
}

TEST_CASE("penetration loss sums samples and accumulates gradients") {
  const Vec3 lo(0, 0, 0), hi(100, 100, 100);
  const SdfGrid g = build_grid(box_mesh(lo, hi));
  const std::vector<Vec3> pts = {{50, 50, 50}, {10, 50, 50}, {-20, 50, 50}};
  std::vector<Vec3> grads;
  const double loss = penetration_loss(g, pts, &grads);
  double expect = 0.0;
  for (const auto& p : pts) expect += sample(g, p).value;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
  CHECK(loss > 0.0);
  REQUIRE(grads.size() == 3);
  CHECK((grads[0] - sample(g, pts[0]).grad).norm() == 0.0);
  CHECK(grads[2].norm() == 0.0);  // outside
}

TEST_CASE("grid construction errors") {
  TriMesh empty;
  CHECK_THROWS_AS(build_grid(empty), ValidationError);

  TriMesh flat;
  flat.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  flat.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(build_grid(flat), ValidationError);

  TriMesh no_faces;
  no_faces.vertices = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(build_grid(no_faces), ValidationError);
}
