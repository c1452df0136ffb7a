#include "hoifit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hoifit/errors.hpp"
#include "hoifit/parallel.hpp"
#include "hoifit/rng.hpp"

namespace hoifit {

Hypothesis minimize(const Objective& f, const Eigen::VectorXd& init,
                    const OptimConfig& cfg,
                    const Eigen::VectorXd* param_scales) {
  const Eigen::Index n = init.size();
  if (n == 0) throw ValidationError("minimize: empty parameter vector");
  if (param_scales && param_scales->size() != n) {
    throw ValidationError("minimize: param_scales size mismatch");
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  Hypothesis hyp;
  hyp.params = init;
  Eigen::VectorXd grad(n), m = Eigen::VectorXd::Zero(n),
                  v = Eigen::VectorXd::Zero(n);
  double prev_loss = 0.0;
  int streak = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double loss = f(hyp.params, grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw DivergenceError("non-finite loss or gradient", it);
    }
    if (cfg.record_trace) hyp.trace.push_back(loss);
    if (it > 0 && std::abs(loss - prev_loss) < cfg.convergence_tol) {
      if (++streak >= cfg.convergence_streak) {
        hyp.final_loss = loss;
        return hyp;
      }
    } else {
      streak = 0;
    }
    prev_loss = loss;

    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(kBeta1, it + 1);
    const double bc2 = 1.0 - std::pow(kBeta2, it + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      const double scale = param_scales ? (*param_scales)[i] : 1.0;
      hyp.params[i] -= cfg.step_size * scale * mh / (std::sqrt(vh) + kEps);
    }
    if (!hyp.params.allFinite()) {
      throw DivergenceError("non-finite parameters", it);
    }
    hyp.iterations = it + 1;
  }
  Eigen::VectorXd unused(n);
  hyp.final_loss = f(hyp.params, unused);
  if (!std::isfinite(hyp.final_loss)) {
    throw DivergenceError("non-finite final loss", cfg.max_iters);
  }
  if (cfg.record_trace) hyp.trace.push_back(hyp.final_loss);
  return hyp;
}

std::vector<Hypothesis> multi_start_fit(const StartRunner& run_one,
                                        const OptimConfig& cfg) {
  if (cfg.num_inits < 1) throw ValidationError("multi_start_fit: num_inits < 1");
  if (cfg.top_k < 1) throw ValidationError("multi_start_fit: top_k < 1");

  std::vector<Hypothesis> results(static_cast<size_t>(cfg.num_inits));
  std::vector<std::uint8_t> ok(static_cast<size_t>(cfg.num_inits), 0);
  parallel_for(cfg.num_inits, cfg.workers, [&](int s) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    Vec3 rot;
    if (cfg.sampling == RotationSampling::kUniformSO3) {
      rot = rng.rotvec_uniform_so3();
    } else {
      rot = rng.vec3_uniform(-std::numbers::pi, std::numbers::pi);
    }
    try {
      results[static_cast<size_t>(s)] = run_one(rot, s);
      results[static_cast<size_t>(s)].start_index = s;
      ok[static_cast<size_t>(s)] = 1;
    } catch (const DivergenceError&) {
      // dropped
    } catch (const ClippedGeometryError&) {
      // a start that pushes geometry off-screen is dropped, not fatal
    } catch (const BehindCameraError&) {
      // likewise
    }
  });

  std::vector<Hypothesis> kept;
  kept.reserve(static_cast<size_t>(cfg.num_inits));
  for (int s = 0; s < cfg.num_inits; ++s) {
    if (ok[static_cast<size_t>(s)]) kept.push_back(std::move(results[static_cast<size_t>(s)]));
  }
  if (kept.empty()) {
    throw NoHypothesisError("multi_start_fit: every start diverged");
  }
  std::sort(kept.begin(), kept.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.final_loss != b.final_loss) return a.final_loss < b.final_loss;
    return a.start_index < b.start_index;
  });
  if (static_cast<int>(kept.size()) > cfg.top_k) {
    kept.resize(static_cast<size_t>(cfg.top_k));
  }
  return kept;
}

}  // namespace hoifit
