#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "hoifit/geom.hpp"

namespace hoifit {

enum class RotationSampling {
  kComponentUniform,  // each axis-angle component uniform on [-pi, pi]
  kUniformSO3,
};

struct OptimConfig {
  double step_size = 1e-2;
  int max_iters = 200;
  double convergence_tol = 1e-8;  // |delta loss|, must hold this many times:
  int convergence_streak = 10;
  int num_inits = 1000;
  int top_k = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  RotationSampling sampling = RotationSampling::kComponentUniform;
  bool record_trace = false;
};

struct Hypothesis {
  Eigen::VectorXd params;
  double final_loss = 0.0;
  int start_index = 0;
  int iterations = 0;  // gradient steps actually taken
  std::vector<double> trace;  // per-iteration loss when recorded
};

// f(x, grad_out) -> loss; grad_out is preallocated to x's size.
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) with optional
// per-parameter step scaling: step i = step_size * scale[i]. Stops early
// once |loss_t - loss_{t-1}| < convergence_tol holds convergence_streak
// times in a row. Throws DivergenceError (with the iteration) on non-finite
// loss, gradient, or parameters.
Hypothesis minimize(const Objective& f, const Eigen::VectorXd& init,
                    const OptimConfig& cfg,
                    const Eigen::VectorXd* param_scales = nullptr);

// Draws cfg.num_inits rotations (per-start RNG seeded from cfg.seed and the
// start index), runs run_one on each in parallel, drops diverged starts,
// sorts by (final_loss, start_index) and returns the best top_k. Throws
// NoHypothesisError if every start diverged.
using StartRunner = std::function<Hypothesis(const Vec3& rotvec, int start)>;
std::vector<Hypothesis> multi_start_fit(const StartRunner& run_one,
                                        const OptimConfig& cfg);

}  // namespace hoifit
