#pragma once

#include <cmath>

#include "fadv/model.hpp"

namespace fadv {

enum class NormKind { l2, linf };

/// Below this gradient norm a step is skipped entirely.
inline constexpr double kZeroGradThreshold = 1e-12;

struct PerturbationConfig {
  double epsilon = 1.0;  // norm bound / step magnitude, >= 0
  double alpha = 0.1;    // step size, > 0
  int steps = 1;         // K >= 1
  NormKind norm = NormKind::l2;
  bool project = true;   // false: projection-free multi-step ascent
};

/// Continuous per-token-position perturbation over the embedding space.
struct Perturbation {
  Matrix delta;  // n x dim
};

/// One-step sign perturbation: delta[i][j] = epsilon * sign(g[i][j]),
/// with sign(0) = 0.
inline Perturbation fgsm(const Matrix& input_grad, double epsilon) {
  if (epsilon < 0.0) throw ContractViolation("fgsm: epsilon must be >= 0");
  Perturbation p;
  p.delta = input_grad.unaryExpr([epsilon](double g) {
    if (g > 0.0) return epsilon;
    if (g < 0.0) return -epsilon;
    return 0.0;
  });
  return p;
}

/// One-step L2-normalized perturbation: delta = epsilon * g / ||g||_2, with
/// the Frobenius norm taken over the whole matrix. Zero when g vanishes.
inline Perturbation fgm(const Matrix& input_grad, double epsilon) {
  if (epsilon < 0.0) throw ContractViolation("fgm: epsilon must be >= 0");
  Perturbation p;
  const double norm = input_grad.norm();
  if (norm < kZeroGradThreshold) {
    p.delta = Matrix::Zero(input_grad.rows(), input_grad.cols());
  } else {
    p.delta = (epsilon / norm) * input_grad;
  }
  return p;
}

/// Projection onto the epsilon-ball: L2 rescales when outside, Linf clamps
/// coordinates. Idempotent.
inline void project_onto_ball(Matrix& delta, NormKind norm, double epsilon) {
  if (epsilon < 0.0) throw ContractViolation("project_onto_ball: epsilon must be >= 0");
  if (norm == NormKind::l2) {
    const double n = delta.norm();
    // the relative slack keeps the projection exactly idempotent: a rescaled
    // norm lands within a few ulp of epsilon and must not rescale again
    if (n > epsilon * (1.0 + 1e-12)) {
      delta *= epsilon / n;
    }
  } else {
    delta = delta.cwiseMax(-epsilon).cwiseMin(epsilon);
  }
}

/// delta_prev + alpha * g / ||g||_2, optionally projected back onto the
/// configured norm ball. Returns delta_prev unchanged for vanishing g.
inline Perturbation pgd_step(const Perturbation& delta_prev, const Matrix& input_grad,
                             const PerturbationConfig& cfg) {
  if (cfg.alpha <= 0.0) throw ContractViolation("pgd_step: alpha must be > 0");
  const double gn = input_grad.norm();
  if (gn < kZeroGradThreshold) return delta_prev;
  Perturbation p;
  p.delta = delta_prev.delta + (cfg.alpha / gn) * input_grad;
  if (cfg.project) project_onto_ball(p.delta, cfg.norm, cfg.epsilon);
  return p;
}

struct AscentResult {
  Perturbation perturbation;
  int steps_run = 0;
  bool aborted_non_finite = false;  // set when a non-finite loss cut the ascent short
};

/// K rounds of forward/backward/pgd_step starting from delta = 0. With
/// project=true this is PGD-K; with project=false it is the projection-free
/// multi-step ascent. A non-finite loss aborts the ascent and returns the
/// last perturbation whose loss was finite.
inline AscentResult multi_step_ascent(const ClassifierParams& params,
                                      const std::vector<int>& ids, int label,
                                      const PerturbationConfig& cfg,
                                      QueryCounter* qc = nullptr) {
  if (cfg.steps < 1) throw ContractViolation("multi_step_ascent: steps must be >= 1");
  AscentResult res;
  res.perturbation.delta = Matrix::Zero(static_cast<int>(ids.size()), params.dim());
  Matrix last_finite = res.perturbation.delta;
  for (int t = 0; t < cfg.steps; ++t) {
    const ForwardTrace trace = forward(params, ids, &res.perturbation.delta, qc);
    const double loss = loss_ce(trace, label);
    if (!std::isfinite(loss)) {
      res.perturbation.delta = last_finite;
      res.aborted_non_finite = true;
      return res;
    }
    last_finite = res.perturbation.delta;
    const Gradients g = backward(params, trace, label);
    Perturbation next = pgd_step(res.perturbation, g.input_grad, cfg);
    if (!next.delta.allFinite()) {
      res.aborted_non_finite = true;
      return res;
    }
    res.perturbation = std::move(next);
    ++res.steps_run;
  }
  return res;
}

}  // namespace fadv
