#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgw/errors.hpp"
#include "dgw/frame.hpp"

namespace dgw {

struct SolverConfig {
  double gamma = 1e-2;           // l1 weight
  std::size_t max_iters = 500;   // J
  double tolerance = 1e-6;       // epsilon in the relative-change stopping rule
  double delta = 1e-12;          // guards the stopping ratio against ||c||^2 = 0
  std::optional<double> step;    // nu; defaults to 1 / (2B)
};

struct SolverResult {
  CoefficientTensor coefficients;
  std::vector<double> objective_history;  // objective of each prox iterate
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  double objective = 0.0;  // at the returned iterate
  double step = 0.0;
};

// sign(c) * max(|c| - threshold, 0), elementwise.
inline Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& c, double threshold) {
  if (threshold < 0.0) throw ParameterError("soft_threshold needs threshold >= 0");
  return c.unaryExpr([threshold](double v) {
    const double mag = std::abs(v) - threshold;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

inline CoefficientTensor soft_threshold(const CoefficientTensor& c, double threshold) {
  return {c.n_scales(), c.n_steps(), soft_threshold(c.matrix(), threshold)};
}

// Gradient of g(C) = ||S_W^T C - Y||^2, i.e. 2 S_W (S_W^T C - Y).
inline CoefficientTensor gradient_g(const DGWFrame& frame, const CoefficientTensor& c, const TimeVertexSignal& y) {
  CoefficientTensor g = analyze(frame, synthesize(frame, c) - y);
  g.matrix() *= 2.0;
  return g;
}

inline double objective_value(const DGWFrame& frame, const CoefficientTensor& c, const TimeVertexSignal& y,
                              double gamma) {
  return (synthesize(frame, c) - y).squaredNorm() + gamma * c.matrix().lpNorm<1>();
}

// Largest violation of the l1 subgradient optimality conditions, given the gradient at c.
inline double kkt_residual(const CoefficientTensor& c, const CoefficientTensor& grad, double gamma) {
  double worst = 0.0;
  const Eigen::MatrixXd& cv = c.matrix();
  const Eigen::MatrixXd& gv = grad.matrix();
  for (Eigen::Index j = 0; j < cv.cols(); ++j) {
    for (Eigen::Index i = 0; i < cv.rows(); ++i) {
      const double ci = cv(i, j);
      const double gi = gv(i, j);
      const double r = ci != 0.0 ? std::abs(gi + std::copysign(gamma, ci)) : std::max(std::abs(gi) - gamma, 0.0);
      worst = std::max(worst, r);
    }
  }
  return worst;
}

inline double kkt_residual(const DGWFrame& frame, const CoefficientTensor& c, const TimeVertexSignal& y,
                           double gamma) {
  return kkt_residual(c, gradient_g(frame, c, y), gamma);
}

// FISTA for min_C ||S_W^T C - Y||^2 + gamma ||C||_1, returning the best iterate seen.
inline SolverResult fista(const DGWFrame& frame, const TimeVertexSignal& y, const SolverConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(cfg.tolerance > 0.0)) throw ParameterError("tolerance must be positive");
  if (cfg.delta < 0.0) throw ParameterError("delta must be >= 0");
  if (cfg.max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (cfg.step && !(*cfg.step > 0.0)) throw ParameterError("step must be positive");

  SolverResult result;
  result.step = cfg.step ? *cfg.step : 1.0 / (2.0 * frame_bounds(frame).upper);
  const double nu = result.step;
  const double threshold = nu * cfg.gamma;

  const CoefficientTensor lifted = analyze(frame, y);
  const double y_energy = y.squaredNorm();

  // Zero is optimal iff ||grad g(0)||_inf = 2 ||S_W Y||_inf <= gamma.
  if (2.0 * lifted.matrix().lpNorm<Eigen::Infinity>() <= cfg.gamma) {
    result.coefficients = frame.zero_coefficients();
    result.objective = y_energy;
    result.objective_history.push_back(y_energy);
    result.converged = true;
    result.kkt_residual = 0.0;
    return result;
  }

  CoefficientTensor best = frame.zero_coefficients();
  TimeVertexSignal best_synth = TimeVertexSignal::Zero(y.rows(), y.cols());
  double best_obj = y_energy;

  CoefficientTensor c = lifted;
  TimeVertexSignal synth_c = synthesize(frame, c);
  CoefficientTensor u_prev = c;
  TimeVertexSignal synth_u_prev = synth_c;
  double t = 1.0;

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    CoefficientTensor grad = analyze(frame, synth_c - y);
    grad.matrix() *= 2.0;
    CoefficientTensor u{c.n_scales(), c.n_steps(), soft_threshold(Eigen::MatrixXd(c.matrix() - nu * grad.matrix()), threshold)};
    TimeVertexSignal synth_u = synthesize(frame, u);

    const double obj = (synth_u - y).squaredNorm() + cfg.gamma * u.matrix().lpNorm<1>();
    result.objective_history.push_back(obj);
    result.iterations = it;
    if (!std::isfinite(obj)) {
      std::ostringstream msg;
      msg << "FISTA diverged at iteration " << it << " (objective " << obj << "); step size nu = " << nu
          << " may exceed 1/(2B)";
      throw NumericError(msg.str());
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
      best_synth = synth_u;
    }

    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double momentum = (t - 1.0) / t_next;
    Eigen::MatrixXd c_next = u.matrix() + momentum * (u.matrix() - u_prev.matrix());
    const double change = (c_next - c.matrix()).squaredNorm() / (c.matrix().squaredNorm() + cfg.delta);

    // Synthesis is linear, so S^T c_next follows from the two prox iterates.
    synth_c = synth_u + momentum * (synth_u - synth_u_prev);
    c = CoefficientTensor(c.n_scales(), c.n_steps(), std::move(c_next));
    u_prev = std::move(u);
    synth_u_prev = std::move(synth_u);
    t = t_next;

    if (change < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }

  CoefficientTensor grad = analyze(frame, best_synth - y);
  grad.matrix() *= 2.0;
  result.kkt_residual = kkt_residual(best, grad, cfg.gamma);
  result.objective = best_obj;
  result.coefficients = std::move(best);
  return result;
}

}  // namespace dgw
