#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "dgw/errors.hpp"

namespace dgw {

enum class KernelKind { heat, wave, damped_wave };

struct KernelSpec {
  KernelKind kind = KernelKind::damped_wave;
  double scale = 1.0;    // s = alpha^2, squared propagation speed
  double damping = 0.0;  // beta, per time step (damped_wave only)
};

// Values of s * lambda this far above 4 are treated as roundoff and clamped.
inline constexpr double kStabilitySlack = 1e-9;

namespace detail {

inline double checked_wave_argument(double s, double lambda) {
  const double x = s * lambda;
  if (!(x >= -kStabilitySlack)) {
    throw ParameterError("wave kernel needs s * lambda >= 0");
  }
  if (x > 4.0 + kStabilitySlack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "unstable wave kernel: s * lambda = " << x << " exceeds 4; scale s = " << s
        << " must satisfy s < 4/lambda_max = " << 4.0 / lambda;
    throw StabilityError(msg.str());
  }
  return std::clamp(x, 0.0, 4.0);
}

}  // namespace detail

// Propagation phase per step, arccos(1 - s lambda / 2) in [0, pi].
inline double wave_phase(double s, double lambda) {
  return std::acos(1.0 - detail::checked_wave_argument(s, lambda) / 2.0);
}

inline double heat_kernel(double s, double lambda, double t) { return std::exp(-s * lambda * t); }

inline double wave_kernel(double s, double lambda, double t) {
  return std::cos(t * wave_phase(s, lambda));
}

// Causal damped wave H(t) e^{-beta t} cos(t theta), with H(0) = 1.
inline double damped_wave_kernel(const KernelSpec& spec, double lambda, double t) {
  if (t < 0.0) return 0.0;
  return std::exp(-spec.damping * t) * wave_kernel(spec.scale, lambda, t);
}

inline double kernel_value(const KernelSpec& spec, double lambda, double t) {
  if (t < 0.0) return 0.0;
  switch (spec.kind) {
    case KernelKind::heat:
      return heat_kernel(spec.scale, lambda, t);
    case KernelKind::wave:
      return wave_kernel(spec.scale, lambda, t);
    case KernelKind::damped_wave:
      return damped_wave_kernel(spec, lambda, t);
  }
  return 0.0;
}

// K(lambda, t) for t = 0 .. T-1.
inline Eigen::VectorXd kernel_profile(const KernelSpec& spec, double lambda, std::size_t steps) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(steps));
  if (spec.kind == KernelKind::heat) {
    for (std::size_t t = 0; t < steps; ++t) k(Eigen::Index(t)) = heat_kernel(spec.scale, lambda, double(t));
    return k;
  }
  const double theta = wave_phase(spec.scale, lambda);
  const double beta = spec.kind == KernelKind::damped_wave ? spec.damping : 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    k(Eigen::Index(t)) = std::exp(-beta * double(t)) * std::cos(double(t) * theta);
  }
  return k;
}

enum class SpectrumMode {
  truncated_dft,  // DFT of the length-T profile
  closed_form,    // infinite-horizon geometric sum evaluated at omega_k = 2 pi k / T
};

enum class SpectrumScaling {
  multiplier,  // plain sum_t K(t) e^{-j omega t}; the joint-domain filter gain
  unitary,     // multiplier / sqrt(T)
};

// Infinite-horizon sum_{t>=0} e^{-beta t} cos(t theta) e^{-j omega t}
//   = (1 - z cos theta) / (1 - 2 z cos theta + z^2),  z = e^{-beta - j omega}.
inline std::complex<double> damped_wave_closed_form(const KernelSpec& spec, double lambda, double omega) {
  const double c = std::cos(wave_phase(spec.scale, lambda));
  const std::complex<double> z = std::exp(std::complex<double>(-spec.damping, -omega));
  return (1.0 - z * c) / (1.0 - 2.0 * z * c + z * z);
}

inline Eigen::VectorXcd kernel_time_spectrum(const KernelSpec& spec, double lambda, std::size_t steps,
                                             SpectrumMode mode = SpectrumMode::truncated_dft,
                                             SpectrumScaling scaling = SpectrumScaling::multiplier) {
  if (spec.kind != KernelKind::damped_wave) {
    throw ParameterError("kernel_time_spectrum is defined for the damped wave kernel");
  }
  if (steps < 2) throw ParameterError("kernel_time_spectrum needs T >= 2");
  const auto n = static_cast<Eigen::Index>(steps);
  Eigen::VectorXcd out(n);
  if (mode == SpectrumMode::closed_form) {
    for (Eigen::Index k = 0; k < n; ++k) {
      out(k) = damped_wave_closed_form(spec, lambda, 2.0 * std::numbers::pi * double(k) / double(n));
    }
  } else {
    const Eigen::VectorXd profile = kernel_profile(spec, lambda, steps);
    for (Eigen::Index k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index t = 0; t < n; ++t) {
        // Reduce k*t mod T first so the phase stays exact for large T.
        const double phase = -2.0 * std::numbers::pi * double((k * t) % n) / double(n);
        acc += profile(t) * std::polar(1.0, phase);
      }
      out(k) = acc;
    }
  }
  if (scaling == SpectrumScaling::unitary) out /= std::sqrt(double(n));
  return out;
}

// Lower bound ((1 - e^{-beta}) / 4)^2 on |W(lambda, omega)|^2 for a single scale.
inline double damped_wave_frame_bound(double beta) {
  if (!(beta > 0.0)) return 0.0;
  const double r = (1.0 - std::exp(-beta)) / 4.0;
  return r * r;
}

}  // namespace dgw
