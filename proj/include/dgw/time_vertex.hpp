#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "dgw/errors.hpp"
#include "dgw/graph.hpp"

namespace dgw {

// N x T real matrix: row n is the time series observed at vertex n.
using TimeVertexSignal = Eigen::MatrixXd;
// N x T complex matrix indexed (graph frequency l, time frequency k).
using JointSpectrum = Eigen::MatrixXcd;

namespace detail {

inline void require_dims(const Eigen::MatrixXd& x, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(x.rows()) != n) {
    throw ParameterError(std::string(what) + ": signal has " + std::to_string(x.rows()) +
                         " rows but the graph has " + std::to_string(n) + " vertices");
  }
}

// Batched FFTW plans over the rows of column-major matrices, one per
// (kind, rows, steps), shared for the life of the process. FFTW planning is
// not thread-safe, hence the lock; executing a cached plan is.
enum class PlanKind { r2c, c2r, forward, backward };

inline fftw_plan cached_plan(PlanKind kind, int rows, int steps) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  const std::lock_guard lock(mu);
  const auto key = std::make_tuple(static_cast<int>(kind), rows, steps);
  if (auto it = plans.find(key); it != plans.end()) return it->second;

  const auto len = static_cast<std::size_t>(rows) * static_cast<std::size_t>(steps);
  std::vector<double> re(len);
  std::vector<std::complex<double>> a(len), b(len);
  auto* ca = reinterpret_cast<fftw_complex*>(a.data());
  auto* cb = reinterpret_cast<fftw_complex*>(b.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  switch (kind) {
    case PlanKind::r2c:
      plan = fftw_plan_many_dft_r2c(1, &steps, rows, re.data(), nullptr, rows, 1, ca, nullptr, rows, 1, flags);
      break;
    case PlanKind::c2r:
      plan = fftw_plan_many_dft_c2r(1, &steps, rows, ca, nullptr, rows, 1, re.data(), nullptr, rows, 1, flags);
      break;
    case PlanKind::forward:
    case PlanKind::backward:
      plan = fftw_plan_many_dft(1, &steps, rows, ca, nullptr, rows, 1, cb, nullptr, rows, 1,
                                kind == PlanKind::forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
      break;
  }
  if (plan == nullptr) throw NumericError("FFTW could not plan a length-" + std::to_string(steps) + " transform");
  plans.emplace(key, plan);
  return plan;
}

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

// Row-wise DFTs with the plain (unnormalized) convention
//   F(k) = sum_t f(t) exp(-j 2 pi k t / T),
// inverse scaled by 1/T.
class RowFft {
 public:
  explicit RowFft(Eigen::Index steps) : steps_(steps), half_(steps / 2 + 1) {
    if (steps < 1) throw ParameterError("FFT length must be >= 1");
  }

  Eigen::Index steps() const { return steps_; }
  Eigen::Index half() const { return half_; }

  // N x T real -> N x (T/2 + 1) half spectrum.
  Eigen::MatrixXcd forward_half(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    check_cols(x.cols(), steps_);
    const Eigen::MatrixXd in = x;  // contiguous column-major copy
    Eigen::MatrixXcd out(x.rows(), half_);
    if (x.rows() == 0) return out;
    fftw_execute_dft_r2c(plan(PlanKind::r2c, x.rows()), const_cast<double*>(in.data()), as_fftw(out.data()));
    return out;
  }

  // N x (T/2 + 1) half spectrum of a real signal -> N x T real.
  Eigen::MatrixXd inverse_half(const Eigen::Ref<const Eigen::MatrixXcd>& s) const {
    check_cols(s.cols(), half_);
    Eigen::MatrixXcd in = s;  // c2r overwrites its input
    Eigen::MatrixXd out(s.rows(), steps_);
    if (s.rows() == 0) return out;
    fftw_execute_dft_c2r(plan(PlanKind::c2r, s.rows()), as_fftw(in.data()), out.data());
    out /= double(steps_);
    return out;
  }

  Eigen::MatrixXcd forward_full(const Eigen::Ref<const Eigen::MatrixXcd>& x) const {
    return full(x, PlanKind::forward, 1.0);
  }

  Eigen::MatrixXcd inverse_full(const Eigen::Ref<const Eigen::MatrixXcd>& s) const {
    return full(s, PlanKind::backward, 1.0 / double(steps_));
  }

 private:
  static void check_cols(Eigen::Index got, Eigen::Index want) {
    if (got != want) {
      throw ParameterError("FFT input has " + std::to_string(got) + " columns, expected " + std::to_string(want));
    }
  }

  fftw_plan plan(PlanKind kind, Eigen::Index rows) const {
    return cached_plan(kind, static_cast<int>(rows), static_cast<int>(steps_));
  }

  Eigen::MatrixXcd full(const Eigen::Ref<const Eigen::MatrixXcd>& x, PlanKind kind, double scale) const {
    check_cols(x.cols(), steps_);
    Eigen::MatrixXcd in = x;
    Eigen::MatrixXcd out(x.rows(), steps_);
    if (x.rows() == 0) return out;
    fftw_execute_dft(plan(kind, x.rows()), as_fftw(in.data()), as_fftw(out.data()));
    if (scale != 1.0) out *= scale;
    return out;
  }

  Eigen::Index steps_;
  Eigen::Index half_;
};

}  // namespace detail

// Periodic second difference along time: X(n,t+1) - 2X(n,t) + X(n,t-1).
// Follows the raw-stencil sign convention, so the operator is negative semi-definite.
inline TimeVertexSignal ring_laplacian_apply(const TimeVertexSignal& x) {
  const Eigen::Index steps = x.cols();
  if (steps < 3) {
    throw ParameterError("ring Laplacian needs T >= 3 (got T=" + std::to_string(steps) + ")");
  }
  TimeVertexSignal out(x.rows(), steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::Index next = (t + 1) % steps;
    const Eigen::Index prev = (t + steps - 1) % steps;
    out.col(t) = x.col(next) - 2.0 * x.col(t) + x.col(prev);
  }
  return out;
}

// Eigenvalues 2(cos(2 pi k / T) - 1) of the periodic second difference.
inline Eigen::VectorXd ring_eigenvalues(std::size_t steps) {
  if (steps < 1) throw ParameterError("ring_eigenvalues needs T >= 1");
  Eigen::VectorXd omega(static_cast<Eigen::Index>(steps));
  for (std::size_t k = 0; k < steps; ++k) {
    omega(Eigen::Index(k)) = 2.0 * (std::cos(2.0 * std::numbers::pi * double(k) / double(steps)) - 1.0);
  }
  return omega;
}

// L_G X + X L_T.
inline TimeVertexSignal joint_laplacian_apply(const TimeVertexSignal& x, const Graph& g) {
  detail::require_dims(x, g.n_vertices(), "joint_laplacian_apply");
  return g.laplacian() * x + ring_laplacian_apply(x);
}

// Joint Fourier transform U_G^T X conj(U_T), unitary in both dimensions.
inline JointSpectrum jft(const TimeVertexSignal& x, const SpectralBasis& basis) {
  detail::require_dims(x, basis.size(), "jft");
  if (x.cols() < 1) throw ParameterError("jft: signal needs T >= 1");
  const Eigen::MatrixXcd graph_spec = (basis.eigenvectors.transpose() * x).cast<std::complex<double>>();
  detail::RowFft fft(x.cols());
  return fft.forward_full(graph_spec) / std::sqrt(double(x.cols()));
}

// Inverse joint transform without discarding the imaginary part.
inline Eigen::MatrixXcd ijft_complex(const JointSpectrum& s, const SpectralBasis& basis) {
  if (static_cast<std::size_t>(s.rows()) != basis.size()) {
    throw ParameterError("ijft: spectrum has " + std::to_string(s.rows()) + " rows but basis has " +
                         std::to_string(basis.size()));
  }
  if (s.cols() < 1) throw ParameterError("ijft: spectrum needs T >= 1");
  detail::RowFft fft(s.cols());
  const Eigen::MatrixXcd time = fft.inverse_full(s) * std::sqrt(double(s.cols()));
  return basis.eigenvectors.cast<std::complex<double>>() * time;
}

// Inverse joint transform, real part.
inline TimeVertexSignal ijft(const JointSpectrum& s, const SpectralBasis& basis) {
  return ijft_complex(s, basis).real();
}

}  // namespace dgw
