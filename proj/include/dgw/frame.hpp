#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dgw/errors.hpp"
#include "dgw/graph.hpp"
#include "dgw/kernels.hpp"
#include "dgw/time_vertex.hpp"

namespace dgw {

// Analysis coefficients C(s, m, tau). Stored as one N x (S*T) matrix whose
// column block s holds the N x T coefficients of scale s.
class CoefficientTensor {
 public:
  CoefficientTensor() = default;
  CoefficientTensor(std::size_t n_scales, std::size_t n_vertices, std::size_t n_steps)
      : scales_(n_scales), steps_(n_steps), data_(Eigen::MatrixXd::Zero(Eigen::Index(n_vertices), Eigen::Index(n_scales * n_steps))) {}
  CoefficientTensor(std::size_t n_scales, std::size_t n_steps, Eigen::MatrixXd data)
      : scales_(n_scales), steps_(n_steps), data_(std::move(data)) {
    if (static_cast<std::size_t>(data_.cols()) != scales_ * steps_) {
      throw ParameterError("coefficient block has wrong number of columns");
    }
  }

  std::size_t n_scales() const { return scales_; }
  std::size_t n_vertices() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t n_steps() const { return steps_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  double& operator()(std::size_t s, std::size_t m, std::size_t tau) {
    return data_(Eigen::Index(m), Eigen::Index(s * steps_ + tau));
  }
  double operator()(std::size_t s, std::size_t m, std::size_t tau) const {
    return data_(Eigen::Index(m), Eigen::Index(s * steps_ + tau));
  }

  auto scale_block(std::size_t s) { return data_.middleCols(Eigen::Index(s * steps_), Eigen::Index(steps_)); }
  auto scale_block(std::size_t s) const {
    return data_.middleCols(Eigen::Index(s * steps_), Eigen::Index(steps_));
  }

  Eigen::MatrixXd& matrix() { return data_; }
  const Eigen::MatrixXd& matrix() const { return data_; }

  bool same_shape(const CoefficientTensor& o) const {
    return scales_ == o.scales_ && steps_ == o.steps_ && data_.rows() == o.data_.rows();
  }

 private:
  std::size_t scales_ = 0;
  std::size_t steps_ = 0;
  Eigen::MatrixXd data_;
};

inline double inner(const CoefficientTensor& a, const CoefficientTensor& b) {
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

class DGWFrame;
inline DGWFrame build_frame(SpectralBasis basis, std::size_t steps, std::vector<double> scales, double beta);

// Causal damped-wave frame over a fixed graph basis and signal length.
class DGWFrame {
 public:
  const SpectralBasis& basis() const { return basis_; }
  std::size_t n_vertices() const { return basis_.size(); }
  std::size_t n_steps() const { return steps_; }
  std::size_t n_scales() const { return scales_.size(); }
  const std::vector<double>& scales() const { return scales_; }
  double beta() const { return beta_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  KernelSpec kernel(std::size_t s_index) const {
    return {KernelKind::damped_wave, scales_.at(s_index), beta_};
  }

  // Half-spectrum multipliers of scale s: N x (T/2 + 1), entry (l, k) = W_s(lambda_l, omega_k).
  const Eigen::MatrixXcd& half_multipliers(std::size_t s_index) const { return multipliers_.at(s_index); }

  // Full-grid multiplier, k in [0, T).
  std::complex<double> multiplier(std::size_t s_index, std::size_t l, std::size_t k) const {
    const auto& m = multipliers_.at(s_index);
    if (k < static_cast<std::size_t>(m.cols())) return m(Eigen::Index(l), Eigen::Index(k));
    return std::conj(m(Eigen::Index(l), Eigen::Index(steps_ - k)));
  }

  CoefficientTensor zero_coefficients() const { return {n_scales(), n_vertices(), n_steps()}; }

 private:
  friend DGWFrame build_frame(SpectralBasis, std::size_t, std::vector<double>, double);

  SpectralBasis basis_;
  std::size_t steps_ = 0;
  std::vector<double> scales_;
  double beta_ = 0.0;
  std::vector<Eigen::MatrixXcd> multipliers_;
  std::vector<std::string> warnings_;
};

// Damping below which the time-circular wrap of an atom is considered non-negligible.
inline constexpr double kWrapWarnLevel = 1e-3;

inline DGWFrame build_frame(SpectralBasis basis, std::size_t steps, std::vector<double> scales, double beta) {
  if (scales.empty()) throw ParameterError("scale list is empty");
  if (steps < 2) throw ParameterError("frame needs T >= 2");
  if (basis.size() < 1) throw ParameterError("frame needs a non-empty spectral basis");
  if (!std::isfinite(beta) || beta < 0.0) throw ParameterError("damping beta must be finite and >= 0");

  const double lmax = basis.lambda_max();
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double s = scales[i];
    if (!std::isfinite(s) || s < 0.0) {
      throw ParameterError("scale " + std::to_string(i) + " must be finite and >= 0");
    }
    if (s * lmax >= 4.0) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "scale index " << i << " (s = " << s << ") violates stability: s * lambda_max = " << s * lmax
          << " >= 4; require s < 4/lambda_max = " << 4.0 / lmax;
      throw StabilityError(msg.str());
    }
  }

  DGWFrame frame;
  frame.steps_ = steps;
  frame.beta_ = beta;
  if (!(beta > 0.0)) {
    frame.warnings_.push_back("beta <= 0: frame not guaranteed (lower bound requires beta > 0)");
  }
  if (std::exp(-beta * double(steps)) > kWrapWarnLevel) {
    std::ostringstream msg;
    msg << "exp(-beta*T) = " << std::exp(-beta * double(steps))
        << " > 1e-3: circular time wrap of atoms is not negligible";
    frame.warnings_.push_back(msg.str());
  }

  detail::RowFft fft{Eigen::Index(steps)};
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd profiles(n, Eigen::Index(steps));
  for (double s : scales) {
    const KernelSpec spec{KernelKind::damped_wave, s, beta};
    for (Eigen::Index l = 0; l < n; ++l) {
      profiles.row(l) = kernel_profile(spec, basis.eigenvalues(l), steps).transpose();
    }
    frame.multipliers_.push_back(fft.forward_half(profiles));
  }
  frame.scales_ = std::move(scales);
  frame.basis_ = std::move(basis);
  return frame;
}

// S scale values on (0, s_max], clamped so that s * lambda_max <= 3.99.
// With s_min given the grid runs linearly from s_min to the clamped s_max.
inline std::vector<double> linear_scale_grid(std::size_t count, double s_max, double lambda_max,
                                             std::optional<double> s_min = std::nullopt) {
  if (count == 0) throw ParameterError("scale count must be >= 1");
  double top = s_max;
  if (lambda_max > 0.0) top = std::min(top, 3.99 / lambda_max);
  if (!(top > 0.0)) throw ParameterError("s_max must be positive");
  std::vector<double> out(count);
  if (!s_min) {
    for (std::size_t i = 0; i < count; ++i) out[i] = top * double(i + 1) / double(count);
    return out;
  }
  const double lo = std::min(*s_min, top);
  if (lo < 0.0) throw ParameterError("s_min must be >= 0");
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? top : lo + (top - lo) * double(i) / double(count - 1);
  }
  return out;
}

enum class AtomSupport {
  circular,  // lag (t - tau) mod T; the atoms the analysis operator correlates against
  causal,    // zero for t < tau, no wrap
};

namespace detail {

inline TimeVertexSignal atom_from_basis(const SpectralBasis& b, const KernelSpec& spec, std::size_t m,
                                        std::size_t tau, std::size_t steps, AtomSupport support) {
  const auto n = static_cast<Eigen::Index>(b.size());
  const auto nt = static_cast<Eigen::Index>(steps);
  Eigen::MatrixXd profiles(n, nt);
  for (Eigen::Index l = 0; l < n; ++l) {
    profiles.row(l) = kernel_profile(spec, b.eigenvalues(l), steps).transpose();
  }
  const Eigen::VectorXd source = b.eigenvectors.row(Eigen::Index(m)).transpose();

  TimeVertexSignal w = TimeVertexSignal::Zero(n, nt);
  for (Eigen::Index t = 0; t < nt; ++t) {
    Eigen::Index lag = t - Eigen::Index(tau);
    if (lag < 0) {
      if (support == AtomSupport::causal) continue;
      lag += nt;
    }
    w.col(t) = b.eigenvectors * profiles.col(lag).cwiseProduct(source);
  }
  return w;
}

}  // namespace detail

// W_{m,tau,s}(n, t) = sum_l K(s lambda_l, t - tau) u_l(m) u_l(n).
inline TimeVertexSignal atom(const DGWFrame& frame, std::size_t m, std::size_t tau, std::size_t s_index,
                             AtomSupport support = AtomSupport::circular) {
  if (m >= frame.n_vertices() || tau >= frame.n_steps() || s_index >= frame.n_scales()) {
    throw ParameterError("atom index out of range");
  }
  return detail::atom_from_basis(frame.basis(), frame.kernel(s_index), m, tau, frame.n_steps(), support);
}

// Frame analysis: C_s(m, tau) = sum_{n,t} W_{m,tau,s}(n,t) X(n,t), computed as
// a circular correlation in the joint spectral domain.
inline CoefficientTensor analyze(const DGWFrame& frame, const TimeVertexSignal& x) {
  detail::require_dims(x, frame.n_vertices(), "analyze");
  if (static_cast<std::size_t>(x.cols()) != frame.n_steps()) {
    throw ParameterError("analyze: signal has T=" + std::to_string(x.cols()) + " but the frame has T=" +
                         std::to_string(frame.n_steps()));
  }
  const auto steps = static_cast<Eigen::Index>(frame.n_steps());
  const Eigen::MatrixXd& u = frame.basis().eigenvectors;
  detail::RowFft fft(steps);

  const Eigen::MatrixXcd spec = fft.forward_half(u.transpose() * x);
  Eigen::MatrixXd stacked(x.rows(), steps * Eigen::Index(frame.n_scales()));
  const double scale = std::max(1.0, spec.cwiseAbs().maxCoeff());
  for (std::size_t s = 0; s < frame.n_scales(); ++s) {
    const Eigen::MatrixXcd prod = frame.half_multipliers(s).conjugate().cwiseProduct(spec);
    // DC and Nyquist bins of a real correlation are real.
    double residue = prod.col(0).imag().cwiseAbs().maxCoeff();
    if (steps % 2 == 0) residue = std::max(residue, prod.col(steps / 2).imag().cwiseAbs().maxCoeff());
    if (residue > 1e-8 * scale) {
      throw NumericError("analysis produced a non-real coefficient block (imaginary residue " +
                         std::to_string(residue) + ")");
    }
    stacked.middleCols(Eigen::Index(s) * steps, steps) = fft.inverse_half(prod);
  }
  return {frame.n_scales(), frame.n_steps(), u * stacked};
}

// Adjoint of analyze: X = sum_{s,m,tau} C(s,m,tau) W_{m,tau,s}.
inline TimeVertexSignal synthesize(const DGWFrame& frame, const CoefficientTensor& c) {
  if (c.n_scales() != frame.n_scales() || c.n_vertices() != frame.n_vertices() ||
      c.n_steps() != frame.n_steps()) {
    throw ParameterError("synthesize: coefficient tensor shape does not match the frame");
  }
  const auto steps = static_cast<Eigen::Index>(frame.n_steps());
  const Eigen::MatrixXd& u = frame.basis().eigenvectors;
  detail::RowFft fft(steps);

  // Sparse-coded inputs (the usual case inside FISTA) skip most of the dense product.
  const Eigen::Index nnz = (c.matrix().array() != 0.0).count();
  Eigen::MatrixXd graph_spec;
  if (4 * nnz < c.matrix().size()) {
    const Eigen::SparseMatrix<double> sparse = c.matrix().sparseView(0.0, 0.0);
    graph_spec = u.transpose() * sparse;
  } else {
    graph_spec = u.transpose() * c.matrix();
  }
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(graph_spec.rows(), fft.half());
  for (std::size_t s = 0; s < frame.n_scales(); ++s) {
    acc += frame.half_multipliers(s).cwiseProduct(
        fft.forward_half(graph_spec.middleCols(Eigen::Index(s) * steps, steps)));
  }
  return u * fft.inverse_half(acc);
}

struct FrameBounds {
  double lower = 0.0;  // A
  double upper = 0.0;  // B
};

// Sum over scales of |W_s(lambda_l, omega_k)|^2 on the half grid.
inline Eigen::MatrixXd frame_energy(const DGWFrame& frame) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(Eigen::Index(frame.n_vertices()), frame.half_multipliers(0).cols());
  for (std::size_t s = 0; s < frame.n_scales(); ++s) e += frame.half_multipliers(s).cwiseAbs2();
  return e;
}

inline FrameBounds frame_bounds(const DGWFrame& frame) {
  const Eigen::MatrixXd e = frame_energy(frame);
  return {e.minCoeff(), e.maxCoeff()};
}

}  // namespace dgw
