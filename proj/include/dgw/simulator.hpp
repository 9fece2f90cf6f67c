#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgw/errors.hpp"
#include "dgw/frame.hpp"
#include "dgw/graph.hpp"

namespace dgw {

struct EventSpec {
  std::size_t source_vertex = 0;  // m
  std::size_t onset = 0;          // tau
  double scale = 1.0;             // s
  double amplitude = 1.0;
  double beta = 0.0;
};

enum class SynthMethod {
  atom,      // amplitude * causal atom, evaluated spectrally
  leapfrog,  // explicit time stepping of X(t+1) = 2X(t) - X(t-1) - s L X(t)
};

// Synthetic propagating event. Both methods are zero before the onset.
inline TimeVertexSignal synth_event(const Graph& g, const SpectralBasis& basis, const EventSpec& ev,
                                    std::size_t steps, SynthMethod method) {
  const std::size_t n = g.n_vertices();
  if (basis.size() != n) throw ParameterError("spectral basis does not match the graph");
  if (ev.source_vertex >= n) throw ParameterError("event source vertex out of range");
  if (ev.onset >= steps) throw ParameterError("event onset must be < T");
  if (!(ev.scale >= 0.0)) throw ParameterError("event scale must be >= 0");
  if (!(ev.beta >= 0.0)) throw ParameterError("event damping must be >= 0");
  if (ev.scale * basis.lambda_max() >= 4.0) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "event scale s = " << ev.scale << " violates stability: require s < 4/lambda_max = "
        << 4.0 / basis.lambda_max();
    throw StabilityError(msg.str());
  }

  if (method == SynthMethod::atom) {
    const KernelSpec spec{KernelKind::damped_wave, ev.scale, ev.beta};
    TimeVertexSignal x = detail::atom_from_basis(basis, spec, ev.source_vertex, ev.onset, steps, AtomSupport::causal);
    x *= ev.amplitude;
    return x;
  }

  const auto nn = static_cast<Eigen::Index>(n);
  const auto tau = static_cast<Eigen::Index>(ev.onset);
  const auto nt = static_cast<Eigen::Index>(steps);
  const Eigen::MatrixXd& lap = g.laplacian();
  TimeVertexSignal x = TimeVertexSignal::Zero(nn, nt);
  x(Eigen::Index(ev.source_vertex), tau) = 1.0;
  // Vanishing initial velocity via the ghost step X(tau-1) = X(tau+1).
  if (tau + 1 < nt) x.col(tau + 1) = x.col(tau) - 0.5 * ev.scale * (lap * x.col(tau));
  for (Eigen::Index t = tau + 1; t + 1 < nt; ++t) {
    x.col(t + 1) = 2.0 * x.col(t) - x.col(t - 1) - ev.scale * (lap * x.col(t));
  }
  for (Eigen::Index t = tau; t < nt; ++t) {
    x.col(t) *= ev.amplitude * std::exp(-ev.beta * double(t - tau));
  }
  return x;
}

struct NoisyObservation {
  TimeVertexSignal signal;  // input + noise
  TimeVertexSignal noise;
  std::vector<std::size_t> silent_rows;  // all-zero rows left without noise
};

// White Gaussian noise with the same SNR on every row. Each row's noise is
// rescaled so its sample power is exactly P_row / 10^(snr/10).
inline NoisyObservation add_noise(const TimeVertexSignal& x, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw ParameterError("snr_db must be finite");
  if (x.size() == 0 || x.isZero(0.0)) throw ParameterError("add_noise needs a nonzero signal");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NoisyObservation out;
  out.noise = TimeVertexSignal::Zero(x.rows(), x.cols());
  const double ratio = std::pow(10.0, -snr_db / 10.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::VectorXd draw(x.cols());
    for (Eigen::Index t = 0; t < x.cols(); ++t) draw(t) = normal(rng);
    const double signal_power = x.row(r).squaredNorm() / double(x.cols());
    if (signal_power == 0.0) {
      out.silent_rows.push_back(static_cast<std::size_t>(r));
      continue;
    }
    const double draw_power = draw.squaredNorm() / double(x.cols());
    if (draw_power > 0.0) out.noise.row(r) = draw.transpose() * std::sqrt(signal_power * ratio / draw_power);
  }
  out.signal = x + out.noise;
  return out;
}

// n stations drawn uniformly in a extent_deg x extent_deg box whose south-west
// corner sits at (45 N, 7 E).
inline StationTable random_geometric_graph(std::size_t n, std::uint64_t seed, double extent_deg = 1.0) {
  if (n < 2) throw ParameterError("need at least 2 stations");
  if (!(extent_deg > 0.0 && extent_deg <= 45.0)) throw ParameterError("extent must lie in (0, 45] degrees");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Station> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lat = 45.0 + extent_deg * unit(rng);
    const double lon = 7.0 + extent_deg * unit(rng);
    std::ostringstream id;
    id << "ST" << i;
    entries.push_back({id.str(), {lat, lon}});
  }
  return StationTable(std::move(entries));
}

}  // namespace dgw
