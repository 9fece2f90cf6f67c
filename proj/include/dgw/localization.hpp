#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dgw/errors.hpp"
#include "dgw/frame.hpp"
#include "dgw/graph.hpp"

namespace dgw {

struct Contributor {
  std::size_t vertex = 0;
  double weight = 0.0;
};

struct EventEstimate {
  GeoPoint position;
  std::vector<Contributor> contributors;  // weights sum to 1, ascending vertex order
  std::size_t dominant_vertex = 0;
  std::size_t onset_tau = 0;
  std::size_t dominant_scale_index = 0;
  double dominant_scale = 0.0;
  double amplitude = 0.0;  // signed value of the largest-energy coefficient
};

// Weighted mean on the unit sphere, re-projected to lat/lon.
inline GeoPoint spherical_mean(std::span<const GeoPoint> points, std::span<const double> weights) {
  if (points.size() != weights.size() || points.empty()) {
    throw ParameterError("spherical_mean needs matching, non-empty points and weights");
  }
  constexpr double deg = std::numbers::pi / 180.0;
  double x = 0.0, y = 0.0, z = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    mass += std::abs(weights[i]);
    const double lat = points[i].lat * deg;
    const double lon = points[i].lon * deg;
    x += weights[i] * std::cos(lat) * std::cos(lon);
    y += weights[i] * std::cos(lat) * std::sin(lon);
    z += weights[i] * std::sin(lat);
  }
  if (!(std::hypot(x, y, z) > 1e-12 * mass)) throw NumericError("spherical mean is undefined for antipodal weights");
  return {std::atan2(z, std::hypot(x, y)) / deg, std::atan2(y, x) / deg};
}

// Energy-weighted source position from coefficients with |C|^2 >= rho * max |C|^2.
// Ties for the dominant coefficient go to the lowest vertex, then tau, then scale.
inline EventEstimate estimate_epicenter(const CoefficientTensor& c, const StationTable& stations, double rho = 0.5,
                                        std::span<const double> scales = {}) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in (0, 1]");
  if (stations.size() != c.n_vertices()) {
    throw ParameterError("station table has " + std::to_string(stations.size()) +
                         " entries but coefficients cover " + std::to_string(c.n_vertices()) + " vertices");
  }
  if (!scales.empty() && scales.size() != c.n_scales()) {
    throw ParameterError("scale list does not match the coefficient tensor");
  }

  EventEstimate est;
  double max_energy = 0.0;
  for (std::size_t m = 0; m < c.n_vertices(); ++m) {
    for (std::size_t tau = 0; tau < c.n_steps(); ++tau) {
      for (std::size_t s = 0; s < c.n_scales(); ++s) {
        const double v = c(s, m, tau);
        if (v * v > max_energy) {
          max_energy = v * v;
          est.dominant_vertex = m;
          est.onset_tau = tau;
          est.dominant_scale_index = s;
          est.amplitude = v;
        }
      }
    }
  }
  if (!(max_energy > 0.0)) throw NoEventError();
  if (!scales.empty()) est.dominant_scale = scales[est.dominant_scale_index];

  const double cutoff = rho * max_energy;
  std::map<std::size_t, double> per_vertex;
  double total = 0.0;
  for (std::size_t m = 0; m < c.n_vertices(); ++m) {
    for (std::size_t s = 0; s < c.n_scales(); ++s) {
      for (std::size_t tau = 0; tau < c.n_steps(); ++tau) {
        const double v = c(s, m, tau);
        const double e = v * v;
        if (e >= cutoff && e > 0.0) {
          per_vertex[m] += e;
          total += e;
        }
      }
    }
  }

  std::vector<GeoPoint> pts;
  std::vector<double> weights;
  for (const auto& [vertex, energy] : per_vertex) {
    est.contributors.push_back({vertex, energy / total});
    pts.push_back(stations[vertex].position);
    weights.push_back(energy / total);
  }
  est.position = pts.size() == 1 ? pts.front() : spherical_mean(pts, weights);
  return est;
}

inline double localization_error_km(const EventEstimate& est, GeoPoint truth) {
  return haversine_km(est.position, truth);
}

}  // namespace dgw
