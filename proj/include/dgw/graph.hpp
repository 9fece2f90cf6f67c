#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgw/errors.hpp"

namespace dgw {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

struct Station {
  std::string id;
  GeoPoint position;
};

// Sensor coordinates, one entry per graph vertex (row order = vertex index).
class StationTable {
 public:
  StationTable() = default;

  explicit StationTable(std::vector<Station> entries) : entries_(std::move(entries)) {
    if (entries_.size() < 2) {
      throw InputError("station table needs at least 2 entries");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : entries_) {
      if (!seen.insert(s.id).second) {
        throw InputError("duplicate station id '" + s.id + "'");
      }
      if (!std::isfinite(s.position.lat) || s.position.lat < -90.0 || s.position.lat > 90.0) {
        throw InputError("station '" + s.id + "': latitude out of [-90, 90]");
      }
      if (!std::isfinite(s.position.lon) || s.position.lon < -180.0 || s.position.lon > 180.0) {
        throw InputError("station '" + s.id + "': longitude out of [-180, 180]");
      }
    }
  }

  std::size_t size() const { return entries_.size(); }
  const Station& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Station>& entries() const { return entries_; }

 private:
  std::vector<Station> entries_;
};

// Great-circle distance on a sphere of radius 6371 km.
inline double haversine_km(GeoPoint a, GeoPoint b) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * deg;
  const double dlon = (b.lon - a.lon) * deg;
  const double sa = std::sin(dlat / 2.0);
  const double so = std::sin(dlon / 2.0);
  double h = sa * sa + std::cos(a.lat * deg) * std::cos(b.lat * deg) * so * so;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

// Mean over stations of the distance to the closest other station.
inline double mean_nearest_neighbor_km(const StationTable& stations) {
  double sum = 0.0;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < stations.size(); ++j) {
      if (j != i) best = std::min(best, haversine_km(stations[i].position, stations[j].position));
    }
    sum += best;
  }
  return sum / double(stations.size());
}

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;
};

// Weighted undirected graph with its combinatorial Laplacian L = D - W.
class Graph {
 public:
  Graph() = default;

  explicit Graph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols() || weights_.rows() < 1) {
      throw ParameterError("weight matrix must be square and non-empty");
    }
    const Eigen::Index n = weights_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights_(i, i) != 0.0) {
        throw ParameterError("weight matrix must have a zero diagonal");
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = weights_(i, j);
        if (!std::isfinite(w) || w < 0.0) {
          throw ParameterError("weights must be finite and nonnegative");
        }
        if (std::abs(w - weights_(j, i)) > 1e-12) {
          throw ParameterError("weight matrix must be symmetric");
        }
      }
    }
    laplacian_ = -weights_;
    laplacian_.diagonal() = weights_.rowwise().sum();
  }

  std::size_t n_vertices() const { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }

  bool adjacent(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0;
  }

  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_vertices(); ++j) {
      if (adjacent(i, j)) out.push_back(j);
    }
    return out;
  }

  // Upper-triangle edge list (i < j).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < n_vertices(); ++i) {
      for (std::size_t j = i + 1; j < n_vertices(); ++j) {
        if (adjacent(i, j)) out.push_back({i, j, weights_(Eigen::Index(i), Eigen::Index(j))});
      }
    }
    return out;
  }

  std::size_t component_count() const {
    const std::size_t n = n_vertices();
    std::vector<std::size_t> label(n, n);
    std::size_t components = 0;
    std::vector<std::size_t> stack;
    for (std::size_t root = 0; root < n; ++root) {
      if (label[root] != n) continue;
      label[root] = components;
      stack.push_back(root);
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w = 0; w < n; ++w) {
          if (label[w] == n && adjacent(v, w)) {
            label[w] = components;
            stack.push_back(w);
          }
        }
      }
      ++components;
    }
    return components;
  }

  bool connected() const { return component_count() == 1; }

 private:
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd laplacian_;
};

struct KnnGraphOptions {
  std::size_t k = 5;
  // Gaussian bandwidth in km; empty selects the mean k-NN distance.
  std::optional<double> sigma_km;
};

struct KnnGraph {
  Graph graph;
  double sigma_km = 0.0;
};

// k-nearest-neighbour graph on great-circle distance with Gaussian weights
// w_ij = exp(-d_ij^2 / sigma^2), symmetrized by union.
inline KnnGraph build_knn_graph(const StationTable& stations, const KnnGraphOptions& opts = {}) {
  const std::size_t n = stations.size();
  if (opts.k < 1 || opts.k >= n) {
    throw ParameterError("k must satisfy 1 <= k < N (k=" + std::to_string(opts.k) +
                         ", N=" + std::to_string(n) + ")");
  }
  if (opts.sigma_km && !(*opts.sigma_km > 0.0)) {
    throw ParameterError("sigma must be positive");
  }

  Eigen::MatrixXd dist(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    dist(Eigen::Index(i), Eigen::Index(i)) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine_km(stations[i].position, stations[j].position);
      dist(Eigen::Index(i), Eigen::Index(j)) = d;
      dist(Eigen::Index(j), Eigen::Index(i)) = d;
    }
  }

  Eigen::MatrixX<bool> selected = Eigen::MatrixX<bool>::Constant(n, n, false);
  double knn_sum = 0.0;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(opts.k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = dist(Eigen::Index(i), Eigen::Index(a));
                        const double db = dist(Eigen::Index(i), Eigen::Index(b));
                        return da < db || (da == db && a < b);
                      });
    for (std::size_t r = 0; r < opts.k; ++r) {
      const std::size_t j = order[r];
      selected(Eigen::Index(i), Eigen::Index(j)) = true;
      selected(Eigen::Index(j), Eigen::Index(i)) = true;
      knn_sum += dist(Eigen::Index(i), Eigen::Index(j));
    }
  }

  const double sigma = opts.sigma_km ? *opts.sigma_km : knn_sum / double(n * opts.k);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
    for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) {
      if (!selected(i, j)) continue;
      const double d = dist(i, j);
      // All-coincident stations give sigma = 0; every selected edge then gets weight 1.
      w(i, j) = sigma > 0.0 ? std::exp(-(d * d) / (sigma * sigma)) : 1.0;
    }
  }
  return {Graph(std::move(w)), sigma};
}

// Orthonormal Laplacian eigenbasis, eigenvalues ascending.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // column l is u_l

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0; }

  std::size_t zero_eigenvalue_count(double tol = 1e-10) const {
    return static_cast<std::size_t>((eigenvalues.array().abs() <= tol).count());
  }
};

inline SpectralBasis eigendecompose(const Graph& g) {
  const Eigen::MatrixXd& lap = g.laplacian();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver failed to converge (N=" +
                       std::to_string(lap.rows()) + ", |L|_F=" + std::to_string(lap.norm()) + ")");
  }
  SpectralBasis basis{solver.eigenvalues(), solver.eigenvectors()};

  // Roundoff can leave the null-space eigenvalues slightly negative.
  const double tol = 1e-10 * std::max(1.0, basis.lambda_max());
  for (Eigen::Index l = 0; l < basis.eigenvalues.size(); ++l) {
    double& lam = basis.eigenvalues(l);
    if (std::abs(lam) <= tol) {
      lam = 0.0;
    } else if (lam < 0.0) {
      throw NumericError("Laplacian has negative eigenvalue " + std::to_string(lam));
    }
  }

  // Fix eigenvector signs so the decomposition is reproducible.
  for (Eigen::Index l = 0; l < basis.eigenvectors.cols(); ++l) {
    Eigen::Index arg = 0;
    basis.eigenvectors.col(l).cwiseAbs().maxCoeff(&arg);
    if (basis.eigenvectors(arg, l) < 0.0) basis.eigenvectors.col(l) *= -1.0;
  }
  return basis;
}

}  // namespace dgw
