// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dgw/dgw.hpp"
#include "oracles.hpp"

using namespace dgw;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SpectralBasis random_basis(std::size_t n, std::uint64_t seed, std::size_t k = 5) {
  return eigendecompose(build_knn_graph(random_geometric_graph(n, seed), {k, std::nullopt}).graph);
}

// 1: frame bounds against the singular values of the dense analysis matrix.
Outcome dense_svd_oracle() {
  const auto t0 = Clock::now();
  const SpectralBasis basis = random_basis(6, 101, 3);
  const DGWFrame frame = build_frame(basis, 8, linear_scale_grid(3, 2.0, basis.lambda_max()), 1.0);
  const FrameBounds b = frame_bounds(frame);
  const double elapsed = seconds_since(t0);

  const Eigen::MatrixXd phi = oracle::dense_frame_matrix(basis.eigenvalues, basis.eigenvectors, frame.scales(), 1.0, 8);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(phi).singularValues();
  const double a_ref = sv(sv.size() - 1) * sv(sv.size() - 1);
  const double b_ref = sv(0) * sv(0);
  const double ea = std::abs(b.lower - a_ref) / a_ref;
  const double eb = std::abs(b.upper - b_ref) / b_ref;
  return {ea <= 1e-8 && eb <= 1e-8 && elapsed < 1.0,
          fmt("A=%.6g rel.err %.2e, B=%.6g rel.err %.2e, %.3f s", b.lower, ea, b.upper, eb, elapsed)};
}

// 2: lower frame bound against ((1 - e^-beta) / 4)^2.
Outcome damped_wave_bound_check() {
  const auto t0 = Clock::now();
  Outcome o;
  const SpectralBasis basis = random_basis(30, 102);
  const std::size_t steps = 256;
  for (double beta : {0.1, 0.5, 1.0}) {
    const DGWFrame frame = build_frame(basis, steps, linear_scale_grid(10, 2.0, basis.lambda_max()), beta);
    const double a = frame_bounds(frame).lower;
    const double bound = damped_wave_frame_bound(beta);
    const double tail = std::exp(-beta * double(steps)) / (1.0 - std::exp(-beta));
    const double shrunk = std::max(0.0, std::sqrt(bound) - tail);
    const double tol = bound - shrunk * shrunk;
    o.pass = o.pass && a >= bound - tol;
    o.detail += fmt("%sbeta=%.1f A=%.4g >= %.4g (tol %.1e)", o.detail.empty() ? "" : "; ", beta, a, bound, tol);
  }
  const double elapsed = seconds_since(t0);
  o.pass = o.pass && elapsed < 1.0;
  o.detail += fmt(", %.3f s", elapsed);
  return o;
}

// 3: kernel recurrence and atom / leapfrog agreement.
Outcome kernel_recurrence() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> us(0.1, 2.0), usl(0.0, 4.0);
  double worst_rec = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const double s = us(rng);
    const double lam = (rep == 0 ? 4.0 : rep == 1 ? 0.0 : usl(rng)) / s;
    for (int t = 1; t <= 255; ++t) {
      const double k0 = wave_kernel(s, lam, t - 1), k1 = wave_kernel(s, lam, t), k2 = wave_kernel(s, lam, t + 1);
      worst_rec = std::max(worst_rec, std::abs(k2 - 2 * k1 + k0 + s * lam * k1));
    }
  }
  double worst_sim = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = build_knn_graph(random_geometric_graph(20, 200 + seed), {4, std::nullopt}).graph;
    const SpectralBasis basis = eigendecompose(g);
    const EventSpec ev{seed % 20, seed * 3, 0.95 * 4.0 / basis.lambda_max(), 1.0, 0.0};
    const auto a = synth_event(g, basis, ev, 128, SynthMethod::atom);
    const auto l = synth_event(g, basis, ev, 128, SynthMethod::leapfrog);
    worst_sim = std::max(worst_sim, (a - l).cwiseAbs().maxCoeff());
  }
  return {worst_rec <= 1e-10 && worst_sim <= 1e-8,
          fmt("recurrence max err %.2e, atom vs leapfrog max err %.2e", worst_rec, worst_sim)};
}

// 4: Parseval, round trip, and the joint Laplacian eigen-identity.
Outcome joint_transform() {
  const Graph g = build_knn_graph(random_geometric_graph(32, 104), {5, std::nullopt}).graph;
  const SpectralBasis basis = eigendecompose(g);
  const Eigen::VectorXd omega = ring_eigenvalues(64);
  std::mt19937_64 rng(105);
  double parseval = 0.0, round_trip = 0.0, eigen = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = oracle::random_matrix(32, 64, rng);
    const JointSpectrum s = jft(x, basis);
    parseval = std::max(parseval, std::abs(s.norm() - x.norm()));
    round_trip = std::max(round_trip, (ijft(s, basis) - x).cwiseAbs().maxCoeff());
    const JointSpectrum lhs = jft(joint_laplacian_apply(x, g), basis);
    for (Eigen::Index l = 0; l < 32; ++l) {
      for (Eigen::Index k = 0; k < 64; ++k) {
        eigen = std::max(eigen, std::abs(lhs(l, k) - (basis.eigenvalues(l) + omega(k)) * s(l, k)));
      }
    }
  }
  return {parseval <= 1e-10 && round_trip <= 1e-10 && eigen <= 1e-8,
          fmt("Parseval %.2e, round trip %.2e, eigen-identity %.2e", parseval, round_trip, eigen)};
}

// 5: A ||X||^2 <= ||S_W X||^2 <= B ||X||^2.
Outcome frame_inequality() {
  const SpectralBasis basis = random_basis(32, 106);
  const DGWFrame frame = build_frame(basis, 64, linear_scale_grid(10, 2.0, basis.lambda_max()), 0.1);
  const FrameBounds b = frame_bounds(frame);
  std::mt19937_64 rng(107);
  int violations = 0;
  double lo = 1e300, hi = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = oracle::random_matrix(32, 64, rng);
    const double xx = x.squaredNorm();
    const double e = analyze(frame, x).matrix().squaredNorm();
    const double slack = 1e-9 * b.upper * xx;
    if (e < b.lower * xx - slack || e > b.upper * xx + slack) ++violations;
    lo = std::min(lo, e / xx);
    hi = std::max(hi, e / xx);
  }
  return {violations == 0,
          fmt("%d violations; ratio range [%.4g, %.4g] within [A, B] = [%.4g, %.4g]", violations, lo, hi, b.lower,
              b.upper)};
}

// 6: FISTA convergence and the exact-zero threshold.
Outcome solver_convergence() {
  double worst_kkt = 0.0;
  std::size_t worst_iters = 0;
  bool zero = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Graph g = build_knn_graph(random_geometric_graph(50, 108 + seed), {5, std::nullopt}).graph;
    const SpectralBasis basis = eigendecompose(g);
    const DGWFrame frame = build_frame(basis, 64, linear_scale_grid(5, 2.0, basis.lambda_max()), 0.1);
    const TimeVertexSignal clean =
        synth_event(g, basis, {17 + 5 * seed, 12 + seed, frame.scales()[1 + seed], 1.0, 0.1}, 64, SynthMethod::atom);
    const TimeVertexSignal y = add_noise(clean, 10.0, 109 + seed).signal;
    const double g0 = 2.0 * analyze(frame, y).matrix().lpNorm<Eigen::Infinity>();

    SolverConfig cfg;
    cfg.gamma = 0.1 * g0;
    cfg.max_iters = 2000;
    cfg.tolerance = 1e-16;
    const SolverResult r = fista(frame, y, cfg);
    worst_kkt = std::max(worst_kkt, kkt_residual(frame, r.coefficients, y, cfg.gamma));
    worst_iters = std::max(worst_iters, r.iterations);

    SolverConfig big;
    big.gamma = g0;
    zero = zero && fista(frame, y, big).coefficients.matrix().cwiseAbs().maxCoeff() == 0.0;
  }
  return {worst_kkt < 1e-4 && worst_iters <= 2000 && zero,
          fmt("worst KKT %.2e over 3 problems, iterations used <= %zu of 2000; gamma = 2||S y||_inf gives %s", worst_kkt,
              worst_iters, zero ? "C = 0" : "nonzero C")};
}

// 7: planted-event localization on random geometric networks.
struct Trial {
  bool near = false;
  double error_km = 0.0;
};

struct Scenario {
  Graph graph;
  StationTable stations;
  SpectralBasis basis;
  DGWFrame frame;
  TimeVertexSignal clean;
  std::size_t source = 0;
  double nn_km = 0.0;
};

constexpr std::size_t kTrialVertices = 100;
constexpr std::size_t kTrialSteps = 256;
constexpr std::size_t kTrialScales = 5;
constexpr double kTrialBeta = 0.05;

Scenario make_scenario(std::uint64_t seed) {
  StationTable stations = random_geometric_graph(kTrialVertices, 7000 + seed);
  Graph g = build_knn_graph(stations, {5, std::nullopt}).graph;
  SpectralBasis basis = eigendecompose(g);
  DGWFrame frame = build_frame(basis, kTrialSteps, linear_scale_grid(kTrialScales, 2.0, basis.lambda_max()), kTrialBeta);
  std::mt19937_64 rng(seed);
  const std::size_t source = std::uniform_int_distribution<std::size_t>(0, kTrialVertices - 1)(rng);
  const std::size_t onset = std::uniform_int_distribution<std::size_t>(10, 100)(rng);
  const std::size_t s_index = std::uniform_int_distribution<std::size_t>(0, kTrialScales - 1)(rng);
  TimeVertexSignal clean =
      synth_event(g, basis, {source, onset, frame.scales()[s_index], 1.0, kTrialBeta}, kTrialSteps, SynthMethod::atom);
  const double nn = mean_nearest_neighbor_km(stations);
  return {std::move(g), std::move(stations), std::move(basis), std::move(frame), std::move(clean), source, nn};
}

Trial run_trial(const Scenario& sc, double snr_db, std::uint64_t seed) {
  const TimeVertexSignal y = add_noise(sc.clean, snr_db, 9000 + seed).signal;
  SolverConfig cfg;
  cfg.gamma = 0.1 * 2.0 * analyze(sc.frame, y).matrix().lpNorm<Eigen::Infinity>();
  cfg.max_iters = 300;
  cfg.tolerance = 1e-6;
  const SolverResult r = fista(sc.frame, y, cfg);
  const EventEstimate est = estimate_epicenter(r.coefficients, sc.stations, 0.5, sc.frame.scales());
  Trial t;
  t.near = est.dominant_vertex == sc.source || sc.graph.adjacent(est.dominant_vertex, sc.source);
  t.error_km = localization_error_km(est, sc.stations[sc.source].position);
  return t;
}

Outcome localization_trials() {
  const auto t0 = Clock::now();
  const std::vector<double> sweep{100.0, 20.0, 10.0, 2.0, 0.0};
  constexpr int kTrials = 20;
  int near = 0;
  double err10 = 0.0, nn = 0.0;
  std::vector<double> sweep_err(sweep.size(), 0.0);
  for (int seed = 0; seed < kTrials; ++seed) {
    const Scenario sc = make_scenario(std::uint64_t(seed));
    nn += sc.nn_km;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const Trial t = run_trial(sc, sweep[i], std::uint64_t(seed));
      sweep_err[i] += t.error_km;
      if (sweep[i] == 10.0) {
        near += t.near;
        err10 += t.error_km;
      }
    }
  }
  nn /= kTrials;
  err10 /= kTrials;
  for (auto& e : sweep_err) e /= kTrials;
  const double elapsed = seconds_since(t0);
  const double hit_rate = double(near) / kTrials;
  const double degradation = sweep_err.back() - sweep_err.front();
  const bool pass = hit_rate >= 0.9 && err10 < nn && degradation < 2.0 * nn && elapsed < 300.0;
  std::string curve;
  for (std::size_t i = 0; i < sweep.size(); ++i) curve += fmt("%s%g dB: %.2f", i ? ", " : "", sweep[i], sweep_err[i]);
  return {pass, fmt("hit rate %.0f%%, mean error %.2f km vs NN %.2f km, sweep km [%s], %.1f s", 100 * hit_rate, err10,
                    nn, curve.c_str(), elapsed)};
}

// 8: any scale at or beyond 4 / lambda_max is rejected.
Outcome stability_guard() {
  const Graph g = build_knn_graph(random_geometric_graph(20, 110), {4, std::nullopt}).graph;
  const SpectralBasis basis = eigendecompose(g);
  const double edge = 4.0 / basis.lambda_max();
  int rejected = 0, cases = 0;
  for (double factor : {1.0, 1.0 + 1e-12, 1.01, 2.0, 100.0}) {
    const double s = edge * factor;
    auto expect = [&](const std::function<void()>& f) {
      ++cases;
      try {
        f();
      } catch (const StabilityError&) {
        ++rejected;
      } catch (...) {
      }
    };
    expect([&] { build_frame(basis, 16, {s}, 0.1); });
    expect([&] { build_frame(basis, 16, {0.5 * edge, s}, 0.1); });
    expect([&] { synth_event(g, basis, {0, 0, s, 1.0, 0.0}, 16, SynthMethod::leapfrog); });
    expect([&] { synth_event(g, basis, {0, 0, s, 1.0, 0.0}, 16, SynthMethod::atom); });
  }
  bool below_ok = true;
  try {
    build_frame(basis, 16, {0.999 * edge}, 0.1);
  } catch (...) {
    below_ok = false;
  }
  return {rejected == cases && below_ok,
          fmt("%d/%d unstable configurations rejected; s = 0.999 * 4/lambda_max %s", rejected, cases,
              below_ok ? "accepted" : "wrongly rejected")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"dense frame-matrix SVD oracle", dense_svd_oracle},
      {"damped-wave lower frame bound", damped_wave_bound_check},
      {"wave kernel recurrence and leapfrog agreement", kernel_recurrence},
      {"joint Fourier transform identities", joint_transform},
      {"frame inequality on random signals", frame_inequality},
      {"FISTA convergence and zero threshold", solver_convergence},
      {"planted-event localization", localization_trials},
      {"stability guard", stability_guard},
  };
  int failures = 0;
  int index = 1;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
