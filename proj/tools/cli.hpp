#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dgw/dgw.hpp"
#include "dgw/io.hpp"

#ifndef DGW_VERSION
#define DGW_VERSION "0.0.0"
#endif

namespace dgw::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kStabilityError = 3, kSolverFailure = 4 };

struct RunConfig {
  struct {
    std::size_t k = 5;
    std::optional<double> sigma_km;
  } graph;
  struct {
    std::size_t num_scales = 10;
    std::optional<double> s_min;
    double s_max = 2.0;
    std::vector<double> scales;  // explicit list overrides the linear grid
    double beta = 0.1;
    std::size_t steps = 64;      // T for commands without an input signal
  } frame;
  struct {
    std::optional<double> gamma;
    double gamma_rel = 0.1;  // gamma = gamma_rel * 2 ||S_W y||_inf when gamma is unset
    double epsilon = 1e-6;
    std::size_t max_iters = 500;
    double delta = 1e-12;
  } solver;
  struct {
    double rho = 0.5;
  } localization;
};

inline json to_json(const RunConfig& c) {
  json j;
  j["graph"] = {{"k", c.graph.k}, {"sigma", c.graph.sigma_km ? json(*c.graph.sigma_km) : json("auto")}};
  j["frame"] = {{"num_scales", c.frame.num_scales},
                {"s_min", c.frame.s_min ? json(*c.frame.s_min) : json(nullptr)},
                {"s_max", c.frame.s_max},
                {"scales", c.frame.scales},
                {"beta", c.frame.beta},
                {"steps", c.frame.steps}};
  j["solver"] = {{"gamma", c.solver.gamma ? json(*c.solver.gamma) : json(nullptr)},
                 {"gamma_rel", c.solver.gamma_rel},
                 {"epsilon", c.solver.epsilon},
                 {"max_iters", c.solver.max_iters},
                 {"delta", c.solver.delta}};
  j["localization"] = {{"rho", c.localization.rho}};
  return j;
}

inline void apply_config(RunConfig& c, const json& j) {
  try {
    if (auto g = j.find("graph"); g != j.end()) {
      if (g->contains("k")) c.graph.k = g->at("k").get<std::size_t>();
      if (g->contains("sigma")) {
        const auto& s = g->at("sigma");
        if (s.is_string() && s.get<std::string>() == "auto") {
          c.graph.sigma_km.reset();
        } else if (!s.is_null()) {
          c.graph.sigma_km = s.get<double>();
        }
      }
    }
    if (auto f = j.find("frame"); f != j.end()) {
      if (f->contains("num_scales")) c.frame.num_scales = f->at("num_scales").get<std::size_t>();
      if (f->contains("s_min") && !f->at("s_min").is_null()) c.frame.s_min = f->at("s_min").get<double>();
      if (f->contains("s_max")) c.frame.s_max = f->at("s_max").get<double>();
      if (f->contains("scales")) c.frame.scales = f->at("scales").get<std::vector<double>>();
      if (f->contains("beta")) c.frame.beta = f->at("beta").get<double>();
      if (f->contains("steps")) c.frame.steps = f->at("steps").get<std::size_t>();
    }
    if (auto s = j.find("solver"); s != j.end()) {
      if (s->contains("gamma") && !s->at("gamma").is_null()) c.solver.gamma = s->at("gamma").get<double>();
      if (s->contains("gamma_rel")) c.solver.gamma_rel = s->at("gamma_rel").get<double>();
      if (s->contains("epsilon")) c.solver.epsilon = s->at("epsilon").get<double>();
      if (s->contains("max_iters")) c.solver.max_iters = s->at("max_iters").get<std::size_t>();
      if (s->contains("delta")) c.solver.delta = s->at("delta").get<double>();
    }
    if (auto l = j.find("localization"); l != j.end()) {
      if (l->contains("rho")) c.localization.rho = l->at("rho").get<double>();
    }
  } catch (const json::exception& ex) {
    throw InputError(std::string("config: ") + ex.what());
  }
}

namespace detail {

struct LoadedGraph {
  Graph graph;
  std::optional<StationTable> stations;
};

inline LoadedGraph load_graph(const std::string& path) {
  const json j = io::read_json(path);
  LoadedGraph out{io::graph_from_json(j), std::nullopt};
  if (auto s = j.find("stations"); s != j.end()) {
    try {
      out.stations = io::stations_from_json(*s);
    } catch (const json::exception& ex) {
      throw InputError(std::string("graph JSON stations: ") + ex.what());
    }
    if (out.stations->size() != out.graph.n_vertices()) {
      throw InputError("graph JSON: station count does not match n");
    }
  }
  return out;
}

inline std::vector<double> frame_scales(const RunConfig& cfg, const SpectralBasis& basis) {
  if (!cfg.frame.scales.empty()) return cfg.frame.scales;
  return linear_scale_grid(cfg.frame.num_scales, cfg.frame.s_max, basis.lambda_max(), cfg.frame.s_min);
}

inline DGWFrame make_frame(const RunConfig& cfg, const Graph& g, std::size_t steps) {
  SpectralBasis basis = eigendecompose(g);
  auto scales = frame_scales(cfg, basis);
  return build_frame(std::move(basis), steps, std::move(scales), cfg.frame.beta);
}

inline void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

inline SolverConfig solver_config(const RunConfig& cfg, const DGWFrame& frame, const TimeVertexSignal& y) {
  SolverConfig sc;
  sc.max_iters = cfg.solver.max_iters;
  sc.tolerance = cfg.solver.epsilon;
  sc.delta = cfg.solver.delta;
  if (cfg.solver.gamma) {
    sc.gamma = *cfg.solver.gamma;
  } else {
    const double lifted = analyze(frame, y).matrix().lpNorm<Eigen::Infinity>();
    // An all-zero observation has no scale of its own; any positive gamma returns C = 0.
    sc.gamma = lifted > 0.0 ? cfg.solver.gamma_rel * 2.0 * lifted : 1.0;
  }
  return sc;
}

inline void emit_json(const json& j, const std::string& out_path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw InputError("cannot write '" + out_path + "'");
  f << text;
}

inline json header(const RunConfig& cfg, const std::string& command) {
  return {{"version", DGW_VERSION}, {"command", command}, {"config", to_json(cfg)}};
}

inline GeoPoint parse_lat_lon(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InputError("--truth expects 'lat,lon'");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw InputError("--truth expects 'lat,lon', got '" + text + "'");
  }
}

}  // namespace detail

// Runs one CLI invocation; returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic graph wavelet toolkit", "dgw"};
  app.set_version_flag("--version", std::string("dgw ") + DGW_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_path, "Output path");

  std::optional<std::size_t> k_flag;
  std::optional<double> beta_flag;
  std::optional<std::size_t> steps_flag;
  std::optional<std::size_t> num_scales_flag;
  std::optional<double> gamma_flag;
  std::optional<double> rho_flag;
  std::string scales_flag;

  auto* build_graph = app.add_subcommand("build-graph", "Build a k-NN graph from station coordinates");
  std::string stations_path;
  build_graph->add_option("--stations", stations_path, "Station CSV (station_id,lat,lon)")->required();
  build_graph->add_option("--k", k_flag, "Neighbours per station");

  auto add_frame_opts = [&](CLI::App* cmd) {
    cmd->add_option("--beta", beta_flag, "Damping per time step");
    cmd->add_option("--num-scales", num_scales_flag, "Number of scales in the linear grid");
    cmd->add_option("--scales", scales_flag, "Explicit comma-separated scale list");
  };

  std::string graph_path;
  std::string signals_path;

  auto* frame_bounds_cmd = app.add_subcommand("frame-bounds", "Frame bounds A, B of the wavelet frame");
  frame_bounds_cmd->add_option("--graph", graph_path, "Graph JSON")->required();
  frame_bounds_cmd->add_option("--steps", steps_flag, "Signal length T");
  add_frame_opts(frame_bounds_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a propagating event");
  std::string event_path;
  std::optional<std::size_t> m_flag, tau_flag;
  std::optional<double> s_flag, amp_flag, snr_flag;
  std::string method_flag;
  synth_cmd->add_option("--graph", graph_path, "Graph JSON")->required();
  synth_cmd->add_option("--event", event_path, "Event spec JSON {m, tau, s, amplitude, beta, method}");
  synth_cmd->add_option("--m", m_flag, "Source vertex");
  synth_cmd->add_option("--tau", tau_flag, "Onset time step");
  synth_cmd->add_option("--s", s_flag, "Propagation scale");
  synth_cmd->add_option("--amplitude", amp_flag, "Amplitude");
  synth_cmd->add_option("--method", method_flag, "atom | leapfrog");
  synth_cmd->add_option("--snr-db", snr_flag, "Add white noise at this per-waveform SNR");
  synth_cmd->add_option("--steps", steps_flag, "Signal length T");
  synth_cmd->add_option("--beta", beta_flag, "Damping per time step");

  auto* analyze_cmd = app.add_subcommand("analyze", "Frame analysis coefficients of a signal");
  double dump_threshold = 0.0;
  analyze_cmd->add_option("--graph", graph_path, "Graph JSON")->required();
  analyze_cmd->add_option("--signals", signals_path, "Signal matrix (.csv or .bin)")->required();
  analyze_cmd->add_option("--threshold", dump_threshold, "Only dump |value| above this");
  add_frame_opts(analyze_cmd);

  std::string truth_text;
  auto add_solver_opts = [&](CLI::App* cmd) {
    cmd->add_option("--graph", graph_path, "Graph JSON")->required();
    cmd->add_option("--signals", signals_path, "Signal matrix (.csv or .bin)")->required();
    cmd->add_option("--gamma", gamma_flag, "Absolute l1 weight");
    add_frame_opts(cmd);
  };
  auto* localize_cmd = app.add_subcommand("localize", "Sparse-code a signal and estimate its source");
  add_solver_opts(localize_cmd);
  localize_cmd->add_option("--rho", rho_flag, "Relative energy cutoff for contributing coefficients");
  localize_cmd->add_option("--truth", truth_text, "True source 'lat,lon' for error reporting");

  auto* denoise_cmd = app.add_subcommand("denoise", "Sparse-code a signal and resynthesize it");
  add_solver_opts(denoise_cmd);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "dgw " << DGW_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config(cfg, io::read_json(config_path));
    if (k_flag) cfg.graph.k = *k_flag;
    if (beta_flag) cfg.frame.beta = *beta_flag;
    if (steps_flag) cfg.frame.steps = *steps_flag;
    if (num_scales_flag) cfg.frame.num_scales = *num_scales_flag;
    if (gamma_flag) cfg.solver.gamma = *gamma_flag;
    if (rho_flag) cfg.localization.rho = *rho_flag;
    if (!scales_flag.empty()) {
      cfg.frame.scales.clear();
      std::stringstream ss(scales_flag);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          cfg.frame.scales.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw InputError("--scales: invalid value '" + item + "'");
        }
      }
    }

    if (*build_graph) {
      const StationTable stations = io::read_station_csv(stations_path);
      const KnnGraph knn = build_knn_graph(stations, {cfg.graph.k, cfg.graph.sigma_km});
      const SpectralBasis basis = eigendecompose(knn.graph);
      const std::size_t components = knn.graph.component_count();
      if (components > 1) {
        err << "warning: graph is disconnected (" << components << " components)\n";
      }
      json j = detail::header(cfg, "build-graph");
      j.update(io::graph_to_json(knn.graph));
      j["stations"] = io::stations_to_json(stations);
      j["sigma_km"] = knn.sigma_km;
      j["spectral"] = {{"lambda_max", basis.lambda_max()},
                       {"zero_eigenvalues", basis.zero_eigenvalue_count()},
                       {"components", components},
                       {"connected", components == 1}};
      detail::emit_json(j, out_path, out);
      return kOk;
    }

    const detail::LoadedGraph loaded = detail::load_graph(graph_path);

    if (*frame_bounds_cmd) {
      const DGWFrame frame = detail::make_frame(cfg, loaded.graph, cfg.frame.steps);
      detail::report_warnings(frame.warnings(), err);
      const FrameBounds b = frame_bounds(frame);
      const double lower = damped_wave_frame_bound(cfg.frame.beta);
      // Truncating the kernel at T perturbs each multiplier by at most e^{-beta T} / (1 - e^{-beta}).
      double tolerance = 0.0;
      if (cfg.frame.beta > 0.0) {
        const double tail = std::exp(-cfg.frame.beta * double(cfg.frame.steps)) / (1.0 - std::exp(-cfg.frame.beta));
        const double shrunk = std::max(0.0, std::sqrt(lower) - tail);
        tolerance = lower - shrunk * shrunk;
      }
      const bool satisfied = b.lower >= lower - tolerance;
      json j = detail::header(cfg, "frame-bounds");
      j.update(io::frame_metadata(frame, b));
      j["steps"] = cfg.frame.steps;
      j["damped_wave_lower_bound"] = lower;
      j["truncation_tolerance"] = tolerance;
      j["lower_bound_satisfied"] = satisfied;
      j["warnings"] = frame.warnings();
      detail::emit_json(j, out_path, out);
      if (!satisfied) {
        err << "error: lower frame bound " << b.lower << " is below the damped-wave bound " << lower << '\n';
        return kSolverFailure;
      }
      return kOk;
    }

    if (*synth_cmd) {
      if (out_path.empty()) throw InputError("synth requires --out");
      EventSpec ev;
      ev.beta = cfg.frame.beta;
      std::string method = "atom";
      if (!event_path.empty()) {
        const json e = io::read_json(event_path);
        try {
          ev.source_vertex = e.at("m").get<std::size_t>();
          ev.onset = e.at("tau").get<std::size_t>();
          ev.scale = e.at("s").get<double>();
          ev.amplitude = e.value("amplitude", 1.0);
          ev.beta = e.value("beta", ev.beta);
          method = e.value("method", method);
        } catch (const json::exception& ex) {
          throw InputError(std::string("event JSON: ") + ex.what());
        }
      }
      if (m_flag) ev.source_vertex = *m_flag;
      if (tau_flag) ev.onset = *tau_flag;
      if (s_flag) ev.scale = *s_flag;
      if (amp_flag) ev.amplitude = *amp_flag;
      if (beta_flag) ev.beta = *beta_flag;
      if (!method_flag.empty()) method = method_flag;
      if (event_path.empty() && (!m_flag || !tau_flag || !s_flag)) {
        throw InputError("synth needs --event or all of --m, --tau, --s");
      }
      if (method != "atom" && method != "leapfrog") throw InputError("unknown synth method '" + method + "'");

      const SpectralBasis basis = eigendecompose(loaded.graph);
      TimeVertexSignal x = synth_event(loaded.graph, basis, ev, cfg.frame.steps,
                                       method == "atom" ? SynthMethod::atom : SynthMethod::leapfrog);
      if (snr_flag) {
        NoisyObservation noisy = add_noise(x, *snr_flag, seed);
        for (auto r : noisy.silent_rows) err << "warning: row " << r << " is zero; no noise added\n";
        x = std::move(noisy.signal);
      }
      io::write_signal(out_path, x);
      json j = detail::header(cfg, "synth");
      j["seed"] = seed;
      j["event"] = {{"m", ev.source_vertex}, {"tau", ev.onset}, {"s", ev.scale},
                    {"amplitude", ev.amplitude}, {"beta", ev.beta}, {"method", method}};
      if (snr_flag) j["snr_db"] = *snr_flag;
      j["output"] = out_path;
      detail::emit_json(j, "", out);
      return kOk;
    }

    const io::SignalFile signal = io::read_signal(signals_path);
    if (static_cast<std::size_t>(signal.values.rows()) != loaded.graph.n_vertices()) {
      throw ParameterError("signal has " + std::to_string(signal.values.rows()) + " rows but the graph has " +
                           std::to_string(loaded.graph.n_vertices()) + " vertices");
    }
    const std::size_t steps = static_cast<std::size_t>(signal.values.cols());
    cfg.frame.steps = steps;
    const DGWFrame frame = detail::make_frame(cfg, loaded.graph, steps);
    detail::report_warnings(frame.warnings(), err);
    const FrameBounds bounds = frame_bounds(frame);

    if (*analyze_cmd) {
      const CoefficientTensor c = analyze(frame, signal.values);
      json j = detail::header(cfg, "analyze");
      j["frame"] = io::frame_metadata(frame, bounds);
      if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw InputError("cannot write '" + out_path + "'");
        io::write_coefficient_csv(f, c, dump_threshold);
        j["output"] = out_path;
      }
      j["max_abs_coefficient"] = c.matrix().lpNorm<Eigen::Infinity>();
      j["energy"] = c.matrix().squaredNorm();
      detail::emit_json(j, "", out);
      return kOk;
    }

    const SolverConfig sc = detail::solver_config(cfg, frame, signal.values);
    const SolverResult res = fista(frame, signal.values, sc);
    json j = detail::header(cfg, *localize_cmd ? "localize" : "denoise");
    j["frame"] = io::frame_metadata(frame, bounds);
    j["gamma"] = sc.gamma;
    j["solver"] = io::solver_diagnostics(res);

    if (*localize_cmd) {
      if (!loaded.stations) throw InputError("graph JSON carries no station coordinates");
      const EventEstimate est = estimate_epicenter(res.coefficients, *loaded.stations, cfg.localization.rho,
                                                   frame.scales());
      json result = io::estimate_to_json(est);
      if (!truth_text.empty()) result["error_km"] = localization_error_km(est, detail::parse_lat_lon(truth_text));
      j["result"] = result;
      detail::emit_json(j, out_path, out);
      return kOk;
    }

    if (out_path.empty()) throw InputError("denoise requires --out");
    io::write_signal(out_path, synthesize(frame, res.coefficients), signal.fs_hz);
    j["output"] = out_path;
    detail::emit_json(j, "", out);
    return kOk;
  } catch (const NoEventError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const StabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kStabilityError;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace dgw::cli
