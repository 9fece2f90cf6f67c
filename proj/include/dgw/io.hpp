#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgw/errors.hpp"
#include "dgw/frame.hpp"
#include "dgw/graph.hpp"
#include "dgw/localization.hpp"
#include "dgw/solver.hpp"

namespace dgw::io {

using nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, std::size_t line_no, const char* what) {
  const std::string tmp(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tmp, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (tmp.empty() || used != tmp.size() || !std::isfinite(v)) {
    throw InputError("line " + std::to_string(line_no) + ": invalid " + what + " '" + tmp + "'");
  }
  return v;
}

inline std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

// Round-trip formatting used for every numeric CSV field.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- stations ---------------------------------------------------------------

// CSV with header `station_id,lat,lon`, decimal degrees.
inline StationTable parse_station_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<Station> entries;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split(view);
    if (!header) {
      if (fields.size() != 3 || fields[0] != "station_id" || fields[1] != "lat" || fields[2] != "lon") {
        throw InputError("line " + std::to_string(line_no) + ": expected header 'station_id,lat,lon'");
      }
      header = true;
      continue;
    }
    if (fields.size() != 3) {
      throw InputError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw InputError("line " + std::to_string(line_no) + ": empty station_id");
    entries.push_back({std::string(fields[0]),
                       {detail::parse_double(fields[1], line_no, "latitude"),
                        detail::parse_double(fields[2], line_no, "longitude")}});
  }
  if (!header) throw InputError("station CSV is empty");
  return StationTable(std::move(entries));
}

inline StationTable read_station_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_station_csv(in);
}

inline void write_station_csv(std::ostream& out, const StationTable& stations) {
  out << "station_id,lat,lon\n";
  for (const auto& s : stations.entries()) {
    out << s.id << ',' << format_double(s.position.lat) << ',' << format_double(s.position.lon) << '\n';
  }
}

inline json stations_to_json(const StationTable& stations) {
  json arr = json::array();
  for (const auto& s : stations.entries()) arr.push_back({{"id", s.id}, {"lat", s.position.lat}, {"lon", s.position.lon}});
  return arr;
}

inline StationTable stations_from_json(const json& arr) {
  std::vector<Station> entries;
  for (const auto& e : arr) {
    entries.push_back({e.at("id").get<std::string>(), {e.at("lat").get<double>(), e.at("lon").get<double>()}});
  }
  return StationTable(std::move(entries));
}

// ---- graph ------------------------------------------------------------------

// `{"n": N, "edges": [[i, j, w], ...]}` with i < j.
inline json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back(json::array({e.i, e.j, e.weight}));
  return {{"n", g.n_vertices()}, {"edges", edges}};
}

inline Graph graph_from_json(const json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    if (n < 1) throw InputError("graph JSON: n must be >= 1");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw InputError("graph JSON: each edge must be [i, j, w]");
      const auto a = e[0].get<std::size_t>();
      const auto b = e[1].get<std::size_t>();
      const double weight = e[2].get<double>();
      if (a >= b || b >= n) throw InputError("graph JSON: edge indices must satisfy i < j < n");
      w(Eigen::Index(a), Eigen::Index(b)) = weight;
      w(Eigen::Index(b), Eigen::Index(a)) = weight;
    }
    return Graph(std::move(w));
  } catch (const json::exception& ex) {
    throw InputError(std::string("graph JSON: ") + ex.what());
  } catch (const ParameterError& ex) {
    throw InputError(std::string("graph JSON: ") + ex.what());
  }
}

inline json read_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InputError("'" + path.string() + "': " + ex.what());
  }
}

// ---- signal matrices ---------------------------------------------------------

struct SignalFile {
  TimeVertexSignal values;
  double fs_hz = 1.0;
};

// N rows x T columns, no header.
inline TimeVertexSignal parse_signal_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<double> row;
    for (auto f : detail::split(line)) row.push_back(detail::parse_double(f, line_no, "sample"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                       " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("signal CSV is empty");
  TimeVertexSignal x(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t t = 0; t < rows[r].size(); ++t) x(Eigen::Index(r), Eigen::Index(t)) = rows[r][t];
  }
  return x;
}

inline void write_signal_csv(std::ostream& out, const TimeVertexSignal& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
      if (t) out << ',';
      out << format_double(x(r, t));
    }
    out << '\n';
  }
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& bin) {
  auto p = bin;
  p.replace_extension(".json");
  return p;
}

// `.bin` paths hold row-major little-endian float64 with a JSON sidecar
// `{"n": N, "t": T, "fs_hz": f}`; any other extension is CSV.
inline SignalFile read_signal(const std::filesystem::path& path) {
  if (path.extension() != ".bin") {
    auto in = detail::open_in(path);
    return {parse_signal_csv(in), 1.0};
  }
  const json meta = read_json(sidecar_path(path));
  SignalFile f;
  std::size_t n = 0, t = 0;
  try {
    n = meta.at("n").get<std::size_t>();
    t = meta.at("t").get<std::size_t>();
    f.fs_hz = meta.value("fs_hz", 1.0);
  } catch (const json::exception& ex) {
    throw InputError("signal sidecar: " + std::string(ex.what()));
  }
  auto in = detail::open_in(path, std::ios::binary);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() != n * t * 8) {
    throw InputError("binary signal: expected " + std::to_string(n * t * 8) + " bytes, found " +
                     std::to_string(raw.size()));
  }
  f.values.resize(Eigen::Index(n), Eigen::Index(t));
  for (std::size_t i = 0; i < n * t; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(raw[i * 8 + std::size_t(b)]) << (8 * b);
    f.values(Eigen::Index(i / t), Eigen::Index(i % t)) = std::bit_cast<double>(bits);
  }
  return f;
}

inline void write_signal(const std::filesystem::path& path, const TimeVertexSignal& x, double fs_hz = 1.0) {
  if (path.extension() != ".bin") {
    auto out = detail::open_out(path);
    write_signal_csv(out, x);
    return;
  }
  auto out = detail::open_out(path, std::ios::binary);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
      const auto bits = std::bit_cast<std::uint64_t>(x(r, t));
      for (int b = 0; b < 8; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  auto meta = detail::open_out(sidecar_path(path));
  meta << json{{"n", x.rows()}, {"t", x.cols()}, {"fs_hz", fs_hz}}.dump() << '\n';
}

// ---- coefficients, frame, solver, estimate ----------------------------------

// `scale_index,vertex,tau,value` for entries with |value| > threshold.
inline void write_coefficient_csv(std::ostream& out, const CoefficientTensor& c, double threshold = 0.0) {
  out << "scale_index,vertex,tau,value\n";
  for (std::size_t s = 0; s < c.n_scales(); ++s) {
    for (std::size_t m = 0; m < c.n_vertices(); ++m) {
      for (std::size_t tau = 0; tau < c.n_steps(); ++tau) {
        const double v = c(s, m, tau);
        if (std::abs(v) > threshold) out << s << ',' << m << ',' << tau << ',' << format_double(v) << '\n';
      }
    }
  }
}

inline json frame_metadata(const DGWFrame& frame, const FrameBounds& bounds) {
  return {{"scales", frame.scales()}, {"beta", frame.beta()}, {"A", bounds.lower}, {"B", bounds.upper}};
}

inline json solver_diagnostics(const SolverResult& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"objective_history", r.objective_history},
          {"kkt_residual", r.kkt_residual}};
}

inline json estimate_to_json(const EventEstimate& est) {
  json contributors = json::array();
  for (const auto& c : est.contributors) contributors.push_back({{"vertex", c.vertex}, {"weight", c.weight}});
  return {{"est_lat", est.position.lat},
          {"est_lon", est.position.lon},
          {"onset_tau", est.onset_tau},
          {"dominant_scale", est.dominant_scale},
          {"amplitude", est.amplitude},
          {"contributors", contributors}};
}

}  // namespace dgw::io
