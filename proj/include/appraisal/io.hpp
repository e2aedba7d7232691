#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "appraisal/dynamics.hpp"
#include "appraisal/equilibrium.hpp"
#include "appraisal/errors.hpp"
#include "appraisal/graph.hpp"
#include "appraisal/verify.hpp"

namespace appraisal {

// Locale-independent decimal rendering with 17 significant digits, enough to
// round-trip any double bit-faithfully.
inline std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline RawNetwork parse_network_json(const std::string& text,
                                     const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    // Covers syntax errors and literal overflow (e.g. 1e999) alike.
    throw Error(errc::parse_error, source + ": " + e.what());
  }
  auto fail = [&](const std::string& msg) -> void {
    throw Error(errc::parse_error, source + ": " + msg);
  };
  if (!doc.is_object()) fail("top level must be an object");
  if (!doc.contains("n")) fail("missing field \"n\"");
  if (!doc.contains("edges")) fail("missing field \"edges\"");
  if (!doc["n"].is_number_integer()) fail("\"n\" must be an integer");
  if (!doc["edges"].is_array()) fail("\"edges\" must be an array");

  RawNetwork raw;
  raw.n = doc["n"].get<int>();
  if (raw.n < 1) fail("\"n\" must be at least 1");
  std::size_t idx = 0;
  for (const auto& item : doc["edges"]) {
    const std::string where = "edges[" + std::to_string(idx) + "]";
    if (!item.is_array() || item.size() != 3) {
      fail(where + " must be [src, dst, weight]");
    }
    if (!item[0].is_number_integer() || !item[1].is_number_integer()) {
      fail(where + ": src and dst must be integers");
    }
    if (!item[2].is_number()) {
      fail(where + ": weight must be a decimal number");
    }
    const double w = item[2].get<double>();
    if (!std::isfinite(w)) fail(where + ": weight must be finite");
    raw.edges.push_back({item[0].get<int>(), item[1].get<int>(), w});
    ++idx;
  }
  return raw;
}

inline RawNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::parse_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network_json(buf.str(), path);
}

inline nlohmann::json network_to_json(const RawNetwork& raw) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : raw.edges) {
    edges.push_back(nlohmann::json::array({e.src, e.dst, e.weight}));
  }
  return nlohmann::json{{"n", raw.n}, {"edges", edges}};
}

inline void save_network(const RawNetwork& raw, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::parse_error, "cannot open " + path + " for writing");
  out << network_to_json(raw).dump(2) << "\n";
}

// One row per recorded sample, then events as trailing comment lines.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.states.empty()) return;
  const int n = traj.states.front().size();
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t row = 0; row < traj.times.size(); ++row) {
    out << format_double(traj.times[row]);
    for (int i = 0; i < n; ++i) {
      out << "," << format_double(traj.states[row][i]);
    }
    out << "\n";
  }
  if (traj.q_entry_time) out << "# q_entry=" << format_double(*traj.q_entry_time) << "\n";
  if (traj.converged_at) out << "# converged=" << format_double(*traj.converged_at) << "\n";
}

inline void write_trajectory_csv(const Trajectory& traj,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::parse_error, "cannot open " + path + " for writing");
  write_trajectory_csv(traj, out);
}

inline nlohmann::json equilibrium_to_json(const EquilibriumReport& rep) {
  nlohmann::json spectrum = nlohmann::json::array();
  for (const auto& lambda : rep.stability.spectrum) {
    spectrum.push_back(nlohmann::json::array({lambda.real(), lambda.imag()}));
  }
  return nlohmann::json{
      {"x_star", rep.x_star.values()},
      {"mu", rep.mu},
      {"residual", rep.residual},
      {"spectrum", spectrum},
      {"zero_eig_count", rep.stability.zero_eig_count},
      {"max_other_real_part", rep.stability.max_other_real_part},
      {"stable", rep.stability.stable},
  };
}

inline nlohmann::json generator_spec_to_json(const GeneratorSpec& spec) {
  return nlohmann::json{
      {"n", spec.n},
      {"topology", spec.topology == Topology::strongly_connected
                       ? "strongly_connected"
                       : "rooted_with_leaves"},
      {"non_root_count", spec.non_root_count},
      {"min_out_degree", spec.min_out_degree},
      {"seed", spec.seed},
  };
}

inline nlohmann::json suite_report_to_json(const SuiteReport& report) {
  nlohmann::json failures = nlohmann::json::array();
  for (const SuiteFailure& f : report.failures) {
    failures.push_back(nlohmann::json{
        {"case_index", f.case_index},
        {"spec", generator_spec_to_json(f.spec)},
        {"state", f.state},
        {"invariant", f.invariant},
        {"magnitude", f.magnitude},
    });
  }
  return nlohmann::json{
      {"suite", report.suite},
      {"cases", report.cases},
      {"checks", report.checks},
      {"failures", failures},
  };
}

inline nlohmann::json suite_reports_to_json(
    const std::vector<SuiteReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SuiteReport& r : reports) arr.push_back(suite_report_to_json(r));
  return nlohmann::json{{"suites", arr}};
}

}  // namespace appraisal
