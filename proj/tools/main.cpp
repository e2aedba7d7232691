#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>  // vendored single header
#else
#include <CLI/CLI.hpp>  // system package
#endif

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "appraisal/dynamics.hpp"
#include "appraisal/equilibrium.hpp"
#include "appraisal/errors.hpp"
#include "appraisal/graph.hpp"
#include "appraisal/io.hpp"
#include "appraisal/verify.hpp"

namespace {

using namespace appraisal;

std::string format_vertex_list(const std::vector<int>& vs) {
  std::string out = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(vs[i]);
  }
  return out + "]";
}

double parse_decimal(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw Error(errc::parse_error, "not a decimal number: \"" + text + "\"");
  }
  return value;
}

SimplexState parse_x0(const std::string& text, int n) {
  if (text == "uniform") return SimplexState::uniform(n);
  if (text.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    const std::string digits = text.substr(7);
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
      throw Error(errc::parse_error,
                  "bad seed in \"" + text + "\"; expected random:<u64>");
    }
    std::mt19937_64 rng(seed);
    return sample_interior(n, rng);
  }
  std::vector<double> x;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string piece =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    x.push_back(parse_decimal(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (static_cast<int>(x.size()) != n) {
    throw Error(errc::dimension_mismatch,
                "--x0 has " + std::to_string(x.size()) + " components, network has " +
                    std::to_string(n));
  }
  return SimplexState(std::move(x));
}

int run_validate(const std::string& path) {
  const NetworkModel model = validate_network(load_network(path));
  std::size_t edges = 0;
  for (int i = 0; i < model.n(); ++i) edges += model.out(i).size();
  std::cout << "n: " << model.n() << ", edges: " << edges << "\n";
  std::cout << "rooted: true, roots: " << format_vertex_list(model.roots())
            << "\n";
  return 0;
}

int run_analyze(const std::string& path, int vertex) {
  const NetworkModel model = validate_network(load_network(path));
  const SupportStructure s = support_structure(model, vertex);
  std::cout << "vertex: " << vertex << "\n";
  for (std::size_t k = 0; k < s.layers.size(); ++k) {
    std::cout << "S_" << vertex << "(" << k
              << ") = " << format_vertex_list(s.layers[k]) << "\n";
  }
  for (std::size_t k = 1; k < s.differences.size(); ++k) {
    std::cout << "D_" << vertex << "(" << k
              << ") = " << format_vertex_list(s.differences[k]) << "\n";
  }
  std::cout << "alpha coefficients (source -> target):\n";
  bool any = false;
  for (int j = 0; j < model.n(); ++j) {
    if (j == vertex || s.distance[j] < 0) continue;
    std::cout << "  " << j << " -> " << vertex << " (length "
              << s.distance[j] << "): " << format_double(s.alpha[j]) << "\n";
    any = true;
  }
  if (!any) std::cout << "  none (no vertex has a path into " << vertex << ")\n";
  std::cout << "alpha(n=" << model.n()
            << ") = " << format_double(alpha_threshold(model.n())) << "\n";
  if (model.in_degree(vertex) > 0) {
    std::cout << "alpha_" << vertex << " (in-degree "
              << model.in_degree(vertex)
              << ") = " << format_double(vertex_threshold(model, vertex))
              << "\n";
  } else {
    std::cout << "alpha_" << vertex
              << ": no in-neighbors; appraisal decays on all of (0,1)\n";
  }
  return 0;
}

int run_simulate(const std::string& path, const std::string& x0_text,
                 double horizon, double step, int record_every,
                 const std::string& out_path) {
  const NetworkModel model = validate_network(load_network(path));
  const SimplexState x0 = parse_x0(x0_text, model.n());
  IntegratorConfig cfg;
  cfg.horizon = horizon;
  cfg.step = step;
  cfg.record_every = record_every;
  const Trajectory traj = integrate(model, x0, cfg);
  write_trajectory_csv(traj, out_path);
  std::cout << "wrote " << out_path << ": " << traj.times.size()
            << " samples, t_end = " << format_double(traj.times.back())
            << "\n";
  if (traj.q_entry_time) {
    std::cout << "q_entry = " << format_double(*traj.q_entry_time) << "\n";
  }
  if (traj.converged_at) {
    std::cout << "converged = " << format_double(*traj.converged_at) << "\n";
  }
  return 0;
}

int run_equilibrium(const std::string& path, const std::string& out_path) {
  const NetworkModel model = validate_network(load_network(path));
  const EquilibriumReport rep = solve_equilibrium(model);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw Error(errc::parse_error, "cannot open " + out_path + " for writing");
  }
  out << equilibrium_to_json(rep).dump(2) << "\n";
  std::cout << "wrote " << out_path << ": mu = " << format_double(rep.mu)
            << ", residual = " << format_double(rep.residual) << ", stable = "
            << (rep.stability.stable ? "true" : "false") << "\n";
  return 0;
}

int run_verify(const std::string& suite, int count, std::uint64_t seed,
               const std::string& json_path) {
  std::vector<SuiteReport> reports;
  if (suite == "all") {
    reports = run_all_suites(count, seed);
  } else {
    reports.push_back(run_suite(suite, count, seed));
  }
  long long total_failures = 0;
  for (const SuiteReport& r : reports) {
    std::cout << "suite " << r.suite << ": " << r.cases << " cases, "
              << r.checks << " checks, " << r.failures.size() << " failures\n";
    for (const SuiteFailure& f : r.failures) {
      std::cout << "  case " << f.case_index << " seed " << f.spec.seed
                << ": " << f.invariant << " (magnitude " << f.magnitude
                << (f.state.empty() ? "" : ", " + f.state) << ")\n";
    }
    total_failures += static_cast<long long>(r.failures.size());
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) {
      throw Error(errc::parse_error,
                  "cannot open " + json_path + " for writing");
    }
    out << suite_reports_to_json(reports).dump(2) << "\n";
  }
  if (total_failures > 0) {
    throw Error(errc::parse_error,
                "verification failed with " + std::to_string(total_failures) +
                    " failures");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted rooted digraph self-appraisal toolkit"};
  app.require_subcommand(1);

  std::string net_path, x0_text = "uniform", out_path;
  double horizon = 200.0, step = 0.01;
  int record_every = 10, vertex = 0;
  std::string suite = "all", json_path;
  int count = 100;
  std::uint64_t seed = 0;

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check a network file and print its roots");
  validate_cmd->add_option("network", net_path, "network JSON file")->required();

  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze", "print supporting layers and path coefficients for a vertex");
  analyze_cmd->add_option("network", net_path, "network JSON file")->required();
  analyze_cmd->add_option("--vertex", vertex, "target vertex")->required();

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "integrate the appraisal dynamics to CSV");
  simulate_cmd->add_option("network", net_path, "network JSON file")->required();
  simulate_cmd->add_option("--x0", x0_text,
                           "initial state: uniform, random:SEED, or comma list");
  simulate_cmd->add_option("--horizon", horizon, "integration horizon");
  simulate_cmd->add_option("--step", step, "integration step");
  simulate_cmd->add_option("--record-every", record_every,
                           "record every k-th step");
  simulate_cmd->add_option("--out", out_path, "output CSV path")
      ->default_str("traj.csv");

  CLI::App* equilibrium_cmd = app.add_subcommand(
      "equilibrium", "solve for the interior equilibrium and its spectrum");
  equilibrium_cmd->add_option("network", net_path, "network JSON file")
      ->required();
  equilibrium_cmd->add_option("--out", out_path, "output JSON path")
      ->default_str("eq.json");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "run randomized property suites against the model claims");
  verify_cmd->add_option("--suite", suite,
                         "suite name or \"all\" (invariance, repeller, "
                         "convergence, equilibrium, boundary, support_oracle)");
  verify_cmd->add_option("--count", count, "cases per suite");
  verify_cmd->add_option("--seed", seed, "master seed");
  verify_cmd->add_option("--json", json_path, "write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (validate_cmd->parsed()) return run_validate(net_path);
    if (analyze_cmd->parsed()) return run_analyze(net_path, vertex);
    if (simulate_cmd->parsed()) {
      if (out_path.empty()) out_path = "traj.csv";
      return run_simulate(net_path, x0_text, horizon, step, record_every,
                          out_path);
    }
    if (equilibrium_cmd->parsed()) {
      if (out_path.empty()) out_path = "eq.json";
      return run_equilibrium(net_path, out_path);
    }
    if (verify_cmd->parsed()) return run_verify(suite, count, seed, json_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
