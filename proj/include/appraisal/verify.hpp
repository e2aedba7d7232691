#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "appraisal/dynamics.hpp"
#include "appraisal/equilibrium.hpp"
#include "appraisal/errors.hpp"
#include "appraisal/graph.hpp"

namespace appraisal {

enum class Topology { strongly_connected, rooted_with_leaves };

struct GeneratorSpec {
  int n = 3;
  Topology topology = Topology::strongly_connected;
  int non_root_count = 0;
  int min_out_degree = 2;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double positive_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = dist(rng);
  while (u <= 1e-12) u = dist(rng);
  return u;
}

// Normalize to sum 1, then repeatedly cap entries at 1/2 and redistribute
// the excess over uncapped entries. Terminates because each pass caps at
// least one new entry; with two or more entries the capped polytope is
// nonempty, so the loop always lands inside (0, 1/2].
inline void normalize_and_clip(std::vector<double>& w) {
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  std::vector<char> capped(w.size(), 0);
  while (true) {
    bool newly_capped = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!capped[i] && w[i] > 0.5) {
        w[i] = 0.5;
        capped[i] = 1;
        newly_capped = true;
      }
    }
    if (!newly_capped) break;
    double cap_total = 0.0, rest = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (capped[i]) {
        cap_total += w[i];
      } else {
        rest += w[i];
      }
    }
    if (rest <= 0.0) break;
    const double factor = (1.0 - cap_total) / rest;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!capped[i]) w[i] *= factor;
    }
  }
  for (double& v : w) v = std::min(v, 0.5);
}

}  // namespace detail

// Random admissible network: a Hamiltonian cycle on the root core plus random
// extra edges up to min_out_degree, optional leaves pointing into the core,
// and per-vertex weights normalized then capped at 1/2.
inline NetworkModel random_network(const GeneratorSpec& spec) {
  if (spec.n < 3) {
    throw Error(errc::infeasible_spec,
                "need n >= 3, got " + std::to_string(spec.n));
  }
  if (spec.min_out_degree < 2) {
    throw Error(errc::infeasible_spec, "min_out_degree must be at least 2");
  }
  if (spec.topology == Topology::strongly_connected && spec.non_root_count != 0) {
    throw Error(errc::infeasible_spec,
                "strongly connected topology admits no non-roots");
  }
  if (spec.topology == Topology::rooted_with_leaves &&
      (spec.non_root_count < 1 || spec.non_root_count > spec.n - 3)) {
    throw Error(errc::infeasible_spec,
                "non_root_count must lie in [1, n-3]");
  }
  const int core = spec.n - spec.non_root_count;
  if (spec.min_out_degree > core - 1) {
    throw Error(errc::infeasible_spec,
                "min_out_degree " + std::to_string(spec.min_out_degree) +
                    " exceeds core capacity " + std::to_string(core - 1));
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::set<int>> targets(spec.n);
  for (int u = 0; u < core; ++u) targets[u].insert((u + 1) % core);
  std::uniform_int_distribution<int> pick_core(0, core - 1);
  for (int u = 0; u < spec.n; ++u) {
    while (static_cast<int>(targets[u].size()) < spec.min_out_degree) {
      const int t = pick_core(rng);
      if (t != u) targets[u].insert(t);
    }
  }

  RawNetwork raw;
  raw.n = spec.n;
  for (int u = 0; u < spec.n; ++u) {
    std::vector<double> w(targets[u].size());
    for (double& v : w) v = detail::positive_uniform(rng);
    detail::normalize_and_clip(w);
    std::size_t k = 0;
    for (int t : targets[u]) raw.edges.push_back({u, t, w[k++]});
  }
  return validate_network(raw);
}

// --- simplex samplers ---

inline SimplexState sample_interior(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp_dist(1.0);
  while (true) {
    std::vector<double> x(n);
    double sum = 0.0;
    for (double& v : x) {
      v = exp_dist(rng) + 1e-9;
      sum += v;
    }
    for (double& v : x) v /= sum;
    SimplexState s(std::move(x));
    if (!s.is_vertex()) return s;
  }
}

// Exponential mass on the given support, exact zeros elsewhere.
inline SimplexState sample_supported(int n, const std::vector<int>& support,
                                     std::mt19937_64& rng) {
  std::exponential_distribution<double> exp_dist(1.0);
  while (true) {
    std::vector<double> x(n, 0.0);
    double sum = 0.0;
    for (int i : support) {
      x[i] = exp_dist(rng) + 1e-9;
      sum += x[i];
    }
    for (int i : support) x[i] /= sum;
    SimplexState s(std::move(x));
    if (support.size() == 1 || !s.is_vertex()) return s;
  }
}

// Near-uniform mass on the support, exact zeros elsewhere. Keeps every
// positive component comparable, which boundary-derivative fits need: a far
// smaller mass on the critical layer would let the next Taylor order
// dominate at the fit time.
inline SimplexState sample_near_uniform(int n, const std::vector<int>& support,
                                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.9, 1.1);
  std::vector<double> x(n, 0.0);
  double sum = 0.0;
  for (int i : support) {
    x[i] = dist(rng);
    sum += x[i];
  }
  for (int i : support) x[i] /= sum;
  return SimplexState(std::move(x));
}

// Boundary state: a random nonempty set of exact zeros (at most n-2, so the
// result is never a vertex), exponential mass elsewhere.
inline SimplexState sample_boundary(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> zcount(1, n - 2);
  const int zeros = zcount(rng);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> support(order.begin() + zeros, order.end());
  return sample_supported(n, support, rng);
}

// State inside the repeller slab of vertex i: x_i above the vertex threshold
// plus margin, strictly below 1, remaining mass spread over the rest.
inline SimplexState sample_repeller(const NetworkModel& model, int i,
                                    std::mt19937_64& rng) {
  const int n = model.n();
  const double lo = vertex_threshold(model, i) + 1e-6;
  std::uniform_real_distribution<double> xdist(lo, 1.0 - 1e-6);
  std::exponential_distribution<double> exp_dist(1.0);
  std::vector<double> x(n);
  x[i] = xdist(rng);
  double sum = 0.0;
  std::vector<double> rest(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    rest[j] = exp_dist(rng) + 1e-9;
    sum += rest[j];
  }
  for (int j = 0; j < n; ++j) {
    if (j != i) x[j] = rest[j] / sum * (1.0 - x[i]);
  }
  return SimplexState(std::move(x));
}

// --- brute-force oracles (no shared code with the implementations checked) ---

// Roots as the intersection of forward-reachability sets.
inline std::vector<int> root_set_bruteforce(const NetworkModel& model) {
  const int n = model.n();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int s = 0; s < n; ++s) {
    std::vector<int> stack = {s};
    reach[s][s] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const Neighbor& a : model.out(u)) {
        if (!reach[s][a.v]) {
          reach[s][a.v] = 1;
          stack.push_back(a.v);
        }
      }
    }
  }
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    bool all = true;
    for (int j = 0; j < n; ++j) {
      if (!reach[j][i]) {
        all = false;
        break;
      }
    }
    if (all) roots.push_back(i);
  }
  return roots;
}

inline double edge_weight(const NetworkModel& model, int u, int v) {
  for (const Neighbor& a : model.out(u)) {
    if (a.v == v) return a.c;
  }
  throw Error(errc::index_out_of_range, "no edge " + std::to_string(u) + "->" +
                                            std::to_string(v));
}

// Path coefficient by exhaustive enumeration of distinct-vertex paths.
inline double alpha_bruteforce(const NetworkModel& model, int j, int i, int k) {
  double total = 0.0;
  for (const std::vector<int>& path : enumerate_paths(model, j, i, k)) {
    double prod = 1.0;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      prod *= edge_weight(model, path[s], path[s + 1]);
    }
    total += prod;
  }
  return total;
}

// Central-difference linearization of the field.
inline Eigen::MatrixXd fd_jacobian(const NetworkModel& model,
                                   const std::vector<double>& x,
                                   double h = 1e-6) {
  const int n = model.n();
  Eigen::MatrixXd J(n, n);
  std::vector<double> plus = x, minus = x;
  for (int j = 0; j < n; ++j) {
    plus[j] = x[j] + h;
    minus[j] = x[j] - h;
    const std::vector<double> fp = vector_field(model, plus);
    const std::vector<double> fm = vector_field(model, minus);
    for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    plus[j] = x[j];
    minus[j] = x[j];
  }
  return J;
}

// Root-induced subgraph, reindexed to [0, |roots|). Root out-edges never
// leave the root set, so the subgraph inherits admissibility.
struct RootSubgraph {
  RawNetwork raw;
  std::vector<int> to_parent;  // new vertex index -> original vertex index
};

inline RootSubgraph extract_root_subgraph(const NetworkModel& model) {
  const std::vector<int>& roots = model.roots();
  std::vector<int> new_index(model.n(), -1);
  for (std::size_t k = 0; k < roots.size(); ++k) new_index[roots[k]] = static_cast<int>(k);
  RawNetwork raw;
  raw.n = static_cast<int>(roots.size());
  for (int r : roots) {
    for (const Neighbor& a : model.out(r)) {
      raw.edges.push_back({new_index[r], new_index[a.v], a.c});
    }
  }
  return {raw, roots};
}

// --- property suites ---

struct SuiteFailure {
  int case_index = 0;
  GeneratorSpec spec;
  std::string state;      // compact description of the offending input
  std::string invariant;  // claim that failed
  double magnitude = 0.0;
};

struct SuiteReport {
  std::string suite;
  int cases = 0;
  long long checks = 0;
  std::vector<SuiteFailure> failures;
  bool passed() const { return failures.empty(); }
};

namespace detail {

class Checker {
 public:
  Checker(SuiteReport* report, int case_index)
      : report_(report), case_index_(case_index) {}

  void set_spec(const GeneratorSpec& spec) { spec_ = spec; }
  const GeneratorSpec& spec() const { return spec_; }

  bool require(bool ok, const std::string& invariant, double magnitude,
               const std::string& state) {
    ++report_->checks;
    if (!ok) {
      report_->failures.push_back(
          {case_index_, spec_, state, invariant, magnitude});
    }
    return ok;
  }

  void exception(const std::string& what) {
    report_->failures.push_back(
        {case_index_, spec_, "", "unexpected exception: " + what,
         std::numeric_limits<double>::quiet_NaN()});
  }

 private:
  SuiteReport* report_;
  int case_index_;
  GeneratorSpec spec_;
};

inline GeneratorSpec sample_case_spec(std::mt19937_64& rng, int n_min,
                                      int n_max) {
  GeneratorSpec spec;
  std::uniform_int_distribution<int> nd(n_min, n_max);
  spec.n = nd(rng);
  const bool leaves = (spec.n >= 4) && (rng() % 2 == 0);
  if (leaves) {
    std::uniform_int_distribution<int> ld(1, spec.n - 3);
    spec.topology = Topology::rooted_with_leaves;
    spec.non_root_count = ld(rng);
  }
  const int core = spec.n - spec.non_root_count;
  spec.min_out_degree = (core >= 4 && rng() % 4 == 0) ? 3 : 2;
  spec.seed = rng();
  return spec;
}

inline std::vector<int> non_roots(const NetworkModel& model) {
  std::vector<int> out;
  for (int i = 0; i < model.n(); ++i) {
    if (!model.is_root(i)) out.push_back(i);
  }
  return out;
}

inline std::vector<int> support_union(const NetworkModel& model,
                                      const std::vector<int>& targets) {
  std::set<int> s;
  for (int i : targets) {
    const SupportStructure st = support_structure(model, i);
    for (int v = 0; v < model.n(); ++v) {
      if (st.distance[v] >= 0) s.insert(v);
    }
  }
  return std::vector<int>(s.begin(), s.end());
}

inline std::vector<int> complement_of(int n, const std::vector<int>& subset) {
  std::vector<char> in(n, 0);
  for (int v : subset) in[v] = 1;
  std::vector<int> out;
  for (int v = 0; v < n; ++v) {
    if (!in[v]) out.push_back(v);
  }
  return out;
}

inline double l1_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

inline std::string describe_state(const std::vector<double>& x) {
  std::string s = "x=(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

inline void invariance_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 12);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();

  std::vector<SimplexState> probes = {sample_interior(n, rng),
                                      sample_interior(n, rng),
                                      sample_boundary(n, rng),
                                      SimplexState::uniform(n)};
  for (const SimplexState& s : probes) {
    const std::vector<double> f = vector_field(model, s);
    double sum = 0.0;
    for (double v : f) sum += v;
    ck.require(std::abs(sum) <= 1e-12, "field components sum to zero",
               std::abs(sum), describe_state(s.values()));
    const std::vector<double> fm = vector_field_matrix(model, s.values());
    double diff = 0.0;
    for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(f[i] - fm[i]));
    ck.require(diff <= 1e-12, "matrix form of the field matches the direct form",
               diff, describe_state(s.values()));
  }

  IntegratorConfig cfg;
  cfg.horizon = 60.0;
  cfg.record_every = 10;
  const Trajectory traj = integrate(model, probes[0], cfg);
  ck.require(traj.max_simplex_drift <= 1e-8,
             "simplex sum drift stays within 1e-8", traj.max_simplex_drift,
             describe_state(probes[0].values()));
  ck.require(traj.min_component >= -1e-8,
             "components stay above -1e-8 before clamping",
             -traj.min_component, describe_state(probes[0].values()));
  for (std::size_t m = 0; m + 1 < traj.states.size(); ++m) {
    const double a = phi_r(model, traj.states[m]);
    const double b = phi_r(model, traj.states[m + 1]);
    if (!ck.require(b >= a - 1e-9 * cfg.record_every,
                    "root mass is non-decreasing along the flow", a - b,
                    "t=" + std::to_string(traj.times[m]))) {
      break;
    }
  }
  for (std::size_t m = 0; m < traj.states.size(); ++m) {
    const double rate = phi_r_rate(model, traj.states[m]);
    if (!ck.require(rate >= -1e-15, "root mass growth rate is non-negative",
                    -rate, "t=" + std::to_string(traj.times[m]))) {
      break;
    }
  }

  const std::vector<int> leaves = non_roots(model);
  if (!leaves.empty()) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(leaves.size()) - 1);
    std::set<int> chosen = {leaves[pick(rng)]};
    for (int v : leaves) {
      if (rng() % 2 == 0) chosen.insert(v);
    }
    const std::vector<int> blocked =
        support_union(model, std::vector<int>(chosen.begin(), chosen.end()));
    const std::vector<int> free_support = complement_of(n, blocked);
    IntegratorConfig short_cfg;
    short_cfg.horizon = 30.0;
    short_cfg.record_every = 10;
    const Trajectory t2 =
        integrate(model, sample_supported(n, free_support, rng), short_cfg);
    double worst = 0.0;
    for (const SimplexState& s : t2.states) {
      for (int v : blocked) worst = std::max(worst, s[v]);
    }
    ck.require(worst <= 1e-10,
               "ancestors of zeroed vertices keep zero appraisal", worst,
               "blocked=" + std::to_string(blocked.size()) + " vertices");

    const Trajectory t3 =
        integrate(model, sample_supported(n, model.roots(), rng), short_cfg);
    double worst_leaf = 0.0;
    for (const SimplexState& s : t3.states) {
      for (int v : leaves) worst_leaf = std::max(worst_leaf, s[v]);
    }
    ck.require(worst_leaf <= 1e-10,
               "states supported on roots stay supported on roots",
               worst_leaf, "non_roots=" + std::to_string(leaves.size()));
  }
}

inline void repeller_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 12);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();
  for (int t = 0; t < 100; ++t) {
    const int i = t % n;
    const SimplexState x = sample_repeller(model, i, rng);
    const std::vector<double> f = vector_field(model, x);
    ck.require(f[i] < 0.0,
               "appraisal decreases above the vertex threshold", f[i],
               "i=" + std::to_string(i) + " " + describe_state(x.values()));
    ck.require(in_repeller(model, x, i, vertex_threshold(model, i) + 1e-6),
               "sampled state lies in the repeller slab", 0.0,
               "i=" + std::to_string(i));
  }
}

inline void convergence_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 12);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();
  const EquilibriumReport eq = solve_equilibrium(model);

  IntegratorConfig cfg;
  cfg.horizon = 500.0;
  cfg.record_every = 20;
  const std::vector<SimplexState> starts = {sample_interior(n, rng),
                                            sample_boundary(n, rng)};
  for (const SimplexState& x0 : starts) {
    const Trajectory traj = integrate(model, x0, cfg);
    if (!ck.require(traj.converged_at.has_value(),
                    "field residual converges within the horizon", cfg.horizon,
                    describe_state(x0.values()))) {
      continue;
    }
    const double dist =
        l1_distance(traj.states.back().values(), eq.x_star.values());
    ck.require(dist < 1e-6, "trajectory lands on the interior equilibrium",
               dist, describe_state(x0.values()));
    ck.require(traj.q_entry_time.has_value(),
               "trajectory enters the capped region", cfg.horizon,
               describe_state(x0.values()));
    ck.require(in_Q(model, traj.states.back()),
               "final state stays in the capped region", 0.0,
               describe_state(x0.values()));
    double worst_leaf = 0.0;
    for (int v = 0; v < n; ++v) {
      if (!model.is_root(v)) {
        worst_leaf = std::max(worst_leaf, traj.states.back()[v]);
      }
    }
    ck.require(worst_leaf < 1e-6, "non-root appraisals decay", worst_leaf,
               describe_state(x0.values()));
  }
}

inline void equilibrium_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 12);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();

  const StationaryVector sv = stationary_vector(model);
  double vsum = 0.0, vmax = 0.0;
  for (double v : sv.v) {
    vsum += v;
    vmax = std::max(vmax, v);
  }
  ck.require(std::abs(vsum - 1.0) <= 1e-12, "stationary vector sums to one",
             std::abs(vsum - 1.0), "");
  ck.require(sv.residual <= 1e-10, "stationary vector annihilates C transpose",
             sv.residual, "");
  ck.require(vmax <= 1.0 / 3.0 + 1e-12,
             "stationary vector entries stay below one third", vmax, "");

  const double mu1 = mu_upper_bound(sv);
  ck.require(psi(sv, 0.0) == 0.0, "psi vanishes at zero", psi(sv, 0.0), "");
  ck.require(psi(sv, mu1) > 1.0, "psi exceeds one at the right endpoint",
             psi(sv, mu1), "");
  double prev = 0.0;
  bool monotone = true;
  for (int g = 1; g <= 20; ++g) {
    const double value = psi(sv, mu1 * g / 20.0);
    if (value <= prev) {
      monotone = false;
      break;
    }
    prev = value;
  }
  ck.require(monotone, "psi is strictly increasing", 0.0, "");

  const EquilibriumReport eq = solve_equilibrium(model);
  ck.require(eq.residual <= 1e-10, "equilibrium field residual within 1e-10",
             eq.residual, "");
  const double cap = alpha_threshold(n);
  for (int i = 0; i < n; ++i) {
    if (model.is_root(i)) {
      ck.require(eq.x_star[i] > 0.0 && eq.x_star[i] <= cap + 1e-12,
                 "root equilibrium entries lie in (0, alpha]", eq.x_star[i],
                 "i=" + std::to_string(i));
    } else {
      ck.require(eq.x_star[i] == 0.0, "non-root equilibrium entries vanish",
                 eq.x_star[i], "i=" + std::to_string(i));
    }
  }
  for (int i = 0; i < n; ++i) {
    double inflow = 0.0;
    for (const Neighbor& a : model.in(i)) {
      inflow += a.c * (1.0 - eq.x_star[a.v]) * eq.x_star[a.v];
    }
    const double self = (1.0 - eq.x_star[i]) * eq.x_star[i];
    ck.require(std::abs(self - inflow) <= 1e-10,
               "balance equation holds at the equilibrium",
               std::abs(self - inflow), "i=" + std::to_string(i));
  }
  ck.require(eq.stability.zero_eig_count == 1,
             "linearization has a simple zero eigenvalue",
             eq.stability.zero_eig_count, "");
  ck.require(eq.stability.max_other_real_part < -1e-10,
             "all other eigenvalues sit in the left half-plane",
             eq.stability.max_other_real_part, "");
  ck.require(eq.stability.stable, "equilibrium certified stable", 0.0, "");

  const auto scaled = scaled_coefficients(model, eq.x_star);
  std::map<int, double> row_sums;
  for (const auto& [key, value] : scaled) row_sums[key.second] += value;
  for (const auto& [dst, sum] : row_sums) {
    ck.require(std::abs(sum - 1.0) <= 1e-10,
               "rebalanced weights into each root sum to one",
               std::abs(sum - 1.0), "i=" + std::to_string(dst));
  }

  const Eigen::MatrixXd J = jacobian(model, eq.x_star.values());
  const Eigen::MatrixXd Jfd = fd_jacobian(model, eq.x_star.values());
  const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
  const double jerr = (J - Jfd).cwiseAbs().maxCoeff() / scale;
  ck.require(jerr <= 1e-5, "linearization matches central differences", jerr,
             "at equilibrium");
  const SimplexState probe = sample_interior(n, rng);
  const Eigen::MatrixXd J2 = jacobian(model, probe.values());
  const Eigen::MatrixXd J2fd = fd_jacobian(model, probe.values());
  const double scale2 = std::max(1.0, J2.cwiseAbs().maxCoeff());
  const double jerr2 = (J2 - J2fd).cwiseAbs().maxCoeff() / scale2;
  ck.require(jerr2 <= 1e-5,
             "linearization matches central differences off equilibrium",
             jerr2, describe_state(probe.values()));

  if (static_cast<int>(model.roots().size()) < n) {
    const auto [sub_raw, old_index] = extract_root_subgraph(model);
    const NetworkModel sub = validate_network(sub_raw);
    const EquilibriumReport sub_eq = solve_equilibrium(sub);
    double worst = 0.0;
    for (std::size_t k = 0; k < old_index.size(); ++k) {
      worst = std::max(
          worst, std::abs(sub_eq.x_star[static_cast<int>(k)] -
                          eq.x_star[old_index[k]]));
    }
    ck.require(worst <= 1e-10,
               "root-block solve agrees with the full equilibrium", worst, "");
  }

  // Small tangent perturbation on the root support must flow back.
  double min_root = 1.0;
  for (int r : model.roots()) min_root = std::min(min_root, eq.x_star[r]);
  const double eps = std::min(1e-3, min_root / 2.0);
  std::vector<double> pert = eq.x_star.values();
  const auto& roots = model.roots();
  pert[roots[0]] += eps / 2.0;
  pert[roots[1]] -= eps / 2.0;
  IntegratorConfig cfg;
  cfg.horizon = 480.0;
  cfg.record_every = 50;
  const Trajectory back = integrate(model, SimplexState(pert), cfg);
  const double dist =
      l1_distance(back.states.back().values(), eq.x_star.values());
  ck.require(back.converged_at.has_value() && dist < 1e-6,
             "perturbed equilibrium flows back", dist,
             "eps=" + std::to_string(eps));
}

inline void boundary_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 12);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();

  auto fit_check = [&](const SimplexState& x0, int i, int k, double value) {
    IntegratorConfig cfg;
    cfg.horizon = 0.01;
    cfg.step = 1e-3;
    cfg.convergence_tol = 1e-300;
    const Trajectory traj = integrate(model, x0, cfg);
    const double t = traj.times.back();
    double kfact = 1.0;
    for (int s = 2; s <= k; ++s) kfact *= s;
    const double predicted = value * std::pow(t, k) / kfact;
    const double measured = traj.states.back()[i];
    const double rel = std::abs(measured - predicted) / predicted;
    ck.require(rel <= 0.10,
               "short-time growth matches the leading derivative", rel,
               "i=" + std::to_string(i) + " k=" + std::to_string(k));
  };

  // Depth-1: zero only the target, so its in-neighbors carry mass.
  {
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(model.roots().size()) - 1);
    const int i = model.roots()[pick(rng)];
    std::vector<int> support;
    for (int v = 0; v < n; ++v) {
      if (v != i) support.push_back(v);
    }
    const SimplexState x0 = sample_near_uniform(n, support, rng);
    const auto lead = boundary_derivative(model, x0, i);
    if (ck.require(lead.has_value() && lead->order == 1,
                   "positive in-neighbor forces first-order growth",
                   lead ? lead->order : -1, "i=" + std::to_string(i))) {
      double direct = 0.0;
      for (const Neighbor& a : model.in(i)) {
        direct += a.c * (1.0 - x0[a.v]) * x0[a.v];
      }
      ck.require(std::abs(lead->value - direct) <= 1e-12 * std::max(1.0, direct),
                 "first-order coefficient equals the weighted inflow",
                 std::abs(lead->value - direct), "i=" + std::to_string(i));
      const auto cp = critical_supporting_path(model, x0, i);
      ck.require(cp.has_value() && cp->length == 1 &&
                     cp->vertices.back() == i &&
                     cp->vertices.front() == model.in(i).front().v,
                 "shortest supporting path is the smallest positive in-neighbor",
                 cp ? cp->length : -1, "i=" + std::to_string(i));
      fit_check(x0, i, 1, lead->value);
    }
  }

  // Deeper layers when the graph has them: zero everything within distance
  // k-1 of the target, put mass on the fresh layer and beyond.
  {
    int best_i = -1, best_k = 0;
    for (int i = 0; i < n; ++i) {
      const SupportStructure s = support_structure(model, i);
      const int deepest =
          std::min<int>(3, static_cast<int>(s.differences.size()) - 1);
      if (deepest >= 2 && deepest > best_k &&
          n - static_cast<int>(s.layers[deepest - 1].size()) >= 2) {
        best_i = i;
        best_k = deepest;
      }
    }
    if (best_i >= 0) {
      const SupportStructure s = support_structure(model, best_i);
      const std::vector<int> support =
          complement_of(n, s.layers[best_k - 1]);
      const SimplexState x0 = sample_near_uniform(n, support, rng);
      const auto lead = boundary_derivative(model, x0, best_i);
      if (ck.require(lead.has_value() && lead->order == best_k,
                     "first mass layer sets the derivative order",
                     lead ? lead->order : -1,
                     "i=" + std::to_string(best_i) +
                         " k=" + std::to_string(best_k))) {
        const auto cp = critical_supporting_path(model, x0, best_i);
        ck.require(cp.has_value() && cp->length == best_k,
                   "critical path length equals the derivative order",
                   cp ? cp->length : -1, "i=" + std::to_string(best_i));
        if (n <= 7) {
          double oracle = 0.0;
          for (int j : s.differences[best_k]) {
            oracle += alpha_bruteforce(model, j, best_i, best_k) *
                      (1.0 - x0[j]) * x0[j];
          }
          ck.require(std::abs(lead->value - oracle) <=
                         1e-12 * std::max(1.0, oracle),
                     "layer coefficient matches path enumeration",
                     std::abs(lead->value - oracle),
                     "i=" + std::to_string(best_i));
        }
        fit_check(x0, best_i, best_k, lead->value);
      }
    }
  }

  // No supporting path: zero the whole ancestor set of a non-root.
  const std::vector<int> leaves = non_roots(model);
  if (!leaves.empty()) {
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(leaves.size()) - 1);
    const int i = leaves[pick(rng)];
    const std::vector<int> blocked = support_union(model, {i});
    const std::vector<int> support = complement_of(n, blocked);
    const SimplexState x0 = sample_supported(n, support, rng);
    const auto lead = boundary_derivative(model, x0, i);
    ck.require(!lead.has_value(),
               "zeroed ancestry yields an identically zero appraisal",
               lead ? lead->order : 0, "i=" + std::to_string(i));
    const auto cp = critical_supporting_path(model, x0, i);
    ck.require(!cp.has_value(), "no supporting path into a zeroed ancestry",
               cp ? cp->length : 0, "i=" + std::to_string(i));
    IntegratorConfig cfg;
    cfg.horizon = 50.0;
    cfg.record_every = 25;
    const Trajectory traj = integrate(model, x0, cfg);
    double worst = 0.0;
    for (const SimplexState& st : traj.states) {
      worst = std::max(worst, st[i]);
    }
    ck.require(worst <= 1e-12, "appraisal without support never grows", worst,
               "i=" + std::to_string(i));
  }
}

inline void support_oracle_case(std::mt19937_64& rng, Checker& ck) {
  const GeneratorSpec spec = sample_case_spec(rng, 3, 7);
  ck.set_spec(spec);
  const NetworkModel model = random_network(spec);
  const int n = model.n();

  const std::vector<int> oracle_roots = root_set_bruteforce(model);
  ck.require(model.roots() == oracle_roots,
             "condensation roots match the reachability oracle",
             std::abs(static_cast<double>(model.roots().size()) -
                      static_cast<double>(oracle_roots.size())),
             "");
  for (int r : model.roots()) {
    for (const Neighbor& a : model.out(r)) {
      ck.require(model.is_root(a.v), "root out-neighbors are roots", a.v,
                 "edge " + std::to_string(r) + "->" + std::to_string(a.v));
    }
  }

  for (int i = 0; i < n; ++i) {
    const SupportStructure s = support_structure(model, i);
    ck.require(s.differences[0] == std::vector<int>{i} &&
                   s.layers[0] == std::vector<int>{i},
               "layer zero is the target alone", 0.0,
               "i=" + std::to_string(i));
    std::vector<int> in_neighbors;
    for (const Neighbor& a : model.in(i)) in_neighbors.push_back(a.v);
    if (s.differences.size() > 1) {
      ck.require(s.differences[1] == in_neighbors,
                 "first layer difference is the in-neighborhood", 0.0,
                 "i=" + std::to_string(i));
    } else {
      ck.require(in_neighbors.empty(),
                 "missing first layer means no in-neighbors", 0.0,
                 "i=" + std::to_string(i));
    }
    ck.require(static_cast<int>(s.layers.size()) <= n,
               "layers stabilize within n-1 expansions",
               static_cast<double>(s.layers.size()), "i=" + std::to_string(i));

    for (std::size_t k = 1; k < s.differences.size(); ++k) {
      std::vector<int> rebuilt = s.layers[k - 1];
      rebuilt.insert(rebuilt.end(), s.differences[k].begin(),
                     s.differences[k].end());
      std::sort(rebuilt.begin(), rebuilt.end());
      ck.require(rebuilt == s.layers[k],
                 "each layer is the previous plus its difference", k,
                 "i=" + std::to_string(i));
      for (int j : s.differences[k]) {
        std::vector<int> feeders;
        for (const Neighbor& a : model.out(j)) {
          if (s.distance[a.v] >= 0 &&
              s.distance[a.v] <= static_cast<int>(k) - 1) {
            feeders.push_back(a.v);
          }
        }
        bool nonempty = !feeders.empty();
        bool contained = true;
        for (int f : feeders) {
          if (s.distance[f] != static_cast<int>(k) - 1) contained = false;
        }
        ck.require(nonempty && contained,
                   "fresh-layer vertices feed only the previous layer",
                   static_cast<double>(feeders.size()),
                   "i=" + std::to_string(i) + " j=" + std::to_string(j));
        ck.require(s.alpha[j] > 0.0, "path coefficients are positive",
                   s.alpha[j], "i=" + std::to_string(i) +
                                   " j=" + std::to_string(j));
        const double oracle =
            alpha_bruteforce(model, j, i, static_cast<int>(k));
        ck.require(std::abs(s.alpha[j] - oracle) <= 1e-12,
                   "layered recursion matches path enumeration",
                   std::abs(s.alpha[j] - oracle),
                   "i=" + std::to_string(i) + " j=" + std::to_string(j));
      }
    }
  }
}

}  // namespace detail

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "invariance", "repeller",  "convergence",
      "equilibrium", "boundary", "support_oracle"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, int count,
                             std::uint64_t seed) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(errc::parse_error, "unknown suite \"" + name + "\"");
  }
  if (count < 1) throw Error(errc::parse_error, "count must be at least 1");

  SuiteReport report;
  report.suite = name;
  report.cases = count;
  for (int case_index = 0; case_index < count; ++case_index) {
    std::mt19937_64 rng(detail::splitmix64(
        seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(case_index + 1))));
    detail::Checker ck(&report, case_index);
    try {
      if (name == "invariance") {
        detail::invariance_case(rng, ck);
      } else if (name == "repeller") {
        detail::repeller_case(rng, ck);
      } else if (name == "convergence") {
        detail::convergence_case(rng, ck);
      } else if (name == "equilibrium") {
        detail::equilibrium_case(rng, ck);
      } else if (name == "boundary") {
        detail::boundary_case(rng, ck);
      } else {
        detail::support_oracle_case(rng, ck);
      }
    } catch (const std::exception& e) {
      ck.exception(e.what());
    }
  }
  return report;
}

inline std::vector<SuiteReport> run_all_suites(int count, std::uint64_t seed) {
  std::vector<SuiteReport> reports;
  for (const std::string& name : suite_names()) {
    reports.push_back(run_suite(name, count, seed));
  }
  return reports;
}

}  // namespace appraisal
