// End-to-end acceptance gate. Each test pins one headline claim about the
// model at its stated tolerance; pools of generated networks are shared
// across tests so the whole binary stays fast.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "appraisal/dynamics.hpp"
#include "appraisal/equilibrium.hpp"
#include "appraisal/graph.hpp"
#include "appraisal/verify.hpp"

namespace {

using namespace appraisal;

RawNetwork k3_raw() {
  RawNetwork raw;
  raw.n = 3;
  raw.edges = {{0, 1, 0.5}, {0, 2, 0.5}, {1, 0, 0.5},
               {1, 2, 0.5}, {2, 0, 0.5}, {2, 1, 0.5}};
  return raw;
}

RawNetwork k3_leaf_raw() {
  RawNetwork raw = k3_raw();
  raw.n = 4;
  raw.edges.push_back({3, 0, 0.5});
  raw.edges.push_back({3, 1, 0.5});
  return raw;
}

// 5-cycle plus skip-two chords: shortest support layer for vertex 0 that can
// be silenced while deeper mass remains is at depth 2.
RawNetwork pentagon_raw() {
  RawNetwork raw;
  raw.n = 5;
  for (int i = 0; i < 5; ++i) {
    raw.edges.push_back({i, (i + 1) % 5, 0.5});
    raw.edges.push_back({i, (i + 2) % 5, 0.5});
  }
  return raw;
}

// 8-cycle plus skip-two chords: supports depth-3 constructions for vertex 0.
RawNetwork circulant8_raw() {
  RawNetwork raw;
  raw.n = 8;
  for (int i = 0; i < 8; ++i) {
    raw.edges.push_back({i, (i + 1) % 8, 0.5});
    raw.edges.push_back({i, (i + 2) % 8, 0.5});
  }
  return raw;
}

// Pool A: 100 networks spanning n in [3,12], both topologies, varied density.
const std::vector<NetworkModel>& pool_a() {
  static const std::vector<NetworkModel> nets = [] {
    std::vector<NetworkModel> v;
    for (int k = 0; k < 100; ++k) {
      GeneratorSpec spec;
      spec.n = 3 + k % 10;
      spec.seed = 1000 + k;
      if (k % 2 == 1 && spec.n >= 4) {
        spec.topology = Topology::rooted_with_leaves;
        spec.non_root_count = 1 + (k / 2) % (spec.n - 3 > 0 ? spec.n - 3 : 1);
        if (spec.non_root_count > spec.n - 3) spec.non_root_count = spec.n - 3;
      }
      const int core = spec.n - spec.non_root_count;
      if (k % 4 == 2 && core >= 5) spec.min_out_degree = 3;
      v.push_back(random_network(spec));
    }
    return v;
  }();
  return nets;
}

struct ConvergenceRun {
  int network_index = 0;
  Trajectory traj;
};

struct PoolB {
  std::vector<NetworkModel> nets;
  std::vector<EquilibriumReport> eqs;
  std::vector<ConvergenceRun> runs;  // 5 per network, horizon 500
};

const PoolB& pool_b() {
  static const PoolB pool = [] {
    PoolB p;
    for (int j = 0; j < 20; ++j) {
      GeneratorSpec spec;
      spec.seed = 2000 + j;
      if (j < 10) {
        spec.n = 3 + j;
      } else {
        spec.n = 4 + (j - 10) % 9;
        spec.topology = Topology::rooted_with_leaves;
        spec.non_root_count =
            spec.n > 4 ? 1 + (j - 10) % (spec.n - 3) : 1;
      }
      p.nets.push_back(random_network(spec));
    }
    for (int j = 0; j < 20; ++j) {
      const NetworkModel& m = p.nets[j];
      p.eqs.push_back(solve_equilibrium(m));
      std::mt19937_64 rng(3000 + j);
      IntegratorConfig cfg;
      cfg.horizon = 500.0;
      cfg.record_every = 10;
      for (int s = 0; s < 5; ++s) {
        const SimplexState x0 = s < 3 ? sample_interior(m.n(), rng)
                                      : sample_boundary(m.n(), rng);
        p.runs.push_back({j, integrate(m, x0, cfg)});
      }
    }
    return p;
  }();
  return pool;
}

double l1(const SimplexState& a, const SimplexState& b) {
  double d = 0.0;
  for (int i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

TEST(Acceptance, Criterion01_SimplexInvariance) {
  IntegratorConfig cfg;
  cfg.horizon = 200.0;
  cfg.step = 0.01;
  cfg.record_every = 2000;
  cfg.convergence_tol = 1e-300;  // no early exit: every step must be checked
  int runs = 0;
  for (std::size_t k = 0; k < pool_a().size(); ++k) {
    const NetworkModel& m = pool_a()[k];
    std::mt19937_64 rng(4000 + k);
    for (int s = 0; s < 3; ++s) {
      const SimplexState x0 = s == 2 ? sample_boundary(m.n(), rng)
                                     : sample_interior(m.n(), rng);
      const Trajectory traj = integrate(m, x0, cfg);
      ASSERT_LE(traj.max_simplex_drift, 1e-8) << "network " << k;
      ASSERT_GE(traj.min_component, -1e-8) << "network " << k;
      ++runs;
    }
  }
  EXPECT_EQ(runs, 300);
}

TEST(Acceptance, Criterion02_EquilibriumCorrectness) {
  for (std::size_t k = 0; k < pool_a().size(); ++k) {
    const NetworkModel& m = pool_a()[k];
    const EquilibriumReport rep = solve_equilibrium(m);
    ASSERT_LE(rep.residual, 1e-10) << "network " << k;
    const double cap = alpha_threshold(m.n());
    ASSERT_LT(cap, 0.5);
    for (int i = 0; i < m.n(); ++i) {
      if (m.is_root(i)) {
        ASSERT_GT(rep.x_star[i], 0.0) << "network " << k << " vertex " << i;
        ASSERT_LE(rep.x_star[i], cap + 1e-12) << "network " << k;
      } else {
        ASSERT_EQ(rep.x_star[i], 0.0) << "network " << k << " vertex " << i;
      }
    }
  }
  const EquilibriumReport k3 = solve_equilibrium(validate_network(k3_raw()));
  for (int i = 0; i < 3; ++i) ASSERT_NEAR(k3.x_star[i], 1.0 / 3.0, 1e-12);
  ASSERT_NEAR(k3.mu, 2.0 / 3.0, 1e-12);
}

TEST(Acceptance, Criterion03_ExponentialStability) {
  for (std::size_t k = 0; k < pool_a().size(); ++k) {
    const NetworkModel& m = pool_a()[k];
    const EquilibriumReport rep = solve_equilibrium(m);
    ASSERT_EQ(rep.stability.zero_eig_count, 1) << "network " << k;
    ASSERT_LT(rep.stability.max_other_real_part, -1e-10) << "network " << k;
    ASSERT_TRUE(rep.stability.stable);
    const Eigen::MatrixXd J = jacobian(m, rep.x_star.values());
    const Eigen::MatrixXd Jfd = fd_jacobian(m, rep.x_star.values(), 1e-6);
    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    ASSERT_LE((J - Jfd).cwiseAbs().maxCoeff() / scale, 1e-5) << "network " << k;
  }
}

TEST(Acceptance, Criterion04_GlobalConvergence) {
  const PoolB& p = pool_b();
  ASSERT_EQ(p.runs.size(), 100u);
  for (const ConvergenceRun& run : p.runs) {
    ASSERT_TRUE(run.traj.converged_at.has_value())
        << "network " << run.network_index;
    ASSERT_LE(*run.traj.converged_at, 500.0);
    const SimplexState& final_state = run.traj.states.back();
    ASSERT_LT(l1(final_state, p.eqs[run.network_index].x_star), 1e-6)
        << "network " << run.network_index;
  }
}

TEST(Acceptance, Criterion05_RepellerAndAbsorption) {
  const PoolB& p = pool_b();
  for (std::size_t j = 0; j < p.nets.size(); ++j) {
    const NetworkModel& m = p.nets[j];
    std::mt19937_64 rng(5000 + j);
    for (int s = 0; s < 1000; ++s) {
      const int i = s % m.n();
      const SimplexState x = sample_repeller(m, i, rng);
      ASSERT_FALSE(x.is_vertex());
      ASSERT_GE(x[i], vertex_threshold(m, i) + 1e-6);
      ASSERT_LT(vector_field(m, x)[i], 0.0)
          << "network " << j << " vertex " << i;
    }
  }
  // Absorption: every convergence run enters Q and stays there.
  for (const ConvergenceRun& run : p.runs) {
    ASSERT_TRUE(run.traj.q_entry_time.has_value())
        << "network " << run.network_index;
    const NetworkModel& m = p.nets[run.network_index];
    bool inside = false;
    for (std::size_t r = 0; r < run.traj.times.size(); ++r) {
      if (run.traj.times[r] >= *run.traj.q_entry_time) {
        inside = true;
        ASSERT_TRUE(in_Q(m, run.traj.states[r]))
            << "network " << run.network_index << " t=" << run.traj.times[r];
      }
    }
    ASSERT_TRUE(inside);
  }
}

TEST(Acceptance, Criterion06_NonRootDecayAndRootMassMonotone) {
  const PoolB& p = pool_b();
  int leaf_networks = 0;
  for (const ConvergenceRun& run : p.runs) {
    const NetworkModel& m = p.nets[run.network_index];
    // Root mass is non-decreasing along every recorded trajectory and its
    // growth rate is non-negative pointwise.
    double prev = -1.0;
    for (std::size_t r = 0; r < run.traj.states.size(); ++r) {
      const double cur = phi_r(m, run.traj.states[r]);
      ASSERT_GE(cur, prev - 1e-8);  // 1e-9 per step, 10 steps per sample
      ASSERT_GE(phi_r_rate(m, run.traj.states[r]), 0.0);
      prev = cur;
    }
    if (static_cast<int>(m.roots().size()) < m.n()) {
      ++leaf_networks;
      const SimplexState& final_state = run.traj.states.back();
      for (int i = 0; i < m.n(); ++i) {
        if (!m.is_root(i)) {
          ASSERT_LT(final_state[i], 1e-6)
              << "network " << run.network_index << " vertex " << i;
        }
      }
    }
  }
  EXPECT_EQ(leaf_networks, 50);  // 10 leaf networks x 5 starts
}

TEST(Acceptance, Criterion07_SupportCoefficientOracle) {
  std::vector<const NetworkModel*> all;
  for (const NetworkModel& m : pool_a()) all.push_back(&m);
  for (const NetworkModel& m : pool_b().nets) all.push_back(&m);
  int alpha_checked = 0;
  for (const NetworkModel* mp : all) {
    const NetworkModel& m = *mp;
    ASSERT_EQ(root_set(m.raw()), m.roots());
    ASSERT_EQ(root_set_bruteforce(m), m.roots());
    if (m.n() > 7) continue;
    for (int i = 0; i < m.n(); ++i) {
      const SupportStructure s = support_structure(m, i);
      for (int j = 0; j < m.n(); ++j) {
        if (j == i || s.distance[j] < 1) continue;
        const double ref = alpha_bruteforce(m, j, i, s.distance[j]);
        ASSERT_LE(std::abs(s.alpha[j] - ref), 1e-12)
            << "i=" << i << " j=" << j;
        ++alpha_checked;
      }
    }
  }
  EXPECT_GT(alpha_checked, 500);
}

TEST(Acceptance, Criterion08_BoundaryDerivatives) {
  const double t_fit = 1e-2;
  auto fit = [&](const NetworkModel& m, const SimplexState& x0, int target,
                 int expected_order) {
    const auto lead = boundary_derivative(m, x0, target);
    ASSERT_TRUE(lead.has_value());
    ASSERT_EQ(lead->order, expected_order);
    const auto cp = critical_supporting_path(m, x0, target);
    ASSERT_TRUE(cp.has_value());
    ASSERT_EQ(cp->length, expected_order);
    IntegratorConfig cfg;
    cfg.horizon = t_fit;
    cfg.step = 1e-3;
    cfg.record_every = 10;
    cfg.convergence_tol = 1e-300;
    const Trajectory traj = integrate(m, x0, cfg);
    double factorial = 1.0;
    for (int q = 2; q <= expected_order; ++q) factorial *= q;
    const double predicted =
        lead->value * std::pow(t_fit, expected_order) / factorial;
    const double measured = traj.states.back()[target];
    ASSERT_GT(predicted, 0.0);
    ASSERT_LE(std::abs(measured - predicted), 0.10 * predicted)
        << "order " << expected_order;
  };

  // Critical length 1: a silent vertex with loud direct in-neighbors.
  fit(validate_network(k3_raw()), SimplexState({0.0, 0.5, 0.5}), 0, 1);
  // Critical length 2: direct in-neighbors silent, mass two hops away.
  fit(validate_network(pentagon_raw()),
      SimplexState({0.0, 0.5, 0.5, 0.0, 0.0}), 0, 2);
  // Critical length 3: the first two layers around vertex 0 are silent.
  const double third = 1.0 / 3.0;
  fit(validate_network(circulant8_raw()),
      SimplexState({0.0, third, third, third, 0.0, 0.0, 0.0, 0.0}), 0, 3);

  // No supporting path at all: the coordinate stays pinned at zero.
  const NetworkModel leafy = validate_network(k3_leaf_raw());
  const SimplexState x0({0.4, 0.3, 0.3, 0.0});
  ASSERT_FALSE(boundary_derivative(leafy, x0, 3).has_value());
  ASSERT_FALSE(critical_supporting_path(leafy, x0, 3).has_value());
  IntegratorConfig cfg;
  cfg.horizon = 50.0;
  cfg.record_every = 100;
  cfg.convergence_tol = 1e-300;
  const Trajectory traj = integrate(leafy, x0, cfg);
  for (const SimplexState& s : traj.states) {
    ASSERT_LE(std::abs(s[3]), 1e-12);
  }
}

TEST(Acceptance, Criterion09_StationaryVectorAndPsi) {
  std::vector<const NetworkModel*> all;
  for (const NetworkModel& m : pool_a()) all.push_back(&m);
  for (const NetworkModel& m : pool_b().nets) all.push_back(&m);
  for (const NetworkModel* mp : all) {
    const StationaryVector sv = stationary_vector(*mp);
    for (double v : sv.v) ASSERT_LE(v, 1.0 / 3.0 + 1e-12);
    const double mu1 = mu_upper_bound(sv);
    ASSERT_GT(psi(sv, mu1), 1.0);
    double prev = -1.0;
    for (int g = 0; g < 100; ++g) {
      const double cur = psi(sv, mu1 * g / 99.0);
      ASSERT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(Acceptance, Criterion10_ScaledCoefficientRowSums) {
  std::vector<const NetworkModel*> all;
  for (const NetworkModel& m : pool_a()) all.push_back(&m);
  for (const NetworkModel& m : pool_b().nets) all.push_back(&m);
  for (const NetworkModel* mp : all) {
    const NetworkModel& m = *mp;
    const EquilibriumReport rep = solve_equilibrium(m);
    const auto scaled = scaled_coefficients(m, rep.x_star);
    std::vector<double> sums(m.n(), 0.0);
    for (const auto& [edge, w] : scaled) sums[edge.second] += w;
    for (int i : m.roots()) ASSERT_NEAR(sums[i], 1.0, 1e-10);
  }
}

TEST(Acceptance, Criterion11_ConsensusCascade) {
  std::vector<NetworkModel> nets;
  nets.push_back(validate_network(k3_raw()));
  for (const NetworkModel& m : pool_b().nets) {
    if (static_cast<int>(m.roots().size()) == m.n()) nets.push_back(m);
  }
  ASSERT_EQ(nets.size(), 11u);
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const NetworkModel& m = nets[k];
    std::mt19937_64 rng(6000 + k);
    const SimplexState x0 = sample_interior(m.n(), rng);
    IntegratorConfig cfg;
    cfg.horizon = 200.0;
    cfg.record_every = 1;
    cfg.convergence_tol = 1e-300;
    const Trajectory traj = integrate(m, x0, cfg);
    std::vector<double> z0(m.n());
    for (int i = 0; i < m.n(); ++i) z0[i] = static_cast<double>(i) / (m.n() - 1);
    const ConsensusTrajectory ct = simulate_consensus(m, traj, z0);
    const std::vector<double>& last = ct.opinions.back();
    const double spread = *std::max_element(last.begin(), last.end()) -
                          *std::min_element(last.begin(), last.end());
    ASSERT_LT(spread, 1e-6) << "network " << k << " spread " << spread;
  }
}

}  // namespace
