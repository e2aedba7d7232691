#include "appraisal/equilibrium.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "appraisal/graph.hpp"
#include "appraisal/verify.hpp"
#include "oracles.hpp"

namespace {

using namespace appraisal;

RawNetwork k3() {
  RawNetwork raw;
  raw.n = 3;
  raw.edges = {{0, 1, 0.5}, {0, 2, 0.5}, {1, 0, 0.5},
               {1, 2, 0.5}, {2, 0, 0.5}, {2, 1, 0.5}};
  return raw;
}

RawNetwork k3_leaf() {
  RawNetwork raw = k3();
  raw.n = 4;
  raw.edges.push_back({3, 0, 0.5});
  raw.edges.push_back({3, 1, 0.5});
  return raw;
}

NetworkModel seeded_network(int n, std::uint64_t seed, int leaves = 0) {
  GeneratorSpec spec;
  spec.n = n;
  spec.topology = leaves > 0 ? Topology::rooted_with_leaves
                             : Topology::strongly_connected;
  spec.non_root_count = leaves;
  spec.seed = seed;
  return random_network(spec);
}

TEST(StationaryVector, TriangleIsUniform) {
  const StationaryVector sv = stationary_vector(validate_network(k3()));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sv.v[i], 1.0 / 3.0, 1e-15);
  EXPECT_LE(sv.residual, 1e-15);
}

TEST(StationaryVector, LeafGetsExactZero) {
  const StationaryVector sv = stationary_vector(validate_network(k3_leaf()));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sv.v[i], 1.0 / 3.0, 1e-14);
  EXPECT_EQ(sv.v[3], 0.0);
}

TEST(StationaryVector, MatchesEigendecompositionOracle) {
  for (std::uint64_t seed : {3u, 14u, 159u, 2653u}) {
    const NetworkModel m = seeded_network(7, seed, seed % 2 ? 2 : 0);
    const StationaryVector sv = stationary_vector(m);
    const std::vector<double> ref = oracles::stationary_eig(m);
    for (int i = 0; i < m.n(); ++i) EXPECT_NEAR(sv.v[i], ref[i], 1e-9);
    double sum = 0.0;
    for (double v : sv.v) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    for (int i : m.roots()) EXPECT_GT(sv.v[i], 0.0);
  }
}

TEST(StationaryVector, EntriesNeverExceedOneThird) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkModel m = seeded_network(3 + static_cast<int>(seed % 10), seed);
    for (double v : stationary_vector(m).v) EXPECT_LE(v, 1.0 / 3.0 + 1e-12);
  }
}

TEST(Psi, TriangleClosedFormPoints) {
  const StationaryVector sv = stationary_vector(validate_network(k3()));
  EXPECT_DOUBLE_EQ(mu_upper_bound(sv), 0.75);
  EXPECT_DOUBLE_EQ(psi(sv, 0.0), 0.0);
  EXPECT_NEAR(psi(sv, 2.0 / 3.0), 1.0, 1e-15);  // each term is exactly 1/3
  EXPECT_NEAR(psi(sv, 0.75), 1.5, 1e-7);        // sqrt flattens near mu_1
}

TEST(Psi, StrictlyIncreasingAndBounded) {
  const NetworkModel m = seeded_network(9, 99);
  const StationaryVector sv = stationary_vector(m);
  const double mu1 = mu_upper_bound(sv);
  EXPECT_GT(psi(sv, mu1), 1.0);
  double prev = -1.0;
  for (int g = 0; g <= 100; ++g) {
    const double cur = psi(sv, mu1 * g / 100.0);
    EXPECT_GT(cur, prev);
    prev = cur;
  }
  EXPECT_THROW(psi(sv, -1e-9), Error);
  EXPECT_THROW(psi(sv, mu1 * 1.01), Error);
}

TEST(SolveEquilibrium, TriangleExactThirds) {
  const EquilibriumReport rep = solve_equilibrium(validate_network(k3()));
  EXPECT_NEAR(rep.mu, 2.0 / 3.0, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(rep.x_star[i], 1.0 / 3.0, 1e-12);
  EXPECT_LE(rep.residual, 1e-12);
  EXPECT_EQ(rep.stability.zero_eig_count, 1);
  EXPECT_NEAR(rep.stability.max_other_real_part, -0.5, 1e-9);
  EXPECT_TRUE(rep.stability.stable);
}

TEST(SolveEquilibrium, LeafNetworkSpectrumSplits) {
  const EquilibriumReport rep = solve_equilibrium(validate_network(k3_leaf()));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(rep.x_star[i], 1.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.x_star[3], 0.0);
  // Root block contributes {0, -1/2, -1/2}; the leaf row is decoupled at -1.
  ASSERT_EQ(rep.stability.spectrum.size(), 4u);
  EXPECT_EQ(rep.stability.zero_eig_count, 1);
  EXPECT_NEAR(rep.stability.max_other_real_part, -0.5, 1e-9);
  double leaf_eig = 0.0;
  for (const auto& ev : rep.stability.spectrum) {
    leaf_eig = std::min(leaf_eig, ev.real());
  }
  EXPECT_NEAR(leaf_eig, -1.0, 1e-9);
  EXPECT_TRUE(rep.stability.stable);
}

TEST(SolveEquilibrium, ResidualAndRangeOnRandomNetworks) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const int n = 3 + static_cast<int>(seed % 10);
    const NetworkModel m = seeded_network(n, seed, seed % 3 == 0 ? 1 : 0);
    const EquilibriumReport rep = solve_equilibrium(m);
    EXPECT_LE(rep.residual, 1e-10);
    const double bound = alpha_threshold(m.n());
    for (int i = 0; i < m.n(); ++i) {
      if (m.is_root(i)) {
        EXPECT_GT(rep.x_star[i], 0.0);
        EXPECT_LE(rep.x_star[i], bound + 1e-12);
      } else {
        EXPECT_EQ(rep.x_star[i], 0.0);
      }
    }
    EXPECT_TRUE(rep.stability.stable);
  }
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const NetworkModel m = seeded_network(8, 321, 2);
  for (int rep = 0; rep < 4; ++rep) {
    const std::vector<double> x = sample_interior(m.n(), rng).values();
    const Eigen::MatrixXd J = jacobian(m, x);
    const Eigen::MatrixXd Jfd = fd_jacobian(m, x, 1e-6);
    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    EXPECT_LE((J - Jfd).cwiseAbs().maxCoeff() / scale, 1e-5);
  }
}

TEST(ScaledCoefficients, TriangleKeepsOriginalWeights) {
  const NetworkModel m = validate_network(k3());
  const EquilibriumReport rep = solve_equilibrium(m);
  const auto scaled = scaled_coefficients(m, rep.x_star);
  ASSERT_EQ(scaled.size(), 6u);
  for (const auto& [edge, w] : scaled) EXPECT_NEAR(w, 0.5, 1e-12);
}

TEST(ScaledCoefficients, RowSumsAreOneOnRootSubgraph) {
  const NetworkModel m = seeded_network(9, 777, 3);
  const EquilibriumReport rep = solve_equilibrium(m);
  const auto scaled = scaled_coefficients(m, rep.x_star);
  std::vector<double> sums(m.n(), 0.0);
  for (const auto& [edge, w] : scaled) {
    EXPECT_TRUE(m.is_root(edge.first));
    EXPECT_TRUE(m.is_root(edge.second));
    sums[edge.second] += w;
  }
  for (int i : m.roots()) EXPECT_NEAR(sums[i], 1.0, 1e-10);
}

TEST(ScaledCoefficients, RejectsNonEquilibrium) {
  const NetworkModel m = seeded_network(5, 4242);
  try {
    scaled_coefficients(m, SimplexState::uniform(5));
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::not_an_equilibrium);
  }
}

// Theorem check: on small graphs the only equilibria are the n corners of the
// simplex plus the single interior-of-root-face point the solver returns.
TEST(EquilibriumCount, ExactlyNPlusOneOnSmallGraphs) {
  std::mt19937_64 rng(31337);
  std::vector<NetworkModel> models;
  models.push_back(validate_network(k3()));
  models.push_back(validate_network(k3_leaf()));
  models.push_back(seeded_network(4, 8));
  models.push_back(seeded_network(5, 9));
  models.push_back(seeded_network(5, 10, 1));
  for (const NetworkModel& m : models) {
    const auto found = oracles::newton_equilibria(m, 400, rng);
    EXPECT_EQ(found.size(), static_cast<std::size_t>(m.n()) + 1) << "n=" << m.n();
    const EquilibriumReport rep = solve_equilibrium(m);
    bool solver_point_found = false;
    int vertex_count = 0;
    for (const auto& x : found) {
      double to_solver = 0.0;
      for (int i = 0; i < m.n(); ++i) {
        to_solver = std::max(to_solver, std::abs(x[i] - rep.x_star[i]));
      }
      if (to_solver < 1e-6) solver_point_found = true;
      for (int i = 0; i < m.n(); ++i) {
        if (std::abs(x[i] - 1.0) < 1e-6) ++vertex_count;
      }
    }
    EXPECT_TRUE(solver_point_found);
    EXPECT_EQ(vertex_count, m.n());
  }
}

}  // namespace
