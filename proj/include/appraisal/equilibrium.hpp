#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "appraisal/dynamics.hpp"
#include "appraisal/errors.hpp"
#include "appraisal/graph.hpp"

namespace appraisal {

struct StationaryVector {
  std::vector<double> v;
  double residual = 0.0;  // max |(C^T v)_i| after clamping
};

// Left null vector of C, normalized to sum 1. C has zero column sums under
// the transpose view used here, so replacing any single equation of
// C^T v = 0 with the normalization row leaves a nonsingular system; the last
// row is replaced by convention.
inline StationaryVector stationary_vector(const NetworkModel& model) {
  const int n = model.n();
  Eigen::MatrixXd C = c_matrix(model);
  Eigen::MatrixXd A = C.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd v = lu.solve(b);
  const double solve_residual = (A * v - b).cwiseAbs().maxCoeff();
  if (!v.allFinite() || solve_residual > 1e-9) {
    throw Error(errc::singular_system,
                "left null-vector solve failed (residual " +
                    std::to_string(solve_residual) +
                    "); the coefficient matrix is malformed");
  }

  StationaryVector sv;
  sv.v.resize(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double vi = v(i);
    if (std::abs(vi) < 1e-13) vi = 0.0;
    sv.v[i] = vi;
    sum += vi;
  }
  for (int i = 0; i < n; ++i) sv.v[i] /= sum;

  for (int i = 0; i < n; ++i) {
    if (model.is_root(i) && !(sv.v[i] > 0.0)) {
      throw Error(errc::sign_pattern_violation,
                  "stationary vector entry " + std::to_string(i) +
                      " should be positive on a root, got " +
                      std::to_string(sv.v[i]));
    }
    if (!model.is_root(i) && sv.v[i] != 0.0) {
      throw Error(errc::sign_pattern_violation,
                  "stationary vector entry " + std::to_string(i) +
                      " should vanish off the root set, got " +
                      std::to_string(sv.v[i]));
    }
    if (sv.v[i] > 1.0 / 3.0 + 1e-12) {
      throw Error(errc::sign_pattern_violation,
                  "stationary vector entry " + std::to_string(i) + " = " +
                      std::to_string(sv.v[i]) + " exceeds the 1/3 bound");
    }
  }

  Eigen::Map<const Eigen::VectorXd> vm(sv.v.data(), n);
  sv.residual = (C.transpose() * vm).cwiseAbs().maxCoeff();
  return sv;
}

inline double mu_upper_bound(const StationaryVector& sv) {
  return 1.0 / (4.0 * *std::max_element(sv.v.begin(), sv.v.end()));
}

// Total equilibrium mass as a function of the multiplier:
//   psi(mu) = sum over roots of (1 - sqrt(1 - 4 mu v_i)) / 2.
// Strictly increasing on [0, mu1]; the argument of the root is clamped at 0
// when round-off pushes it within 1e-15 below zero at mu = mu1.
inline double psi(const StationaryVector& sv, double mu) {
  const double mu1 = mu_upper_bound(sv);
  if (!(mu >= 0.0) || mu > mu1 * (1.0 + 1e-12)) {
    throw Error(errc::mu_out_of_range,
                "mu = " + std::to_string(mu) + " outside [0, " +
                    std::to_string(mu1) + "]");
  }
  double total = 0.0;
  for (double vi : sv.v) {
    if (vi == 0.0) continue;
    double arg = 1.0 - 4.0 * mu * vi;
    if (arg < 0.0 && arg >= -1e-15) arg = 0.0;
    total += (1.0 - std::sqrt(arg)) / 2.0;
  }
  return total;
}

struct StabilityReport {
  std::vector<std::complex<double>> spectrum;  // sorted by descending real part
  int zero_eig_count = 0;
  double max_other_real_part = 0.0;
  bool stable = false;
};

struct EquilibriumReport {
  SimplexState x_star;
  double mu = 0.0;
  double residual = 0.0;  // field residual at x_star, max norm
  StabilityReport stability;
};

// Linearization of the field: J = C^T (I - 2X), entries J_ij = C_ji (1 - 2 x_j).
inline Eigen::MatrixXd jacobian(const NetworkModel& model,
                                const std::vector<double>& x) {
  detail::check_dimension(model, x.size());
  const int n = model.n();
  Eigen::MatrixXd C = c_matrix(model);
  Eigen::MatrixXd J(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) J(i, j) = C(j, i) * (1.0 - 2.0 * x[j]);
  }
  return J;
}

inline StabilityReport stability_report(const NetworkModel& model,
                                        const SimplexState& x_star) {
  Eigen::MatrixXd J = jacobian(model, x_star.values());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(J);
  if (solver.info() != Eigen::Success) {
    throw Error(errc::eigen_failure, "eigendecomposition did not converge");
  }
  StabilityReport rep;
  const auto& ev = solver.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) rep.spectrum.push_back(ev(i));
  std::sort(rep.spectrum.begin(), rep.spectrum.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
  double max_other = -std::numeric_limits<double>::infinity();
  for (const auto& lambda : rep.spectrum) {
    if (std::abs(lambda) < 1e-8) {
      ++rep.zero_eig_count;
    } else {
      max_other = std::max(max_other, lambda.real());
    }
  }
  rep.max_other_real_part = max_other;
  rep.stable = (rep.zero_eig_count == 1) && (max_other < -1e-10);
  return rep;
}

// The unique equilibrium away from the simplex vertices. The multiplier mu
// solves psi(mu) = 1 by bisection on [0, mu1]; bisection is unconditionally
// safe here and Newton is not, since psi' blows up at mu1.
inline EquilibriumReport solve_equilibrium(const NetworkModel& model) {
  const StationaryVector sv = stationary_vector(model);
  const double mu1 = mu_upper_bound(sv);
  if (!(psi(sv, mu1) > 1.0)) {
    throw Error(errc::bisection_failed,
                "psi(mu1) <= 1; the multiplier equation has no root in "
                "(0, mu1], which violates the admissibility guarantees");
  }
  double lo = 0.0, hi = mu1;
  for (int iter = 0; iter < 200 && (hi - lo) > 1e-14 * mu1; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (psi(sv, mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mu = 0.5 * (lo + hi);

  const int n = model.n();
  std::vector<double> x(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (sv.v[i] == 0.0) continue;
    double arg = 1.0 - 4.0 * mu * sv.v[i];
    if (arg < 0.0 && arg >= -1e-15) arg = 0.0;
    x[i] = (1.0 - std::sqrt(arg)) / 2.0;
  }

  EquilibriumReport rep{SimplexState(std::move(x)), mu, 0.0, {}};
  const std::vector<double> f = vector_field(model, rep.x_star.values());
  for (double fi : f) rep.residual = std::max(rep.residual, std::abs(fi));
  rep.stability = stability_report(model, rep.x_star);
  return rep;
}

// Rebalanced weights on the root subgraph. For an edge j -> i between roots,
//   c~_ji = c_ji (1 - x*_j) x*_j / ((1 - x*_i) x*_i),
// keyed by (j, i). At the equilibrium the weights into each root sum to 1.
inline std::map<std::pair<int, int>, double> scaled_coefficients(
    const NetworkModel& model, const SimplexState& x_star) {
  detail::check_dimension(model, x_star.values().size());
  for (int r : model.roots()) {
    if (!(x_star[r] > 0.0) || !(x_star[r] < 1.0)) {
      throw Error(errc::not_an_equilibrium,
                  "x_star[" + std::to_string(r) +
                      "] is degenerate on a root; scaled coefficients are "
                      "undefined");
    }
  }
  std::map<std::pair<int, int>, double> scaled;
  for (int i : model.roots()) {
    const double qi = (1.0 - x_star[i]) * x_star[i];
    double row_sum = 0.0;
    for (const Neighbor& a : model.in(i)) {
      if (!model.is_root(a.v)) continue;
      const double qj = (1.0 - x_star[a.v]) * x_star[a.v];
      const double c = a.c * qj / qi;
      scaled[{a.v, i}] = c;
      row_sum += c;
    }
    if (std::abs(row_sum - 1.0) > 1e-10) {
      throw Error(errc::not_an_equilibrium,
                  "scaled weights into root " + std::to_string(i) +
                      " sum to " + std::to_string(row_sum) +
                      "; the input is not the solver's equilibrium");
    }
  }
  return scaled;
}

}  // namespace appraisal
