#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "appraisal/errors.hpp"
#include "appraisal/graph.hpp"

namespace appraisal {

// A point in the unit simplex: componentwise in [0,1], sum 1 within 1e-9.
class SimplexState {
 public:
  explicit SimplexState(std::vector<double> x) : x_(std::move(x)) {
    if (x_.empty()) {
      throw Error(errc::not_in_simplex, "state must be nonempty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!std::isfinite(x_[i])) {
        throw Error(errc::non_finite_state,
                    "state component " + std::to_string(i) + " is not finite");
      }
      if (x_[i] < -1e-12 || x_[i] > 1.0 + 1e-12) {
        throw Error(errc::not_in_simplex,
                    "state component " + std::to_string(i) + " = " +
                        std::to_string(x_[i]) + " outside [0, 1]");
      }
      sum += x_[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(errc::not_in_simplex,
                  "state sums to " + std::to_string(sum) + ", expected 1");
    }
  }

  static SimplexState uniform(int n) {
    return SimplexState(std::vector<double>(n, 1.0 / n));
  }

  static SimplexState vertex(int n, int i) {
    std::vector<double> x(n, 0.0);
    x.at(i) = 1.0;
    return SimplexState(std::move(x));
  }

  int size() const { return static_cast<int>(x_.size()); }
  double operator[](int i) const { return x_[i]; }
  const std::vector<double>& values() const { return x_; }

  bool is_vertex(double tol = 1e-12) const {
    for (double v : x_) {
      if (v >= 1.0 - tol) return true;
    }
    return false;
  }

 private:
  std::vector<double> x_;
};

namespace detail {

inline void check_dimension(const NetworkModel& model, std::size_t len) {
  if (static_cast<int>(len) != model.n()) {
    throw Error(errc::dimension_mismatch,
                "state has length " + std::to_string(len) + ", model has " +
                    std::to_string(model.n()) + " vertices");
  }
}

}  // namespace detail

// Right-hand side of the appraisal dynamics:
//   f_i(x) = -(1 - x_i) x_i + sum over in-neighbors j of c_ji (1 - x_j) x_j.
// Accepts any finite vector so finite-difference probes can leave the simplex.
inline std::vector<double> vector_field(const NetworkModel& model,
                                        const std::vector<double>& x) {
  detail::check_dimension(model, x.size());
  const int n = model.n();
  std::vector<double> g(n), f(n);
  for (int i = 0; i < n; ++i) g[i] = (1.0 - x[i]) * x[i];
  for (int i = 0; i < n; ++i) {
    double acc = -g[i];
    for (const Neighbor& a : model.in(i)) acc += a.c * g[a.v];
    f[i] = acc;
  }
  return f;
}

inline std::vector<double> vector_field(const NetworkModel& model,
                                        const SimplexState& x) {
  return vector_field(model, x.values());
}

// The coefficient matrix: C_ij = c_ij for edges i->j, diagonal minus the
// row's off-diagonal sum, so rows sum to zero exactly in floating point.
inline Eigen::MatrixXd c_matrix(const NetworkModel& model) {
  const int n = model.n();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const Neighbor& a : model.out(i)) {
      C(i, a.v) = a.c;
      sum += a.c;
    }
    C(i, i) = -sum;
  }
  return C;
}

// Same field computed as C^T (I - X) x; cross-checks the C construction.
inline std::vector<double> vector_field_matrix(const NetworkModel& model,
                                               const std::vector<double>& x) {
  detail::check_dimension(model, x.size());
  const int n = model.n();
  Eigen::MatrixXd C = c_matrix(model);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = (1.0 - x[i]) * x[i];
  Eigen::VectorXd f = C.transpose() * y;
  return std::vector<double>(f.data(), f.data() + n);
}

struct IntegratorConfig {
  double horizon = 200.0;
  double step = 0.01;
  int record_every = 1;
  double convergence_tol = 1e-10;
  double drift_tol = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SimplexState> states;
  std::optional<double> q_entry_time;
  std::optional<double> converged_at;
  double max_simplex_drift = 0.0;  // worst |sum - 1| seen before rescaling
  double min_component = 0.0;      // most negative component seen before clamping
};

inline double alpha_threshold(int n) {
  if (n < 3) {
    throw Error(errc::n_too_small,
                "threshold needs n >= 3, got " + std::to_string(n));
  }
  return 0.5 - 0.25 / (2.0 * n - 3.0);
}

inline double vertex_threshold(const NetworkModel& model, int i) {
  detail::check_vertex(model.n(), i, "vertex");
  const int d = model.in_degree(i);
  if (d == 0) return 0.0;  // f_i < 0 on all of (0,1); no threshold needed
  return 0.5 - 0.25 / (2.0 * d - 1.0);
}

inline bool in_Q(const NetworkModel& model, const SimplexState& x) {
  detail::check_dimension(model, x.values().size());
  const double a = alpha_threshold(model.n());
  for (int i = 0; i < model.n(); ++i) {
    if (x[i] > a) return false;
  }
  return true;
}

inline bool in_repeller(const NetworkModel& model, const SimplexState& x,
                        int i, double eps) {
  detail::check_dimension(model, x.values().size());
  detail::check_vertex(model.n(), i, "vertex");
  return x[i] >= eps;
}

inline double phi_r(const NetworkModel& model, const SimplexState& x) {
  detail::check_dimension(model, x.values().size());
  double sum = 0.0;
  for (int r : model.roots()) sum += x[r];
  return sum;
}

// Instantaneous growth of the root mass: the flow across edges from the
// first non-root layer into the root set. Non-negative on the simplex.
inline double phi_r_rate(const NetworkModel& model, const SimplexState& x) {
  detail::check_dimension(model, x.values().size());
  double rate = 0.0;
  for (int i = 0; i < model.n(); ++i) {
    if (model.is_root(i)) continue;
    for (const Neighbor& a : model.out(i)) {
      if (model.is_root(a.v)) rate += a.c * (1.0 - x[i]) * x[i];
    }
  }
  return rate;
}

// Classical fixed-step 4th-order integration. After each step, components in
// [-1e-10, 0) are clamped to 0 and the vector rescaled to sum 1; both
// corrections are recorded before being applied. Stops early once the field
// residual drops below convergence_tol.
inline Trajectory integrate(const NetworkModel& model, const SimplexState& x0,
                            const IntegratorConfig& cfg) {
  detail::check_dimension(model, x0.values().size());
  if (!(cfg.step > 0.0) || cfg.step > 0.1) {
    throw std::invalid_argument("step must be in (0, 0.1]");
  }
  if (!(cfg.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (cfg.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (!(cfg.convergence_tol > 0.0) || !(cfg.drift_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }

  const int n = model.n();
  const double h = cfg.step;
  const long long nsteps =
      static_cast<long long>(std::ceil(cfg.horizon / h - 1e-9));

  Trajectory traj;
  std::vector<double> x = x0.values();
  traj.min_component = *std::min_element(x.begin(), x.end());

  auto record = [&](double t, const std::vector<double>& state) {
    traj.times.push_back(t);
    traj.states.emplace_back(state);
  };
  record(0.0, x);

  std::vector<double> k1, k2, k3, k4, tmp(n);
  auto stage = [&](const std::vector<double>& base,
                   const std::vector<double>& k, double factor) {
    for (int i = 0; i < n; ++i) tmp[i] = base[i] + factor * k[i];
    return vector_field(model, tmp);
  };
  auto residual = [](const std::vector<double>& f) {
    double r = 0.0;
    for (double v : f) r = std::max(r, std::abs(v));
    return r;
  };

  for (long long m = 0; m < nsteps; ++m) {
    const double t = m * h;
    k1 = vector_field(model, x);
    if (residual(k1) < cfg.convergence_tol) {
      traj.converged_at = t;
      if (traj.times.back() != t) record(t, x);
      break;
    }
    k2 = stage(x, k1, h / 2.0);
    k3 = stage(x, k2, h / 2.0);
    k4 = stage(x, k3, h);

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(x[i])) {
        throw Error(errc::non_finite_state,
                    "non-finite state at t = " + std::to_string(t + h));
      }
      traj.min_component = std::min(traj.min_component, x[i]);
      sum += x[i];
    }
    const double drift = std::abs(sum - 1.0);
    traj.max_simplex_drift = std::max(traj.max_simplex_drift, drift);
    if (drift > cfg.drift_tol) {
      throw Error(errc::drift_exceeded,
                  "simplex drift " + std::to_string(drift) + " at t = " +
                      std::to_string(t + h) + " exceeds tolerance");
    }
    double corrected = 0.0;
    for (int i = 0; i < n; ++i) {
      if (x[i] < 0.0 && x[i] >= -1e-10) x[i] = 0.0;
      corrected += x[i];
    }
    for (int i = 0; i < n; ++i) x[i] /= corrected;

    const double t_next = (m + 1) * h;
    if ((m + 1) % cfg.record_every == 0 || m + 1 == nsteps) {
      record(t_next, x);
    }
    if (m + 1 == nsteps) {
      if (residual(vector_field(model, x)) < cfg.convergence_tol) {
        traj.converged_at = t_next;
      }
    }
  }

  // First recorded time from which the trajectory stays inside Q.
  const double a = alpha_threshold(n);
  auto below_cap = [&](const SimplexState& s) {
    for (int i = 0; i < n; ++i) {
      if (s[i] > a) return false;
    }
    return true;
  };
  std::optional<std::size_t> entry;
  for (std::size_t idx = traj.states.size(); idx-- > 0;) {
    if (!below_cap(traj.states[idx])) break;
    entry = idx;
  }
  if (entry) traj.q_entry_time = traj.times[*entry];
  return traj;
}

struct ConsensusTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> opinions;
};

// Opinion co-process driven by a recorded appraisal trajectory:
//   dz_i/dt = (1 - x_i(t)) (-z_i + sum over out-neighbors j of c_ij z_j)
// with x(t) interpolated linearly between recorded samples. The appraisal
// flow feeds the opinions, never the reverse.
inline ConsensusTrajectory simulate_consensus(
    const NetworkModel& model, const Trajectory& appraisal_traj,
    const std::vector<double>& z0,
    std::optional<double> horizon = std::nullopt) {
  detail::check_dimension(model, z0.size());
  for (double v : z0) {
    if (!std::isfinite(v)) {
      throw Error(errc::non_finite_state, "initial opinion is not finite");
    }
  }
  if (appraisal_traj.times.empty()) {
    throw Error(errc::horizon_mismatch, "appraisal trajectory is empty");
  }
  const double t_end = appraisal_traj.times.back();
  const double t_stop = horizon.value_or(t_end);
  if (t_stop > t_end + 1e-12) {
    throw Error(errc::horizon_mismatch,
                "requested horizon " + std::to_string(t_stop) +
                    " exceeds appraisal trajectory end " +
                    std::to_string(t_end));
  }

  const int n = model.n();
  auto x_at = [&](std::size_t seg, double t) {
    const double t0 = appraisal_traj.times[seg];
    const double t1 = appraisal_traj.times[seg + 1];
    const double w = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    const auto& a = appraisal_traj.states[seg].values();
    const auto& b = appraisal_traj.states[seg + 1].values();
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = (1.0 - w) * a[i] + w * b[i];
    return x;
  };
  auto field = [&](const std::vector<double>& x, const std::vector<double>& z) {
    std::vector<double> dz(n);
    for (int i = 0; i < n; ++i) {
      double acc = -z[i];
      for (const Neighbor& a : model.out(i)) acc += a.c * z[a.v];
      dz[i] = (1.0 - x[i]) * acc;
    }
    return dz;
  };

  ConsensusTrajectory out;
  std::vector<double> z = z0;
  out.times.push_back(appraisal_traj.times.front());
  out.opinions.push_back(z);
  for (std::size_t seg = 0; seg + 1 < appraisal_traj.times.size(); ++seg) {
    const double t0 = appraisal_traj.times[seg];
    const double t1 = std::min(appraisal_traj.times[seg + 1], t_stop);
    if (t1 <= t0) break;
    const double h = t1 - t0;
    const auto xa = x_at(seg, t0);
    const auto xm = x_at(seg, t0 + h / 2.0);
    const auto xb = x_at(seg, t1);
    std::vector<double> k1 = field(xa, z), s(n);
    for (int i = 0; i < n; ++i) s[i] = z[i] + h / 2.0 * k1[i];
    std::vector<double> k2 = field(xm, s);
    for (int i = 0; i < n; ++i) s[i] = z[i] + h / 2.0 * k2[i];
    std::vector<double> k3 = field(xm, s);
    for (int i = 0; i < n; ++i) s[i] = z[i] + h * k3[i];
    std::vector<double> k4 = field(xb, s);
    for (int i = 0; i < n; ++i) {
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(z[i])) {
        throw Error(errc::non_finite_state,
                    "non-finite opinion at t = " + std::to_string(t1));
      }
    }
    out.times.push_back(t1);
    out.opinions.push_back(z);
    if (t1 >= t_stop) break;
  }
  return out;
}

struct LeadingDerivative {
  int order = 0;    // index of the first non-vanishing derivative of x_i at 0
  double value = 0.0;
};

// First non-vanishing time derivative of x_i at t = 0 for a boundary state
// with x_i = 0. Equals the layer sum of path coefficients against (1-x)x
// over the shallowest layer holding positive mass; absent when no vertex
// with positive appraisal has a path into i.
inline std::optional<LeadingDerivative> boundary_derivative(
    const NetworkModel& model, const SimplexState& x, int i,
    double zero_tol = 1e-12) {
  detail::check_dimension(model, x.values().size());
  detail::check_vertex(model.n(), i, "target vertex");
  if (x.is_vertex()) {
    throw Error(errc::vertex_state,
                "state is a simplex vertex; boundary analysis needs an "
                "interior direction");
  }
  if (x[i] > zero_tol) {
    throw Error(errc::target_not_zero,
                "x[" + std::to_string(i) + "] = " + std::to_string(x[i]) +
                    " is not zero");
  }
  const SupportStructure s = support_structure(model, i);
  for (std::size_t k = 1; k < s.differences.size(); ++k) {
    bool positive = false;
    for (int j : s.differences[k]) {
      if (x[j] > zero_tol) {
        positive = true;
        break;
      }
    }
    if (!positive) continue;
    double value = 0.0;
    for (int j : s.differences[k]) value += s.alpha[j] * (1.0 - x[j]) * x[j];
    return LeadingDerivative{static_cast<int>(k), value};
  }
  return std::nullopt;
}

inline std::optional<CriticalPath> critical_supporting_path(
    const NetworkModel& model, const SimplexState& x, int i,
    double zero_tol = 1e-12) {
  return critical_supporting_path(model, x.values(), i, zero_tol);
}

}  // namespace appraisal
