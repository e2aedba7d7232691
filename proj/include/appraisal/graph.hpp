#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "appraisal/errors.hpp"

namespace appraisal {

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

struct RawNetwork {
  int n = 0;
  std::vector<Edge> edges;
};

// Directed neighbor plus the weight of the underlying edge. In the
// out-adjacency of i the weight is c_ij; in the in-adjacency it is c_ji.
struct Neighbor {
  int v = 0;
  double c = 0.0;
};

namespace detail {

inline void check_vertex(int n, int i, const char* what) {
  if (i < 0 || i >= n) {
    throw Error(errc::index_out_of_range,
                std::string(what) + " index " + std::to_string(i) +
                    " out of range [0, " + std::to_string(n) + ")");
  }
}

// Iterative Tarjan. Returns per-vertex component ids; component count goes
// to *count. Ids are assigned in reverse topological order of the
// condensation, but callers should not rely on that.
inline std::vector<int> tarjan_components(int n,
                                          const std::vector<std::vector<int>>& adj,
                                          int* count) {
  std::vector<int> order(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  stack.reserve(n);
  struct Frame {
    int v;
    std::size_t next;
  };
  std::vector<Frame> call;
  int clock = 0;
  int ncomp = 0;
  for (int s = 0; s < n; ++s) {
    if (order[s] != -1) continue;
    order[s] = low[s] = clock++;
    stack.push_back(s);
    on_stack[s] = 1;
    call.push_back({s, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      int v = f.v;
      if (f.next < adj[v].size()) {
        int w = adj[v][f.next++];
        if (order[w] == -1) {
          order[w] = low[w] = clock++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], order[w]);
        }
      } else {
        if (low[v] == order[v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
        call.pop_back();
        if (!call.empty()) {
          low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
      }
    }
  }
  *count = ncomp;
  return comp;
}

// Vertices of the unique sink component of the condensation, sorted.
// Throws NotRooted when the sink is not unique.
inline std::vector<int> sink_component(int n,
                                       const std::vector<std::vector<int>>& adj) {
  int ncomp = 0;
  std::vector<int> comp = tarjan_components(n, adj, &ncomp);
  std::vector<char> has_out(ncomp, 0);
  for (int u = 0; u < n; ++u) {
    for (int w : adj[u]) {
      if (comp[u] != comp[w]) has_out[comp[u]] = 1;
    }
  }
  int sink = -1;
  int sinks = 0;
  for (int c = 0; c < ncomp; ++c) {
    if (!has_out[c]) {
      sink = c;
      ++sinks;
    }
  }
  if (sinks != 1) {
    throw Error(errc::not_rooted,
                "graph is not rooted: condensation has " +
                    std::to_string(sinks) + " sink components");
  }
  std::vector<int> roots;
  for (int v = 0; v < n; ++v) {
    if (comp[v] == sink) roots.push_back(v);
  }
  return roots;
}

}  // namespace detail

// Roots of an arbitrary directed graph: the vertices reachable from every
// vertex. Works on unvalidated input; only indices are checked.
inline std::vector<int> root_set(const RawNetwork& raw) {
  if (raw.n < 1) {
    throw Error(errc::index_out_of_range, "graph must have at least 1 vertex");
  }
  std::vector<std::vector<int>> adj(raw.n);
  for (const Edge& e : raw.edges) {
    detail::check_vertex(raw.n, e.src, "edge source");
    detail::check_vertex(raw.n, e.dst, "edge destination");
    adj[e.src].push_back(e.dst);
  }
  return detail::sink_component(raw.n, adj);
}

class NetworkModel {
 public:
  int n() const { return n_; }
  const std::vector<Neighbor>& out(int i) const { return out_[i]; }
  const std::vector<Neighbor>& in(int i) const { return in_[i]; }
  int out_degree(int i) const { return static_cast<int>(out_[i].size()); }
  int in_degree(int i) const { return static_cast<int>(in_[i].size()); }
  const std::vector<int>& roots() const { return roots_; }
  bool is_root(int i) const { return is_root_[i] != 0; }

  // Canonical raw form: edges sorted by (src, dst).
  RawNetwork raw() const {
    RawNetwork r;
    r.n = n_;
    for (int i = 0; i < n_; ++i) {
      for (const Neighbor& a : out_[i]) r.edges.push_back({i, a.v, a.c});
    }
    return r;
  }

  friend NetworkModel validate_network(const RawNetwork& raw);

 private:
  NetworkModel() = default;

  int n_ = 0;
  std::vector<std::vector<Neighbor>> out_;
  std::vector<std::vector<Neighbor>> in_;
  std::vector<int> roots_;
  std::vector<char> is_root_;
};

inline NetworkModel validate_network(const RawNetwork& raw) {
  if (raw.n < 1) {
    throw Error(errc::index_out_of_range, "n must be at least 1, got " +
                                              std::to_string(raw.n));
  }
  const int n = raw.n;
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : raw.edges) {
    detail::check_vertex(n, e.src, "edge source");
    detail::check_vertex(n, e.dst, "edge destination");
    if (e.src == e.dst) {
      throw Error(errc::self_loop,
                  "self loop at vertex " + std::to_string(e.src));
    }
    if (!seen.insert({e.src, e.dst}).second) {
      throw Error(errc::duplicate_edge,
                  "duplicate edge " + std::to_string(e.src) + "->" +
                      std::to_string(e.dst));
    }
  }

  NetworkModel m;
  m.n_ = n;
  m.out_.resize(n);
  m.in_.resize(n);
  for (const Edge& e : raw.edges) m.out_[e.src].push_back({e.dst, e.weight});

  for (int i = 0; i < n; ++i) {
    if (m.out_[i].size() < 2) {
      throw Error(errc::out_degree_too_small,
                  "vertex " + std::to_string(i) + " has out-degree " +
                      std::to_string(m.out_[i].size()) + ", need at least 2");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (const Neighbor& a : m.out_[i]) {
      if (!(a.c > 0.0) || a.c > 0.5) {
        throw Error(errc::weight_out_of_range,
                    "weight c(" + std::to_string(i) + "," +
                        std::to_string(a.v) + ") = " + std::to_string(a.c) +
                        " outside (0, 1/2]");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const Neighbor& a : m.out_[i]) sum += a.c;
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error(errc::row_sum_violation,
                  "out-weights of vertex " + std::to_string(i) + " sum to " +
                      std::to_string(sum) + ", expected 1");
    }
  }

  for (int i = 0; i < n; ++i) {
    std::sort(m.out_[i].begin(), m.out_[i].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.v < b.v; });
  }
  for (int i = 0; i < n; ++i) {
    for (const Neighbor& a : m.out_[i]) m.in_[a.v].push_back({i, a.c});
  }
  for (int i = 0; i < n; ++i) {
    std::sort(m.in_[i].begin(), m.in_[i].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.v < b.v; });
  }

  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (const Neighbor& a : m.out_[i]) adj[i].push_back(a.v);
  }
  m.roots_ = detail::sink_component(n, adj);
  if (m.roots_.size() < 3) {
    throw Error(errc::too_few_roots,
                "root set has " + std::to_string(m.roots_.size()) +
                    " vertices, need at least 3");
  }
  m.is_root_.assign(n, 0);
  for (int r : m.roots_) m.is_root_[r] = 1;
  return m;
}

inline std::vector<int> root_set(const NetworkModel& model) {
  return model.roots();
}

// Supporting set of a target vertex: everything with a directed path into it,
// organized by shortest-path distance, plus the path-product coefficients.
struct SupportStructure {
  int target = 0;
  std::vector<std::vector<int>> layers;       // layers[k] = vertices at distance <= k
  std::vector<std::vector<int>> differences;  // differences[k] = exactly distance k
  std::vector<int> distance;                  // -1 for vertices with no path to target
  std::vector<double> alpha;                  // 0 outside the support, 1 at the target
};

// Breadth-first along reversed edges. The coefficient of a vertex j at
// distance k sums, over in-layer predecessors, weight times predecessor
// coefficient; unrolled from the target outward this is the sum over all
// shortest paths j -> ... -> target of the edge-weight products. Shortest
// paths never revisit a vertex, so no distinctness bookkeeping is needed.
inline SupportStructure support_structure(const NetworkModel& model, int i) {
  detail::check_vertex(model.n(), i, "target vertex");
  const int n = model.n();
  SupportStructure s;
  s.target = i;
  s.distance.assign(n, -1);
  s.alpha.assign(n, 0.0);
  s.distance[i] = 0;
  s.alpha[i] = 1.0;
  s.differences.push_back({i});
  s.layers.push_back({i});

  std::vector<int> frontier = {i};
  int k = 0;
  while (!frontier.empty()) {
    ++k;
    std::vector<int> next;
    for (int u : frontier) {
      for (const Neighbor& a : model.in(u)) {
        if (s.distance[a.v] == -1) {
          s.distance[a.v] = k;
          next.push_back(a.v);
        }
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    for (int j : next) {
      double sum = 0.0;
      for (const Neighbor& a : model.out(j)) {
        if (s.distance[a.v] == k - 1) sum += a.c * s.alpha[a.v];
      }
      s.alpha[j] = sum;
    }
    std::vector<int> layer = s.layers.back();
    layer.insert(layer.end(), next.begin(), next.end());
    std::sort(layer.begin(), layer.end());
    s.layers.push_back(std::move(layer));
    s.differences.push_back(next);
    frontier = std::move(next);
  }
  return s;
}

// Every directed path from -> ... -> to with exactly k edges and pairwise
// distinct vertices. Exhaustive search; intended as a small-n oracle.
inline std::vector<std::vector<int>> enumerate_paths(const NetworkModel& model,
                                                     int from, int to, int k) {
  detail::check_vertex(model.n(), from, "path start");
  detail::check_vertex(model.n(), to, "path end");
  if (k < 1) throw std::invalid_argument("path length must be at least 1");
  std::vector<std::vector<int>> result;
  std::vector<int> path = {from};
  std::vector<char> used(model.n(), 0);
  used[from] = 1;
  auto dfs = [&](auto&& self, int v, int depth) -> void {
    if (depth == k) {
      if (v == to) result.push_back(path);
      return;
    }
    for (const Neighbor& a : model.out(v)) {
      if (used[a.v]) continue;
      used[a.v] = 1;
      path.push_back(a.v);
      self(self, a.v, depth + 1);
      path.pop_back();
      used[a.v] = 0;
    }
  };
  dfs(dfs, from, 0);
  return result;
}

struct CriticalPath {
  int length = 0;
  std::vector<int> vertices;  // starts positive, ends at the target
};

// Shortest path from a positive-appraisal vertex into the zero-appraisal
// target through zero-appraisal intermediates. Among shortest paths the
// lexicographically smallest vertex sequence is returned: every shortest
// continuation strictly decreases the remaining distance, so a greedy
// smallest-vertex choice at each step is lexicographically minimal.
inline std::optional<CriticalPath> critical_supporting_path(
    const NetworkModel& model, const std::vector<double>& x, int i,
    double zero_tol = 1e-12) {
  const int n = model.n();
  detail::check_vertex(n, i, "target vertex");
  if (static_cast<int>(x.size()) != n) {
    throw Error(errc::dimension_mismatch,
                "state has length " + std::to_string(x.size()) +
                    ", model has " + std::to_string(n) + " vertices");
  }
  if (x[i] > zero_tol) {
    throw Error(errc::target_not_zero,
                "x[" + std::to_string(i) + "] = " + std::to_string(x[i]) +
                    " is not zero");
  }

  auto zero = [&](int v) { return x[v] <= zero_tol; };

  // dz[u]: distance from u to the target through zero vertices only.
  std::vector<int> dz(n, -1);
  dz[i] = 0;
  std::vector<int> frontier = {i};
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier) {
      for (const Neighbor& a : model.in(u)) {
        if (zero(a.v) && dz[a.v] == -1) {
          dz[a.v] = dz[u] + 1;
          next.push_back(a.v);
        }
      }
    }
    frontier = std::move(next);
  }

  int best_k = -1;
  int best_start = -1;
  for (int j = 0; j < n; ++j) {
    if (zero(j)) continue;
    int reach = -1;
    for (const Neighbor& a : model.out(j)) {
      if (zero(a.v) && dz[a.v] != -1 && (reach == -1 || dz[a.v] < reach)) {
        reach = dz[a.v];
      }
    }
    if (reach == -1) continue;
    int kj = reach + 1;
    if (best_k == -1 || kj < best_k || (kj == best_k && j < best_start)) {
      best_k = kj;
      best_start = j;
    }
  }
  if (best_k == -1) return std::nullopt;

  CriticalPath cp;
  cp.length = best_k;
  cp.vertices.push_back(best_start);
  int cur = best_start;
  for (int rem = best_k - 1; rem >= 0; --rem) {
    int pick = -1;
    for (const Neighbor& a : model.out(cur)) {
      if (zero(a.v) && dz[a.v] == rem && (pick == -1 || a.v < pick)) pick = a.v;
    }
    cp.vertices.push_back(pick);
    cur = pick;
  }
  return cp;
}

}  // namespace appraisal
