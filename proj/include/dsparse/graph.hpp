#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsparse/errors.hpp"

namespace dsparse {

template <class W>
struct BasicEdge {
  int u = 0;
  int v = 0;
  W w{};
};
using Edge = BasicEdge<double>;

inline std::uint64_t edge_key(int u, int v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

// Simple weighted directed graph: no parallel edges, no self-loops, weights > 0.
class DiGraph {
 public:
  DiGraph() = default;
  explicit DiGraph(int n) : out_(n), in_(n) {}

  int n() const { return static_cast<int>(out_.size()); }
  std::size_t m() const { return w_.size(); }

  int add_vertex() {
    out_.emplace_back();
    in_.emplace_back();
    return n() - 1;
  }
  void resize(int n) {
    if (n < this->n()) throw PreconditionError("DiGraph::resize cannot shrink");
    out_.resize(n);
    in_.resize(n);
  }

  bool has_edge(int u, int v) const { return w_.count(edge_key(u, v)) != 0; }

  double weight(int u, int v) const {
    auto it = w_.find(edge_key(u, v));
    return it == w_.end() ? 0.0 : it->second;
  }

  void add_edge(int u, int v, double w) {
    check_vertex(u);
    check_vertex(v);
    if (u == v) throw PreconditionError("self-loop " + std::to_string(u));
    if (!(w > 0.0)) throw PreconditionError("edge weight must be positive");
    auto [it, fresh] = w_.emplace(edge_key(u, v), w);
    if (!fresh) throw PreconditionError("parallel edge " + std::to_string(u) + "->" + std::to_string(v));
    out_[u].push_back(v);
    in_[v].push_back(u);
  }

  // Adds w to the edge weight, creating the edge when absent. Self-loops are dropped.
  void add_weight(int u, int v, double w) {
    if (u == v) return;
    auto it = w_.find(edge_key(u, v));
    if (it == w_.end()) {
      if (w > 0.0) add_edge(u, v, w);
      return;
    }
    it->second += w;
    if (!(it->second > 0.0)) remove_edge(u, v);
  }

  void set_weight(int u, int v, double w) {
    auto it = w_.find(edge_key(u, v));
    if (it == w_.end()) {
      add_edge(u, v, w);
    } else {
      if (!(w > 0.0)) throw PreconditionError("edge weight must be positive");
      it->second = w;
    }
  }

  void remove_edge(int u, int v) {
    auto it = w_.find(edge_key(u, v));
    if (it == w_.end()) throw MissingEdge("missing edge " + std::to_string(u) + "->" + std::to_string(v));
    w_.erase(it);
    erase_one(out_[u], v);
    erase_one(in_[v], u);
  }

  const std::vector<int>& out_neighbors(int u) const { return out_[u]; }
  const std::vector<int>& in_neighbors(int v) const { return in_[v]; }

  // All edges sorted by (u, v).
  std::vector<Edge> edges() const {
    std::vector<Edge> es;
    es.reserve(m());
    for (int u = 0; u < n(); ++u) {
      std::vector<int> nb = out_[u];
      std::sort(nb.begin(), nb.end());
      for (int v : nb) es.push_back({u, v, weight(u, v)});
    }
    return es;
  }

  double weight_ratio() const {
    if (w_.empty()) return 1.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& [k, w] : w_) {
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    return hi / lo;
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : edges()) s += e.w;
    return s;
  }

  friend bool operator==(const DiGraph& a, const DiGraph& b) {
    return a.n() == b.n() && a.w_ == b.w_;
  }

 private:
  void check_vertex(int v) const {
    if (v < 0 || v >= n()) throw PreconditionError("vertex out of range: " + std::to_string(v));
  }
  static void erase_one(std::vector<int>& xs, int x) {
    auto it = std::find(xs.begin(), xs.end(), x);
    *it = xs.back();
    xs.pop_back();
  }

  std::unordered_map<std::uint64_t, double> w_;
  std::vector<std::vector<int>> out_, in_;
};

inline DiGraph from_edges(int n, const std::vector<Edge>& es) {
  DiGraph g(n);
  for (const auto& e : es) g.add_weight(e.u, e.v, e.w);
  return g;
}

// Undirected multigraph as an edge list; und() output has u < v and no repeats.
struct UGraph {
  int n = 0;
  std::vector<Edge> edges;
};

struct Incidence {
  int to;
  int edge;
};

inline std::vector<std::vector<Incidence>> adjacency(const UGraph& g) {
  std::vector<std::vector<Incidence>> adj(g.n);
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
    const auto& e = g.edges[i];
    adj[e.u].push_back({e.v, i});
    if (e.u != e.v) adj[e.v].push_back({e.u, i});
  }
  return adj;
}

inline std::vector<double> weighted_degrees(const UGraph& g) {
  std::vector<double> d(g.n, 0.0);
  for (const auto& e : g.edges) {
    d[e.u] += e.w;
    d[e.v] += e.w;
  }
  return d;
}

inline UGraph und(const DiGraph& g) {
  std::unordered_map<std::uint64_t, double> acc;
  for (const auto& e : g.edges()) acc[edge_key(std::min(e.u, e.v), std::max(e.u, e.v))] += e.w;
  UGraph h{g.n(), {}};
  h.edges.reserve(acc.size());
  for (const auto& [k, w] : acc)
    h.edges.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu), w});
  std::sort(h.edges.begin(), h.edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  return h;
}

// Directed edge list viewed as an undirected multigraph (no merging).
inline UGraph as_undirected(int n, const std::vector<Edge>& es) { return UGraph{n, es}; }

inline DiGraph rev(const DiGraph& g) {
  DiGraph r(g.n());
  for (const auto& e : g.edges()) r.add_edge(e.v, e.u, e.w);
  return r;
}

inline DiGraph scaled(const DiGraph& g, double s) {
  DiGraph r(g.n());
  for (const auto& e : g.edges()) r.add_edge(e.u, e.v, s * e.w);
  return r;
}

inline DiGraph graph_union(const DiGraph& a, const DiGraph& b) {
  DiGraph r(std::max(a.n(), b.n()));
  for (const auto& e : a.edges()) r.add_weight(e.u, e.v, e.w);
  for (const auto& e : b.edges()) r.add_weight(e.u, e.v, e.w);
  return r;
}

// ---------------------------------------------------------------------------
// Degrees

template <class W = double>
struct DegreeVector {
  std::vector<W> out;
  std::vector<W> in;
};

template <class W>
DegreeVector<W> degree_vectors(int n, const std::vector<BasicEdge<W>>& es) {
  DegreeVector<W> d{std::vector<W>(n, W(0)), std::vector<W>(n, W(0))};
  for (const auto& e : es) {
    d.out[e.u] += e.w;
    d.in[e.v] += e.w;
  }
  return d;
}

inline DegreeVector<double> degree_vectors(const DiGraph& g) { return degree_vectors(g.n(), g.edges()); }

inline std::vector<double> degree_balance(const DiGraph& g) {
  auto d = degree_vectors(g);
  std::vector<double> b(g.n());
  for (int v = 0; v < g.n(); ++v) b[v] = d.out[v] - d.in[v];
  return b;
}

inline bool is_eulerian(const DiGraph& g, double tol = 1e-12) {
  auto d = degree_vectors(g);
  double dmax = 0.0, bmax = 0.0;
  for (int v = 0; v < g.n(); ++v) {
    dmax = std::max({dmax, d.out[v], d.in[v]});
    bmax = std::max(bmax, std::abs(d.out[v] - d.in[v]));
  }
  return bmax <= tol * dmax;
}

// ---------------------------------------------------------------------------
// Bipartite lift and contraction

struct BipartiteLift {
  int n = 0;              // original vertex count; tails live at v + n
  DiGraph lifted;         // on 2n vertices
  std::vector<Edge> origin;  // origin[i] is the original edge of the i-th lifted edge (sorted order)
};

inline int lift_tail(int v, int n) { return v + n; }

inline BipartiteLift blift(const DiGraph& g) {
  BipartiteLift b{g.n(), DiGraph(2 * g.n()), {}};
  for (const auto& e : g.edges()) {
    b.lifted.add_edge(e.u, lift_tail(e.v, g.n()), e.w);
    b.origin.push_back(e);
  }
  return b;
}

// Merges vertices by group id; multi-edges are summed and self-loops dropped.
inline DiGraph contract(const DiGraph& g, const std::vector<int>& group, int num_groups) {
  if (static_cast<int>(group.size()) != g.n()) throw DimensionMismatch("contract: group size");
  DiGraph r(num_groups);
  for (const auto& e : g.edges()) r.add_weight(group[e.u], group[e.v], e.w);
  return r;
}

// Contracts the pairs (v, v+n); vertices >= 2n (auxiliary) map to n + (id - 2n).
inline std::vector<int> unlift_groups(int total, int n) {
  std::vector<int> grp(total);
  for (int v = 0; v < total; ++v) grp[v] = v < n ? v : (v < 2 * n ? v - n : v - n);
  return grp;
}

inline DiGraph unlift(const DiGraph& lifted, int n) {
  return contract(lifted, unlift_groups(lifted.n(), n), lifted.n() - n);
}

// ---------------------------------------------------------------------------
// Graph matrices. Conventions: B = H - T, vL = B^T W H, L = B^T W B.

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix directed_laplacian(const DiGraph& g, int dim = -1) {
  if (dim < 0) dim = g.n();
  Matrix L = Matrix::Zero(dim, dim);
  for (const auto& e : g.edges()) {
    L(e.u, e.u) += e.w;
    L(e.v, e.u) -= e.w;
  }
  return L;
}

inline Matrix undirected_laplacian(const UGraph& g, int dim = -1) {
  if (dim < 0) dim = g.n;
  Matrix L = Matrix::Zero(dim, dim);
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    L(e.u, e.u) += e.w;
    L(e.v, e.v) += e.w;
    L(e.u, e.v) -= e.w;
    L(e.v, e.u) -= e.w;
  }
  return L;
}

inline Matrix undirected_laplacian(const DiGraph& g, int dim = -1) { return undirected_laplacian(und(g), dim); }

// Sc(L, C) = L_CC - L_CF L_FF^{-1} L_FC.
inline Matrix schur_complement(const Matrix& L, const std::vector<int>& keep) {
  const int N = static_cast<int>(L.rows());
  std::vector<char> kept(N, 0);
  for (int v : keep) {
    if (v < 0 || v >= N) throw DimensionMismatch("schur_complement: keep index");
    kept[v] = 1;
  }
  std::vector<int> elim;
  for (int v = 0; v < N; ++v)
    if (!kept[v]) elim.push_back(v);
  const int c = static_cast<int>(keep.size()), f = static_cast<int>(elim.size());
  Matrix Lcc(c, c), Lcf(c, f), Lfc(f, c), Lff(f, f);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) Lcc(i, j) = L(keep[i], keep[j]);
    for (int j = 0; j < f; ++j) Lcf(i, j) = L(keep[i], elim[j]);
  }
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < c; ++j) Lfc(i, j) = L(elim[i], keep[j]);
    for (int j = 0; j < f; ++j) Lff(i, j) = L(elim[i], elim[j]);
  }
  if (f == 0) return Lcc;
  Eigen::FullPivLU<Matrix> lu(Lff);
  lu.setThreshold(1e-12);
  if (lu.rank() < f) throw SingularBlock("schur_complement: eliminated block is singular");
  return Lcc - Lcf * lu.solve(Lfc);
}

inline Matrix schur_onto_prefix(const Matrix& L, int k) {
  std::vector<int> keep(k);
  for (int i = 0; i < k; ++i) keep[i] = i;
  return schur_complement(L, keep);
}

// Reads a directed Laplacian back as a graph: edge u->v has weight -vL(v, u).
inline DiGraph laplacian_to_digraph(const Matrix& L, double rel_tol = 1e-12) {
  const int n = static_cast<int>(L.rows());
  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  DiGraph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      double w = -L(v, u);
      if (w > rel_tol * scale) {
        g.add_edge(u, v, w);
      } else if (w < -1e-9 * scale) {
        throw PreconditionError("laplacian_to_digraph: positive off-diagonal entry");
      }
    }
  return g;
}

struct UpdateEvent {
  enum Kind { Insert, Delete };
  Kind kind = Insert;
  int u = 0, v = 0;
  double w = 1.0;
};

}  // namespace dsparse
