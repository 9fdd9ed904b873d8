#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "dsparse/expander.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/rational.hpp"
#include "dsparse/rng.hpp"
#include "dsparse/union_find.hpp"

namespace dsparse {

enum class Scheme { External, Internal, Star };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::External: return "external";
    case Scheme::Internal: return "internal";
    case Scheme::Star: return "star";
  }
  return "?";
}

// Congestion factor of the patching scheme.
inline double eta_for(Scheme s, double phi, int n) {
  return s == Scheme::Internal ? 200.0 / (phi * phi) * std::log(2.0 * n) : 1.0;
}

inline double rho_formula(double c_ss, double eps, double phi, double eta, int n, double delta) {
  return 400.0 * c_ss / (eps * eps) / std::pow(phi, 4) * eta * eta * std::log(8.0 * n / delta);
}

inline double xi_formula(double eps, double phi, double eta) { return 1.0 / (1.0 + eps * phi * phi / (16.0 * eta)); }

// ---------------------------------------------------------------------------
// Sampling

// w'_e = w_e / p_e with probability p_e = min(1, rho w_e (1/d^o_u + 1/d^i_v)), else 0.
inline std::vector<double> sample_degrees(int n, const std::vector<Edge>& es, double rho, Rng& rng) {
  auto d = degree_vectors(n, es);
  std::vector<double> wp(es.size(), 0.0);
  for (std::size_t i = 0; i < es.size(); ++i) {
    const auto& e = es[i];
    double p = std::min(1.0, rho * e.w * (1.0 / d.out[e.u] + 1.0 / d.in[e.v]));
    if (p >= 1.0) {
      wp[i] = e.w;
    } else if (rng.bernoulli(p)) {
      wp[i] = e.w / p;
    }
  }
  return wp;
}

// ---------------------------------------------------------------------------
// Patching demands

template <class W>
struct Demands {
  std::vector<W> d1;  // H^T (w - xi w'), on heads
  std::vector<W> d2;  // T^T (w - xi w'), on tails
};

template <class W>
Demands<W> patch_demands(int n, const std::vector<BasicEdge<W>>& es, const std::vector<W>& wp, const W& xi) {
  Demands<W> d{std::vector<W>(n, W(0)), std::vector<W>(n, W(0))};
  for (std::size_t i = 0; i < es.size(); ++i) {
    W r = es[i].w - xi * wp[i];
    d.d1[es[i].u] += r;
    d.d2[es[i].v] += r;
  }
  return d;
}

// Largest xi' <= xi with xi' d' <= d entrywise on both sides; returns xi when it already dominates.
inline double dominating_xi(int n, const std::vector<Edge>& es, const std::vector<double>& wp, double xi,
                            bool* shrunk = nullptr) {
  auto d = degree_vectors(n, es);
  std::vector<double> o(n, 0.0), in(n, 0.0);
  for (std::size_t i = 0; i < es.size(); ++i) {
    o[es[i].u] += wp[i];
    in[es[i].v] += wp[i];
  }
  double lim = xi;
  for (int v = 0; v < n; ++v) {
    if (o[v] > 0 && xi * o[v] > d.out[v]) lim = std::min(lim, d.out[v] / o[v]);
    if (in[v] > 0 && xi * in[v] > d.in[v]) lim = std::min(lim, d.in[v] / in[v]);
  }
  if (shrunk) *shrunk = lim < xi;
  return lim < xi ? lim * (1.0 - 1e-12) : xi;
}

// Greedy interval matching of demands d1 (heads in id order) to d2 (tails in id order).
template <class W>
std::vector<BasicEdge<W>> greedy_matching(const std::vector<W>& d1, const std::vector<W>& d2) {
  W t1(0), t2(0);
  for (const auto& x : d1) t1 += x;
  for (const auto& x : d2) t2 += x;
  W diff = t1 > t2 ? t1 - t2 : t2 - t1;
  W scale = t1 > W(1) ? t1 : W(1);
  if (diff > W(1e-9) * scale) throw DemandMismatch("patching: demand totals differ");
  W tol(0);
  if constexpr (std::is_floating_point_v<W>) tol = 1e-13 * scale;
  std::vector<BasicEdge<W>> f;
  std::size_t i = 0, j = 0;
  W a(0), b(0);
  auto advance = [&](const std::vector<W>& d, std::size_t& k, W& rem) {
    while (k < d.size() && !(d[k] > tol)) ++k;
    if (k < d.size()) rem = d[k];
  };
  advance(d1, i, a);
  advance(d2, j, b);
  while (i < d1.size() && j < d2.size()) {
    W x = a < b ? a : b;
    f.push_back({static_cast<int>(i), static_cast<int>(j), x});
    a -= x;
    b -= x;
    if (!(a > tol)) {
      ++i;
      advance(d1, i, a);
    }
    if (!(b > tol)) {
      ++j;
      advance(d2, j, b);
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// External, star and internal patchings on a bipartite piece.

template <class W>
std::vector<BasicEdge<W>> scaled_sample(const std::vector<BasicEdge<W>>& es, const std::vector<W>& wp, const W& xi) {
  std::vector<BasicEdge<W>> h;
  for (std::size_t i = 0; i < es.size(); ++i)
    if (wp[i] > W(0)) h.push_back({es[i].u, es[i].v, xi * wp[i]});
  return h;
}

template <class W>
std::vector<W> clamp_nonneg(std::vector<W> d) {
  for (auto& x : d)
    if (x < W(0)) x = W(0);
  return d;
}

// H = xi w' + f with f the greedy matching of d1, d2 over heads C and tails R.
template <class W>
std::vector<BasicEdge<W>> patching_external(int n, const std::vector<BasicEdge<W>>& es, const std::vector<W>& wp,
                                            const W& xi) {
  auto dm = patch_demands(n, es, wp, xi);
  auto d1 = clamp_nonneg(dm.d1), d2 = clamp_nonneg(dm.d2);
  auto h = scaled_sample(es, wp, xi);
  for (const auto& f : greedy_matching(d1, d2)) h.push_back(f);
  return h;
}

// H = xi w' + star through aux vertex x: (v, x, d1_v) for heads, (x, v, d2_v) for tails.
template <class W>
std::vector<BasicEdge<W>> patching_star(int n, const std::vector<BasicEdge<W>>& es, const std::vector<W>& wp,
                                        const W& xi, int aux) {
  auto dm = patch_demands(n, es, wp, xi);
  auto h = scaled_sample(es, wp, xi);
  for (int v = 0; v < n; ++v) {
    if (dm.d1[v] > W(0)) h.push_back({v, aux, dm.d1[v]});
    if (dm.d2[v] > W(0)) h.push_back({aux, v, dm.d2[v]});
  }
  return h;
}

// Maximum spanning forest of the undirected view; weight descending, ties by edge id.
inline std::vector<int> max_spanning_forest(int n, const std::vector<Edge>& es, const std::vector<double>& w) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(es.size()); ++i)
    if (w[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  UnionFind uf(n);
  std::vector<int> t;
  for (int i : order)
    if (uf.unite(es[i].u, es[i].v)) t.push_back(i);
  return t;
}

// The unique y supported on the forest with B^T y = d (B^T y)_v = out-flow minus in-flow at v.
template <class W, class E>
std::vector<W> rounding(int n, const std::vector<E>& es, const std::vector<W>& d, const std::vector<int>& forest) {
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int id : forest) {
    adj[es[id].u].push_back({es[id].v, id});
    adj[es[id].v].push_back({es[id].u, id});
  }
  std::vector<W> y(es.size(), W(0));
  std::vector<W> sub(d.begin(), d.end());
  std::vector<int> parent_edge(n, -1), order;
  std::vector<char> seen(n, 0);
  for (int r = 0; r < n; ++r) {
    if (seen[r]) continue;
    std::size_t start = order.size();
    seen[r] = 1;
    order.push_back(r);
    for (std::size_t k = start; k < order.size(); ++k) {
      int u = order[k];
      for (auto [v, id] : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          parent_edge[v] = id;
          order.push_back(v);
        }
    }
    // Leaves first: push each subtree's demand onto its parent edge.
    for (std::size_t k = order.size(); k-- > start + 1;) {
      int v = order[k];
      int id = parent_edge[v];
      int p = es[id].u == v ? es[id].v : es[id].u;
      y[id] = es[id].u == v ? sub[v] : W(0) - sub[v];
      sub[p] += sub[v];
    }
    W root = sub[r];
    W mag = root < W(0) ? W(0) - root : root;
    W scale(0);
    for (std::size_t k = start; k < order.size(); ++k) scale += d[order[k]] < W(0) ? W(0) - d[order[k]] : d[order[k]];
    if (mag > W(1e-9) * (scale > W(1) ? scale : W(1)))
      throw DemandMismatch("rounding: demand does not sum to zero on a tree component");
  }
  return y;
}

struct InternalFlow {
  std::vector<double> f;         // approximate electrical flow, per piece edge (zero off supp(w'))
  std::vector<int> forest;       // maximum spanning forest of und(G') under w'
  bool solver_converged = true;
  int solver_iterations = 0;
};

// Checks conditions (a)-(d) and computes the approximate electrical routing for the demands.
inline InternalFlow internal_flow(int n, const std::vector<Edge>& es, const std::vector<double>& wp, double xi,
                                  double eps, double phi, const DecompOptions& dopt = {}) {
  // (a)
  double lo = kInf, hi = 0.0;
  for (const auto& e : es) {
    lo = std::min(lo, e.w);
    hi = std::max(hi, e.w);
  }
  if (hi > 2.0 * lo * (1 + 1e-12)) throw ConditionViolated('a', "weight ratio exceeds 2");
  for (std::size_t i = 0; i < es.size(); ++i)
    if (wp[i] > 0.0 && wp[i] < es[i].w * (1 - 1e-12)) throw ConditionViolated('a', "w' below w on its support");
  // (b)
  std::vector<int> supp;
  for (int i = 0; i < static_cast<int>(es.size()); ++i)
    if (wp[i] > 0.0) supp.push_back(i);
  std::vector<Edge> sampled;
  for (int i : supp) sampled.push_back({es[i].u, es[i].v, wp[i]});
  auto lg = detail::localize(sampled, [&] {
    std::vector<int> a(sampled.size());
    std::iota(a.begin(), a.end(), 0);
    return a;
  }());
  auto orig = detail::localize(es, [&] {
    std::vector<int> a(es.size());
    std::iota(a.begin(), a.end(), 0);
    return a;
  }());
  if (lg.vertices.size() != orig.vertices.size()) throw ConditionViolated('b', "sampled graph drops vertices");
  double phi_g = 0.0;
  if (lg.g.n <= dopt.exact_limit) {
    phi_g = conductance_exact(lg.g, dopt.exact_limit).phi;
  } else {
    auto lab = component_labels(lg.g);
    if (std::any_of(lab.begin(), lab.end(), [](int c) { return c != 0; }))
      throw ConditionViolated('b', "sampled graph disconnected");
    phi_g = cheeger(lg.g).lower_bound;
  }
  if (phi_g < phi) throw ConditionViolated('b', "sampled graph not certified as a phi-expander");
  // (c)
  auto d = degree_vectors(n, es);
  std::vector<double> o(n, 0.0), in(n, 0.0);
  for (std::size_t i = 0; i < es.size(); ++i) {
    o[es[i].u] += wp[i];
    in[es[i].v] += wp[i];
  }
  for (int v = 0; v < n; ++v)
    if (xi * o[v] > d.out[v] * (1 + 1e-12) || xi * in[v] > d.in[v] * (1 + 1e-12))
      throw ConditionViolated('c', "xi-scaled sampled degrees exceed degrees");
  // (d)
  const double lim = phi * phi / (100.0 * std::log(2.0 * n)) * eps;
  auto dm = patch_demands(n, es, wp, xi);
  for (int v = 0; v < n; ++v) {
    if (d.out[v] > 0 && std::abs(dm.d1[v]) / d.out[v] > lim) throw ConditionViolated('d', "out-degree imbalance");
    if (d.in[v] > 0 && std::abs(dm.d2[v]) / d.in[v] > lim) throw ConditionViolated('d', "in-degree imbalance");
  }
  // Rescale w', d1, d2 by 1 / min w', then the demands by 90 xi log(2n) / (phi^2 eps).
  double wmin = kInf;
  for (int i : supp) wmin = std::min(wmin, wp[i]);
  const double s = 1.0 / wmin;
  const double kappa = 90.0 * xi * std::log(2.0 * n) / (phi * phi * eps);
  UGraph ug{lg.g.n, {}};
  double M = 0.0;
  for (const auto& e : lg.g.edges) {
    ug.edges.push_back({e.u, e.v, s * e.w});
    M += s * e.w;
  }
  Vector b(lg.g.n);
  for (int k = 0; k < lg.g.n; ++k) {
    int v = lg.vertices[k];
    b(k) = kappa * s * (dm.d1[v] - dm.d2[v]);
  }
  b.array() -= b.mean();  // removes floating-point drift; exact demands sum to zero
  const double zeta = 1.0 / (5.0 * n * n);
  const double zeta_p = phi * zeta / (2.0 * std::sqrt(2.0 * M));
  auto dloc = weighted_degrees(ug);
  const double l2 = phi_g * phi_g / 2.0 * *std::min_element(dloc.begin(), dloc.end());
  auto sol = laplacian_solve(ug, b, zeta_p, l2);
  InternalFlow out;
  out.solver_converged = sol.converged;
  out.solver_iterations = sol.iterations;
  out.f.assign(es.size(), 0.0);
  for (std::size_t k = 0; k < supp.size(); ++k) {
    const auto& e = ug.edges[k];
    out.f[supp[k]] = e.w * (sol.x(e.u) - sol.x(e.v)) / (kappa * s);
  }
  out.forest = max_spanning_forest(n, es, wp);
  return out;
}

// H = xi w' + f + y on supp(w'), where y rounds the residual demand of f on the forest.
template <class W>
std::vector<BasicEdge<W>> finish_internal(int n, const std::vector<BasicEdge<W>>& es, const std::vector<W>& wp,
                                          const W& xi, const std::vector<W>& f, const std::vector<int>& forest) {
  auto dm = patch_demands(n, es, wp, xi);
  std::vector<W> r(n, W(0));
  for (int v = 0; v < n; ++v) r[v] = dm.d1[v] - dm.d2[v];
  for (std::size_t i = 0; i < es.size(); ++i) {
    r[es[i].u] -= f[i];
    r[es[i].v] += f[i];
  }
  auto y = rounding(n, es, r, forest);
  std::vector<BasicEdge<W>> h;
  for (std::size_t i = 0; i < es.size(); ++i)
    if (wp[i] > W(0)) h.push_back({es[i].u, es[i].v, xi * wp[i] + f[i] + y[i]});
  return h;
}

inline std::vector<Edge> patching_internal(int n, const std::vector<Edge>& es, const std::vector<double>& wp,
                                           double xi, double eps, double phi, const DecompOptions& dopt = {}) {
  auto fl = internal_flow(n, es, wp, xi, eps, phi, dopt);
  return finish_internal(n, es, wp, xi, fl.f, fl.forest);
}

// ---------------------------------------------------------------------------
// SparsifySubgraph and SparsifyDirectedSpectral

struct SpectralConfig {
  double eps = 0.25;
  double delta = 0.1;
  Scheme scheme = Scheme::Star;
  bool strict_degree = false;
  double c_ss = 1.0;
  std::optional<double> rho;  // replaces the formula when set
  bool internal_fallback = true;
  bool rational = false;
  DecompOptions decomp;
  std::uint64_t seed = 0;
};

struct SubgraphResult {
  std::vector<Edge> h;                 // may reference aux id
  std::vector<RationalEdge> h_exact;   // rational recomputation when requested
  std::size_t kept = 0;
  double rho = 0.0;
  double xi = 1.0;
  bool xi_shrunk = false;
  bool fell_back = false;
  bool uses_aux = false;
};

inline SubgraphResult sparsify_subgraph(int n, const std::vector<Edge>& es, double eps, double delta, Scheme scheme,
                                        double phi, Rng& rng, const SpectralConfig& cfg, int aux) {
  SubgraphResult res;
  const double eta = eta_for(scheme, phi, n);
  res.rho = cfg.rho.value_or(rho_formula(cfg.c_ss, eps, phi, eta, n, delta));
  auto wp = sample_degrees(n, es, res.rho, rng);
  for (double x : wp) res.kept += x > 0.0;
  res.xi = xi_formula(eps, phi, eta);
  std::vector<double> f;
  std::vector<int> forest;
  Scheme used = scheme;
  if (scheme == Scheme::Internal) {
    try {
      auto fl = internal_flow(n, es, wp, res.xi, eps, phi, cfg.decomp);
      f = std::move(fl.f);
      forest = std::move(fl.forest);
    } catch (const ConditionViolated&) {
      if (!cfg.internal_fallback) throw;
      res.fell_back = true;
      used = Scheme::External;
      res.xi = xi_formula(eps, phi, 1.0);
    }
  }
  if (used != Scheme::Internal) res.xi = dominating_xi(n, es, wp, res.xi, &res.xi_shrunk);
  switch (used) {
    case Scheme::External: res.h = patching_external(n, es, wp, res.xi); break;
    case Scheme::Star:
      res.h = patching_star(n, es, wp, res.xi, aux);
      res.uses_aux = true;
      break;
    case Scheme::Internal: res.h = finish_internal(n, es, wp, res.xi, f, forest); break;
  }
  if (cfg.rational) {
    auto er = to_rational(es);
    std::vector<Rational> wq;
    for (double x : wp) wq.push_back(to_rational(x));
    Rational xq = to_rational(res.xi);
    switch (used) {
      case Scheme::External: res.h_exact = patching_external(n, er, wq, xq); break;
      case Scheme::Star: res.h_exact = patching_star(n, er, wq, xq, aux); break;
      case Scheme::Internal: {
        std::vector<Rational> fq;
        for (double x : f) fq.push_back(to_rational(x));
        res.h_exact = finish_internal(n, er, wq, xq, fq, forest);
        break;
      }
    }
  }
  return res;
}

// Class of a lifted edge for the strict mode: highest differing label bit and the head's value there,
// so that no class has a vertex as both head and tail.
inline int bit_label_class(int u, int v) {
  unsigned x = static_cast<unsigned>(u) ^ static_cast<unsigned>(v);
  int hb = 31 - __builtin_clz(x);
  return 2 * hb + ((u >> hb) & 1);
}

struct SpectralResult {
  DiGraph h;                         // on n + n_aux vertices
  int n = 0;
  int n_aux = 0;
  std::vector<RationalEdge> h_exact;  // unlifted, when cfg.rational
  std::size_t pieces = 0;
  std::size_t kept = 0;
  std::size_t lifted_edges = 0;
  std::size_t xi_shrunk = 0;
  std::size_t fallbacks = 0;
  int classes = 1;
  double rho_min = kInf;
};

inline SpectralResult sparsify_directed_spectral(const DiGraph& g, const SpectralConfig& cfg) {
  const int n = g.n();
  const int N = 2 * n;
  auto lift = blift(g);
  auto les = lift.lifted.edges();
  SpectralResult out;
  out.n = n;
  out.lifted_edges = les.size();
  std::map<int, std::vector<Edge>> classes;
  for (const auto& e : les) classes[cfg.strict_degree ? bit_label_class(e.u, e.v - n) : 0].push_back(e);
  out.classes = static_cast<int>(classes.size());
  const double delta_piece = cfg.delta / (2.0 * std::max<std::size_t>(1, les.size()));
  std::vector<Edge> hl;
  std::vector<RationalEdge> hq;
  int aux = 0;
  std::uint64_t piece_id = 0;
  for (auto& [c, ces] : classes) {
    for (const auto& pc : static_decompose(ces, cfg.decomp)) {
      std::vector<Edge> pes;
      for (int i : pc.edges) pes.push_back(ces[i]);
      Rng rng(derive_seed(cfg.seed, piece_id++));
      auto r = sparsify_subgraph(N, pes, cfg.eps, delta_piece, cfg.scheme, cfg.decomp.phi_target, rng, cfg, N + aux);
      ++out.pieces;
      out.kept += r.kept;
      out.xi_shrunk += r.xi_shrunk;
      out.fallbacks += r.fell_back;
      out.rho_min = std::min(out.rho_min, r.rho);
      bool touched = std::any_of(r.h.begin(), r.h.end(), [&](const Edge& e) { return e.u >= N || e.v >= N; });
      if (r.uses_aux && !touched) {
        // Empty star: drop the unused center.
        hl.insert(hl.end(), r.h.begin(), r.h.end());
        hq.insert(hq.end(), r.h_exact.begin(), r.h_exact.end());
        continue;
      }
      hl.insert(hl.end(), r.h.begin(), r.h.end());
      hq.insert(hq.end(), r.h_exact.begin(), r.h_exact.end());
      if (r.uses_aux) ++aux;
    }
  }
  out.n_aux = aux;
  auto grp = unlift_groups(N + aux, n);
  out.h = DiGraph(n + aux);
  for (const auto& e : hl) out.h.add_weight(grp[e.u], grp[e.v], e.w);
  if (cfg.rational) out.h_exact = contract_exact(hq, grp);
  return out;
}

// Directed Laplacian of Sc(H, V) for a sparsifier with aux vertices.
inline Matrix schur_laplacian(const SpectralResult& r) {
  Matrix L = directed_laplacian(r.h);
  return r.n_aux ? schur_onto_prefix(L, r.n) : L;
}

}  // namespace dsparse
