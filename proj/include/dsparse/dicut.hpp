#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dsparse/errors.hpp"
#include "dsparse/expander.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/rng.hpp"
#include "dsparse/union_find.hpp"

namespace dsparse {

// Per directed edge (in g.edges() order) lower estimates of the undirected edge connectivity.
struct ConnectivityEstimate {
  std::vector<double> k;
  double stretch = 0.0;  // sum w / k over (n - 1)
};

struct DicutConfig {
  double c_bal = 1.0;
  std::optional<double> rho;  // replaces the formula when set
};

inline double rho_dicut(double c_bal, double eps, double beta, int n, double delta) {
  return c_bal / (eps * eps) * (beta + 1.0) * std::log(8.0 * n / delta);
}

inline double total_stretch(const std::vector<Edge>& es, const std::vector<double>& k) {
  double s = 0.0;
  for (std::size_t i = 0; i < es.size(); ++i) s += es[i].w / k[i];
  return s;
}

inline ConnectivityEstimate make_estimate(int n, const std::vector<Edge>& es, std::vector<double> k) {
  ConnectivityEstimate est{std::move(k), 0.0};
  est.stretch = total_stretch(es, est.k) / std::max(1, n - 1);
  return est;
}

// Exact connectivities from the Gomory-Hu oracle.
inline ConnectivityEstimate exact_connectivity(const DiGraph& g) {
  auto es = g.edges();
  return make_estimate(g.n(), es, edge_connectivities(g.n(), es));
}

struct DicutResult {
  DiGraph h;
  std::vector<double> p;  // keep probability per edge of g.edges()
  std::size_t kept = 0;
  double rho = 0.0;
};

// Keeps edge e independently with p_e = min(1, rho w_e / k_e) and weight w_e / p_e.
inline DicutResult sample_dicut(const DiGraph& g, const std::vector<double>& k, double rho, Rng& rng) {
  auto es = g.edges();
  if (k.size() != es.size()) throw DimensionMismatch("sparsify_dicut: estimate size");
  DicutResult r{DiGraph(g.n()), std::vector<double>(es.size()), 0, rho};
  for (std::size_t i = 0; i < es.size(); ++i) {
    const auto& e = es[i];
    double p = std::min(1.0, rho * e.w / k[i]);
    r.p[i] = p;
    if (p >= 1.0 || rng.bernoulli(p)) {
      r.h.add_edge(e.u, e.v, p >= 1.0 ? e.w : e.w / p);
      ++r.kept;
    }
  }
  return r;
}

inline DicutResult sparsify_dicut(const DiGraph& g, double beta, double eps, double delta,
                                  const ConnectivityEstimate& kest, Rng& rng, const DicutConfig& cfg = {}) {
  double rho = cfg.rho.value_or(rho_dicut(cfg.c_bal, eps, beta, g.n(), delta));
  return sample_dicut(g, kest.k, rho, rng);
}

inline DicutResult sparsify_dicut(const DiGraph& g, double beta, double eps, double delta,
                                  const ConnectivityEstimate& kest, std::uint64_t seed, const DicutConfig& cfg = {}) {
  Rng rng(seed);
  return sparsify_dicut(g, beta, eps, delta, kest, rng, cfg);
}

// Conductance certificate of und(g) restricted to its non-isolated vertices.
inline double certified_conductance(const UGraph& u, int exact_limit = 24) {
  auto lg = detail::localize(u.edges, [&] {
    std::vector<int> a(u.edges.size());
    std::iota(a.begin(), a.end(), 0);
    return a;
  }());
  if (lg.g.n <= 1) return 1.0;
  if (lg.g.n <= exact_limit) return conductance_exact(lg.g, exact_limit).phi;
  auto lab = component_labels(lg.g);
  if (std::any_of(lab.begin(), lab.end(), [](int c) { return c != 0; })) return 0.0;
  return cheeger(lg.g).lower_bound;
}

// k_e = phi / (1/d_u + 1/d_v) with d the weighted degrees of und(g).
inline ConnectivityEstimate connectivity_estimate_expander(const DiGraph& g, double phi) {
  auto u = und(g);
  if (certified_conductance(u) < phi * (1 - 1e-12)) throw NotCertified("connectivity_estimate_expander");
  auto d = weighted_degrees(u);
  auto es = g.edges();
  std::vector<double> k(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) k[i] = phi / (1.0 / d[es[i].u] + 1.0 / d[es[i].v]);
  return make_estimate(g.n(), es, std::move(k));
}

struct DicutFullResult {
  DiGraph h;
  std::size_t pieces = 0;
  std::size_t kept = 0;
  double rho = 0.0;
  double min_phi = 1.0;
};

// Decompose und(g), estimate per piece from its degrees and certificate, sample, union.
inline DicutFullResult sparsify_dicut_full(const DiGraph& g, double beta, double eps, double delta, std::uint64_t seed,
                                           const DicutConfig& cfg = {}, const DecompOptions& dopt = {}) {
  auto u = und(g);
  auto es = g.edges();
  std::unordered_map<std::uint64_t, int> uid;
  for (int i = 0; i < static_cast<int>(u.edges.size()); ++i) uid[edge_key(u.edges[i].u, u.edges[i].v)] = i;
  std::vector<std::vector<int>> by_und(u.edges.size());
  for (int i = 0; i < static_cast<int>(es.size()); ++i)
    by_und[uid.at(edge_key(std::min(es[i].u, es[i].v), std::max(es[i].u, es[i].v)))].push_back(i);
  const double dp = delta / (2.0 * std::max<std::size_t>(1, es.size()));
  DicutFullResult out{DiGraph(g.n()), 0, 0, cfg.rho.value_or(rho_dicut(cfg.c_bal, eps, beta, g.n(), dp)), 1.0};
  std::uint64_t pid = 0;
  for (const auto& pc : static_decompose(u, dopt)) {
    std::vector<double> deg(g.n(), 0.0);
    for (int i : pc.edges) {
      deg[u.edges[i].u] += u.edges[i].w;
      deg[u.edges[i].v] += u.edges[i].w;
    }
    out.min_phi = std::min(out.min_phi, pc.phi_cert);
    std::vector<int> dir;
    for (int i : pc.edges) dir.insert(dir.end(), by_und[i].begin(), by_und[i].end());
    std::sort(dir.begin(), dir.end());
    Rng rng(derive_seed(seed, pid++));
    for (int j : dir) {
      const auto& e = es[j];
      double k = pc.phi_cert / (1.0 / deg[e.u] + 1.0 / deg[e.v]);
      double p = std::min(1.0, out.rho * e.w / k);
      if (p >= 1.0 || rng.bernoulli(p)) {
        out.h.add_edge(e.u, e.v, p >= 1.0 ? e.w : e.w / p);
        ++out.kept;
      }
    }
    ++out.pieces;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MSF bundles

struct MsfBundle {
  std::vector<std::vector<int>> forests;  // edge ids of the undirected input
  double alpha = 2.0;

  std::vector<char> membership(std::size_t m) const {
    std::vector<char> in(m, 0);
    for (const auto& t : forests)
      for (int id : t) in[id] = 1;
    return in;
  }
  std::size_t size() const {
    std::size_t s = 0;
    for (const auto& t : forests) s += t.size();
    return s;
  }
};

// Peels t forests; each is the union over weight buckets [2^i, 2^{i+1}) of a spanning forest of the remaining bucket.
inline MsfBundle tbundle_msf(const UGraph& g, int t) {
  MsfBundle b;
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    int ba = weight_bucket(g.edges[a].w), bc = weight_bucket(g.edges[c].w);
    if (ba != bc) return ba > bc;
    return g.edges[a].w > g.edges[c].w;
  });
  std::vector<char> used(g.edges.size(), 0);
  for (int r = 0; r < t; ++r) {
    std::vector<int> forest;
    std::size_t k = 0;
    while (k < order.size()) {
      int bucket = weight_bucket(g.edges[order[k]].w);
      UnionFind uf(g.n);
      for (; k < order.size() && weight_bucket(g.edges[order[k]].w) == bucket; ++k) {
        int id = order[k];
        if (!used[id] && uf.unite(g.edges[id].u, g.edges[id].v)) forest.push_back(id);
      }
    }
    for (int id : forest) used[id] = 1;
    if (forest.empty()) break;
    std::sort(forest.begin(), forest.end());
    b.forests.push_back(std::move(forest));
  }
  return b;
}

struct MsfOnceResult {
  DiGraph h;
  DiGraph bundle;  // directed edges whose undirected edge lies in the bundle
  double t = 0.0;
  double rho = 0.0;
  std::size_t sampled_from = 0;  // non-bundle edges
  std::size_t sampled_kept = 0;
};

// Bundle edges get k = w (always kept); the rest k = t w / alpha, so p = rho alpha / t = 1/4.
inline MsfOnceResult sparsify_dicut_msf_once(const DiGraph& g, double beta, double eps, double delta, Rng& rng,
                                             const DicutConfig& cfg = {}) {
  const double alpha = 2.0;
  MsfOnceResult r{DiGraph(g.n()), DiGraph(g.n())};
  r.rho = cfg.rho.value_or(rho_dicut(cfg.c_bal, eps, beta, g.n(), delta / 2.0));
  r.t = 4.0 * r.rho * alpha;
  auto u = und(g);
  const int t = static_cast<int>(std::min<double>(std::ceil(r.t), static_cast<double>(u.edges.size()) + 1));
  auto in = tbundle_msf(u, t).membership(u.edges.size());
  std::unordered_map<std::uint64_t, int> uid;
  for (int i = 0; i < static_cast<int>(u.edges.size()); ++i) uid[edge_key(u.edges[i].u, u.edges[i].v)] = i;
  auto es = g.edges();
  std::vector<double> k(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) {
    const auto& e = es[i];
    bool b = in[uid.at(edge_key(std::min(e.u, e.v), std::max(e.u, e.v)))];
    k[i] = b ? e.w : r.t * e.w / alpha;
    if (b) r.bundle.add_edge(e.u, e.v, e.w);
    else ++r.sampled_from;
  }
  auto s = sample_dicut(g, k, r.rho, rng);
  r.h = std::move(s.h);
  r.sampled_kept = r.h.m() - r.bundle.m();
  return r;
}

struct MsfResult {
  DiGraph h;
  std::vector<DiGraph> bundles;
  DiGraph residual;
  int iterations = 0;
  int max_iterations = 0;
};

// Repeated half-sparsification: G_{i+1} = H_i \ B_i until ceil(log2 gamma) rounds or the size guard.
inline MsfResult sparsify_dicut_msf(const DiGraph& g, double beta, double eps, double delta, double gamma,
                                    std::uint64_t seed, const DicutConfig& cfg = {}) {
  if (gamma < 1.0) throw PreconditionError("sparsify_dicut_msf: gamma < 1");
  const int I = static_cast<int>(std::ceil(std::log2(gamma) - 1e-12));
  const double m = static_cast<double>(std::max<std::size_t>(1, g.m()));
  const double guard = 16.0 * std::log(8.0 * m / delta);
  MsfResult out{g, {}, g, 0, I};
  DiGraph cur = g;
  int i = 0;
  while (i < I && static_cast<double>(cur.m()) > guard) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    auto once = sparsify_dicut_msf_once(cur, beta, eps / (3.0 * I), delta / std::ldexp(1.0, i + 1), rng, cfg);
    DiGraph next(g.n());
    for (const auto& e : once.h.edges())
      if (!once.bundle.has_edge(e.u, e.v)) next.add_edge(e.u, e.v, e.w);
    out.bundles.push_back(std::move(once.bundle));
    cur = std::move(next);
    ++i;
  }
  out.iterations = i;
  out.residual = cur;
  DiGraph h = cur;
  for (const auto& b : out.bundles)
    for (const auto& e : b.edges()) h.add_weight(e.u, e.v, e.w);
  out.h = std::move(h);
  return out;
}

}  // namespace dsparse
