#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dsparse/dicut.hpp"
#include "dsparse/errors.hpp"
#include "dsparse/expander.hpp"
#include "dsparse/patchers.hpp"
#include "dsparse/spectral.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/rational.hpp"
#include "dsparse/rng.hpp"

namespace dsparse {

// beta * und(g) as a symmetric digraph: each undirected edge of weight w becomes (u, v, beta w) and (v, u, beta w).
inline DiGraph symmetric_layer(const DiGraph& g, double beta) {
  DiGraph h(g.n());
  if (beta == 0.0) return h;
  for (const auto& e : und(g).edges) {
    h.add_weight(e.u, e.v, beta * e.w);
    h.add_weight(e.v, e.u, beta * e.w);
  }
  return h;
}

// g united with beta copies of und(g).
inline DiGraph partial_symmetrization(const DiGraph& g, double beta) {
  if (!(beta >= 0.0)) throw PreconditionError("partial_symmetrization: beta < 0");
  DiGraph h = g;
  if (beta == 0.0) return h;
  for (const auto& e : g.edges()) {
    h.add_weight(e.u, e.v, beta * e.w);
    h.add_weight(e.v, e.u, beta * e.w);
  }
  return h;
}

// Generalized eigenvalue range of A against B on im(B); A, B symmetric PSD with ker(B) in ker(A).
struct SpectralRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline SpectralRange relative_spectrum(const Matrix& A, const Matrix& B) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (B + B.transpose()));
  const Vector& lam = es.eigenvalues();
  const double cut = 1e-10 * std::max(1e-300, lam.cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int i = 0; i < lam.size(); ++i)
    if (lam(i) > cut) keep.push_back(i);
  if (keep.empty()) return {0.0, 0.0};
  Matrix Q(B.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) Q.col(k) = es.eigenvectors().col(keep[k]) / std::sqrt(lam(keep[k]));
  Matrix C = Q.transpose() * (0.5 * (A + A.transpose())) * Q;
  Eigen::SelfAdjointEigenSolver<Matrix> ec(C);
  return {ec.eigenvalues().minCoeff(), ec.eigenvalues().maxCoeff()};
}

// ---------------------------------------------------------------------------
// Star patching of a bipartite directed expander

// Tails-only and heads-only vertices; throws unless no vertex has both in- and out-edges.
inline void require_directed_bipartite(const DiGraph& g) {
  for (int v = 0; v < g.n(); ++v)
    if (!g.out_neighbors(v).empty() && !g.in_neighbors(v).empty())
      throw NotBipartite("vertex " + std::to_string(v) + " is both a head and a tail");
}

// Star through center n carrying the full out-degrees (into the center) and in-degrees (out of it).
inline DiGraph full_degree_star(const DiGraph& g) {
  const int n = g.n();
  auto d = degree_vectors(g);
  DiGraph h(n + 1);
  for (int v = 0; v < n; ++v) {
    if (d.out[v] > 0.0) h.add_edge(v, n, d.out[v]);
    if (d.in[v] > 0.0) h.add_edge(n, v, d.in[v]);
  }
  return h;
}

// Requires beta >= 2 / (eps phi^2) with phi the conductance certificate of und(g).
inline DiGraph star_patch_directed(const DiGraph& g, double beta, double eps, std::optional<double> phi = {}) {
  require_directed_bipartite(g);
  if (g.m() == 0) return DiGraph(g.n() + 1);
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("star_patch_directed: eps outside (0, 1)");
  const double p = phi.value_or(certified_conductance(und(g)));
  if (!(p > 0.0)) throw NotCertified("star_patch_directed: und(g) is not a certified expander");
  const double need = 2.0 / (eps * p * p);
  if (beta < need * (1.0 - 1e-12))
    throw BetaTooSmall("star_patch_directed: beta " + std::to_string(beta) + " below " + std::to_string(need));
  return full_degree_star(g);
}

// ---------------------------------------------------------------------------
// Degree-preserving undirected sparsifier from a cut sparsifier

// Directed representation on n + 2 vertices (centers x = n, y = n + 1): each undirected edge of weight w
// is the pair (u, v), (v, u) of weight w / 2, so the undirected Laplacian of Sc(h, V) is 2 vL_Sc.
struct UndirectedStarPatch {
  DiGraph h;
  int n = 0;
  double eta = 1.0;     // the cut sparsifier enters scaled by eta
  double scale = 1.0;   // 4 gamma^2 / phi^2
  double lambda = 1.0;  // 16 gamma^4 / phi^4
  std::vector<char> side;
};

inline std::vector<char> two_coloring(const UGraph& g) {
  std::vector<char> c(g.n, -1);
  auto adj = adjacency(g);
  for (int s = 0; s < g.n; ++s) {
    if (c[s] >= 0) continue;
    c[s] = 0;
    std::vector<int> st{s};
    while (!st.empty()) {
      int u = st.back();
      st.pop_back();
      for (auto [v, id] : adj[u]) {
        if (c[v] < 0) {
          c[v] = static_cast<char>(1 - c[u]);
          st.push_back(v);
        } else if (c[v] == c[u]) {
          throw NotBipartite("two_coloring: odd cycle through vertex " + std::to_string(v));
        }
      }
    }
  }
  return c;
}

// Core construction with a known side assignment and eta; demands are clamped at zero.
inline DiGraph mirrored_stars(int n, const std::vector<Edge>& g_edges, const std::vector<Edge>& cut_edges,
                              const std::vector<char>& side, double eta) {
  std::vector<double> d(n, 0.0), dc(n, 0.0);
  for (const auto& e : g_edges) d[e.u] += e.w, d[e.v] += e.w;
  for (const auto& e : cut_edges) dc[e.u] += e.w, dc[e.v] += e.w;
  DiGraph h(n + 2);
  const int x = n, y = n + 1;
  for (const auto& e : cut_edges) {
    h.add_weight(e.u, e.v, 0.5 * eta * e.w);
    h.add_weight(e.v, e.u, 0.5 * eta * e.w);
  }
  for (int v = 0; v < n; ++v) {
    double dem = 0.5 * (d[v] - eta * dc[v]);
    if (!(dem > 1e-12 * std::max(1.0, d[v]))) continue;
    if (side[v] == 0) {
      h.add_weight(v, x, dem);
      h.add_weight(y, v, dem);
    } else {
      h.add_weight(x, v, dem);
      h.add_weight(v, y, dem);
    }
  }
  return h;
}

// g bipartite phi-expander, cut a gamma-cut approximation of g on the same vertex set.
inline UndirectedStarPatch degpre_undirected_from_cut(const UGraph& g, const UGraph& cut, double phi, double gamma_cut) {
  if (cut.n != g.n) throw DimensionMismatch("degpre_undirected_from_cut: vertex sets differ");
  if (!(gamma_cut >= 1.0) || !(phi > 0.0)) throw PreconditionError("degpre_undirected_from_cut: need gamma >= 1, phi > 0");
  UndirectedStarPatch out;
  out.n = g.n;
  out.side = two_coloring(g);
  for (const auto& e : cut.edges)
    if (out.side[e.u] == out.side[e.v]) throw NotBipartite("degpre_undirected_from_cut: cut edge inside a side");
  if (!g.edges.empty() && certified_conductance(g) < phi * (1.0 - 1e-12))
    throw NotCertified("degpre_undirected_from_cut: g is not a certified phi-expander");
  auto d = weighted_degrees(g), dc = weighted_degrees(cut);
  for (int v = 0; v < g.n; ++v) {
    double tol = 1e-9 * std::max(1.0, d[v]);
    if (dc[v] < d[v] - tol || dc[v] > gamma_cut * d[v] + tol)
      throw NotCertified("degpre_undirected_from_cut: degree of " + std::to_string(v) + " outside [d, gamma d]");
  }
  out.eta = 1.0 / gamma_cut;
  out.scale = 4.0 * gamma_cut * gamma_cut / (phi * phi);
  out.lambda = out.scale * out.scale;
  out.h = mirrored_stars(g.n, g.edges, cut.edges, out.side, out.eta);
  return out;
}

// Undirected Laplacian of S = Sc(h, V).
inline Matrix undirected_schur(const UndirectedStarPatch& p) {
  Matrix L = directed_laplacian(p.h);
  std::vector<int> keep;
  for (int v = 0; v < p.n; ++v) keep.push_back(v);
  // an empty star has nothing to eliminate
  for (int x = p.n; x < static_cast<int>(L.rows()); ++x)
    if (L.row(x).cwiseAbs().maxCoeff() == 0.0 && L.col(x).cwiseAbs().maxCoeff() == 0.0) keep.push_back(x);
  Matrix S = schur_complement(L, keep);
  return 2.0 * S.topLeftCorner(p.n, p.n);
}

// Smallest and largest w_H(U) / w_G(U) over nontrivial cuts, by enumeration.
inline SpectralRange cut_ratio_range(const UGraph& g, const UGraph& h) {
  if (g.n > 24) throw TooLarge("cut_ratio_range: more than 24 vertices");
  SpectralRange r{kInf, 0.0};
  const std::uint32_t full = g.n >= 1 ? (1u << (g.n - 1)) : 0u;  // vertex n - 1 stays outside U
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    double a = 0.0, b = 0.0;
    for (const auto& e : g.edges) a += (((mask >> e.u) & 1) != ((mask >> e.v) & 1)) ? e.w : 0.0;
    for (const auto& e : h.edges) b += (((mask >> e.u) & 1) != ((mask >> e.v) & 1)) ? e.w : 0.0;
    if (a == 0.0) {
      if (b > 0.0) r.hi = kInf;
      continue;
    }
    r.lo = std::min(r.lo, b / a);
    r.hi = std::max(r.hi, b / a);
  }
  return r;
}

// t-bundle MSF kept whole, the remaining edges sampled with probability p at weight w / p.
inline UGraph msf_cut_sparsifier(const UGraph& g, int t, double p, Rng& rng) {
  auto in = tbundle_msf(g, t).membership(g.edges.size());
  UGraph h{g.n, {}};
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (in[i]) h.edges.push_back(g.edges[i]);
    else if (rng.bernoulli(p)) h.edges.push_back({g.edges[i].u, g.edges[i].v, g.edges[i].w / p});
  }
  return h;
}

// ---------------------------------------------------------------------------
// Sparsification quadruple

struct QuadrupleConfig {
  double beta = 8.0;
  double scale = 1.25;   // H = scale * S
  double lambda = 2.0;   // assumed L_G <= L_H <= lambda L_G
  std::optional<double> alpha;  // default 2 / (lambda + 1)
  std::optional<double> gamma;  // audit threshold; default max(2 beta + 1, lambda (lambda + 1) / 2)
  double gamma_cut = 2.0;  // cap on the cut sparsifier factor: eta <= 1 / gamma_cut
  int bundle_t = 4;
  double keep_p = 0.25;
  double rebuild_frac = 0.25;  // piece sparsifier rebuilt after this fraction of its edges is deleted
  bool rational = false;       // exact star layer in snapshots
  DecompOptions decomp;
  std::uint64_t seed = 0;

  double alpha_value() const { return alpha.value_or(2.0 / (lambda + 1.0)); }
  double gamma_value() const { return gamma.value_or(std::max(2.0 * beta + 1.0, 0.5 * lambda * (lambda + 1.0))); }

  // Constants of the expander lemma: scale 4 gamma_cut^2 / phi^2 and lambda its square.
  static QuadrupleConfig lemma_bounds(double beta, double phi, double gamma_cut) {
    QuadrupleConfig c;
    c.beta = beta;
    c.gamma_cut = gamma_cut;
    c.scale = 4.0 * gamma_cut * gamma_cut / (phi * phi);
    c.lambda = c.scale * c.scale;
    c.decomp.phi_target = phi;
    return c;
  }
};

// G1 = g0^(beta); G2 = Sc(G2', V) with G2' = beta und(g0) + h2; G3 = Sc(G3', V) with G3' = (beta / alpha) h3 + h2.
struct Quadruple {
  DiGraph g0;
  int n = 0;
  double beta = 0.0, alpha = 1.0, gamma = 1.0, scale = 1.0, lambda = 1.0;
  DiGraph h2;  // directed star layer on n + n_x vertices
  int n_x = 0;
  std::vector<RationalEdge> h2_exact;  // same layer in exact arithmetic, when configured
  DiGraph h3;  // undirected layer H on n + n_y vertices; vL of Sc(h3, V) equals L_H
  int n_y = 0;
  std::size_t directed_pieces = 0, undirected_pieces = 0;

  DiGraph g1() const { return partial_symmetrization(g0, beta); }

  DiGraph g2_prime() const {
    DiGraph r = h2;
    for (const auto& e : symmetric_layer(g0, beta).edges()) r.add_weight(e.u, e.v, e.w);
    return r;
  }

  // Vertices V, then X, then Y.
  DiGraph g3_prime() const {
    DiGraph r(n + n_x + n_y);
    for (const auto& e : h2.edges()) r.add_weight(e.u, e.v, e.w);
    const double c = beta / alpha;
    auto shift = [&](int v) { return v < n ? v : v + n_x; };
    for (const auto& e : h3.edges()) r.add_weight(shift(e.u), shift(e.v), c * e.w);
    return r;
  }

  // Directed Laplacian of G_i on V.
  Matrix laplacian(int i) const {
    switch (i) {
      case 0: return directed_laplacian(g0);
      case 1: return directed_laplacian(g1());
      case 2: return schur_onto_prefix(directed_laplacian(g2_prime()), n);
      case 3: return schur_onto_prefix(directed_laplacian(g3_prime()), n);
    }
    throw PreconditionError("Quadruple::laplacian: level outside 0..3");
  }
};

struct QuadrupleAudit {
  bool eulerian = false;  // conditions 1 and 2 are only evaluated on Eulerian snapshots
  std::array<double, 4> degree_gap{};   // condition 3, relative, per level
  std::array<double, 4> factor{};      // expected degree factor d_{G_i} / d_{G_0}
  std::array<double, 4> pinv_error{};  // condition 1 for i = 1..3
  std::array<SpectralRange, 4> range{};  // L_{G_i} against L_{G_{i-1}}
  double closed_form_1 = 0.0;
  double gamma = 1.0;
  bool exact_checked = false;
  bool exact_degrees = true;  // condition 3 for the exact star layer
  double layer_gap = 0.0;      // non-Eulerian g0: degrees of G_2 minus its symmetric part, and imbalances, against g0

  double measured_gamma(int i) const {
    double a = pinv_error[i] < 1.0 ? 1.0 / (1.0 - pinv_error[i]) : kInf;
    double b = range[i].hi, c = range[i].lo > 0.0 ? 1.0 / range[i].lo : kInf;
    return std::max({a, b, c});
  }
  bool condition1(int i) const { return pinv_error[i] <= 1.0 - 1.0 / gamma + 1e-12; }
  bool condition2(int i) const {
    return range[i].lo >= 1.0 / gamma * (1.0 - 1e-9) && range[i].hi <= gamma * (1.0 + 1e-9);
  }
  bool condition3(double tol = 1e-9) const {
    if (!eulerian) return layer_gap <= tol && exact_degrees;
    for (int i = 1; i <= 3; ++i)
      if (degree_gap[i] > tol) return false;
    return exact_degrees;
  }
  bool level_pass(int i) const { return !eulerian || (condition1(i) && condition2(i)); }
  bool pass() const { return condition3() && level_pass(1) && level_pass(2) && level_pass(3); }
};

namespace detail {

inline double degree_factor_gap(const Matrix& L0, const Matrix& Li, double factor) {
  // row sums of vL give out minus in; the diagonal gives out-degrees
  double s = std::max(1.0, L0.diagonal().cwiseAbs().maxCoeff());
  Vector out0 = L0.diagonal(), outi = Li.diagonal();
  Vector in0 = out0 - L0.rowwise().sum(), ini = outi - Li.rowwise().sum();
  return std::max((factor * out0 - outi).cwiseAbs().maxCoeff(), (factor * in0 - ini).cwiseAbs().maxCoeff()) /
         (factor * s);
}

// Exact degrees of Sc(h, V) against d_{g0} for a star layer on n + aux vertices.
inline bool exact_layer_degrees(const DiGraph& g0, const std::vector<RationalEdge>& h, int total) {
  const int n = g0.n();
  auto d0 = degree_vectors(n, to_rational(g0.edges()));
  auto s = eliminate_stars_exact(n, total, h);
  auto ds = degree_vectors(n, s);
  for (int v = 0; v < n; ++v)
    if (ds.out[v] != d0.out[v] || ds.in[v] != d0.in[v]) return false;
  return true;
}

}  // namespace detail

// Conditions 1-3 by dense oracles; condition 1 and 2 skipped (eulerian = false) on non-Eulerian g0.
inline QuadrupleAudit audit_quadruple(const Quadruple& q) {
  QuadrupleAudit a;
  a.gamma = q.gamma;
  a.closed_form_1 = 1.0 - 1.0 / (1.0 + 2.0 * q.beta);
  std::array<Matrix, 4> vL;
  for (int i = 0; i < 4; ++i) vL[i] = q.laplacian(i);
  a.factor = {1.0, 1.0 + 2.0 * q.beta, 1.0 + 2.0 * q.beta, 1.0 + 2.0 * q.beta * q.scale / q.alpha};
  for (int i = 1; i < 4; ++i) a.degree_gap[i] = detail::degree_factor_gap(vL[0], vL[i], a.factor[i]);
  if (!q.h2_exact.empty() || q.g0.m() == 0) {
    a.exact_checked = true;
    a.exact_degrees = detail::exact_layer_degrees(q.g0, q.h2_exact, q.n + q.n_x);
  }
  a.eulerian = is_eulerian(q.g0, 1e-12);
  if (!a.eulerian) {
    double s = std::max(1.0, vL[0].diagonal().cwiseAbs().maxCoeff());
    a.layer_gap = detail::degree_factor_gap(vL[0], vL[2] - q.beta * undirected_laplacian(q.g0), 1.0);
    for (int i = 1; i < 4; ++i)
      a.layer_gap = std::max(a.layer_gap, (vL[i].rowwise().sum() - vL[0].rowwise().sum()).cwiseAbs().maxCoeff() / s);
    return a;
  }
  std::array<Matrix, 4> L;
  L[0] = undirected_laplacian(q.g0);
  for (int i = 1; i < 4; ++i) L[i] = vL[i] + vL[i].transpose();
  for (int i = 1; i < 4; ++i) {
    a.pinv_error[i] = approx_pinv_error(pinv_general(vL[i]), vL[i - 1], L[i]);
    a.range[i] = relative_spectrum(L[i], L[i - 1]);
  }
  return a;
}

// ---------------------------------------------------------------------------
// Dynamic maintenance

// Undirected layer: und(g) in classes by highest differing label bit (each class bipartite), a dynamic
// expander decomposition per class, and per piece an MSF-bundle cut sparsifier patched by mirrored stars.
class DynCutStarLayer {
 public:
  DynCutStarLayer(int n, const QuadrupleConfig& cfg) : n_(n), cfg_(cfg) {}

  void init(const UGraph& u) {
    std::map<int, std::vector<Edge>> classes;
    for (const auto& e : u.edges) classes[class_of(e.u, e.v)].push_back(e);
    for (const auto& [c, es] : classes) process(c, decomposition(c).init(es));
  }

  // Sets the undirected weight of {a, b}; zero removes it.
  void set_weight(int a, int b, double w_old, double w_new) {
    if (a > b) std::swap(a, b);
    int c = class_of(a, b);
    if (w_old > 0.0) process(c, decomposition(c).erase(a, b));
    if (w_new > 0.0) process(c, decomposition(c).insert(a, b, w_new));
  }

  std::size_t num_pieces() const { return pieces_.size(); }
  std::size_t rebuilds() const { return rebuilds_; }

  // H on n + n_y vertices with vL(Sc(H, V)) = scale L_S.
  DiGraph graph(int& n_y) const {
    std::vector<Edge> all;
    int aux = 0;
    const double s2 = 2.0 * cfg_.scale;
    for (const auto& [k, p] : pieces_) {
      bool used = false;
      for (const auto& e : p.rep.edges()) {
        int a = e.u < n_ ? e.u : n_ + aux + (e.u - n_);
        int b = e.v < n_ ? e.v : n_ + aux + (e.v - n_);
        used |= e.u >= n_ || e.v >= n_;
        all.push_back({a, b, s2 * e.w});
      }
      aux += used ? 2 : 0;
    }
    n_y = aux;
    DiGraph h(n_ + aux);
    for (const auto& e : all) h.add_weight(e.u, e.v, e.w);
    return h;
  }

 private:
  struct CutPiece {
    std::vector<int> ids;
    std::unordered_set<int> alive;
    std::unordered_map<int, double> sparsifier;  // decomposition id -> weight
    std::unordered_set<int> bundle;
    std::size_t m_build = 0;
    std::size_t deletions = 0;
    std::uint64_t builds = 0;
    DiGraph rep;  // n + 2 vertices
  };

  int class_of(int a, int b) const {
    unsigned x = static_cast<unsigned>(a) ^ static_cast<unsigned>(b);
    return 31 - __builtin_clz(x);
  }

  DynamicDecomposition& decomposition(int c) {
    auto it = dec_.find(c);
    if (it == dec_.end())
      it = dec_.emplace(c, DynamicDecomposition(n_, cfg_.decomp, derive_seed(cfg_.seed, 5, static_cast<std::uint64_t>(c)))).first;
    return it->second;
  }

  void process(int c, const ChangeLog& log) {
    auto& dec = decomposition(c);
    for (const auto& ev : log.events) {
      std::pair<int, int> key{c, ev.piece};
      switch (ev.kind) {
        case ChangeEvent::PieceAdded: {
          if (!dec.has_piece(ev.piece)) break;
          CutPiece p;
          p.ids = dec.piece(ev.piece).edges;
          p.alive.insert(p.ids.begin(), p.ids.end());
          auto it = pieces_.emplace(key, std::move(p)).first;
          rebuild(c, ev.piece, it->second);
          break;
        }
        case ChangeEvent::PieceRemoved: pieces_.erase(key); break;
        case ChangeEvent::EdgeDeleted: {
          auto it = pieces_.find(key);
          if (it == pieces_.end()) break;
          auto& p = it->second;
          p.alive.erase(ev.edge);
          ++p.deletions;
          if (p.bundle.count(ev.edge) || static_cast<double>(p.deletions) > cfg_.rebuild_frac * static_cast<double>(p.m_build)) {
            rebuild(c, ev.piece, p);
          } else {
            p.sparsifier.erase(ev.edge);
            patch(c, p);
          }
          break;
        }
      }
    }
  }

  std::vector<int> live_ids(const CutPiece& p) const {
    std::vector<int> ids;
    for (int id : p.ids)
      if (p.alive.count(id)) ids.push_back(id);
    return ids;
  }

  void rebuild(int c, int pid, CutPiece& p) {
    const auto& dec = decomposition(c);
    auto ids = live_ids(p);
    UGraph local{n_, {}};
    for (int id : ids) local.edges.push_back(dec.edge(id));
    auto in = tbundle_msf(local, cfg_.bundle_t).membership(ids.size());
    Rng rng(derive_seed(derive_seed(cfg_.seed, 6, static_cast<std::uint64_t>(c)), static_cast<std::uint64_t>(pid), p.builds));
    p.sparsifier.clear();
    p.bundle.clear();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto& e = dec.edge(ids[k]);
      if (in[k]) {
        p.bundle.insert(ids[k]);
        p.sparsifier[ids[k]] = e.w;
      } else if (rng.bernoulli(cfg_.keep_p)) {
        p.sparsifier[ids[k]] = e.w / cfg_.keep_p;
      }
    }
    p.m_build = ids.size();
    p.deletions = 0;
    ++p.builds;
    ++rebuilds_;
    patch(c, p);
  }

  // eta = min(1 / gamma_cut, min_v d_v / d~_v) keeps every star demand nonnegative.
  void patch(int c, CutPiece& p) {
    const auto& dec = decomposition(c);
    std::vector<Edge> ge, ce;
    auto ids = live_ids(p);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
      ge.push_back(dec.edge(id));
      auto it = p.sparsifier.find(id);
      if (it != p.sparsifier.end()) ce.push_back({dec.edge(id).u, dec.edge(id).v, it->second});
    }
    std::vector<double> d(n_, 0.0), dc(n_, 0.0);
    for (const auto& e : ge) d[e.u] += e.w, d[e.v] += e.w;
    for (const auto& e : ce) dc[e.u] += e.w, dc[e.v] += e.w;
    double eta = 1.0 / cfg_.gamma_cut;
    for (int v = 0; v < n_; ++v)
      if (dc[v] > 0.0) eta = std::min(eta, d[v] / dc[v]);
    std::vector<char> side(n_);
    for (int v = 0; v < n_; ++v) side[v] = static_cast<char>((v >> c) & 1);
    p.rep = mirrored_stars(n_, ge, ce, side, eta);
  }

  int n_;
  QuadrupleConfig cfg_;
  std::map<int, DynamicDecomposition> dec_;
  std::map<std::pair<int, int>, CutPiece> pieces_;
  std::size_t rebuilds_ = 0;
};

// Directed layer: strict bit-label classes of blift(g), a dynamic expander decomposition per class and one
// full-degree star per piece. Stars are a function of the piece edge sets, so no randomness reaches them.
class DynStarLayer {
 public:
  DynStarLayer(const DiGraph& g, const QuadrupleConfig& cfg) : n_(g.n()), cfg_(cfg) {
    std::map<int, std::vector<Edge>> classes;
    for (const auto& e : g.edges()) classes[bit_label_class(e.u, e.v)].push_back({e.u, e.v + n_, e.w});
    for (const auto& [c, es] : classes) process(c, decomposition(c).init(es));
  }

  // Number of star edge weights changed.
  std::size_t update(const UpdateEvent& ev) {
    int c = bit_label_class(ev.u, ev.v);
    if (ev.kind == UpdateEvent::Insert) return process(c, decomposition(c).insert(ev.u, ev.v + n_, ev.w));
    auto it = dec_.find(c);
    if (it == dec_.end()) throw MissingEdge("update: missing edge");
    return process(c, it->second.erase(ev.u, ev.v + n_));
  }

  std::size_t num_pieces() const { return pieces_.size(); }

  // Centers n, n + 1, ... in piece order; pieces without edges get none.
  DiGraph graph(int& n_x) const {
    std::vector<Edge> all;
    int aux = 0;
    for (const auto& [k, p] : pieces_) {
      auto es = p.star.edges();
      if (es.empty()) continue;
      for (auto e : es) {
        if (e.u < 0) e.u = n_ + aux;
        if (e.v < 0) e.v = n_ + aux;
        all.push_back(e);
      }
      ++aux;
    }
    n_x = aux;
    DiGraph h(n_ + aux);
    for (const auto& e : all) h.add_edge(e.u, e.v, e.w);
    return h;
  }

  std::vector<RationalEdge> exact_graph() const {
    std::vector<RationalEdge> all;
    int aux = 0;
    for (const auto& [k, p] : pieces_) {
      const auto& dec = dec_.at(k.first);
      std::map<int, Rational> d1, d2;
      for (int id : p.ids)
        if (dec.alive(id) && dec.piece_of(id) == k.second) {
          const auto& e = dec.edge(id);
          Rational w = to_rational(e.w);
          d1[e.u] += w;
          d2[e.v - n_] += w;
        }
      if (d1.empty()) continue;
      for (const auto& [v, w] : d1) all.push_back({v, n_ + aux, w});
      for (const auto& [v, w] : d2) all.push_back({n_ + aux, v, w});
      ++aux;
    }
    return all;
  }

 private:
  struct StarPiece {
    std::vector<int> ids;
    std::unordered_map<int, std::vector<int>> out, in;  // head / tail (original ids) -> decomposition ids
    DynStarPatcher<double> star;
  };

  DynamicDecomposition& decomposition(int c) {
    auto it = dec_.find(c);
    if (it == dec_.end())
      it = dec_.emplace(c, DynamicDecomposition(2 * n_, cfg_.decomp, derive_seed(cfg_.seed, 1, static_cast<std::uint64_t>(c)))).first;
    return it->second;
  }

  double degree(int c, int pid, const std::vector<int>& ids) const {
    const auto& dec = dec_.at(c);
    double x = 0.0;
    for (int id : ids)
      if (dec.alive(id) && dec.piece_of(id) == pid) x += dec.edge(id).w;
    return x;
  }

  std::size_t refresh(int c, int pid, StarPiece& p, int head, int tail) {
    std::size_t r = 0;
    double a = degree(c, pid, p.out[head]), b = degree(c, pid, p.in[tail]);
    if (p.star.d1(head) != a) p.star.set1(head, a), ++r;
    if (p.star.d2(tail) != b) p.star.set2(tail, b), ++r;
    return r;
  }

  std::size_t process(int c, const ChangeLog& log) {
    auto& dec = decomposition(c);
    std::size_t r = 0;
    for (const auto& ev : log.events) {
      std::pair<int, int> key{c, ev.piece};
      switch (ev.kind) {
        case ChangeEvent::PieceAdded: {
          if (!dec.has_piece(ev.piece)) break;
          StarPiece p;
          p.ids = dec.piece(ev.piece).edges;
          std::sort(p.ids.begin(), p.ids.end());
          p.star = DynStarPatcher<double>(n_, -1);
          for (int id : p.ids) {
            p.out[dec.edge(id).u].push_back(id);
            p.in[dec.edge(id).v - n_].push_back(id);
          }
          auto it = pieces_.emplace(key, std::move(p)).first;
          auto& q = it->second;
          for (const auto& [v, ids] : q.out) q.star.set1(v, degree(c, ev.piece, ids)), ++r;
          for (const auto& [v, ids] : q.in) q.star.set2(v, degree(c, ev.piece, ids)), ++r;
          break;
        }
        case ChangeEvent::PieceRemoved: {
          auto it = pieces_.find(key);
          if (it == pieces_.end()) break;
          r += it->second.star.edges().size();
          pieces_.erase(it);
          break;
        }
        case ChangeEvent::EdgeDeleted: {
          auto it = pieces_.find(key);
          if (it == pieces_.end()) break;
          const auto& e = dec.edge(ev.edge);
          r += refresh(c, ev.piece, it->second, e.u, e.v - n_);
          break;
        }
      }
    }
    return r;
  }

  int n_;
  QuadrupleConfig cfg_;
  std::map<int, DynamicDecomposition> dec_;
  std::map<std::pair<int, int>, StarPiece> pieces_;
};

// Maintains both layers edge by edge; snapshots assemble the quadruple.
class DynQuadruple {
 public:
  DynQuadruple(const DiGraph& g, const QuadrupleConfig& cfg = {})
      : g_(g), cfg_(validated(cfg)), directed_(g, cfg), undirected_(g.n(), cfg) {
    undirected_.init(und(g));
  }

  const DiGraph& graph() const { return g_; }
  const QuadrupleConfig& config() const { return cfg_; }
  std::size_t updates() const { return updates_; }

  // Returns the number of changed star weights in the directed layer.
  std::size_t update(const UpdateEvent& ev) {
    const int n = g_.n();
    if (ev.u < 0 || ev.v < 0 || ev.u >= n || ev.v >= n || ev.u == ev.v) throw PreconditionError("update: invalid endpoints");
    double before = g_.weight(ev.u, ev.v) + g_.weight(ev.v, ev.u);
    std::size_t r = 0;
    if (ev.kind == UpdateEvent::Insert) {
      if (g_.has_edge(ev.u, ev.v)) throw PreconditionError("update: edge already present");
      if (!(ev.w > 0.0)) throw PreconditionError("update: weight must be positive");
      r = directed_.update(ev);
      g_.add_edge(ev.u, ev.v, ev.w);
    } else {
      if (!g_.has_edge(ev.u, ev.v)) throw MissingEdge("update: missing edge");
      r = directed_.update(ev);
      g_.remove_edge(ev.u, ev.v);
    }
    double after = g_.weight(ev.u, ev.v) + g_.weight(ev.v, ev.u);
    undirected_.set_weight(ev.u, ev.v, before, after);
    ++updates_;
    return r;
  }

  Quadruple snapshot() const {
    Quadruple q;
    q.g0 = g_;
    q.n = g_.n();
    q.beta = cfg_.beta;
    q.alpha = cfg_.alpha_value();
    q.gamma = cfg_.gamma_value();
    q.scale = cfg_.scale;
    q.lambda = cfg_.lambda;
    q.h2 = directed_.graph(q.n_x);
    if (cfg_.rational) q.h2_exact = directed_.exact_graph();
    q.directed_pieces = directed_.num_pieces();
    q.h3 = undirected_.graph(q.n_y);
    q.undirected_pieces = undirected_.num_pieces();
    return q;
  }

 private:
  static const QuadrupleConfig& validated(const QuadrupleConfig& c) {
    if (!(c.beta > 0.0)) throw PreconditionError("quadruple: beta must be positive");
    if (!(c.scale > 0.0) || !(c.lambda >= 1.0)) throw PreconditionError("quadruple: need scale > 0, lambda >= 1");
    if (!(c.alpha_value() > 0.0) || !(c.gamma_value() >= 1.0)) throw PreconditionError("quadruple: need alpha > 0, gamma >= 1");
    if (!(c.keep_p > 0.0 && c.keep_p <= 1.0) || c.bundle_t < 1 || !(c.gamma_cut >= 1.0))
      throw PreconditionError("quadruple: invalid cut sparsifier settings");
    return c;
  }

  DiGraph g_;
  QuadrupleConfig cfg_;
  DynStarLayer directed_;
  DynCutStarLayer undirected_;
  std::size_t updates_ = 0;
};

inline Quadruple build_quadruple(const DiGraph& g, const QuadrupleConfig& cfg = {}) {
  DynQuadruple d(g, cfg);
  return d.snapshot();
}

// ---------------------------------------------------------------------------
// Solvers

// x_{k+1} = x_k + Z (b - M x_k) from x_0 = 0.
inline Vector precon_richardson(const Matrix& M, const Matrix& Z, const Vector& b, int N) {
  Vector x = Vector::Zero(b.size());
  for (int k = 0; k < N; ++k) x += Z * (b - M * x);
  return x;
}

// Z_N with x_N = Z_N b.
inline Matrix richardson_operator(const Matrix& M, const Matrix& Z, int N) {
  const auto n = M.rows();
  Matrix X = Matrix::Zero(n, n);
  const Matrix I = Matrix::Identity(n, n);
  for (int k = 0; k < N; ++k) X += Z * (I - M * X);
  return X;
}

struct EulerianSolveOptions {
  std::array<int, 2> inner{4, 4};  // Richardson steps at levels 1 and 2
  int max_outer = 2000;
};

struct EulerianSolve {
  Vector x;
  int outer = 0;
  double residual = 0.0;  // ||vL x - b|| / ||b||
  bool converged = false;
};

// Outer Richardson on vL_{G0} preconditioned by nested Richardson on G1, G2 and a dense solve on G3'.
inline EulerianSolve solve_eulerian(const DiGraph& g, const Quadruple& q, const Vector& b, double eps_solve,
                                    const EulerianSolveOptions& opt = {}) {
  const int n = g.n();
  if (b.size() != n || q.n != n) throw DimensionMismatch("solve_eulerian: dimensions");
  if (!is_eulerian(g, 1e-12)) throw PreconditionError("solve_eulerian: graph is not Eulerian");
  EulerianSolve out;
  out.x = Vector::Zero(n);
  const double bn = b.norm();
  if (bn == 0.0) {
    out.converged = true;
    return out;
  }
  auto comp = component_labels(und(g));
  Vector bp = b;
  {
    std::map<int, std::pair<double, int>> acc;
    for (int v = 0; v < n; ++v) acc[comp[v]].first += b(v), ++acc[comp[v]].second;
    double off = 0.0;
    for (const auto& [c, s] : acc) off = std::max(off, std::abs(s.first));
    if (off > 1e-9 * bn) throw PreconditionError("solve_eulerian: b is not orthogonal to ker(vL^T)");
  }
  const Matrix M0 = directed_laplacian(g), M1 = q.laplacian(1), M2 = q.laplacian(2);
  const DiGraph g3 = q.g3_prime();
  const Matrix Z3 = pinv_general(directed_laplacian(g3));
  const int total = g3.n();
  auto apply3 = [&](const Vector& r) {
    Vector rr = Vector::Zero(total);
    rr.head(n) = r;
    return Vector((Z3 * rr).head(n));
  };
  auto level = [&](const Matrix& M, int steps, auto&& inner) {
    return [&M, steps, inner](const Vector& r) {
      Vector x = Vector::Zero(r.size());
      for (int k = 0; k < steps; ++k) x += inner(r - M * x);
      return x;
    };
  };
  auto apply2 = level(M2, opt.inner[1], apply3);
  auto apply1 = level(M1, opt.inner[0], apply2);
  Vector r = bp;
  while (out.outer < opt.max_outer) {
    out.x += apply1(r);
    ++out.outer;
    r = bp - M0 * out.x;
    if (r.norm() <= eps_solve * bn) {
      out.converged = true;
      break;
    }
  }
  out.residual = r.norm() / bn;
  return out;
}

}  // namespace dsparse
