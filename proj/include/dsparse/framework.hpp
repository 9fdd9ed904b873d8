#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dsparse/degree_sparsifier.hpp"
#include "dsparse/dicut.hpp"
#include "dsparse/dyn_msf.hpp"
#include "dsparse/errors.hpp"
#include "dsparse/expander.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/patchers.hpp"
#include "dsparse/spectral.hpp"

namespace dsparse {

struct UpdateRecord {
  std::size_t index = 0;
  UpdateEvent::Kind kind = UpdateEvent::Insert;
  std::size_t recourse = 0;
  double micros = 0.0;
  std::size_t pieces = 0;
};

struct SnapshotRecord {
  std::size_t after_update = 0;
  std::string check;
  double value = 0.0;
  bool pass = false;
};

// Append-only log of updates and audits.
struct Metrics {
  std::vector<UpdateRecord> updates;
  std::vector<SnapshotRecord> snapshots;

  std::size_t max_recourse() const {
    std::size_t r = 0;
    for (const auto& u : updates) r = std::max(r, u.recourse);
    return r;
  }
  std::size_t total_recourse() const {
    std::size_t r = 0;
    for (const auto& u : updates) r += u.recourse;
    return r;
  }
  double amortized_recourse() const {
    return updates.empty() ? 0.0 : static_cast<double>(total_recourse()) / static_cast<double>(updates.size());
  }
};

enum class DynMode { SpectralStar, SpectralExternal, SpectralInternal, DicutAmortized, DicutWorstCase };

inline std::string to_string(DynMode m) {
  switch (m) {
    case DynMode::SpectralStar: return "SpectralStar";
    case DynMode::SpectralExternal: return "SpectralExternal";
    case DynMode::SpectralInternal: return "SpectralInternal";
    case DynMode::DicutAmortized: return "DicutAmortized";
    case DynMode::DicutWorstCase: return "DicutWorstCase";
  }
  return "?";
}

namespace detail {

struct PieceState {
  int cls = 0;
  int pid = -1;
  std::vector<int> ids;                // decomposition edge ids
  std::unordered_map<int, int> local;  // decomposition edge id -> sparsifier index
  DegreeSparsifier ds;
  // spectral patching
  double xi = 1.0;
  std::vector<double> d1, d2;
  std::vector<std::vector<int>> out, in;  // local incidences by head / tail
  IntervalPatcher<double> ext;
};

using PieceKey = std::pair<int, int>;

// One dynamic decomposition per edge class and one decremental degree sparsifier per piece.
class PieceFramework {
 public:
  virtual ~PieceFramework() = default;

  const Metrics& metrics() const { return metrics_; }
  Metrics& metrics() { return metrics_; }
  std::size_t num_pieces() const { return pieces_.size(); }
  std::size_t m() const {
    std::size_t s = 0;
    for (const auto& [c, d] : dec_) s += d.m();
    return s;
  }

 protected:
  PieceFramework(int N, DecompOptions opt, std::uint64_t seed) : N_(N), opt_(opt), seed_(seed) {}

  virtual double piece_rho() const = 0;
  virtual std::size_t on_added(PieceState& s) = 0;
  virtual std::size_t on_changed(PieceState& s, int deleted, const std::vector<WeightChange>& ch) = 0;
  virtual std::size_t on_removed(PieceState& s) = 0;

  DynamicDecomposition& decomposition(int cls) {
    auto it = dec_.find(cls);
    if (it == dec_.end())
      it = dec_.emplace(cls, DynamicDecomposition(N_, opt_, derive_seed(seed_, 1, static_cast<std::uint64_t>(cls)))).first;
    return it->second;
  }

  std::size_t run_init(const std::map<int, std::vector<Edge>>& classes) {
    std::size_t r = 0;
    for (const auto& [c, es] : classes) r += process(c, decomposition(c).init(es));
    return r;
  }

  std::size_t run_update(int cls, const UpdateEvent& ev, int lu, int lv) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t r = 0;
    if (ev.kind == UpdateEvent::Insert) {
      r = process(cls, decomposition(cls).insert(lu, lv, ev.w));
    } else {
      auto it = dec_.find(cls);
      if (it == dec_.end() || it->second.edge_id(lu, lv) < 0)
        throw MissingEdge("delete: missing edge " + std::to_string(ev.u) + "->" + std::to_string(ev.v));
      r = process(cls, it->second.erase(lu, lv));
    }
    auto t1 = std::chrono::steady_clock::now();
    metrics_.updates.push_back({metrics_.updates.size(), ev.kind, r,
                                std::chrono::duration<double, std::micro>(t1 - t0).count(), pieces_.size()});
    return r;
  }

  std::size_t process(int cls, const ChangeLog& log) {
    auto& dec = decomposition(cls);
    std::size_t r = 0;
    for (const auto& ev : log.events) {
      PieceKey key{cls, ev.piece};
      switch (ev.kind) {
        case ChangeEvent::PieceAdded: {
          if (!dec.has_piece(ev.piece)) break;
          PieceState s;
          s.cls = cls;
          s.pid = ev.piece;
          s.ids = dec.piece(ev.piece).edges;
          std::vector<Edge> es;
          for (std::size_t k = 0; k < s.ids.size(); ++k) {
            s.local[s.ids[k]] = static_cast<int>(k);
            es.push_back(dec.edge(s.ids[k]));
          }
          s.ds = DegreeSparsifier(N_, std::move(es), piece_rho(),
                                  derive_seed(seed_, 2, static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(ev.piece)));
          auto it = pieces_.emplace(key, std::move(s)).first;
          r += on_added(it->second);
          break;
        }
        case ChangeEvent::PieceRemoved: {
          auto it = pieces_.find(key);
          if (it == pieces_.end()) break;
          r += on_removed(it->second);
          pieces_.erase(it);
          break;
        }
        case ChangeEvent::EdgeDeleted: {
          auto it = pieces_.find(key);
          if (it == pieces_.end()) break;
          int k = it->second.local.at(ev.edge);
          auto ch = it->second.ds.erase(k);
          r += on_changed(it->second, k, ch);
          break;
        }
      }
    }
    return r;
  }

  static std::size_t nnz_weights(const DegreeSparsifier& ds) {
    std::size_t k = 0;
    for (double x : ds.reweighting()) k += x > 0.0;
    return k;
  }

  int N_;
  DecompOptions opt_;
  std::uint64_t seed_;
  std::map<int, DynamicDecomposition> dec_;
  std::map<PieceKey, PieceState> pieces_;
  Metrics metrics_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectral

struct DynSpectralConfig {
  double eps = 0.5;
  double delta = 0.1;
  Scheme scheme = Scheme::Star;
  bool strict_degree = false;
  double c_ss = 1.0;
  std::optional<double> rho;
  DecompOptions decomp;
  std::uint64_t seed = 0;
};

// Maintains blift(G) split into classes, pieces and per-piece decremental samples with their patchings.
class DynSpectral : public detail::PieceFramework {
 public:
  DynSpectral(const DiGraph& g, const DynSpectralConfig& cfg)
      : PieceFramework(2 * g.n(), cfg.decomp, cfg.seed), n_(g.n()), cfg_(cfg) {
    auto les = blift(g).lifted.edges();
    delta_piece_ = cfg.delta / (2.0 * static_cast<double>(std::max<std::size_t>(1, les.size())));
    std::map<int, std::vector<Edge>> classes;
    for (const auto& e : les) classes[class_of(e.u, e.v - n_)].push_back(e);
    run_init(classes);
  }

  int n() const { return n_; }
  const DynSpectralConfig& config() const { return cfg_; }
  double rho() const { return piece_rho(); }
  std::size_t fallbacks() const { return fallbacks_; }
  std::size_t xi_shrinks() const { return xi_shrinks_; }

  std::size_t update(const UpdateEvent& ev) {
    if (ev.u < 0 || ev.v < 0 || ev.u >= n_ || ev.v >= n_ || ev.u == ev.v)
      throw PreconditionError("update: invalid endpoints");
    return run_update(class_of(ev.u, ev.v), ev, ev.u, ev.v + n_);
  }

  // xi w' on (u, v) plus the external patching through (u, v + n).
  double query_edge(int u, int v) const {
    if (cfg_.scheme == Scheme::Internal) throw QueryUnsupported("query_edge unsupported in Internal mode");
    double x = 0.0;
    auto dit = dec_.find(class_of(u, v));
    if (dit != dec_.end()) {
      int id = dit->second.edge_id(u, v + n_);
      if (id >= 0) {
        const auto& s = pieces_.at({dit->first, dit->second.piece_of(id)});
        x += s.xi * s.ds.weight(s.local.at(id));
      }
    }
    if (cfg_.scheme == Scheme::External)
      for (const auto& [k, s] : pieces_) x += s.ext.query_edge(u, v + n_);
    return x;
  }

  // Unlifted sparsifier on n + n_aux vertices.
  SpectralResult query_graph() {
    SpectralResult out;
    out.n = n_;
    out.pieces = pieces_.size();
    std::vector<Edge> hl;
    int aux = 0;
    for (auto& [k, s] : pieces_) {
      std::vector<Edge> es;
      std::vector<double> wp;
      alive_edges(s, es, wp);
      out.kept += std::count_if(wp.begin(), wp.end(), [](double x) { return x > 0.0; });
      out.lifted_edges += es.size();
      if (cfg_.scheme != Scheme::Internal)
        for (std::size_t i = 0; i < es.size(); ++i)
          if (wp[i] > 0.0) hl.push_back({es[i].u, es[i].v, s.xi * wp[i]});
      switch (cfg_.scheme) {
        case Scheme::Star: {
          bool used = false;
          for (int v = 0; v < N_; ++v) {
            if (s.d1[v] > 0.0) hl.push_back({v, N_ + aux, s.d1[v]}), used = true;
            if (s.d2[v] > 0.0) hl.push_back({N_ + aux, v, s.d2[v]}), used = true;
          }
          aux += used;
          break;
        }
        case Scheme::External:
          for (const auto& f : s.ext.query_all()) hl.push_back(f);
          break;
        case Scheme::Internal: {
          const double phi = opt_.phi_target;
          try {
            for (const auto& e : patching_internal(N_, es, wp, s.xi, cfg_.eps, phi, opt_)) hl.push_back(e);
          } catch (const ConditionViolated&) {
            ++fallbacks_;
            ++out.fallbacks;
            double xe = dominating_xi(N_, es, wp, xi_formula(cfg_.eps, phi, 1.0));
            for (const auto& e : patching_external(N_, es, wp, xe)) hl.push_back(e);
          }
          break;
        }
      }
    }
    out.n_aux = aux;
    auto grp = unlift_groups(N_ + aux, n_);
    out.h = DiGraph(n_ + aux);
    for (const auto& e : hl) {
      int a = grp[e.u], b = grp[e.v];
      if (a != b && e.w > 0.0) out.h.add_weight(a, b, e.w);
    }
    return out;
  }

  // Current input graph.
  DiGraph graph() const {
    DiGraph g(n_);
    for (const auto& [c, d] : dec_)
      for (const auto& e : d.current_edges()) g.add_edge(e.u, e.v - n_, e.w);
    return g;
  }

  // Maintained demands and patchers against a from-scratch recomputation.
  bool audit() const {
    for (const auto& [c, d] : dec_)
      if (!d.audit()) return false;
    std::size_t count = 0;
    for (const auto& [c, d] : dec_) count += d.num_pieces();
    if (count != pieces_.size()) return false;
    for (const auto& [k, s] : pieces_) {
      const auto& dec = dec_.at(k.first);
      std::vector<int> ids = dec.piece(k.second).edges;
      std::sort(ids.begin(), ids.end());
      std::vector<int> live;
      for (int id : s.ids)
        if (s.ds.alive(s.local.at(id))) live.push_back(id);
      std::sort(live.begin(), live.end());
      if (ids != live) return false;
      if (cfg_.scheme == Scheme::Internal) continue;
      for (int v = 0; v < N_; ++v) {
        if (s.d1[v] != demand(s, v, true) || s.d2[v] != demand(s, v, false)) return false;
        if (cfg_.scheme == Scheme::External && (s.ext.d1(v) != s.d1[v] || s.ext.d2(v) != s.d2[v])) return false;
        if (s.d1[v] < 0.0 || s.d2[v] < 0.0) return false;
      }
    }
    return true;
  }

 protected:
  double piece_rho() const override {
    const double phi = opt_.phi_target;
    return cfg_.rho.value_or(rho_formula(cfg_.c_ss, cfg_.eps, phi, eta_for(cfg_.scheme, phi, N_), N_, delta_piece_));
  }

  std::size_t on_added(detail::PieceState& s) override {
    const double phi = opt_.phi_target;
    s.out.assign(N_, {});
    s.in.assign(N_, {});
    for (int k = 0; k < static_cast<int>(s.ids.size()); ++k) {
      s.out[s.ds.edge(k).u].push_back(k);
      s.in[s.ds.edge(k).v].push_back(k);
    }
    s.xi = xi_formula(cfg_.eps, phi, eta_for(cfg_.scheme, phi, N_));
    if (cfg_.scheme == Scheme::Internal) return nnz_weights(s.ds);
    rebalance(s);
    return explicit_size(s);
  }

  std::size_t on_changed(detail::PieceState& s, int deleted, const std::vector<WeightChange>& ch) override {
    if (cfg_.scheme == Scheme::Internal) return ch.size();
    std::vector<int> heads{s.ds.edge(deleted).u}, tails{s.ds.edge(deleted).v};
    for (const auto& c : ch) {
      heads.push_back(s.ds.edge(c.edge).u);
      tails.push_back(s.ds.edge(c.edge).v);
    }
    for (auto* vs : {&heads, &tails}) {
      std::sort(vs->begin(), vs->end());
      vs->erase(std::unique(vs->begin(), vs->end()), vs->end());
    }
    bool dominated = true;
    for (int h : heads) dominated &= demand(s, h, true) >= 0.0;
    for (int t : tails) dominated &= demand(s, t, false) >= 0.0;
    if (!dominated) {
      ++xi_shrinks_;
      std::size_t before = explicit_size(s);
      rebalance(s);
      return before + explicit_size(s);
    }
    std::size_t r = ch.size();
    for (int h : heads) {
      double x = demand(s, h, true);
      if (x != s.d1[h]) {
        ++r;
        s.d1[h] = x;
        if (cfg_.scheme == Scheme::External) s.ext.set1(h, x);
      }
    }
    for (int t : tails) {
      double x = demand(s, t, false);
      if (x != s.d2[t]) {
        ++r;
        s.d2[t] = x;
        if (cfg_.scheme == Scheme::External) s.ext.set2(t, x);
      }
    }
    return r;
  }

  std::size_t on_removed(detail::PieceState& s) override {
    return cfg_.scheme == Scheme::Internal ? nnz_weights(s.ds) : explicit_size(s);
  }

 private:
  int class_of(int u, int v) const { return cfg_.strict_degree ? bit_label_class(u, v) : 0; }

  static void alive_edges(const detail::PieceState& s, std::vector<Edge>& es, std::vector<double>& wp) {
    for (int k = 0; k < static_cast<int>(s.ids.size()); ++k)
      if (s.ds.alive(k)) {
        es.push_back(s.ds.edge(k));
        wp.push_back(s.ds.weight(k));
      }
  }

  // Sum of w - xi w' over live incidences of v in incidence order; fixed order keeps it reproducible.
  static double demand(const detail::PieceState& s, int v, bool head) {
    double x = 0.0, scale = 0.0;
    for (int k : head ? s.out[v] : s.in[v]) {
      if (!s.ds.alive(k)) continue;
      x += s.ds.edge(k).w - s.xi * s.ds.weight(k);
      scale += s.ds.edge(k).w;
    }
    if (x < 0.0 && x > -1e-12 * scale) x = 0.0;
    return x;
  }

  // Shrinks xi until it dominates, then recomputes every demand.
  void rebalance(detail::PieceState& s) {
    std::vector<Edge> es;
    std::vector<double> wp;
    alive_edges(s, es, wp);
    s.xi = dominating_xi(N_, es, wp, s.xi);
    s.d1.assign(N_, 0.0);
    s.d2.assign(N_, 0.0);
    for (int v = 0; v < N_; ++v) {
      s.d1[v] = std::max(0.0, demand(s, v, true));
      s.d2[v] = std::max(0.0, demand(s, v, false));
    }
    if (cfg_.scheme == Scheme::External) s.ext.init(s.d1, s.d2);
  }

  static std::size_t explicit_size(const detail::PieceState& s) {
    std::size_t k = nnz_weights(s.ds);
    for (double x : s.d1) k += x > 0.0;
    for (double x : s.d2) k += x > 0.0;
    return k;
  }

  int n_;
  DynSpectralConfig cfg_;
  double delta_piece_ = 0.1;
  std::size_t fallbacks_ = 0, xi_shrinks_ = 0;
};

// ---------------------------------------------------------------------------
// Directed cuts, amortized

struct DynDicutConfig {
  double c_bal = 1.0;
  double delta = 0.1;
  std::optional<double> rho;
  DecompOptions decomp;
};

// Per-piece degree sparsifier with rho = c eps^-2 phi^-1 (beta + 1) log(8n / delta); no patching.
class DynDicutAmortized : public detail::PieceFramework {
 public:
  DynDicutAmortized(const DiGraph& g, double beta, double eps, std::uint64_t seed, const DynDicutConfig& cfg = {})
      : PieceFramework(g.n(), cfg.decomp, seed), beta_(beta), eps_(eps), cfg_(cfg) {
    auto es = g.edges();
    delta_piece_ = cfg.delta / (2.0 * static_cast<double>(std::max<std::size_t>(1, es.size())));
    run_init({{0, es}});
  }

  double rho() const { return piece_rho(); }

  std::size_t update(const UpdateEvent& ev) { return run_update(0, ev, ev.u, ev.v); }

  DiGraph current() const {
    DiGraph h(N_);
    for (const auto& [k, s] : pieces_)
      for (int i = 0; i < static_cast<int>(s.ids.size()); ++i)
        if (s.ds.weight(i) > 0.0) h.add_weight(s.ds.edge(i).u, s.ds.edge(i).v, s.ds.weight(i));
    return h;
  }

  DiGraph graph() const {
    DiGraph g(N_);
    for (const auto& [c, d] : dec_)
      for (const auto& e : d.current_edges()) g.add_edge(e.u, e.v, e.w);
    return g;
  }

 protected:
  double piece_rho() const override {
    return cfg_.rho.value_or(rho_dicut(cfg_.c_bal, eps_, beta_, N_, delta_piece_) / opt_.phi_target);
  }
  std::size_t on_added(detail::PieceState& s) override { return nnz_weights(s.ds); }
  std::size_t on_changed(detail::PieceState&, int, const std::vector<WeightChange>& ch) override { return ch.size(); }
  std::size_t on_removed(detail::PieceState& s) override { return nnz_weights(s.ds); }

 private:
  double beta_, eps_;
  DynDicutConfig cfg_;
  double delta_piece_ = 0.1;
};

// ---------------------------------------------------------------------------
// Directed cuts, worst-case recourse

struct DynWorstCaseConfig {
  double c_bal = 1.0;
  double delta = 0.1;
  std::optional<double> rho;
};

// I = ceil(log2 gamma) chained bundle levels; non-bundle edges of level i pass to level i + 1 with
// probability 1/4 at weight 4w. H is the union of all bundles and the last residual.
// Two chains on disjoint edge sets: insertions go to the active chain, deletions to the owner;
// when the passive chain empties it is reseeded and becomes the insertion target.
class DynDicutWorstCase {
 public:
  DynDicutWorstCase(const DiGraph& g, double beta, double eps, double gamma, std::uint64_t seed,
                    const DynWorstCaseConfig& cfg = {})
      : n_(g.n()), seed_(seed) {
    if (gamma < 1.0) throw PreconditionError("DynDicutWorstCase: gamma < 1");
    I_ = static_cast<int>(std::ceil(std::log2(gamma) - 1e-12));
    const double cap = 4.0 * n_ * n_ + 1.0;
    for (int i = 0; i < I_; ++i) {
      double rho = cfg.rho.value_or(rho_dicut(cfg.c_bal, eps / (3.0 * I_), beta, n_, cfg.delta / std::ldexp(1.0, i + 2)));
      t_.push_back(static_cast<int>(std::min(cap, std::ceil(8.0 * rho))));
    }
    chains_[0].reset(n_, t_, derive_seed(seed_, 0));
    chains_[1].reset(n_, t_, derive_seed(seed_, 1));
    auto es = g.edges();
    for (const auto& e : es) {
      owner_[edge_key(e.u, e.v)] = 0;
      chains_[0].apply(0, true, e.u, e.v, e.w);
    }
    chains_[0].touched.clear();
    chains_[0].forwards = 0;
    active_ = es.empty() ? 0 : 1;
  }

  int levels() const { return I_; }
  int t(int i) const { return t_[i]; }
  const Metrics& metrics() const { return metrics_; }
  std::size_t swaps() const { return swaps_; }
  // Level updates of the last update: 1 + the forwarded changes.
  std::size_t last_level_updates() const { return last_level_updates_; }
  std::size_t max_level_updates() const { return max_level_updates_; }
  std::size_t max_chain_updates() const { return std::max(chains_[0].updates, chains_[1].updates); }
  std::size_t epoch_limit() const { return 4 * static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }

  std::size_t update(const UpdateEvent& ev) {
    auto t0 = std::chrono::steady_clock::now();
    auto key = edge_key(ev.u, ev.v);
    int c;
    if (ev.kind == UpdateEvent::Insert) {
      if (ev.u == ev.v || !(ev.w > 0.0) || ev.u < 0 || ev.v < 0 || ev.u >= n_ || ev.v >= n_ || owner_.count(key))
        throw PreconditionError("update: invalid insert");
      c = active_;
      owner_[key] = c;
      chains_[c].apply(0, true, ev.u, ev.v, ev.w);
    } else {
      auto it = owner_.find(key);
      if (it == owner_.end()) throw MissingEdge("delete: missing edge " + std::to_string(ev.u) + "->" + std::to_string(ev.v));
      c = it->second;
      owner_.erase(it);
      chains_[c].apply(0, false, ev.u, ev.v, 0.0);
    }
    Chain& ch = chains_[c];
    ++ch.updates;
    std::size_t r = ch.settle();
    last_level_updates_ = 1 + ch.forwards;
    ch.forwards = 0;
    max_level_updates_ = std::max(max_level_updates_, last_level_updates_);
    int passive = 1 - active_;
    if (chains_[passive].m == 0 && chains_[active_].m > 0) {
      chains_[passive].reset(n_, t_, derive_seed(seed_, 2 + swaps_));
      active_ = passive;
      ++swaps_;
    }
    auto t1 = std::chrono::steady_clock::now();
    metrics_.updates.push_back({metrics_.updates.size(), ev.kind, r,
                                std::chrono::duration<double, std::micro>(t1 - t0).count(),
                                static_cast<std::size_t>(I_)});
    return r;
  }

  DiGraph current() const {
    std::map<std::pair<int, int>, double> h;
    for (const auto& ch : chains_)
      for (const auto& [k, x] : ch.h) h[{x.u, x.v}] += x.w;
    DiGraph out(n_);
    for (const auto& [k, w] : h) out.add_edge(k.first, k.second, w);
    return out;
  }

  DiGraph graph() const {
    std::vector<Edge> es;
    for (const auto& ch : chains_)
      for (const auto& e : ch.level_edges(0)) es.push_back(e);
    std::sort(es.begin(), es.end(), [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    DiGraph g(n_);
    for (const auto& e : es) g.add_edge(e.u, e.v, e.w);
    return g;
  }

  // Edges of level i of chain c; level I is the residual.
  std::vector<Edge> level_edges(int c, int i) const { return chains_[c].level_edges(i); }

  // Forwarded sets, weights and H against a recomputation from the level structures.
  bool audit() const {
    for (const auto& ch : chains_)
      if (!ch.audit()) return false;
    return true;
  }

 private:
  struct Level {
    DynMsfBundle bundle{0, 1};
    int t = 1;
    std::unordered_set<std::uint64_t> forwarded;
  };

  struct Chain {
    std::vector<Level> levels;
    std::unordered_map<std::uint64_t, Edge> residual;
    std::unordered_map<std::uint64_t, Edge> h;             // maintained output
    std::unordered_map<std::uint64_t, double> touched;     // key -> H weight before this update
    Rng rng{0};
    int n = 0;
    std::size_t m = 0, updates = 0, forwards = 0;

    void reset(int nv, const std::vector<int>& ts, std::uint64_t seed) {
      n = nv;
      levels.clear();
      for (int t : ts) {
        Level L;
        L.t = t;
        L.bundle = DynMsfBundle(nv, t);
        levels.push_back(std::move(L));
      }
      residual.clear();
      h.clear();
      touched.clear();
      rng = Rng(seed);
      m = updates = forwards = 0;
    }

    void add_h(int u, int v, double w) {
      auto key = edge_key(u, v);
      auto it = h.find(key);
      touched.try_emplace(key, it == h.end() ? 0.0 : it->second.w);
      if (it == h.end()) it = h.emplace(key, Edge{u, v, 0.0}).first;
      it->second.w += w;
      if (std::abs(it->second.w) <= 1e-12 * std::abs(w)) h.erase(it);
    }

    // Net number of changed H entries since the last settle.
    std::size_t settle() {
      std::size_t r = 0;
      for (const auto& [k, before] : touched) {
        auto it = h.find(k);
        double after = it == h.end() ? 0.0 : it->second.w;
        r += std::abs(after - before) > 1e-12 * std::max(std::abs(after), std::abs(before));
      }
      touched.clear();
      return r;
    }

    void apply(int i, bool ins, int u, int v, double w) {
      if (i == 0) m += ins ? 1 : -1;
      if (i == static_cast<int>(levels.size())) {
        auto key = edge_key(u, v);
        if (ins) {
          residual[key] = {u, v, w};
          add_h(u, v, w);
        } else {
          add_h(u, v, -residual.at(key).w);
          residual.erase(key);
        }
        return;
      }
      auto& L = levels[i];
      BundleReport rep = ins ? L.bundle.insert(u, v, w) : L.bundle.erase(u, v);
      for (const auto& mv : rep.moves) {
        const Edge e = L.bundle.edge(mv.edge);
        bool was_b = mv.from >= 1 && mv.from <= L.t, is_b = mv.to >= 1 && mv.to <= L.t;
        if (was_b != is_b) add_h(e.u, e.v, is_b ? e.w : -e.w);
        bool was_nb = mv.from == L.t + 1, is_nb = mv.to == L.t + 1;
        if (was_nb == is_nb) continue;
        auto key = edge_key(e.u, e.v);
        if (is_nb) {
          if (rng.bernoulli(0.25)) {
            L.forwarded.insert(key);
            ++forwards;
            apply(i + 1, true, e.u, e.v, 4.0 * e.w);
          }
        } else if (L.forwarded.erase(key)) {
          ++forwards;
          apply(i + 1, false, e.u, e.v, 0.0);
        }
      }
    }

    std::vector<Edge> level_edges(int i) const {
      if (i == static_cast<int>(levels.size())) {
        std::vector<Edge> es;
        for (const auto& [k, e] : residual) es.push_back(e);
        return es;
      }
      return levels[i].bundle.edges();
    }

    bool audit() const {
      std::unordered_map<std::uint64_t, double> hh;
      for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& L = levels[i];
        if (!L.bundle.audit()) return false;
        for (const auto& e : L.bundle.bundle_edges()) hh[edge_key(e.u, e.v)] += e.w;
        std::unordered_map<std::uint64_t, double> nx;
        for (const auto& e : level_edges(static_cast<int>(i) + 1)) nx[edge_key(e.u, e.v)] = e.w;
        if (L.forwarded.size() != nx.size()) return false;
        for (const auto& e : L.bundle.nonbundle_edges()) {
          bool f = L.forwarded.count(edge_key(e.u, e.v)) != 0;
          auto it = nx.find(edge_key(e.u, e.v));
          if (f != (it != nx.end())) return false;
          if (f && it->second != 4.0 * e.w) return false;
        }
      }
      for (const auto& [k, e] : residual) hh[k] += e.w;
      if (hh.size() != h.size()) return false;
      for (const auto& [k, w] : hh) {
        auto it = h.find(k);
        if (it == h.end() || std::abs(it->second.w - w) > 1e-9 * w) return false;
      }
      return true;
    }
  };

  int n_;
  std::uint64_t seed_;
  int I_ = 0;
  std::vector<int> t_;
  Chain chains_[2];
  int active_ = 0;
  std::unordered_map<std::uint64_t, int> owner_;
  std::size_t swaps_ = 0, last_level_updates_ = 0, max_level_updates_ = 0;
  Metrics metrics_;
};

}  // namespace dsparse
