#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "dsparse/graph.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/rng.hpp"

namespace dsparse {

struct DecompOptions {
  double phi_target = 0.1;
  int exact_limit = 24;         // exact enumeration up to this many vertices
  int recert_exact_limit = 12;  // exact re-certification after deletions
  int recert_iters = 60;        // power iterations for the cheap re-certification sweep
};

inline int weight_bucket(double w) { return static_cast<int>(std::floor(std::log2(w))); }

// Edge-disjoint piece; edge ids index the caller's edge list.
struct Piece {
  std::vector<int> edges;
  std::vector<int> vertices;  // sorted
  double phi_cert = 0.0;
  bool exact_cert = false;
  int bucket = 0;
};

namespace detail {

struct LocalGraph {
  UGraph g;
  std::vector<int> vertices;  // local -> global
};

inline LocalGraph localize(const std::vector<Edge>& es, const std::vector<int>& idx) {
  LocalGraph lg;
  std::unordered_map<int, int> map;
  for (int i : idx)
    for (int x : {es[i].u, es[i].v})
      if (map.emplace(x, 0).second) lg.vertices.push_back(x);
  std::sort(lg.vertices.begin(), lg.vertices.end());
  for (std::size_t k = 0; k < lg.vertices.size(); ++k) map[lg.vertices[k]] = static_cast<int>(k);
  lg.g.n = static_cast<int>(lg.vertices.size());
  lg.g.edges.reserve(idx.size());
  for (int i : idx) lg.g.edges.push_back({map[es[i].u], map[es[i].v], es[i].w});
  return lg;
}

class Decomposer {
 public:
  Decomposer(const std::vector<Edge>& es, const DecompOptions& opt) : es_(es), opt_(opt) {}

  void run(const std::vector<int>& idx, int bucket) {
    auto lg = localize(es_, idx);
    auto label = component_labels(lg.g);
    int nc = lg.g.n ? *std::max_element(label.begin(), label.end()) + 1 : 0;
    if (nc > 1) {
      std::vector<std::vector<int>> parts(nc);
      for (std::size_t j = 0; j < idx.size(); ++j) parts[label[lg.g.edges[j].u]].push_back(idx[j]);
      for (auto& p : parts)
        if (!p.empty()) run(p, bucket);
      return;
    }
    std::vector<int> side;
    if (lg.g.n <= opt_.exact_limit) {
      auto r = conductance_exact(lg.g, opt_.exact_limit);
      if (r.phi >= opt_.phi_target) return emit(idx, lg, r.phi, true, bucket);
      side = r.side;
    } else {
      auto c = cheeger(lg.g);
      if (c.sweep_phi >= opt_.phi_target) return emit(idx, lg, c.lower_bound, false, bucket);
      side = c.sweep_side;
    }
    std::vector<char> in(lg.g.n, 0);
    for (int v : side) in[v] = 1;
    std::vector<int> a, b, cross;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& e = lg.g.edges[j];
      if (in[e.u] && in[e.v]) a.push_back(idx[j]);
      else if (!in[e.u] && !in[e.v]) b.push_back(idx[j]);
      else cross.push_back(idx[j]);
    }
    if (a.size() == idx.size() || b.size() == idx.size() || cross.size() == idx.size()) {
      // No progress possible (only when phi_target > 1).
      auto fallback = cheeger(lg.g);
      return emit(idx, lg, fallback.lower_bound, false, bucket);
    }
    for (auto* part : {&a, &b, &cross})
      if (!part->empty()) run(*part, bucket);
  }

  std::vector<Piece> pieces;

 private:
  void emit(const std::vector<int>& idx, const LocalGraph& lg, double phi, bool exact, int bucket) {
    pieces.push_back({idx, lg.vertices, phi, exact, bucket});
  }

  const std::vector<Edge>& es_;
  const DecompOptions& opt_;
};

}  // namespace detail

// Edge-disjoint pieces covering es, each with und conductance certified (exactly when small,
// otherwise the sweep found no cut below phi_target and phi_cert is the Cheeger lower bound).
inline std::vector<Piece> static_decompose(const std::vector<Edge>& es, const DecompOptions& opt = {}) {
  std::map<int, std::vector<int>> buckets;
  for (int i = 0; i < static_cast<int>(es.size()); ++i) buckets[weight_bucket(es[i].w)].push_back(i);
  detail::Decomposer d(es, opt);
  for (auto& [b, idx] : buckets) d.run(idx, b);
  return std::move(d.pieces);
}

inline std::vector<Piece> static_decompose(const UGraph& g, const DecompOptions& opt = {}) {
  return static_decompose(g.edges, opt);
}

// ---------------------------------------------------------------------------
// Tiered dynamic decomposition

struct ChangeEvent {
  enum Kind { EdgeDeleted, PieceRemoved, PieceAdded };
  Kind kind;
  int piece;
  int edge = -1;
};

struct ChangeLog {
  std::vector<ChangeEvent> events;
  std::size_t ejected = 0;  // edges moved back to tier 1 by dissolving pieces

  std::size_t count(ChangeEvent::Kind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const ChangeEvent& e) { return e.kind == k; }));
  }
  void append(const ChangeLog& o) {
    events.insert(events.end(), o.events.begin(), o.events.end());
    ejected += o.ejected;
  }
};

struct DynPiece {
  int id = -1;
  int tier = 0;
  std::vector<int> edges;
  std::vector<int> vertices;
  double phi_cert = 0.0;
  bool exact_cert = false;
  int bucket = 0;
  std::size_t m_initial = 0;
  double budget = 0.0;
  int deletions_seen = 0;
};

enum class PruneOutcome { Kept, Dissolved };

class DynamicDecomposition {
 public:
  DynamicDecomposition(int n, DecompOptions opt = {}, std::uint64_t seed = 0) : n_(n), opt_(opt), seed_(seed) {}

  int n() const { return n_; }
  std::size_t m() const { return live_; }
  const DecompOptions& options() const { return opt_; }

  const Edge& edge(int id) const { return edges_[id]; }
  bool alive(int id) const { return id >= 0 && id < static_cast<int>(edges_.size()) && alive_[id]; }
  int edge_id(int u, int v) const {
    auto it = key_.find(edge_key(u, v));
    return it == key_.end() ? -1 : it->second;
  }
  int piece_of(int edge) const { return piece_of_[edge]; }
  const DynPiece& piece(int id) const { return pieces_.at(id); }
  bool has_piece(int id) const { return pieces_.count(id) != 0; }
  std::vector<int> piece_ids() const {
    std::vector<int> ids;
    for (const auto& [id, p] : pieces_) ids.push_back(id);
    return ids;
  }
  std::size_t num_pieces() const { return pieces_.size(); }
  std::size_t tier_size(int i) const { return i < static_cast<int>(tier_count_.size()) ? tier_count_[i] : 0; }
  int num_tiers() const { return static_cast<int>(tier_count_.size()); }
  std::size_t total_ejected() const { return total_ejected_; }

  // All current edges in tier ceil(log2 m), one static decomposition.
  ChangeLog init(const std::vector<Edge>& es) {
    ChangeLog log;
    std::vector<int> ids;
    for (const auto& e : es) ids.push_back(new_edge(e));
    if (ids.empty()) return log;
    int t = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(ids.size())))));
    place(ids, t, log);
    return log;
  }

  ChangeLog insert(int u, int v, double w, int* id_out = nullptr) {
    if (edge_id(u, v) >= 0) throw PreconditionError("insert: edge already present");
    if (u == v || !(w > 0.0)) throw PreconditionError("insert: invalid edge");
    ChangeLog log;
    int id = new_edge({u, v, w});
    if (id_out) *id_out = id;
    insert_set({id}, log);
    return log;
  }

  ChangeLog erase(int u, int v) {
    int id = edge_id(u, v);
    if (id < 0) throw MissingEdge("delete: missing edge " + std::to_string(u) + "->" + std::to_string(v));
    ChangeLog log;
    int pid = piece_of_[id];
    key_.erase(edge_key(u, v));
    alive_[id] = 0;
    --live_;
    if (prune_on_delete(pid, id, log) == PruneOutcome::Dissolved) {
      std::vector<int> rest = pieces_.at(pid).edges;
      remove_piece(pid, log);
      log.ejected += rest.size();
      total_ejected_ += rest.size();
      if (!rest.empty()) insert_set(rest, log);
    }
    return log;
  }

  // Deletes e from its piece; dissolves when the budget is exceeded or a cut below phi/12 appears.
  PruneOutcome prune_on_delete(int pid, int id, ChangeLog& log) {
    auto it = pieces_.find(pid);
    if (it == pieces_.end()) throw EdgeNotInPiece("prune_on_delete: unknown piece");
    DynPiece& p = it->second;
    if (pos_[id] < 0 || piece_of_[id] != pid) throw EdgeNotInPiece("prune_on_delete: edge not in piece");
    int pos = pos_[id];
    p.edges[pos] = p.edges.back();
    pos_[p.edges[pos]] = pos;
    p.edges.pop_back();
    pos_[id] = -1;
    piece_of_[id] = -1;
    --tier_count_[p.tier];
    ++p.deletions_seen;
    log.events.push_back({ChangeEvent::EdgeDeleted, pid, id});
    if (p.edges.empty()) return PruneOutcome::Dissolved;
    if (p.deletions_seen > p.budget) return PruneOutcome::Dissolved;
    if (recertify(p) < opt_.phi_target / 12.0) return PruneOutcome::Dissolved;
    return PruneOutcome::Kept;
  }

  // Max number of pieces sharing a vertex.
  int coverage() const {
    std::vector<int> c(n_, 0);
    for (const auto& [id, p] : pieces_)
      for (int v : p.vertices) ++c[v];
    return n_ ? *std::max_element(c.begin(), c.end()) : 0;
  }

  std::vector<Edge> current_edges() const {
    std::vector<Edge> es;
    for (std::size_t i = 0; i < edges_.size(); ++i)
      if (alive_[i]) es.push_back(edges_[i]);
    return es;
  }

  std::vector<Edge> piece_edges(int pid) const {
    std::vector<Edge> es;
    for (int id : pieces_.at(pid).edges) es.push_back(edges_[id]);
    return es;
  }

  // Union of pieces equals the live edge set, weight ratio <= 2 per piece, tier capacities hold.
  bool audit() const {
    std::vector<int> owner(edges_.size(), -1);
    for (const auto& [id, p] : pieces_) {
      double lo = kInf, hi = 0.0;
      for (int e : p.edges) {
        if (!alive_[e] || owner[e] >= 0 || piece_of_[e] != id) return false;
        owner[e] = id;
        lo = std::min(lo, edges_[e].w);
        hi = std::max(hi, edges_[e].w);
      }
      if (!p.edges.empty() && hi > 2.0 * lo) return false;
    }
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (alive_[e] && owner[e] < 0) return false;
    for (int i = 0; i < num_tiers(); ++i)
      if (tier_count_[i] > (std::size_t{1} << i)) return false;
    return true;
  }

  // Conductance lower bound (exact when small) of the current piece.
  double certify_exact(int pid) const {
    auto lg = detail::localize(edges_, pieces_.at(pid).edges);
    return conductance_exact(lg.g, opt_.exact_limit).phi;
  }

 private:
  int new_edge(const Edge& e) {
    if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_) throw PreconditionError("edge endpoint out of range");
    int id = static_cast<int>(edges_.size());
    if (!key_.emplace(edge_key(e.u, e.v), id).second) throw PreconditionError("duplicate edge");
    edges_.push_back(e);
    alive_.push_back(1);
    piece_of_.push_back(-1);
    pos_.push_back(-1);
    ++live_;
    return id;
  }

  void ensure_tier(int i) {
    if (static_cast<int>(tier_count_.size()) <= i) {
      tier_count_.resize(i + 1, 0);
      tier_pieces_.resize(i + 1);
    }
  }

  void insert_set(std::vector<int> F, ChangeLog& log) {
    int i = 1;
    ensure_tier(i);
    while (tier_count_[i] + F.size() > (std::size_t{1} << i)) {
      take_tier(i, F, log);
      ++i;
      ensure_tier(i);
    }
    take_tier(i, F, log);
    place(F, i, log);
  }

  // Removes every piece of tier i, appending its edges to F.
  void take_tier(int i, std::vector<int>& F, ChangeLog& log) {
    std::vector<int> ids(tier_pieces_[i].begin(), tier_pieces_[i].end());
    for (int pid : ids) {
      const auto& es = pieces_.at(pid).edges;
      F.insert(F.end(), es.begin(), es.end());
      tier_count_[i] -= es.size();
      for (int e : es) {
        piece_of_[e] = -1;
        pos_[e] = -1;
      }
      remove_piece(pid, log);
    }
  }

  void remove_piece(int pid, ChangeLog& log) {
    auto& p = pieces_.at(pid);
    for (int e : p.edges) {
      if (piece_of_[e] == pid) {
        piece_of_[e] = -1;
        pos_[e] = -1;
        --tier_count_[p.tier];
      }
    }
    tier_pieces_[p.tier].erase(std::find(tier_pieces_[p.tier].begin(), tier_pieces_[p.tier].end(), pid));
    pieces_.erase(pid);
    log.events.push_back({ChangeEvent::PieceRemoved, pid});
  }

  void place(const std::vector<int>& ids, int tier, ChangeLog& log) {
    ensure_tier(tier);
    std::vector<Edge> es;
    es.reserve(ids.size());
    for (int id : ids) es.push_back(edges_[id]);
    for (auto& pc : static_decompose(es, opt_)) {
      DynPiece p;
      p.id = next_piece_++;
      p.tier = tier;
      for (int local : pc.edges) p.edges.push_back(ids[local]);
      std::sort(p.edges.begin(), p.edges.end());
      p.vertices = pc.vertices;
      p.phi_cert = pc.phi_cert;
      p.exact_cert = pc.exact_cert;
      p.bucket = pc.bucket;
      p.m_initial = p.edges.size();
      p.budget = opt_.phi_target * static_cast<double>(p.m_initial) / 10.0;
      for (std::size_t k = 0; k < p.edges.size(); ++k) {
        piece_of_[p.edges[k]] = p.id;
        pos_[p.edges[k]] = static_cast<int>(k);
      }
      tier_count_[tier] += p.edges.size();
      tier_pieces_[tier].push_back(p.id);
      log.events.push_back({ChangeEvent::PieceAdded, p.id});
      pieces_.emplace(p.id, std::move(p));
    }
  }

  double recertify(DynPiece& p) {
    auto lg = detail::localize(edges_, p.edges);
    if (component_labels(lg.g) != std::vector<int>(lg.g.n, 0)) return 0.0;
    // Vertices the piece no longer touches leave its vertex set.
    if (static_cast<int>(lg.vertices.size()) < static_cast<int>(p.vertices.size())) p.vertices = lg.vertices;
    if (lg.g.n <= opt_.recert_exact_limit) return conductance_exact(lg.g, opt_.recert_exact_limit).phi;
    return sweep_cut_fast(lg.g, opt_.recert_iters, derive_seed(seed_, ++recerts_)).sweep_phi;
  }

  int n_;
  DecompOptions opt_;
  std::uint64_t seed_;
  std::vector<Edge> edges_;
  std::vector<char> alive_;
  std::vector<int> piece_of_, pos_;
  std::unordered_map<std::uint64_t, int> key_;
  std::map<int, DynPiece> pieces_;
  std::vector<std::size_t> tier_count_;
  std::vector<std::vector<int>> tier_pieces_;
  std::size_t live_ = 0;
  int next_piece_ = 0;
  std::uint64_t recerts_ = 0;
  std::size_t total_ejected_ = 0;
};

}  // namespace dsparse
