#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <vector>

#include "dsparse/dicut.hpp"
#include "dsparse/errors.hpp"
#include "dsparse/expander.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/union_find.hpp"

namespace dsparse {

struct BundleMove {
  int edge;
  int from, to;  // levels; 0 = absent, 1..t = forest T_level, t + 1 = outside the bundle
};

struct BundleReport {
  std::vector<BundleMove> moves;
  int nonbundle_changes = 0;  // edges entering or leaving G minus the bundle
};

// Fully dynamic t-bundle 2-MSF. Level l holds a per-bucket spanning forest of the edges at level >= l.
// Edges keep their orientation, so antiparallel pairs are parallel undirected edges.
// Replacement search scans the smaller side of a split tree, so updates are linear in the worst case.
class DynMsfBundle {
 public:
  DynMsfBundle(int n, int t) : n_(n), t_(t) {}

  int n() const { return n_; }
  int t() const { return t_; }
  std::size_t m() const { return live_; }

  // Inserts in the static peeling order so the result equals tbundle_msf(g, t).
  BundleReport init(const UGraph& g) {
    std::vector<int> order(g.edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      int ba = weight_bucket(g.edges[a].w), bc = weight_bucket(g.edges[c].w);
      if (ba != bc) return ba > bc;
      return g.edges[a].w > g.edges[c].w;
    });
    BundleReport rep;
    std::vector<int> ids(g.edges.size());
    for (int i : order) {
      auto r = insert(g.edges[i].u, g.edges[i].v, g.edges[i].w, &ids[i]);
      rep.moves.insert(rep.moves.end(), r.moves.begin(), r.moves.end());
      rep.nonbundle_changes += r.nonbundle_changes;
    }
    return rep;
  }

  BundleReport insert(int u, int v, double w, int* id_out = nullptr) {
    if (u == v) throw PreconditionError("DynMsfBundle::insert: self-loop");
    if (index_.count(edge_key(u, v))) throw PreconditionError("DynMsfBundle::insert: duplicate edge");
    int id = static_cast<int>(edges_.size());
    edges_.push_back({u, v, w});
    level_.push_back(0);
    bucket_.push_back(weight_bucket(w));
    index_[edge_key(u, v)] = id;
    auto& adj = bucket_adj(bucket_[id]);
    adj[u].insert(id);
    adj[v].insert(id);
    ++live_;
    int l = 1;
    while (l <= t_ && tree_connected(l, bucket_[id], u, v)) ++l;
    level_[id] = l;
    if (id_out) *id_out = id;
    BundleReport rep;
    rep.moves.push_back({id, 0, l});
    rep.nonbundle_changes = l == t_ + 1;
    return rep;
  }

  BundleReport erase(int u, int v) {
    int id = edge_id(u, v);
    if (id < 0) throw MissingEdge("DynMsfBundle::erase: edge not present");
    BundleReport rep;
    int l = level_[id];
    auto& adj = bucket_adj(bucket_[id]);
    adj[edges_[id].u].erase(id);
    adj[edges_[id].v].erase(id);
    level_[id] = 0;
    index_.erase(edge_key(edges_[id].u, edges_[id].v));
    --live_;
    rep.moves.push_back({id, l, 0});
    if (l == t_ + 1) {
      rep.nonbundle_changes = 1;
      return rep;
    }
    // A tree edge left level l: pull one replacement from deeper levels and cascade.
    int cur = id;
    while (l <= t_) {
      int r = replacement(l, bucket_[cur], edges_[cur].u, edges_[cur].v);
      if (r < 0) break;
      int from = level_[r];
      level_[r] = l;
      rep.moves.push_back({r, from, l});
      if (from == t_ + 1) {
        rep.nonbundle_changes = 1;
        break;
      }
      cur = r;
      l = from;
    }
    return rep;
  }

  // Exact orientation first, then the reverse.
  int edge_id(int u, int v) const {
    auto it = index_.find(edge_key(u, v));
    if (it == index_.end()) it = index_.find(edge_key(v, u));
    return it == index_.end() ? -1 : it->second;
  }
  int level(int id) const { return level_[id]; }
  bool in_bundle(int id) const { return level_[id] >= 1 && level_[id] <= t_; }
  const Edge& edge(int id) const { return edges_[id]; }

  std::vector<Edge> bundle_edges() const { return collect([&](int l) { return l >= 1 && l <= t_; }); }
  std::vector<Edge> nonbundle_edges() const { return collect([&](int l) { return l == t_ + 1; }); }
  std::vector<Edge> edges() const { return collect([](int l) { return l > 0; }); }

  // Forests as ids into edges() order.
  MsfBundle current_bundle() const {
    MsfBundle b;
    b.forests.assign(t_, {});
    int k = 0;
    for (int id : live_ids()) {
      if (in_bundle(id)) b.forests[level_[id] - 1].push_back(k);
      ++k;
    }
    while (!b.forests.empty() && b.forests.back().empty()) b.forests.pop_back();
    return b;
  }

  // Each level is a forest per bucket spanning every deeper edge of that bucket.
  bool audit() const {
    for (int l = 1; l <= t_; ++l) {
      std::map<int, UnionFind> per;
      for (int id : live_ids()) {
        if (level_[id] != l) continue;
        auto it = per.try_emplace(bucket_[id], n_).first;
        if (!it->second.unite(edges_[id].u, edges_[id].v)) return false;
      }
      for (int id : live_ids()) {
        if (level_[id] <= l) continue;
        auto it = per.find(bucket_[id]);
        if (it == per.end() || !it->second.same(edges_[id].u, edges_[id].v)) return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::set<int>>& bucket_adj(int b) {
    auto it = adj_.find(b);
    if (it == adj_.end()) it = adj_.emplace(b, std::vector<std::set<int>>(n_)).first;
    return it->second;
  }

  std::vector<int> live_ids() const {
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(edges_.size()); ++i)
      if (level_[i] > 0) ids.push_back(i);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      return std::tie(edges_[a].u, edges_[a].v) < std::tie(edges_[b].u, edges_[b].v);
    });
    return ids;
  }

  template <class Pred>
  std::vector<Edge> collect(Pred pred) const {
    std::vector<Edge> es;
    for (int id : live_ids())
      if (pred(level_[id])) es.push_back(edges_[id]);
    return es;
  }

  // Vertices reachable from s over level-l tree edges of bucket b.
  std::vector<int> tree_component(int l, int b, int s) const {
    const auto& adj = adj_.at(b);
    std::vector<int> comp{s};
    std::set<int> seen{s};
    for (std::size_t k = 0; k < comp.size(); ++k)
      for (int id : adj[comp[k]]) {
        if (level_[id] != l) continue;
        int o = edges_[id].u == comp[k] ? edges_[id].v : edges_[id].u;
        if (seen.insert(o).second) comp.push_back(o);
      }
    return comp;
  }

  bool tree_connected(int l, int b, int u, int v) const {
    auto comp = tree_component(l, b, u);
    return std::find(comp.begin(), comp.end(), v) != comp.end();
  }

  // Deepest (then smallest id) bucket-b edge of level > l joining the two sides of the split at (x, y).
  int replacement(int l, int b, int x, int y) const {
    auto cx = tree_component(l, b, x), cy = tree_component(l, b, y);
    const auto& side = cx.size() <= cy.size() ? cx : cy;
    std::set<int> in(side.begin(), side.end());
    const auto& adj = adj_.at(b);
    int best = -1;
    for (int v : side)
      for (int id : adj[v]) {
        if (level_[id] <= l) continue;
        int o = edges_[id].u == v ? edges_[id].v : edges_[id].u;
        if (in.count(o)) continue;
        if (best < 0 || level_[id] > level_[best] || (level_[id] == level_[best] && id < best)) best = id;
      }
    return best;
  }

  int n_, t_;
  std::size_t live_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> level_, bucket_;
  std::unordered_map<std::uint64_t, int> index_;
  std::map<int, std::vector<std::set<int>>> adj_;
};

}  // namespace dsparse
