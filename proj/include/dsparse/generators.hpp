#pragma once

#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "dsparse/graph.hpp"
#include "dsparse/rng.hpp"

namespace dsparse {

// m distinct directed edges chosen uniformly, weights uniform in [wlo, whi).
inline DiGraph random_digraph(int n, std::size_t m, std::uint64_t seed, double wlo = 1.0, double whi = 2.0) {
  Rng rng(seed);
  DiGraph g(n);
  const std::size_t cap = static_cast<std::size_t>(n) * (n - 1);
  if (m > cap) m = cap;
  while (g.m() < m) {
    int u = static_cast<int>(rng.below(n)), v = static_cast<int>(rng.below(n));
    if (u == v || g.has_edge(u, v)) continue;
    g.add_edge(u, v, rng.uniform(wlo, whi));
  }
  return g;
}

// Union of random Hamiltonian cycles, each with one weight from [1, 2); Eulerian and strongly connected.
inline DiGraph random_eulerian(int n, int cycles, std::uint64_t seed) {
  Rng rng(seed);
  DiGraph g(n);
  std::vector<int> perm(n);
  for (int c = 0; c < cycles; ++c) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    double w = rng.uniform(1.0, 2.0);
    for (int i = 0; i < n; ++i) g.add_weight(perm[i], perm[(i + 1) % n], w);
  }
  return g;
}

// Union of d random permutation digraphs plus a Hamiltonian cycle (for connectivity); unit weights.
inline DiGraph random_regular_digraph(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  DiGraph g(n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  for (int i = 0; i < n; ++i) g.add_weight(perm[i], perm[(i + 1) % n], 1.0);
  for (int c = 1; c < d; ++c) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    for (int i = 0; i < n; ++i)
      if (perm[i] != i && !g.has_edge(i, perm[i])) g.add_edge(i, perm[i], 1.0);
  }
  return g;
}

// Two dense random clusters joined by a few edges in each direction.
inline DiGraph two_cluster_digraph(int n, double p_in, int bridges, std::uint64_t seed) {
  Rng rng(seed);
  DiGraph g(n);
  const int h = n / 2;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v || (u < h) != (v < h)) continue;
      if (rng.bernoulli(p_in)) g.add_edge(u, v, rng.uniform(1.0, 2.0));
    }
  for (int b = 0; b < bridges; ++b) {
    int u = static_cast<int>(rng.below(h)), v = h + static_cast<int>(rng.below(n - h));
    if (rng.bernoulli(0.5)) std::swap(u, v);
    g.add_weight(u, v, rng.uniform(1.0, 2.0));
  }
  return g;
}

// Random labelled tree on n vertices (random attachment), weights in [wlo, whi).
inline UGraph random_tree(int n, std::uint64_t seed, double wlo = 1.0, double whi = 4.0) {
  Rng rng(seed);
  UGraph t{n, {}};
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  for (int i = 1; i < n; ++i) {
    int p = perm[rng.below(i)];
    t.edges.push_back({p, perm[i], rng.uniform(wlo, whi)});
  }
  return t;
}

// Random simple undirected graph: spanning tree plus extra random edges.
inline UGraph random_connected_ugraph(int n, std::size_t m, std::uint64_t seed, double wlo = 1.0,
                                      double whi = 2.0) {
  UGraph g = random_tree(n, seed, wlo, whi);
  Rng rng(derive_seed(seed, 1));
  std::vector<char> used(static_cast<std::size_t>(n) * n, 0);
  for (const auto& e : g.edges) used[e.u * n + e.v] = used[e.v * n + e.u] = 1;
  const std::size_t cap = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (m > cap) m = cap;
  while (g.edges.size() < m) {
    int u = static_cast<int>(rng.below(n)), v = static_cast<int>(rng.below(n));
    if (u == v || used[u * n + v]) continue;
    used[u * n + v] = used[v * n + u] = 1;
    g.edges.push_back({std::min(u, v), std::max(u, v), rng.uniform(wlo, whi)});
  }
  return g;
}

// Oblivious stream of random insertions of absent pairs and deletions of present edges.
inline std::vector<UpdateEvent> random_update_stream(const DiGraph& g, std::size_t count, std::uint64_t seed,
                                                     double p_insert = 0.5, double wlo = 1.0, double whi = 2.0) {
  Rng rng(seed);
  const int n = g.n();
  std::vector<Edge> present = g.edges();
  std::unordered_map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < present.size(); ++i) pos[edge_key(present[i].u, present[i].v)] = i;
  const std::size_t cap = static_cast<std::size_t>(n) * (n - 1);
  std::vector<UpdateEvent> out;
  while (out.size() < count) {
    bool ins = present.empty() || (present.size() < cap && rng.bernoulli(p_insert));
    if (ins) {
      int u = static_cast<int>(rng.below(n)), v = static_cast<int>(rng.below(n));
      if (u == v || pos.count(edge_key(u, v))) continue;
      double w = rng.uniform(wlo, whi);
      pos[edge_key(u, v)] = present.size();
      present.push_back({u, v, w});
      out.push_back({UpdateEvent::Insert, u, v, w});
    } else {
      std::size_t k = rng.below(present.size());
      Edge e = present[k];
      pos[edge_key(present.back().u, present.back().v)] = k;
      present[k] = present.back();
      present.pop_back();
      pos.erase(edge_key(e.u, e.v));
      out.push_back({UpdateEvent::Delete, e.u, e.v, e.w});
    }
  }
  return out;
}

}  // namespace dsparse
