#pragma once

#include <vector>

#include "dsparse/graph.hpp"

namespace dsparse::testing {

// Uncapacitated min-cost flow on the undirected graph with per-unit cost 1/w; returns min ||W^{-1} z||_1.
inline double min_cost_flow(int n, const std::vector<Edge>& es, const std::vector<double>& d) {
  struct Arc {
    int to;
    double cap, cost;
    int rev;
  };
  const int s = n, t = n + 1;
  std::vector<std::vector<Arc>> adj(n + 2);
  auto add = [&](int u, int v, double cap, double cost) {
    adj[u].push_back({v, cap, cost, static_cast<int>(adj[v].size())});
    adj[v].push_back({u, 0.0, -cost, static_cast<int>(adj[u].size()) - 1});
  };
  for (const auto& e : es) {
    add(e.u, e.v, 1e300, 1.0 / e.w);
    add(e.v, e.u, 1e300, 1.0 / e.w);
  }
  double need = 0.0;
  for (int v = 0; v < n; ++v) {
    if (d[v] > 0) {
      add(s, v, d[v], 0.0);
      need += d[v];
    } else if (d[v] < 0) {
      add(v, t, -d[v], 0.0);
    }
  }
  double cost = 0.0, sent = 0.0;
  while (sent < need * (1 - 1e-12)) {
    std::vector<double> dist(n + 2, 1e300);
    std::vector<int> pv(n + 2, -1), pa(n + 2, -1);
    dist[s] = 0.0;
    for (int it = 0; it < n + 2; ++it) {
      bool changed = false;
      for (int u = 0; u < n + 2; ++u) {
        if (dist[u] >= 1e299) continue;
        for (int k = 0; k < static_cast<int>(adj[u].size()); ++k) {
          const auto& a = adj[u][k];
          if (a.cap > 1e-12 && dist[u] + a.cost < dist[a.to] - 1e-15) {
            dist[a.to] = dist[u] + a.cost;
            pv[a.to] = u;
            pa[a.to] = k;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (pv[t] < 0) break;
    double push = 1e300;
    for (int v = t; v != s; v = pv[v]) push = std::min(push, adj[pv[v]][pa[v]].cap);
    for (int v = t; v != s; v = pv[v]) {
      auto& a = adj[pv[v]][pa[v]];
      a.cap -= push;
      adj[v][a.rev].cap += push;
    }
    sent += push;
    cost += push * dist[t];
  }
  return cost;
}


}  // namespace dsparse::testing
