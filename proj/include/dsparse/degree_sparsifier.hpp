#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dsparse/errors.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/rng.hpp"

namespace dsparse {

// Each index of [0, k) independently with probability p, by geometric skipping.
inline std::vector<int> subset_sample(std::size_t k, double p, Rng& rng) {
  std::vector<int> s;
  if (p <= 0.0 || k == 0) return s;
  if (p >= 1.0) {
    s.resize(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = static_cast<int>(i);
    return s;
  }
  std::uint64_t i = rng.geometric(p);
  while (i < k) {
    s.push_back(static_cast<int>(i));
    i += 1 + rng.geometric(p);
  }
  return s;
}

inline std::vector<int> subset_sample(std::size_t k, double p, std::uint64_t seed) {
  Rng rng(seed);
  return subset_sample(k, p, rng);
}

struct WeightChange {
  int edge;
  double old_w, new_w;
};

// Decremental reweighting: vertex v keeps a subset F_v of its incident edges with rate q_v = min(1, 2 L rho / d_v);
// e is present iff sampled by an endpoint, at weight w_e / p_e with p_e = 1 - (1 - q_h)(1 - q_t).
class DegreeSparsifier {
 public:
  DegreeSparsifier() = default;
  DegreeSparsifier(int n, std::vector<Edge> edges, double rho, std::uint64_t seed)
      : n_(n), edges_(std::move(edges)), rho_(rho), rng_(seed) {
    alive_.assign(edges_.size(), 1);
    wp_.assign(edges_.size(), 0.0);
    deg_.assign(n, 0.0);
    inc_.assign(n, {});
    incpos_.assign(edges_.size(), {-1, -1});
    sampled_.assign(edges_.size(), 0);
    L_ = edges_.empty() ? 1.0 : edges_[0].w;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const auto& e = edges_[i];
      L_ = std::min(L_, e.w);
      deg_[e.u] += e.w;
      deg_[e.v] += e.w;
      incpos_[i] = {static_cast<int>(inc_[e.u].size()), static_cast<int>(inc_[e.v].size())};
      inc_[e.u].push_back(static_cast<int>(i));
      inc_[e.v].push_back(static_cast<int>(i));
    }
    for (int v = 0; v < n_; ++v) resample(v);
    for (std::size_t i = 0; i < edges_.size(); ++i) wp_[i] = target(static_cast<int>(i));
  }

  int n() const { return n_; }
  std::size_t m_initial() const { return edges_.size(); }
  double rho() const { return rho_; }
  double L() const { return L_; }
  const Edge& edge(int id) const { return edges_[id]; }
  bool alive(int id) const { return alive_[id]; }
  double weight(int id) const { return wp_[id]; }
  double degree(int v) const { return deg_[v]; }
  const std::vector<double>& reweighting() const { return wp_; }

  double q(int v) const { return deg_[v] > 0 ? std::min(1.0, 2.0 * L_ * rho_ / deg_[v]) : 1.0; }
  double p(int id) const {
    const auto& e = edges_[id];
    return 1.0 - (1.0 - q(e.u)) * (1.0 - q(e.v));
  }
  bool in_sample(int id) const { return sampled_[id] != 0; }

  std::vector<Edge> current() const {
    std::vector<Edge> es;
    for (std::size_t i = 0; i < edges_.size(); ++i)
      if (wp_[i] > 0.0) es.push_back({edges_[i].u, edges_[i].v, wp_[i]});
    return es;
  }

  // Removes edge id, resamples its endpoints and returns every changed w'.
  std::vector<WeightChange> erase(int id) {
    if (id < 0 || id >= static_cast<int>(edges_.size()) || !alive_[id])
      throw MissingEdge("DegreeSparsifier::erase: edge not present");
    const auto e = edges_[id];
    std::vector<WeightChange> out;
    alive_[id] = 0;
    if (wp_[id] != 0.0) out.push_back({id, wp_[id], 0.0});
    wp_[id] = 0.0;
    sampled_[id] = 0;
    deg_[e.u] -= e.w;
    deg_[e.v] -= e.w;
    unlink(e.u, incpos_[id].first);
    unlink(e.v, incpos_[id].second);
    for (int v : {e.u, e.v}) {
      if (deg_[v] <= 0.0) continue;
      resample(v);
    }
    for (int v : {e.u, e.v})
      for (int f : inc_[v]) {
        double nw = target(f);
        if (nw != wp_[f]) {
          out.push_back({f, wp_[f], nw});
          wp_[f] = nw;
        }
      }
    std::sort(out.begin(), out.end(), [](const WeightChange& a, const WeightChange& b) { return a.edge < b.edge; });
    out.erase(std::unique(out.begin(), out.end(), [](const WeightChange& a, const WeightChange& b) { return a.edge == b.edge; }),
              out.end());
    return out;
  }

 private:
  // Bit 0: sampled by e.u; bit 1: sampled by e.v.
  void resample(int v) {
    for (int f : inc_[v]) sampled_[f] &= static_cast<char>(edges_[f].u == v ? ~1 : ~2);
    for (int k : subset_sample(inc_[v].size(), q(v), rng_)) {
      int f = inc_[v][k];
      sampled_[f] |= static_cast<char>(edges_[f].u == v ? 1 : 2);
    }
  }

  double target(int id) const {
    if (!alive_[id] || !sampled_[id]) return 0.0;
    return edges_[id].w / p(id);
  }

  void unlink(int v, int pos) {
    auto& lst = inc_[v];
    int last = lst.back();
    lst[pos] = last;
    lst.pop_back();
    if (pos < static_cast<int>(lst.size())) {
      if (edges_[last].u == v) incpos_[last].first = pos;
      else incpos_[last].second = pos;
    }
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  double rho_ = 1.0;
  double L_ = 1.0;
  Rng rng_{0};
  std::vector<char> alive_, sampled_;
  std::vector<double> wp_, deg_;
  std::vector<std::vector<int>> inc_;
  std::vector<std::pair<int, int>> incpos_;
};

}  // namespace dsparse
