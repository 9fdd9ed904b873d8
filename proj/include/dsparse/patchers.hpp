#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "dsparse/errors.hpp"
#include "dsparse/graph.hpp"
#include "dsparse/segtree.hpp"

namespace dsparse {

struct PatcherPreconditionViolated : PreconditionError {
  PatcherPreconditionViolated(std::string which, const std::string& msg)
      : PreconditionError("patcher precondition (" + which + ") violated: " + msg), which(std::move(which)) {}
  std::string which;
};

namespace detail {

template <class W>
W overlap(const W& a0, const W& a1, const W& b0, const W& b1) {
  W lo = a0 > b0 ? a0 : b0;
  W hi = a1 < b1 ? a1 : b1;
  return hi > lo ? hi - lo : W(0);
}

// Ordered demand vector: leaf values live at pos[v]; at[p] is the vertex at position p.
template <class W>
struct OrderedDemand {
  SegTree<W> tree;
  std::vector<int> pos, at;

  void init(const std::vector<W>& d, std::vector<int> order) {
    at = std::move(order);
    pos.assign(at.size(), 0);
    std::vector<W> vals(at.size());
    for (std::size_t p = 0; p < at.size(); ++p) {
      pos[at[p]] = static_cast<int>(p);
      vals[p] = d[at[p]];
    }
    tree.assign(vals);
  }
  void set(int v, const W& x) { tree.set(pos[v], x); }
  const W& value(int v) const { return tree[pos[v]]; }
  std::pair<W, W> range(int v) const {
    W s = tree.prefix(pos[v]);
    return {s, s + tree[pos[v]]};
  }
  void swap_positions(std::size_t p, std::size_t q) {
    tree.swap_leaves(p, q);
    std::swap(at[p], at[q]);
    pos[at[p]] = static_cast<int>(p);
    pos[at[q]] = static_cast<int>(q);
  }
  void swap_vertices(int u, int v) { swap_positions(pos[u], pos[v]); }
};

// Two-pointer merge of the ranges; appends edges (u, v, overlap) in vertex ids.
template <class W>
void merge_ranges(const OrderedDemand<W>& a, const OrderedDemand<W>& b, std::vector<BasicEdge<W>>& out) {
  std::size_t i = a.tree.next_nonzero(0), j = b.tree.next_nonzero(0);
  W sa = W(0), sb = W(0);
  while (i < a.tree.size() && j < b.tree.size()) {
    W ea = sa + a.tree[i], eb = sb + b.tree[j];
    W x = overlap(sa, ea, sb, eb);
    if (x > W(0)) out.push_back({a.at[i], b.at[j], x});
    if (ea < eb) {
      sa = ea;
      i = a.tree.next_nonzero(i + 1);
    } else if (eb < ea) {
      sb = eb;
      j = b.tree.next_nonzero(j + 1);
    } else {
      sa = ea;
      sb = eb;
      i = a.tree.next_nonzero(i + 1);
      j = b.tree.next_nonzero(j + 1);
    }
  }
}

inline std::vector<int> identity_order(std::size_t n) {
  std::vector<int> o(n);
  for (std::size_t i = 0; i < n; ++i) o[i] = static_cast<int>(i);
  return o;
}

}  // namespace detail

// Implicit interval flow f(u, v) = |[s_{u-1}, s_u] cap [t_{v-1}, t_v]| between demands d1 on V1 and d2 on V2.
template <class W>
class IntervalPatcher {
 public:
  IntervalPatcher() = default;
  IntervalPatcher(const std::vector<W>& d1, const std::vector<W>& d2) { init(d1, d2); }

  void init(const std::vector<W>& d1, const std::vector<W>& d2) {
    t1_.init(d1, detail::identity_order(d1.size()));
    t2_.init(d2, detail::identity_order(d2.size()));
  }

  std::size_t n1() const { return t1_.at.size(); }
  std::size_t n2() const { return t2_.at.size(); }
  void set1(int u, const W& x) { t1_.set(u, x); }
  void set2(int v, const W& x) { t2_.set(v, x); }
  const W& d1(int u) const { return t1_.value(u); }
  const W& d2(int v) const { return t2_.value(v); }
  const W& total1() const { return t1_.tree.total(); }
  const W& total2() const { return t2_.tree.total(); }

  W query_edge(int u, int v) const {
    auto [a0, a1] = t1_.range(u);
    auto [b0, b1] = t2_.range(v);
    return detail::overlap(a0, a1, b0, b1);
  }

  std::vector<BasicEdge<W>> query_all() const {
    std::vector<BasicEdge<W>> f;
    detail::merge_ranges(t1_, t2_, f);
    return f;
  }

 private:
  detail::OrderedDemand<W> t1_, t2_;
};

// Interval flow with f(u, g(u)) = 0 for u in dom(g), via a split into residual and matched demands.
template <class W>
class DegPreservingPatcher {
 public:
  DegPreservingPatcher() = default;
  // g[u] in V2 or -1 when u is outside U1; g must be injective.
  DegPreservingPatcher(const std::vector<W>& d1, const std::vector<W>& d2, const std::vector<int>& g) {
    init(d1, d2, g);
  }

  void init(const std::vector<W>& d1, const std::vector<W>& d2, const std::vector<int>& g) {
    if (g.size() != d1.size()) throw DimensionMismatch("DegPreservingPatcher: g size");
    d1_ = d1;
    d2_ = d2;
    g_ = g;
    ginv_.assign(d2.size(), -1);
    u1_.clear();
    for (int u = 0; u < static_cast<int>(g.size()); ++u) {
      if (g[u] < 0) continue;
      if (g[u] >= static_cast<int>(d2.size()) || ginv_[g[u]] >= 0)
        throw PreconditionError("DegPreservingPatcher: g not injective into V2");
      ginv_[g[u]] = u;
      u1_.push_back(u);
    }
    std::vector<W> b(d1.size(), W(0)), s(d1.size(), W(0));
    for (int u : u1_) {
      b[u] = std::min(d1_[u], d2_[g_[u]]);
      s[u] = d1_[u] + d2_[g_[u]];
    }
    b_.assign(b);
    pair_sum_.assign(s);
    w_ = u1_.empty() ? -1 : static_cast<int>(b_.argmax());
    if (w_ >= 0 && g_[w_] < 0) w_ = u1_[0];
    a_.assign(d1.size(), W(0));
    for (int u : u1_) a_[u] = b[u];
    if (w_ >= 0) a_[w_] = capped(w_);
    build_orders();
    validate();
  }

  void set1(int u, const W& x) {
    d1_[u] = x;
    refresh({u});
  }
  void set2(int v, const W& x) {
    d2_[v] = x;
    refresh(ginv_[v] >= 0 ? std::vector<int>{ginv_[v]} : std::vector<int>{}, v);
  }

  const W& d1(int u) const { return d1_[u]; }
  const W& d2(int v) const { return d2_[v]; }
  int max_vertex() const { return w_; }

  // Throws when the demand totals differ or some d1_u + d2_{g(u)} exceeds the total.
  void validate() const {
    W t1(0), t2(0);
    for (const auto& x : d1_) t1 += x;
    for (const auto& x : d2_) t2 += x;
    W diff = t1 > t2 ? t1 - t2 : t2 - t1;
    W scale = t1 > W(1) ? t1 : W(1);
    W tol(0);
    if constexpr (std::is_floating_point_v<W>) tol = W(1e-12) * scale;
    if (diff > tol) throw PatcherPreconditionViolated("totals", "||d1||_1 != ||d2||_1");
    if (!u1_.empty() && pair_sum_.max() > t1 + tol)
      throw PatcherPreconditionViolated("pair", "d1_u + d2_g(u) exceeds ||d1||_1");
  }

  W query_edge(int u, int v) const {
    validate();
    auto [a0, a1] = r1_.range(u);
    auto [b0, b1] = r2_.range(v);
    auto [c0, c1] = m1_.range(u);
    auto [e0, e1] = m2_.range(v);
    return detail::overlap(a0, a1, b0, b1) + detail::overlap(c0, c1, e0, e1);
  }

  // Merged f1 + f2, sorted by (u, v).
  std::vector<BasicEdge<W>> query_all() const {
    validate();
    std::vector<BasicEdge<W>> f;
    detail::merge_ranges(r1_, r2_, f);
    detail::merge_ranges(m1_, m2_, f);
    std::sort(f.begin(), f.end(), [](const auto& x, const auto& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
    std::vector<BasicEdge<W>> out;
    for (const auto& e : f) {
      if (!out.empty() && out.back().u == e.u && out.back().v == e.v) out.back().w += e.w;
      else out.push_back(e);
    }
    return out;
  }

 private:
  W capped(int w) const {
    const W& bw = b_[w];
    W rest = b_.total() - bw;
    return bw > rest ? rest : bw;  // b_w <= ||b|| / 2 iff b_w <= rest
  }

  void build_orders() {
    const int n1 = static_cast<int>(d1_.size()), n2 = static_cast<int>(d2_.size());
    std::vector<int> s1, s2, p1, p2;
    if (w_ >= 0) s1.push_back(w_);
    for (int u = 0; u < n1; ++u)
      if (u != w_) s1.push_back(u);
    for (int v = 0; v < n2; ++v)
      if (w_ < 0 || v != g_[w_]) s2.push_back(v);
    if (w_ >= 0) s2.push_back(g_[w_]);
    // pi_1: w, other U1, rest; pi_2: g(pi_1[1..k-1]), g(w), rest
    if (w_ >= 0) p1.push_back(w_);
    for (int u : u1_)
      if (u != w_) p1.push_back(u);
    for (int u = 0; u < n1; ++u)
      if (g_[u] < 0) p1.push_back(u);
    for (std::size_t i = 1; i < u1_.size(); ++i) p2.push_back(g_[p1[i]]);
    if (w_ >= 0) p2.push_back(g_[w_]);
    for (int v = 0; v < n2; ++v)
      if (ginv_[v] < 0) p2.push_back(v);
    std::vector<W> r1(n1), r2(n2), m2(n2, W(0));
    for (int u = 0; u < n1; ++u) r1[u] = d1_[u] - a_[u];
    for (int v = 0; v < n2; ++v) {
      W av = ginv_[v] >= 0 ? a_[ginv_[v]] : W(0);
      r2[v] = d2_[v] - av;
      m2[v] = av;
    }
    r1_.init(r1, s1);
    r2_.init(r2, s2);
    m1_.init(a_, p1);
    m2_.init(m2, p2);
  }

  void write(int u) {
    r1_.set(u, d1_[u] - a_[u]);
    m1_.set(u, a_[u]);
    if (g_[u] >= 0) {
      r2_.set(g_[u], d2_[g_[u]] - a_[u]);
      m2_.set(g_[u], a_[u]);
    }
  }

  // Recomputes b, w and a after a change at V1 vertices `us` (and V2 vertex v2 when >= 0).
  void refresh(const std::vector<int>& us, int v2 = -1) {
    for (int u : us) {
      if (g_[u] < 0) continue;
      b_.set(u, std::min(d1_[u], d2_[g_[u]]));
      pair_sum_.set(u, d1_[u] + d2_[g_[u]]);
    }
    std::vector<int> touched(us.begin(), us.end());
    if (w_ >= 0) {
      int nw = static_cast<int>(b_.argmax());
      if (g_[nw] < 0 || !(b_[nw] > b_[w_])) nw = w_;
      if (nw != w_) {
        int old = w_;
        // sigma_1: new max vertex first; sigma_2: its image last
        r1_.swap_vertices(old, nw);
        r2_.swap_vertices(g_[old], g_[nw]);
        // pi_1 swaps positions 0 and j; pi_2 swaps positions j - 1 and k - 1
        std::size_t j = m1_.pos[nw];
        m1_.swap_positions(0, j);
        m2_.swap_positions(j - 1, u1_.size() - 1);
        a_[old] = b_[old];
        touched.push_back(old);
        w_ = nw;
      }
      for (int u : us)
        if (u != w_ && g_[u] >= 0) a_[u] = b_[u];
      a_[w_] = capped(w_);
      touched.push_back(w_);
    }
    for (int u : touched) write(u);
    for (int u : us)
      if (g_[u] < 0) r1_.set(u, d1_[u]);
    if (v2 >= 0 && ginv_[v2] < 0) r2_.set(v2, d2_[v2]);
  }

  std::vector<W> d1_, d2_, a_;
  std::vector<int> g_, ginv_, u1_;
  SegTree<W> b_, pair_sum_;
  int w_ = -1;
  detail::OrderedDemand<W> r1_, r2_, m1_, m2_;
};

// Star patching through one center: out-edges (v, x, d1_v) and in-edges (x, v, d2_v).
template <class W>
class DynStarPatcher {
 public:
  struct Change {
    int v;
    bool out;  // true for (v, x), false for (x, v)
    W old_w, new_w;
  };

  DynStarPatcher() = default;
  DynStarPatcher(int n, int center) : d1_(n, W(0)), d2_(n, W(0)), center_(center) {}

  int center() const { return center_; }
  Change set1(int v, const W& x) {
    Change c{v, true, d1_[v], x};
    d1_[v] = x;
    return c;
  }
  Change set2(int v, const W& x) {
    Change c{v, false, d2_[v], x};
    d2_[v] = x;
    return c;
  }
  const W& d1(int v) const { return d1_[v]; }
  const W& d2(int v) const { return d2_[v]; }

  std::vector<BasicEdge<W>> edges() const {
    std::vector<BasicEdge<W>> es;
    for (int v = 0; v < static_cast<int>(d1_.size()); ++v) {
      if (d1_[v] > W(0)) es.push_back({v, center_, d1_[v]});
      if (d2_[v] > W(0)) es.push_back({center_, v, d2_[v]});
    }
    return es;
  }

 private:
  std::vector<W> d1_, d2_;
  int center_ = -1;
};

}  // namespace dsparse
