#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "dsparse/degree_sparsifier.hpp"
#include "dsparse/dyn_msf.hpp"
#include "dsparse/generators.hpp"
#include "dsparse/patchers.hpp"
#include "dsparse/rational.hpp"
#include "dsparse/spectral.hpp"

using namespace dsparse;

namespace {

double dyadic(Rng& rng, int hi = 16) { return static_cast<double>(rng.below(hi * 8)) / 8.0; }

template <class W>
std::map<std::pair<int, int>, W> as_map(const std::vector<BasicEdge<W>>& f) {
  std::map<std::pair<int, int>, W> m;
  for (const auto& e : f) m[{e.u, e.v}] += e.w;
  return m;
}

template <class W>
void expect_sums(const std::vector<BasicEdge<W>>& f, const std::vector<W>& d1, const std::vector<W>& d2) {
  std::vector<W> r(d1.size(), W(0)), c(d2.size(), W(0));
  for (const auto& e : f) {
    r[e.u] += e.w;
    c[e.v] += e.w;
  }
  for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_EQ(r[i], d1[i]) << "row " << i;
  for (std::size_t j = 0; j < d2.size(); ++j) EXPECT_EQ(c[j], d2[j]) << "col " << j;
}

}  // namespace

TEST(SegTree, RandomAgainstArray) {
  Rng rng(1);
  const std::size_t n = 37;
  std::vector<double> a(n, 0.0);
  SegTree<double> t(n);
  for (int op = 0; op < 2000; ++op) {
    std::size_t i = rng.below(n);
    a[i] = rng.bernoulli(0.3) ? 0.0 : dyadic(rng);
    t.set(i, a[i]);
    std::size_t q = rng.below(n + 1);
    double pre = 0.0;
    for (std::size_t k = 0; k < q; ++k) pre += a[k];
    ASSERT_EQ(t.prefix(q), pre);
    std::size_t nz = q;
    while (nz < n && a[nz] == 0.0) ++nz;
    ASSERT_EQ(t.next_nonzero(q), nz);
    double x = rng.uniform(0.0, t.total() + 1.0);
    std::size_t s = 0;
    double acc = 0.0;
    while (s < n && !(acc + a[s] > x)) acc += a[s++];
    ASSERT_EQ(t.search(x), s);
    std::size_t am = std::max_element(a.begin(), a.end()) - a.begin();
    ASSERT_EQ(t.argmax(), am);
  }
}

TEST(SubsetSample, Extremes) {
  Rng rng(2);
  EXPECT_EQ(subset_sample(10, 1.0, rng).size(), 10u);
  EXPECT_TRUE(subset_sample(10, 0.0, rng).empty());
}

TEST(SubsetSample, BinomialMean) {
  Rng rng(3);
  double sum = 0.0;
  std::vector<int> hits(10000, 0);
  for (int t = 0; t < 1000; ++t) {
    auto s = subset_sample(10000, 0.01, rng);
    sum += s.size();
    for (int i : s) ++hits[i];
    ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
  }
  // sigma of the mean: sqrt(10^4 * 0.01 * 0.99 / 10^3) = 0.315
  EXPECT_NEAR(sum / 1000, 100.0, 4 * 0.315);
  EXPECT_GT(hits.front() + hits.back(), 0);
}

TEST(IntervalPatcher, OverlapExample) {
  IntervalPatcher<double> p({3, 1}, {2, 2});
  EXPECT_EQ(p.query_edge(0, 0), 2.0);
  EXPECT_EQ(p.query_edge(0, 1), 1.0);
  EXPECT_EQ(p.query_edge(1, 1), 1.0);
  EXPECT_EQ(p.query_edge(1, 0), 0.0);
  auto f = p.query_all();
  ASSERT_EQ(f.size(), 3u);
  IntervalPatcher<double> z({0, 0}, {0, 0, 0});
  EXPECT_TRUE(z.query_all().empty());
  EXPECT_EQ(z.query_edge(1, 2), 0.0);
}

TEST(IntervalPatcher, UnequalTotalsDominated) {
  IntervalPatcher<double> p({3, 1, 2}, {1, 1});
  auto f = p.query_all();
  std::vector<double> r(3, 0.0), c(2, 0.0);
  for (const auto& e : f) {
    r[e.u] += e.w;
    c[e.v] += e.w;
  }
  EXPECT_EQ(c[0], 1.0);
  EXPECT_EQ(c[1], 1.0);
  EXPECT_LE(r[0], 3.0);
  EXPECT_EQ(r[2], 0.0);
}

TEST(IntervalPatcher, DifferentialAgainstStaticGreedy) {
  Rng rng(4);
  const int h = 128;
  std::vector<double> d1(h), d2(h);
  for (int i = 0; i < h; ++i) d1[i] = d2[i] = dyadic(rng);
  rng.shuffle(d2.begin(), d2.end());
  IntervalPatcher<double> p(d1, d2);
  for (int op = 0; op < 1000; ++op) {
    int u = static_cast<int>(rng.below(h)), v = static_cast<int>(rng.below(h));
    double x = rng.bernoulli(0.2) ? 0.0 : dyadic(rng);
    double y = d2[v] + (x - d1[u]);
    if (y < 0) continue;
    d1[u] = x;
    d2[v] = y;
    p.set1(u, x);
    p.set2(v, y);
    auto f = p.query_all();
    auto g = greedy_matching(d1, d2);
    ASSERT_EQ(f.size(), g.size()) << op;
    for (std::size_t k = 0; k < f.size(); ++k) {
      ASSERT_EQ(f[k].u, g[k].u);
      ASSERT_EQ(f[k].v, g[k].v);
      ASSERT_EQ(f[k].w, g[k].w);
    }
    ASSERT_LE(f.size(), static_cast<std::size_t>(2 * h));
    if (op % 100 == 0) {
      auto m = as_map(g);
      for (int k = 0; k < 50; ++k) {
        int a = static_cast<int>(rng.below(h)), b = static_cast<int>(rng.below(h));
        auto it = m.find({a, b});
        ASSERT_EQ(p.query_edge(a, b), it == m.end() ? 0.0 : it->second);
      }
    }
  }
}

TEST(IntervalPatcher, WhitenedNormAtMostOne) {
  Rng rng(5);
  std::vector<double> d1(10), d2(12);
  for (auto& x : d1) x = dyadic(rng) + 0.125;
  double t = 0.0;
  for (double x : d1) t += x;
  for (auto& x : d2) x = t / 12;
  IntervalPatcher<double> p(d1, d2);
  Matrix F = Matrix::Zero(12, 10);
  for (const auto& e : p.query_all()) F(e.v, e.u) = e.w;
  Vector a(12), b(10);
  for (int i = 0; i < 12; ++i) a(i) = 1 / std::sqrt(d2[i]);
  for (int i = 0; i < 10; ++i) b(i) = 1 / std::sqrt(d1[i]);
  EXPECT_LE(op_norm(a.asDiagonal() * F * b.asDiagonal()), 1.0 + 1e-12);
}

TEST(IntervalPatcher, Rational) {
  std::vector<Rational> d1{Rational(1, 3), Rational(2, 3)}, d2{Rational(1, 2), Rational(1, 2)};
  IntervalPatcher<Rational> p(d1, d2);
  EXPECT_EQ(p.query_edge(0, 0), Rational(1, 3));
  EXPECT_EQ(p.query_edge(1, 0), Rational(1, 6));
  EXPECT_EQ(p.query_edge(1, 1), Rational(1, 2));
  expect_sums(p.query_all(), d1, d2);
}

TEST(DegPreservingPatcher, EmptyDomainIsPlain) {
  std::vector<double> d1{3, 1}, d2{2, 2};
  DegPreservingPatcher<double> p(d1, d2, {-1, -1});
  IntervalPatcher<double> q(d1, d2);
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) EXPECT_EQ(p.query_edge(u, v), q.query_edge(u, v));
}

TEST(DegPreservingPatcher, PairGuard) {
  // V1 = {u}, V2 = {g(u), v}: d1_u + d2_g(u) = 3 > 2.
  try {
    DegPreservingPatcher<double> p({2}, {1, 1}, {0});
    FAIL();
  } catch (const PatcherPreconditionViolated& e) {
    EXPECT_EQ(e.which, "pair");
  }
  EXPECT_THROW(DegPreservingPatcher<double>({2}, {1, 2}, {-1}), PatcherPreconditionViolated);
}

TEST(DegPreservingPatcher, ForcedAvoidance) {
  // Plain interval order would route u0 -> v0 = g(u0).
  std::vector<double> d1{2, 2}, d2{2, 2};
  IntervalPatcher<double> plain(d1, d2);
  EXPECT_EQ(plain.query_edge(0, 0), 2.0);
  DegPreservingPatcher<double> p(d1, d2, {0, 1});
  EXPECT_EQ(p.query_edge(0, 0), 0.0);
  EXPECT_EQ(p.query_edge(1, 1), 0.0);
  auto f = p.query_all();
  expect_sums(f, d1, d2);
}

TEST(DegPreservingPatcher, RandomSequences) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(100 + s);
    const int h = 128;
    std::vector<int> g(h, -1), perm(h);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    for (int u = 0; u < h; ++u)
      if (rng.bernoulli(0.8)) g[u] = perm[u];
    std::vector<double> d1(h), d2(h);
    for (int i = 0; i < h; ++i) d1[i] = d2[i] = dyadic(rng, 4);
    rng.shuffle(d2.begin(), d2.end());
    // one heavy pair to exercise the capped max entry
    double tot = 0.0;
    for (double x : d1) tot += x;
    DegPreservingPatcher<double> p(d1, d2, g);
    int checked = 0;
    for (int op = 0; op < 400; ++op) {
      int u = static_cast<int>(rng.below(h)), v = static_cast<int>(rng.below(h));
      double x = rng.bernoulli(0.1) ? 0.0 : (rng.bernoulli(0.05) ? tot / 3 : dyadic(rng, 4));
      x = std::floor(x * 8) / 8;
      double y = d2[v] + (x - d1[u]);
      if (y < 0) continue;
      auto n1 = d1, n2 = d2;
      n1[u] = x;
      n2[v] = y;
      double t = 0.0;
      for (double z : n1) t += z;
      bool ok = true;
      for (int a = 0; a < h; ++a)
        if (g[a] >= 0 && n1[a] + n2[g[a]] > t) ok = false;
      if (!ok) continue;
      d1 = n1;
      d2 = n2;
      p.set1(u, x);
      p.set2(v, y);
      auto f = p.query_all();
      expect_sums(f, d1, d2);
      ASSERT_LE(f.size(), static_cast<std::size_t>(4 * h));
      auto m = as_map(f);
      for (int a = 0; a < h; ++a)
        if (g[a] >= 0) { ASSERT_EQ(p.query_edge(a, g[a]), 0.0) << op; }
      for (int k = 0; k < 20; ++k) {
        int a = static_cast<int>(rng.below(h)), b = static_cast<int>(rng.below(h));
        auto it = m.find({a, b});
        ASSERT_EQ(p.query_edge(a, b), it == m.end() ? 0.0 : it->second);
      }
      ++checked;
    }
    EXPECT_GT(checked, 200);
  }
}

TEST(DegPreservingPatcher, MaxVertexSwitches) {
  std::vector<double> d1{2, 1, 1, 1}, d2{2, 1, 1, 1};
  std::vector<int> g{0, 1, 2, -1};
  DegPreservingPatcher<double> p(d1, d2, g);
  auto check = [&] {
    auto f = p.query_all();
    expect_sums(f, d1, d2);
    for (int u = 0; u < 3; ++u) EXPECT_EQ(p.query_edge(u, g[u]), 0.0);
  };
  auto set = [&](int side, int v, double x) {
    if (side == 1) {
      d1[v] = x;
      p.set1(v, x);
    } else {
      d2[v] = x;
      p.set2(v, x);
    }
  };
  EXPECT_EQ(p.max_vertex(), 0);
  check();
  set(1, 0, 1);
  set(1, 2, 2);
  set(2, 0, 1);
  set(2, 2, 2);
  EXPECT_EQ(p.max_vertex(), 2);
  check();
  set(1, 1, 2);
  set(1, 3, 0);
  set(2, 1, 2);
  set(2, 3, 0);
  EXPECT_EQ(p.max_vertex(), 2);
  check();
  set(1, 2, 1);
  set(1, 3, 1);
  set(2, 2, 1);
  set(2, 3, 1);
  EXPECT_EQ(p.max_vertex(), 1);
  check();
}

TEST(DegPreservingPatcher, Rational) {
  std::vector<Rational> d1{Rational(1, 3), Rational(1, 3), Rational(1, 3)};
  std::vector<Rational> d2 = d1;
  DegPreservingPatcher<Rational> p(d1, d2, {0, 1, 2});
  auto f = p.query_all();
  expect_sums(f, d1, d2);
  for (int u = 0; u < 3; ++u) EXPECT_EQ(p.query_edge(u, u), Rational(0));
}

TEST(DynStarPatcher, EdgesFollowDemands) {
  DynStarPatcher<double> s(3, 3);
  s.set1(0, 2.0);
  s.set2(1, 1.0);
  s.set2(2, 1.0);
  auto es = s.edges();
  ASSERT_EQ(es.size(), 3u);
  EXPECT_EQ(es[0].u, 0);
  EXPECT_EQ(es[0].v, 3);
  auto c = s.set1(0, 0.0);
  EXPECT_EQ(c.old_w, 2.0);
  EXPECT_EQ(s.edges().size(), 2u);
}

namespace {

std::vector<Edge> digraph_edges(const DiGraph& g) { return g.edges(); }

}  // namespace

TEST(DegreeSparsifier, SaturatedIsIdentity) {
  auto es = digraph_edges(random_regular_digraph(32, 6, 7));
  DegreeSparsifier ds(32, es, 1e6, 1);
  for (std::size_t i = 0; i < es.size(); ++i) ASSERT_EQ(ds.weight(static_cast<int>(i)), es[i].w);
  auto ch = ds.erase(3);
  ASSERT_EQ(ch.size(), 1u);
  EXPECT_EQ(ch[0].edge, 3);
  EXPECT_EQ(ch[0].new_w, 0.0);
  EXPECT_EQ(ds.current().size(), es.size() - 1);
  EXPECT_THROW(ds.erase(3), MissingEdge);
  EXPECT_THROW(ds.erase(-1), MissingEdge);
}

TEST(DegreeSparsifier, SupportMatchesSamples) {
  auto es = digraph_edges(random_regular_digraph(64, 16, 8));
  DegreeSparsifier ds(64, es, 2.0, 2);
  Rng rng(9);
  for (int step = 0; step < 300; ++step) {
    int id = static_cast<int>(rng.below(es.size()));
    if (!ds.alive(id)) continue;
    auto ch = ds.erase(id);
    for (const auto& c : ch) ASSERT_NE(c.old_w, c.new_w);
    for (std::size_t i = 0; i < es.size(); ++i) {
      int k = static_cast<int>(i);
      ASSERT_EQ(ds.weight(k) > 0, ds.alive(k) && ds.in_sample(k));
      if (ds.weight(k) > 0) { ASSERT_DOUBLE_EQ(ds.weight(k), es[i].w / ds.p(k)); }
    }
  }
}

TEST(DegreeSparsifier, DeletionIsLocal) {
  auto es = digraph_edges(random_regular_digraph(64, 16, 10));
  DegreeSparsifier ds(64, es, 2.0, 3);
  auto before = ds.reweighting();
  const auto e = es[5];
  auto ch = ds.erase(5);
  auto after = ds.reweighting();
  for (std::size_t i = 0; i < es.size(); ++i) {
    bool touches = es[i].u == e.u || es[i].v == e.u || es[i].u == e.v || es[i].v == e.v;
    if (!touches) { ASSERT_EQ(before[i], after[i]) << i; }
  }
  for (const auto& c : ch) {
    const auto& f = es[c.edge];
    EXPECT_TRUE(f.u == e.u || f.v == e.u || f.u == e.v || f.v == e.v);
  }
}

TEST(DegreeSparsifier, Unbiased) {
  auto es = digraph_edges(random_regular_digraph(32, 8, 11));
  const int trials = 4000;
  std::vector<double> mean(es.size(), 0.0);
  double p0 = 0.0;
  for (int t = 0; t < trials; ++t) {
    DegreeSparsifier ds(32, es, 1.0, 1000 + t);
    p0 = ds.p(0);
    for (std::size_t i = 0; i < es.size(); ++i) mean[i] += ds.weight(static_cast<int>(i)) / trials;
  }
  ASSERT_LT(p0, 1.0);
  int outside = 0;
  for (std::size_t i = 0; i < es.size(); ++i) {
    // w' is w/p with probability p: sd = w sqrt((1 - p) / p)
    DegreeSparsifier ds(32, es, 1.0, 0);
    double p = ds.p(static_cast<int>(i));
    double se = es[i].w * std::sqrt((1 - p) / p / trials);
    if (std::abs(mean[i] - es[i].w) > 4 * se) ++outside;
  }
  EXPECT_LE(outside, 1);
}

TEST(DegreeSparsifier, DecrementalExpanderAudit) {
  // dense random digraph: und(g) is a good expander throughout 400 random deletions
  const int n = 64;
  const double eps = 0.75;
  int good = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto g = random_digraph(n, 2000, 50 + s, 1.0, 2.0);
    auto es = g.edges();
    DegreeSparsifier ds(n, es, 16.0, 500 + s);
    std::vector<int> order(es.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(70 + s);
    rng.shuffle(order.begin(), order.end());
    bool ok = true;
    for (int k = 0; k < 400 && ok; ++k) {
      ds.erase(order[k]);
      if ((k + 1) % 50) continue;
      std::vector<Edge> cur;
      std::vector<double> wp;
      for (std::size_t i = 0; i < es.size(); ++i)
        if (ds.alive(static_cast<int>(i))) {
          cur.push_back(es[i]);
          wp.push_back(ds.weight(static_cast<int>(i)));
        }
      ok = degree_approx_error(n, cur, wp) <= eps;
    }
    good += ok;
  }
  EXPECT_GE(good, 19);
}

TEST(DynMsfBundle, InitMatchesStatic) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto g = random_connected_ugraph(40, 200, s, 1.0, 8.0);
    DynMsfBundle d(40, 3);
    d.init(g);
    ASSERT_TRUE(d.audit());
    auto st = tbundle_msf(g, 3);
    auto mem = st.membership(g.edges.size());
    std::size_t in = 0;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      int id = d.edge_id(g.edges[i].u, g.edges[i].v);
      ASSERT_EQ(d.in_bundle(id), mem[i] != 0) << i;
      in += mem[i];
    }
    EXPECT_EQ(d.bundle_edges().size(), in);
  }
}

TEST(DynMsfBundle, TreeIsAllBundle) {
  auto g = random_tree(20, 3);
  DynMsfBundle d(20, 2);
  d.init(g);
  EXPECT_EQ(d.bundle_edges().size(), 19u);
  EXPECT_TRUE(d.nonbundle_edges().empty());
  auto r = d.erase(g.edges[4].u, g.edges[4].v);
  EXPECT_EQ(r.nonbundle_changes, 0);
  ASSERT_EQ(r.moves.size(), 1u);
  EXPECT_EQ(d.bundle_edges().size(), 18u);
  EXPECT_THROW(d.erase(g.edges[4].u, g.edges[4].v), MissingEdge);
}

TEST(DynMsfBundle, CycleHandTrace) {
  UGraph c{4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}}};
  DynMsfBundle d(4, 1);
  d.init(c);
  ASSERT_EQ(d.nonbundle_edges().size(), 1u);
  // the last inserted edge (3, 0) closes the cycle
  EXPECT_EQ(d.level(d.edge_id(0, 3)), 2);
  auto r = d.erase(0, 3);
  EXPECT_EQ(r.moves.size(), 1u);
  EXPECT_EQ(r.nonbundle_changes, 1);
  EXPECT_EQ(d.bundle_edges().size(), 3u);
  d.insert(0, 3, 1.0);
  auto r2 = d.erase(1, 2);
  ASSERT_EQ(r2.moves.size(), 2u);
  EXPECT_EQ(r2.moves[1].edge, d.edge_id(0, 3));
  EXPECT_EQ(r2.moves[1].to, 1);
  EXPECT_EQ(r2.nonbundle_changes, 1);
  EXPECT_TRUE(d.nonbundle_edges().empty());
  EXPECT_TRUE(d.audit());
}

TEST(DynMsfBundle, RandomUpdatesKeepBundleCertified) {
  const int n = 64, t = 4;
  Rng rng(12);
  DynMsfBundle d(n, t);
  d.init(random_connected_ugraph(n, 400, 13, 1.0, 4.0));
  int max_nb = 0;
  for (int op = 0; op < 1000; ++op) {
    BundleReport r;
    if (rng.bernoulli(0.5) && d.m() > 0) {
      auto es = d.edges();
      const auto& e = es[rng.below(es.size())];
      r = d.erase(e.u, e.v);
    } else {
      int u = static_cast<int>(rng.below(n)), v = static_cast<int>(rng.below(n));
      if (u == v || d.edge_id(u, v) >= 0) continue;
      r = d.insert(u, v, rng.uniform(1.0, 4.0));
    }
    max_nb = std::max(max_nb, r.nonbundle_changes);
    ASSERT_LE(static_cast<int>(r.moves.size()), t + 1);
    if (op % 50 == 0) { ASSERT_TRUE(d.audit()) << op; }
    if (op % 100 == 0) {
      UGraph cur{n, d.edges()};
      for (const auto& e : d.nonbundle_edges()) {
        // k_e counted within the bucket of e already exceeds t * 2^bucket >= t w_e / 2
        ASSERT_GE(edge_connectivity(cur, e.u, e.v), t * e.w / 2 - 1e-9);
      }
    }
  }
  EXPECT_LE(max_nb, 1);
  EXPECT_TRUE(d.audit());
}
