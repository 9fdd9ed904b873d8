#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dsparse/dicut.hpp"
#include "dsparse/dyn_msf.hpp"
#include "dsparse/framework.hpp"
#include "dsparse/generators.hpp"
#include "dsparse/io.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/patchers.hpp"
#include "dsparse/quadruple.hpp"
#include "dsparse/rational.hpp"
#include "dsparse/spectral.hpp"
#include "support.hpp"

using namespace dsparse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double balance_gap(const DiGraph& g, const Matrix& vLH) {
  Matrix LG = directed_laplacian(g);
  double s = std::max(1.0, LG.diagonal().cwiseAbs().maxCoeff());
  return (LG.rowwise().sum() - vLH.rowwise().sum()).cwiseAbs().maxCoeff() / s;
}

double dicut_weight(const DiGraph& g, std::uint32_t mask) {
  double s = 0.0;
  for (const auto& e : g.edges())
    if ((mask >> e.u & 1u) && !(mask >> e.v & 1u)) s += e.w;
  return s;
}

// ---------------------------------------------------------------------------
// 1 and 3 share their runs.

struct SpectralRun {
  double err = 0.0, balance = 0.0;
  bool support_ok = true;
  std::size_t kept = 0, lifted = 0, fallbacks = 0;
  SpectralResult r;
};

SpectralRun spectral_run(const DiGraph& g, Scheme sc, double eps, std::uint64_t seed, std::optional<double> rho) {
  SpectralConfig cfg;
  cfg.eps = eps;
  cfg.delta = 0.1;
  cfg.scheme = sc;
  cfg.seed = seed;
  cfg.rho = rho;
  SpectralRun out;
  out.r = sparsify_directed_spectral(g, cfg);
  Matrix L = schur_laplacian(out.r);
  out.err = spectral_error(g, L);
  out.balance = balance_gap(g, L);
  out.kept = out.r.kept;
  out.lifted = out.r.lifted_edges;
  out.fallbacks = out.r.fallbacks;
  if (sc == Scheme::Internal) {
    if (out.r.n_aux) out.support_ok = false;
    for (const auto& e : out.r.h.edges())
      if (!g.has_edge(e.u, e.v)) out.support_ok = false;
  }
  return out;
}

DiGraph c1_graph(int n, std::uint64_t s) { return random_eulerian(n, 8, 1000 * static_cast<std::uint64_t>(n) + s); }

Outcome criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.25;
  bool ok = true;
  std::string det;
  for (auto [label, rho] : {std::pair<const char*, std::optional<double>>{"configured", std::nullopt},
                            std::pair<const char*, std::optional<double>>{"rho=4", 4.0}}) {
    det += fmt::format("[{}]", label);
    for (Scheme sc : {Scheme::Star, Scheme::External, Scheme::Internal}) {
      for (int n : {16, 32, 64}) {
        int good = 0, bal = 0, sup = 0;
        std::size_t kept = 0, lifted = 0, fb = 0;
        for (std::uint64_t s = 0; s < 100; ++s) {
          auto run = spectral_run(c1_graph(n, s), sc, eps, s, rho);
          good += run.err <= eps;
          bal += run.balance <= 1e-9;
          sup += run.support_ok;
          kept += run.kept;
          lifted += run.lifted;
          fb += run.fallbacks;
        }
        bool cfg_ok = good >= 90 && bal == 100;
        // support is gated for the configured constants; sampled Internal runs fall back to External patching
        if (sc == Scheme::Internal && !rho) cfg_ok &= sup == 100;
        ok &= cfg_ok;
        det += fmt::format(" {}/{}: err {} bal {}{} kept {:.2f}{};", to_string(sc), n, good, bal,
                           sc == Scheme::Internal ? fmt::format(" sup {}", sup) : "",
                           static_cast<double>(kept) / static_cast<double>(lifted),
                           sc == Scheme::Internal ? fmt::format(" fb {}", fb) : "");
      }
    }
  }
  double t = seconds_since(t0);
  ok &= t < 300.0;
  det += fmt::format(" time {:.1f}s", t);
  return {ok, det};
}

Outcome criterion2() {
  int exact = 0, runs = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const int n = s % 2 ? 32 : 16;
    auto g = random_eulerian(n, 4, 2000 + s);
    // perturb to a non-Eulerian graph so that in- and out-degrees differ
    Rng rng(s);
    for (int k = 0; k < n; ++k) {
      int u = static_cast<int>(rng.below(n)), v = static_cast<int>(rng.below(n));
      if (u != v && !g.has_edge(u, v)) g.add_edge(u, v, std::ldexp(std::floor(rng.uniform(1.0, 2.0) * 64), -6));
    }
    SpectralConfig cfg;
    cfg.eps = 0.25;
    cfg.strict_degree = true;
    cfg.rational = true;
    cfg.scheme = s % 3 == 0 ? Scheme::External : Scheme::Star;
    cfg.rho = 2.0;
    cfg.seed = s;
    auto r = sparsify_directed_spectral(g, cfg);
    auto sch = r.n_aux ? eliminate_stars_exact(n, n + r.n_aux, r.h_exact) : r.h_exact;
    auto dh = degree_vectors(n, sch);
    auto dg = degree_vectors(n, to_rational(g.edges()));
    bool same = true;
    for (int v = 0; v < n; ++v) same &= dh.out[v] == dg.out[v] && dh.in[v] == dg.in[v];
    exact += same;
    ++runs;
  }
  return {exact == 100, fmt::format("exact in/out degrees {}/{} (rational, rho=2, Star and External)", exact, runs)};
}

Outcome criterion3() {
  const double eps = 0.125;
  int passing = 0, within = 0;
  double worst = 0.0;
  for (int n : {16, 32, 64}) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      auto g = c1_graph(n, s);
      auto run = spectral_run(g, Scheme::Star, eps, s, 4.0);
      if (run.err > eps) continue;
      ++passing;
      double e = schur_precondition_error(g, run.r.h);
      worst = std::max(worst, e);
      within += e <= 8 * eps + 1e-8;
    }
  }
  return {passing > 0 && within == passing,
          fmt::format("Star eps=1/8 rho=4: {}/{} passing runs within 8 eps, worst {:.4f}", within, passing, worst)};
}

Outcome criterion4() {
  bool ok = true;
  std::string det;
  for (std::optional<double> rho : {std::optional<double>{}, std::optional<double>{12.0}}) {
    for (double beta : {1.0, 4.0}) {
      int good = 0;
      std::size_t kept = 0, m = 0;
      DicutConfig dc;
      dc.rho = rho;
      for (std::uint64_t s = 0; s < 200; ++s) {
        auto g = random_digraph(12, 60, 4000 + s);
        auto r = sparsify_dicut(g, beta, 0.3, 0.1, exact_connectivity(g), s, dc);
        good += cut_check_dicut(g, r.h, beta, 0.3).pass();
        kept += r.kept;
        m += g.m();
      }
      ok &= good >= 180;
      det += fmt::format("{} beta {}: {}/200 kept {:.2f}; ", rho ? "rho=12" : "configured", beta, good,
                         static_cast<double>(kept) / m);
    }
  }
  // unbiasedness on one cut, with a rate low enough to sample
  auto g = random_digraph(12, 60, 77);
  auto k = exact_connectivity(g);
  DicutConfig cfg;
  cfg.rho = 0.8;
  const std::uint32_t mask = 0b000011110101;
  const double truth = dicut_weight(g, mask);
  Rng rng(9);
  const int trials = 10000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    double x = dicut_weight(sparsify_dicut(g, 1.0, 0.3, 0.1, k, rng, cfg).h, mask);
    sum += x;
    sq += x * x;
  }
  double mean = sum / trials, se = std::sqrt((sq / trials - mean * mean) / trials);
  bool unbiased = se > 0.0 && std::abs(mean - truth) <= 4 * se;
  ok &= unbiased;
  det += fmt::format("cut mean {:.4f} vs {:.4f}, {:.2f} se", mean, truth, std::abs(mean - truth) / se);
  return {ok, det};
}

Outcome criterion5() {
  const double eps = 0.5, beta = 1.0, c_bal = 0.02;
  std::vector<double> ratio;
  std::string det = fmt::format("c_bal {} eps {} beta {}:", c_bal, eps, beta);
  bool sampled = true;
  for (int n : {64, 128, 256}) {
    double sum = 0.0, kept = 0.0, m = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      auto g = random_regular_digraph(n, 32, 5000 + n + s);
      DicutConfig cfg;
      cfg.c_bal = c_bal;
      auto r = sparsify_dicut_full(g, beta, eps, 0.1, s, cfg);
      sum += static_cast<double>(r.h.m()) / (beta * n * std::log(n) / (eps * eps));
      kept += static_cast<double>(r.h.m());
      m += static_cast<double>(g.m());
    }
    ratio.push_back(sum / 3.0);
    sampled &= kept < m;
    det += fmt::format(" n={} ratio {:.4f} kept {:.2f};", n, sum / 3.0, kept / m);
  }
  double lo = *std::min_element(ratio.begin(), ratio.end()), hi = *std::max_element(ratio.begin(), ratio.end());
  det += fmt::format(" spread {:.3f}", hi / lo);
  return {sampled && hi <= 2.0 * lo, det};
}

Outcome criterion6() {
  const int n = 64, t = 4;
  Rng rng(61);
  DynMsfBundle d(n, t);
  d.init(random_connected_ugraph(n, 400, 62, 1.0, 4.0));
  auto certified = [&] {
    UGraph cur{n, d.edges()};
    for (const auto& e : d.nonbundle_edges())
      if (edge_connectivity(cur, e.u, e.v) < t * e.w / 2 - 1e-9) return false;
    return d.audit();
  };
  auto key_set = [&] {
    std::set<std::pair<int, int>> s;
    for (const auto& e : d.nonbundle_edges()) s.insert({e.u, e.v});
    return s;
  };
  bool ok = certified();
  std::size_t nb0 = d.nonbundle_edges().size();
  int audits = 0, audits_ok = 0, mismatch = 0, over = 0, updates = 0;
  auto before = key_set();
  while (updates < 1000) {
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
    ++updates;
    auto after = key_set();
    std::vector<std::pair<int, int>> diff;
    std::set_symmetric_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(diff));
    mismatch += static_cast<int>(diff.size()) != r.nonbundle_changes;
    over += r.nonbundle_changes > 1;
    before = std::move(after);
    if (updates % 100 == 0) {
      ++audits;
      audits_ok += certified();
    }
  }
  ok &= audits_ok == audits && mismatch == 0 && over == 0;
  return {ok, fmt::format("initial non-bundle {} certified; {}/{} audits; recourse >1 on {} updates, counter mismatches {}",
                          nb0, audits_ok, audits, over, mismatch)};
}

double dyadic(Rng& rng, int hi = 16) { return static_cast<double>(rng.below(hi * 8)) / 8.0; }

Outcome criterion7() {
  const int h = 128;
  Rng rng(71);
  std::vector<double> d1(h), d2(h);
  for (int i = 0; i < h; ++i) d1[i] = d2[i] = dyadic(rng);
  rng.shuffle(d2.begin(), d2.end());
  IntervalPatcher<double> p(d1, d2);
  std::size_t probes = 0, bad = 0;
  for (int op = 1; op <= 100000; ++op) {
    int u = static_cast<int>(rng.below(h)), v = static_cast<int>(rng.below(h));
    double x = rng.bernoulli(0.2) ? 0.0 : dyadic(rng);
    double y = d2[v] + (x - d1[u]);
    if (y >= 0) {
      d1[u] = x;
      d2[v] = y;
      p.set1(u, x);
      p.set2(v, y);
    }
    if (op % 1000) continue;
    std::map<std::pair<int, int>, double> ref;
    for (const auto& e : greedy_matching(d1, d2)) ref[{e.u, e.v}] += e.w;
    for (int k = 0; k < 1000; ++k) {
      int a = static_cast<int>(rng.below(h)), b = static_cast<int>(rng.below(h));
      auto it = ref.find({a, b});
      bad += p.query_edge(a, b) != (it == ref.end() ? 0.0 : it->second);
      ++probes;
    }
  }

  // DegPreservingPatcher with a forbidden partner per vertex
  Rng r2(72);
  std::vector<int> g(h, -1), perm(h);
  std::iota(perm.begin(), perm.end(), 0);
  r2.shuffle(perm.begin(), perm.end());
  for (int u = 0; u < h; ++u)
    if (r2.bernoulli(0.8)) g[u] = perm[u];
  std::vector<double> e1(h), e2(h);
  for (int i = 0; i < h; ++i) e1[i] = e2[i] = dyadic(r2, 4);
  r2.shuffle(e2.begin(), e2.end());
  DegPreservingPatcher<double> q(e1, e2, g);
  std::size_t dprobes = 0, dbad = 0, sums_bad = 0, checks = 0, applied = 0;
  for (int op = 1; op <= 100000; ++op) {
    int u = static_cast<int>(r2.below(h)), v = static_cast<int>(r2.below(h));
    double x = r2.bernoulli(0.1) ? 0.0 : dyadic(r2, 4);
    double y = e2[v] + (x - e1[u]);
    if (y >= 0) {
      auto n1 = e1, n2 = e2;
      n1[u] = x;
      n2[v] = y;
      double tot = 0.0;
      for (double z : n1) tot += z;
      bool fine = true;
      for (int a = 0; a < h; ++a)
        if (g[a] >= 0 && n1[a] + n2[g[a]] > tot) fine = false;
      if (fine) {
        e1 = n1;
        e2 = n2;
        q.set1(u, x);
        q.set2(v, y);
        ++applied;
      }
    }
    if (op % 1000) continue;
    ++checks;
    auto f = q.query_all();
    std::vector<double> rs(h, 0.0), cs(h, 0.0);
    std::map<std::pair<int, int>, double> m;
    for (const auto& e : f) {
      rs[e.u] += e.w;
      cs[e.v] += e.w;
      m[{e.u, e.v}] += e.w;
    }
    sums_bad += rs != e1 || cs != e2;
    for (int a = 0; a < h; ++a)
      if (g[a] >= 0) {
        dbad += q.query_edge(a, g[a]) != 0.0;
        ++dprobes;
      }
    for (int k = 0; k < 1000; ++k) {
      int a = static_cast<int>(r2.below(h)), b = static_cast<int>(r2.below(h));
      auto it = m.find({a, b});
      dbad += q.query_edge(a, b) != (it == m.end() ? 0.0 : it->second);
      ++dprobes;
    }
  }
  bool ok = bad == 0 && dbad == 0 && sums_bad == 0 && applied > 1000;
  return {ok, fmt::format("interval {} probes {} mismatches; deg-preserving {} probes {} violations, sums off on {}/{} "
                          "checks ({} updates applied)",
                          probes, bad, dprobes, dbad, sums_bad, checks, applied)};
}

Outcome criterion8() {
  int exact = 0, bounded = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const int n = 12;
    auto tree = random_tree(n, 8000 + s, 1.0, 4.0);
    Rng rng(s);
    std::vector<Edge> es = tree.edges;
    for (auto& e : es)
      if (rng.bernoulli(0.5)) std::swap(e.u, e.v);
    std::vector<Rational> dq(n);
    std::vector<double> d(n);
    Rational tot(0);
    for (int v = 0; v + 1 < n; ++v) {
      d[v] = std::round(rng.uniform(-5, 5) * 8) / 8;
      dq[v] = to_rational(d[v]);
      tot += dq[v];
    }
    dq[n - 1] = -tot;
    d[n - 1] = dq[n - 1].convert_to<double>();
    std::vector<int> T(es.size());
    std::iota(T.begin(), T.end(), 0);
    auto y = rounding(n, to_rational(es), dq, T);
    std::vector<Rational> bt(n, Rational(0));
    for (std::size_t i = 0; i < es.size(); ++i) {
      bt[es[i].u] += y[i];
      bt[es[i].v] -= y[i];
    }
    exact += bt == dq;
    double inf = 0.0;
    for (std::size_t i = 0; i < es.size(); ++i) inf = std::max(inf, std::abs(y[i].convert_to<double>()) / es[i].w);
    double opt = dsparse::testing::min_cost_flow(n, es, d);
    worst = std::max(worst, inf / std::max(opt, 1e-300));
    bounded += inf <= opt + 1e-9;
  }
  return {exact == 100 && bounded == 100,
          fmt::format("B^T y = d exact {}/100; ||W^-1 y||_inf <= min-cost flow {}/100 (max ratio {:.3f})", exact,
                      bounded, worst)};
}

Outcome criterion9() {
  const int n = 128;
  const double eps = 0.5, budget = 2.0 * n;
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string det = "Star";
  for (std::optional<double> rho : {std::optional<double>{}, std::optional<double>{4.0}}) {
    int good_seeds = 0;
    double worst_amort = 0.0;
    std::size_t kept = 0, lifted = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto g = random_eulerian(n, 8, 9000 + s);
      DynSpectralConfig cfg;
      cfg.eps = eps;
      cfg.rho = rho;
      cfg.seed = s;
      DynSpectral d(g, cfg);
      auto ups = random_update_stream(g, 1000, 9100 + s);
      int pass = 0;
      for (std::size_t k = 0; k < ups.size(); ++k) {
        d.update(ups[k]);
        if ((k + 1) % 100) continue;
        auto q = d.query_graph();
        auto cur = d.graph();
        Matrix L = schur_laplacian(q);
        pass += spectral_error(cur, L) <= eps && balance_gap(cur, L) <= 1e-9;
        kept += q.kept;
        lifted += q.lifted_edges;
      }
      good_seeds += pass >= 9;
      worst_amort = std::max(worst_amort, d.metrics().amortized_recourse());
    }
    ok &= good_seeds >= 18 && worst_amort <= budget;
    det += fmt::format(" [{}] {}/20 seeds with >= 9/10 snapshots, amortized recourse max {:.1f}, kept {:.2f};",
                       rho ? "rho=4" : "configured", good_seeds, worst_amort,
                       static_cast<double>(kept) / static_cast<double>(lifted));
  }
  det += fmt::format(" budget 2n = {}; time {:.1f}s", budget, seconds_since(t0));
  return {ok, det};
}

Outcome criterion10() {
  const double gamma = 16.0;
  const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log2(gamma))) + 1;
  auto g = random_digraph(64, 600, 10);
  DynWorstCaseConfig wc;
  wc.rho = 0.5;
  DynDicutWorstCase d(g, 1.0, 0.3, gamma, 11, wc);
  auto ups = random_update_stream(g, 1000, 12, 0.45);
  std::size_t over = 0, maxr = 0;
  for (const auto& e : ups) {
    std::size_t r = d.update(e);
    maxr = std::max(maxr, r);
    over += r > bound;
  }
  bool ok = over == 0 && d.metrics().max_recourse() <= bound && d.audit();
  std::string det = fmt::format("recourse max {} bound {} over on {} updates; ", maxr, bound, over);
  for (double beta : {1.0, 4.0}) {
    int good = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
      auto h = random_digraph(12, 60, 10000 + s);
      DynDicutWorstCase w(h, beta, 0.3, gamma, s);
      auto us = random_update_stream(h, 20, 10500 + s);
      for (const auto& e : us) w.update(e);
      good += balanced_cut_check(w.graph(), w.current(), beta, 0.3).pass();
    }
    ok &= good >= 180;
    det += fmt::format("balanced beta {}: {}/200; ", beta, good);
  }
  return {ok, det};
}

Outcome criterion11() {
  const int n = 32;
  int exact = 0, closed = 0, levels = 0, rich = 0, seeds = 20;
  double worst2 = 0.0, worst3 = 0.0, worst_rich = 0.0;
  int lemma_pass = 0;
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(seeds); ++s) {
    auto g = random_eulerian(n, 4, 11000 + s);
    QuadrupleConfig cfg;
    cfg.beta = 8.0;
    cfg.rational = true;
    cfg.seed = s;
    auto q = build_quadruple(g, cfg);
    auto a = audit_quadruple(q);
    exact += a.exact_checked && a.exact_degrees && a.degree_gap[1] <= 1e-9 && a.degree_gap[2] <= 1e-9 &&
             a.degree_gap[3] <= 1e-9;
    closed += std::abs(a.pinv_error[1] - a.closed_form_1) <= 1e-8;
    levels += a.level_pass(2) && a.level_pass(3);
    worst2 = std::max(worst2, a.measured_gamma(2));
    worst3 = std::max(worst3, a.measured_gamma(3));
    Matrix M = q.laplacian(0), Z = pinv_general(q.laplacian(1));
    Matrix U = q.laplacian(1) + q.laplacian(1).transpose();
    double lam = approx_pinv_error(Z, M, U);
    double c = approx_pinv_error(richardson_operator(M, Z, 10), M, U);
    worst_rich = std::max(worst_rich, c - std::pow(lam, 10));
    rich += c <= std::pow(lam, 10) + 1e-8;
    auto lb = QuadrupleConfig::lemma_bounds(8.0, cfg.decomp.phi_target, cfg.gamma_cut);
    lb.seed = s;
    lemma_pass += audit_quadruple(build_quadruple(g, lb)).pass();
  }
  bool ok = exact == seeds && closed == seeds && levels >= 18 && rich == seeds;
  return {ok, fmt::format("n={} beta=8: exact degrees {}/{}, level-1 closed form {}/{}, levels 2-3 {}/{} (gamma 17, "
                          "measured up to {:.2f} / {:.2f}), Richardson N=10 {}/{} (max excess {:.1e}); lemma constants "
                          "{}/{}",
                          n, exact, seeds, closed, seeds, levels, seeds, worst2, worst3, rich, seeds, worst_rich,
                          lemma_pass, seeds)};
}

// ---------------------------------------------------------------------------
// 12

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& out, const fs::path& err) {
  std::string cmd = std::string(DSPARSE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Adaptive adversary: deletes the heaviest present edge of the published output or inserts a fresh one at it.
template <class Apply, class Publish>
std::string adaptive_replay(const DiGraph& g0, std::uint64_t seed, int steps, Apply apply, Publish publish) {
  Rng rng(seed);
  DiGraph g = g0;
  std::string trace;
  for (int k = 0; k < steps; ++k) {
    DiGraph h = publish();
    trace += graph_to_string(h);
    const int n = g.n();
    std::vector<double> load(n, 0.0);
    for (const auto& e : h.edges())
      if (e.u < n) load[e.u] += e.w;
    int hot = static_cast<int>(std::max_element(load.begin(), load.end()) - load.begin());
    UpdateEvent ev;
    auto out = g.out_neighbors(hot);
    if (!out.empty() && rng.bernoulli(0.5)) {
      int v = *std::min_element(out.begin(), out.end());
      ev = {UpdateEvent::Delete, hot, v, 0.0};
      g.remove_edge(hot, v);
    } else {
      int v = static_cast<int>(rng.below(n));
      if (v == hot || g.has_edge(hot, v)) continue;
      ev = {UpdateEvent::Insert, hot, v, rng.uniform(1.0, 2.0)};
      g.add_edge(hot, v, ev.w);
    }
    apply(ev);
  }
  return trace;
}

Outcome criterion12() {
  auto dir = fs::temp_directory_path() / ("dsparse_acc_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto g = random_eulerian(12, 3, 12000);
  auto d12 = random_digraph(12, 60, 12001);
  std::ofstream(dir / "g.txt") << graph_to_string(g);
  std::ofstream(dir / "d.txt") << graph_to_string(d12);
  {
    std::ofstream u(dir / "u.txt");
    write_updates(u, random_update_stream(g, 40, 12002));
    std::ofstream b(dir / "b.txt");
    std::vector<double> rhs(12, 0.0);
    rhs[0] = 1.0;
    rhs[5] = -1.0;
    write_vector(b, rhs);
  }
  auto sp = [&](const std::string& f) { return (dir / f).string(); };
  const std::string G = sp("g.txt"), D = sp("d.txt"), U = sp("u.txt");
  std::vector<std::string> cmds{
      "sparsify-spectral " + G + " --rho 2 --seed 3",
      "sparsify-spectral " + G + " --rho 2 --scheme external --strict-degree --rational --seed 3",
      "sparsify-spectral " + G + " --rho 2 --scheme internal --seed 3",
      "sparsify-dicut " + D + " --exact-connectivity --rho 12 --beta 4 --seed 3",
      "sparsify-dicut " + D + " --expander --rho 4 --seed 3",
      "sparsify-dicut " + D + " --msf --gamma 4 --seed 3",
      "dynamic " + G + " " + U + " --mode spectral-star --rho 2 --audit-every 10 --seed 3",
      "dynamic " + G + " " + U + " --mode spectral-ext --rho 2 --audit-every 10 --seed 3",
      "dynamic " + G + " " + U + " --mode spectral-int --audit-every 10 --seed 3",
      "dynamic " + G + " " + U + " --mode dicut --rho 4 --audit-every 10 --seed 3",
      "dynamic " + G + " " + U + " --mode dicut-worst --audit-every 10 --seed 3",
      "quadruple " + G + " --updates " + U + " --audit-every 10 --seed 3",
      "quadruple " + G + " --rational --seed 3",
      "solve " + G + " " + sp("b.txt") + " --seed 3",
      "verify " + G + " " + G + " --kind spectral",
      "verify " + D + " " + D + " --kind dicut",
  };
  int same = 0;
  std::string bad;
  for (const auto& c : cmds) {
    int a = run_cli(c, dir / "a.out", dir / "a.err");
    int b = run_cli(c, dir / "b.out", dir / "b.err");
    auto ao = slurp(dir / "a.out"), bo = slurp(dir / "b.out");
    bool eq = a == b && ao == bo && slurp(dir / "a.err") == slurp(dir / "b.err") && !ao.empty();
    same += eq;
    if (!eq) bad += " [" + c.substr(0, c.find(' ')) + " rc " + std::to_string(a) + "]";
  }

  // adaptive replay of the star patchers inside the dynamic spectral sparsifier and the quadruple
  int replay_same = 0;
  for (std::uint64_t s = 0; s < 2; ++s) {
    auto g0 = random_eulerian(16, 4, 12100 + s);
    std::string tr[2], tq[2];
    for (int run = 0; run < 2; ++run) {
      DynSpectralConfig cfg;
      cfg.rho = 2.0;
      cfg.seed = s;
      DynSpectral d(g0, cfg);
      tr[run] = adaptive_replay(
          g0, 7 + s, 60, [&](const UpdateEvent& e) { d.update(e); }, [&] { return d.query_graph().h; });
      QuadrupleConfig qc;
      qc.seed = s;
      DynQuadruple q(g0, qc);
      tq[run] = adaptive_replay(
          g0, 9 + s, 60, [&](const UpdateEvent& e) { q.update(e); },
          [&] {
            auto snap = q.snapshot();
            return graph_union(snap.g2_prime(), snap.g3_prime());
          });
    }
    replay_same += (tr[0] == tr[1]) + (tq[0] == tq[1]);
  }
  fs::remove_all(dir);
  bool ok = same == static_cast<int>(cmds.size()) && replay_same == 4;
  return {ok, fmt::format("CLI byte-identical {}/{}{}; adaptive replays identical {}/4", same, cmds.size(), bad,
                          replay_same)};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> c{
      {"spectral approximation", criterion1},  {"strict degree preservation", criterion2},
      {"Schur preconditioning", criterion3},   {"dicut sparsifier correctness", criterion4},
      {"dicut sparsity scaling", criterion5},  {"MSF bundle soundness", criterion6},
      {"interval patchers", criterion7},       {"rounding", criterion8},
      {"dynamic spectral", criterion9},        {"worst-case dicut", criterion10},
      {"quadruple", criterion11},              {"determinism and replay", criterion12},
  };
  return c;
}

}  // namespace

// Runs all criteria, or only those given as arguments.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  const auto& cs = criteria();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cs[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s (%.1fs): %s\n", id, o.pass ? "PASS" : "FAIL", cs[i].first, seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
