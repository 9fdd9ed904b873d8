#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsparse/dicut.hpp"
#include "dsparse/framework.hpp"
#include "dsparse/io.hpp"
#include "dsparse/oracle.hpp"
#include "dsparse/quadruple.hpp"
#include "dsparse/spectral.hpp"

using namespace dsparse;
using json = nlohmann::ordered_json;

namespace {

// Audit failure carrying its witness record (exit code 1).
struct AuditFailure {
  json record;
};

GraphFile load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  try {
    return read_graph(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line);
  }
}

std::vector<UpdateEvent> load_updates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  try {
    return read_updates(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line);
  }
}

std::vector<double> load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  try {
    return read_vector(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line);
  }
}

// "" or "-" is stdout (or the given fallback).
class Sink {
 public:
  explicit Sink(const std::string& path, std::ostream& fallback = std::cout) : out_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw PreconditionError("cannot write " + path);
      out_ = file_.get();
    }
  }
  std::ostream& operator*() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

void emit(const std::string& path, const json& j, std::ostream& fallback) {
  Sink s(path, fallback);
  *s << j.dump() << '\n';
}

Scheme parse_scheme(const std::string& s) {
  if (s == "star") return Scheme::Star;
  if (s == "external") return Scheme::External;
  return Scheme::Internal;
}

// Relative gap of out- and in-degrees (or only the balances) of Sc(h, V) against g.
struct DegreeCheck {
  double gap = 0.0;
  int witness = -1;
};

DegreeCheck degree_check(const DiGraph& g, const Matrix& vLH, bool balance_only) {
  Matrix LG = directed_laplacian(g);
  const double s = std::max(1.0, LG.diagonal().cwiseAbs().maxCoeff());
  Vector bg = LG.rowwise().sum(), bh = vLH.rowwise().sum();
  DegreeCheck c;
  for (int v = 0; v < g.n(); ++v) {
    double x = std::abs(bg(v) - bh(v));
    if (!balance_only) x = std::max(x, std::abs(LG(v, v) - vLH(v, v)));
    x /= s;
    if (x > c.gap) c.gap = x, c.witness = v;
  }
  return c;
}

Matrix schur_of(const GraphFile& f) {
  Matrix L = directed_laplacian(f.g);
  return f.n_aux ? schur_onto_prefix(L, f.n_original()) : L;
}

json mask_vertices(std::uint32_t mask, int n) {
  json a = json::array();
  for (int v = 0; v < n; ++v)
    if ((mask >> v) & 1u) a.push_back(v);
  return a;
}

json range_json(const SpectralRange& r) { return json::array({r.lo, r.hi}); }

json audit_json(const Quadruple& q, const QuadrupleAudit& a) {
  json j;
  j["eulerian"] = a.eulerian;
  j["gamma"] = a.gamma;
  j["beta"] = q.beta;
  j["alpha"] = q.alpha;
  j["sizes"] = {{"n", q.n}, {"m0", q.g0.m()}, {"m1", q.g1().m()}, {"m2", q.g2_prime().m()}, {"m3", q.g3_prime().m()},
                {"x", q.n_x}, {"y", q.n_y}, {"directed_pieces", q.directed_pieces},
                {"undirected_pieces", q.undirected_pieces}};
  json levels = json::array();
  for (int i = 1; i <= 3; ++i) {
    json l;
    l["level"] = i;
    l["degree_factor"] = a.factor[i];
    l["degree_gap"] = a.degree_gap[i];
    if (a.eulerian) {
      l["pinv_error"] = a.pinv_error[i];
      l["range"] = range_json(a.range[i]);
      l["condition1"] = a.condition1(i);
      l["condition2"] = a.condition2(i);
    }
    levels.push_back(l);
  }
  j["levels"] = levels;
  if (!a.eulerian) {
    j["skipped"] = json::array({"condition1", "condition2"});
    j["layer_gap"] = a.layer_gap;
  } else {
    j["closed_form_1"] = a.closed_form_1;
  }
  if (a.exact_checked) j["exact_degrees"] = a.exact_degrees;
  j["condition3"] = a.condition3();
  j["pass"] = a.pass();
  return j;
}

// ---------------------------------------------------------------------------

struct Common {
  std::string output, report;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* c, Common& o) {
  c->add_option("-o,--output", o.output, "primary output file (default stdout)");
  c->add_option("--report", o.report, "report record file (default stderr)");
  c->add_option("--seed", o.seed, "master seed");
}

struct SpectralOpts {
  Common c;
  std::string graph;
  double eps = 0.25, delta = 0.1, c_ss = 1.0, phi_target = 0.1;
  std::string scheme = "star";
  bool strict = false, rational = false;
  std::optional<double> rho;
  int measure_limit = 128;
};

int cmd_sparsify_spectral(const SpectralOpts& o) {
  auto f = load_graph(o.graph);
  SpectralConfig cfg;
  cfg.eps = o.eps;
  cfg.delta = o.delta;
  cfg.scheme = parse_scheme(o.scheme);
  cfg.strict_degree = o.strict;
  cfg.c_ss = o.c_ss;
  cfg.rho = o.rho;
  cfg.rational = o.rational;
  cfg.decomp.phi_target = o.phi_target;
  cfg.seed = o.c.seed;
  if (!(o.eps > 0.0 && o.eps < 1.0)) throw PreconditionError("--eps must lie in (0, 1)");
  if (!(o.delta > 0.0 && o.delta < 1.0)) throw PreconditionError("--delta must lie in (0, 1)");
  auto r = sparsify_directed_spectral(f.g, cfg);
  {
    Sink s(o.c.output);
    write_graph(*s, r.h, r.n_aux);
  }
  json rep;
  rep["command"] = "sparsify-spectral";
  rep["config"] = {{"eps", o.eps}, {"delta", o.delta}, {"scheme", o.scheme}, {"strict_degree", o.strict},
                   {"phi_target", o.phi_target}, {"c_ss", o.c_ss}, {"seed", o.c.seed}};
  if (o.rho) rep["config"]["rho"] = *o.rho;
  rep["n"] = f.g.n();
  rep["m"] = f.g.m();
  rep["m_h"] = r.h.m();
  rep["n_aux"] = r.n_aux;
  rep["pieces"] = r.pieces;
  rep["kept"] = r.kept;
  rep["fallbacks"] = r.fallbacks;
  if (f.g.n() <= o.measure_limit) {
    Matrix L = schur_laplacian(r);
    rep["spectral_error"] = spectral_error(f.g, L);
    rep["balance_gap"] = degree_check(f.g, L, true).gap;
  }
  if (o.rational) {
    const int n = f.g.n();
    auto s = r.n_aux ? eliminate_stars_exact(n, n + r.n_aux, r.h_exact) : r.h_exact;
    auto ds = degree_vectors(n, s);
    auto d0 = degree_vectors(n, to_rational(f.g.edges()));
    bool out = true, in = true, bal = true;
    for (int v = 0; v < n; ++v) {
      out &= ds.out[v] == d0.out[v];
      in &= ds.in[v] == d0.in[v];
      bal &= ds.out[v] - ds.in[v] == d0.out[v] - d0.in[v];
    }
    rep["exact"] = {{"out_degrees", out}, {"in_degrees", in}, {"balance", bal}};
  }
  emit(o.c.report, rep, std::cerr);
  return 0;
}

struct DicutOpts {
  Common c;
  std::string graph;
  double beta = 1.0, eps = 0.3, delta = 0.1, gamma = 4.0, c_bal = 1.0, phi_target = 0.1;
  bool exact = false, expander = false, msf = false;
  std::optional<double> rho;
  int measure_limit = 16;
};

int cmd_sparsify_dicut(const DicutOpts& o) {
  auto f = load_graph(o.graph);
  if (!(o.beta >= 1.0)) throw PreconditionError("--beta must be >= 1");
  if (!(o.eps > 0.0 && o.eps < 1.0)) throw PreconditionError("--eps must lie in (0, 1)");
  DicutConfig cfg;
  cfg.c_bal = o.c_bal;
  cfg.rho = o.rho;
  DiGraph h;
  json rep;
  rep["command"] = "sparsify-dicut";
  std::string mode = o.exact ? "exact-connectivity" : o.expander ? "expander" : "msf";
  rep["config"] = {{"beta", o.beta}, {"eps", o.eps}, {"delta", o.delta}, {"mode", mode}, {"seed", o.c.seed}};
  if (o.rho) rep["config"]["rho"] = *o.rho;
  if (o.exact) {
    auto r = sparsify_dicut(f.g, o.beta, o.eps, o.delta, exact_connectivity(f.g), o.c.seed, cfg);
    rep["rho"] = r.rho;
    h = std::move(r.h);
  } else if (o.expander) {
    DecompOptions dopt;
    dopt.phi_target = o.phi_target;
    rep["config"]["phi_target"] = o.phi_target;
    auto r = sparsify_dicut_full(f.g, o.beta, o.eps, o.delta, o.c.seed, cfg, dopt);
    rep["rho"] = r.rho;
    rep["pieces"] = r.pieces;
    h = std::move(r.h);
  } else {
    rep["config"]["gamma"] = o.gamma;
    auto r = sparsify_dicut_msf(f.g, o.beta, o.eps, o.delta, o.gamma, o.c.seed, cfg);
    rep["iterations"] = r.iterations;
    h = std::move(r.h);
  }
  {
    Sink s(o.c.output);
    write_graph(*s, h);
  }
  rep["n"] = f.g.n();
  rep["m"] = f.g.m();
  rep["m_h"] = h.m();
  if (f.g.n() <= o.measure_limit) {
    auto chk = cut_check_dicut(f.g, h, o.beta, o.eps);
    rep["max_violation"] = chk.max_violation;
    rep["cut_pass"] = chk.pass();
  }
  emit(o.c.report, rep, std::cerr);
  return 0;
}

struct DynamicOpts {
  Common c;
  std::string graph, updates, mode = "spectral-star", snapshot_prefix = "snapshot";
  std::size_t audit_every = 100;
  double eps = 0.5, beta = 1.0, gamma = 16.0, phi_target = 0.1;
  bool strict = false;
  std::optional<double> rho;
  std::vector<std::size_t> snapshot_at;
  int measure_limit = 128;
};

int cmd_dynamic(const DynamicOpts& o) {
  auto f = load_graph(o.graph);
  auto ups = load_updates(o.updates);
  const DiGraph& g = f.g;
  const int n = g.n();
  DecompOptions dopt;
  dopt.phi_target = o.phi_target;

  std::unique_ptr<DynSpectral> spec;
  std::unique_ptr<DynDicutAmortized> amort;
  std::unique_ptr<DynDicutWorstCase> worst;
  if (o.mode.rfind("spectral", 0) == 0) {
    DynSpectralConfig cfg;
    cfg.eps = o.eps;
    cfg.scheme = o.mode == "spectral-star" ? Scheme::Star : o.mode == "spectral-ext" ? Scheme::External : Scheme::Internal;
    cfg.strict_degree = o.strict;
    cfg.rho = o.rho;
    cfg.decomp = dopt;
    cfg.seed = o.c.seed;
    spec = std::make_unique<DynSpectral>(g, cfg);
  } else if (o.mode == "dicut") {
    DynDicutConfig cfg;
    cfg.rho = o.rho;
    cfg.decomp = dopt;
    amort = std::make_unique<DynDicutAmortized>(g, o.beta, o.eps, o.c.seed, cfg);
  } else {
    DynWorstCaseConfig cfg;
    cfg.rho = o.rho;
    worst = std::make_unique<DynDicutWorstCase>(g, o.beta, o.eps, o.gamma, o.c.seed, cfg);
  }
  auto pieces = [&]() -> std::size_t {
    if (spec) return spec->num_pieces();
    if (amort) return amort->num_pieces();
    return static_cast<std::size_t>(worst->levels());
  };
  auto current = [&](int& n_aux) -> DiGraph {
    n_aux = 0;
    if (spec) {
      auto q = spec->query_graph();
      n_aux = q.n_aux;
      return q.h;
    }
    return amort ? amort->current() : worst->current();
  };
  auto graph_now = [&]() { return spec ? spec->graph() : amort ? amort->graph() : worst->graph(); };

  Sink out(o.c.output);
  json init{{"type", "init"}, {"mode", o.mode}, {"n", n}, {"m", g.m()}, {"pieces", pieces()}, {"seed", o.c.seed},
            {"eps", o.eps}};
  if (!spec) init["beta"] = o.beta;
  if (worst) init["gamma"] = o.gamma;
  *out << init.dump() << '\n';

  std::size_t total = 0, max_rec = 0, audits = 0, failures = 0;
  json first_failure;
  auto audit = [&](std::size_t after) {
    auto record = [&](const std::string& check, double value, bool pass, json witness = nullptr) {
      json r{{"type", "snapshot"}, {"after", after}, {"check", check}, {"value", value}, {"pass", pass}};
      if (!witness.is_null()) r["witness"] = witness;
      *out << r.dump() << '\n';
      ++audits;
      if (!pass) {
        if (!failures) first_failure = r;
        ++failures;
      }
    };
    auto cur = graph_now();
    if (spec) {
      auto q = spec->query_graph();
      Matrix L = schur_laplacian(q);
      auto bal = degree_check(cur, L, true);
      record("balance", bal.gap, bal.gap <= 1e-9, bal.witness);
      if (n <= o.measure_limit) {
        double e = spectral_error(cur, L);
        record("spectral", e, e <= o.eps);
      }
      record("structure", 0.0, spec->audit());
    } else if (amort) {
      if (n <= 16) {
        auto chk = cut_check_dicut(cur, amort->current(), o.beta, o.eps);
        record("dicut", chk.max_violation, chk.pass(), mask_vertices(chk.witness, n));
      }
    } else {
      if (n <= 16) {
        auto chk = balanced_cut_check(cur, worst->current(), o.beta, o.eps);
        record("balanced_dicut", chk.max_violation, chk.pass(), mask_vertices(chk.witness, n));
      }
      record("structure", 0.0, worst->audit());
    }
  };

  std::size_t next_snap = 0;
  std::vector<std::size_t> snaps = o.snapshot_at;
  std::sort(snaps.begin(), snaps.end());
  for (std::size_t k = 0; k < ups.size(); ++k) {
    const auto& e = ups[k];
    std::size_t r = spec ? spec->update(e) : amort ? amort->update(e) : worst->update(e);
    total += r;
    max_rec = std::max(max_rec, r);
    json rec{{"type", "update"}, {"index", k + 1}, {"kind", e.kind == UpdateEvent::Insert ? "I" : "D"},
             {"u", e.u}, {"v", e.v}, {"recourse", r}, {"pieces", pieces()}};
    *out << rec.dump() << '\n';
    if (o.audit_every && (k + 1) % o.audit_every == 0) audit(k + 1);
    while (next_snap < snaps.size() && snaps[next_snap] <= k + 1) {
      if (snaps[next_snap] == k + 1) {
        int n_aux = 0;
        auto h = current(n_aux);
        std::string path = o.snapshot_prefix + "." + std::to_string(k + 1) + ".txt";
        Sink s(path);
        write_graph(*s, h, n_aux);
        *out << json{{"type", "snapshot_file"}, {"after", k + 1}, {"path", path}}.dump() << '\n';
      }
      ++next_snap;
    }
  }
  json sum{{"type", "summary"}, {"updates", ups.size()}, {"total_recourse", total}, {"max_recourse", max_rec},
           {"amortized_recourse", ups.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(ups.size())},
           {"audits", audits}, {"audit_failures", failures}};
  *out << sum.dump() << '\n';
  if (failures) throw AuditFailure{first_failure};
  return 0;
}

struct QuadOpts {
  Common c;
  std::string graph, updates;
  double beta = 8.0, scale = 1.25, lambda = 2.0;
  std::optional<double> lemma_phi;
  bool rational = false;
  std::size_t audit_every = 0;
};

int cmd_quadruple(const QuadOpts& o) {
  auto f = load_graph(o.graph);
  QuadrupleConfig cfg;
  if (o.lemma_phi) {
    cfg = QuadrupleConfig::lemma_bounds(o.beta, *o.lemma_phi, 2.0);
  } else {
    cfg.beta = o.beta;
    cfg.scale = o.scale;
    cfg.lambda = o.lambda;
  }
  cfg.rational = o.rational;
  cfg.seed = o.c.seed;
  DynQuadruple d(f.g, cfg);
  std::vector<UpdateEvent> ups;
  if (!o.updates.empty()) ups = load_updates(o.updates);
  Sink rep(o.c.report, std::cerr);
  bool ok = true;
  json first_failure;
  for (std::size_t k = 0; k < ups.size(); ++k) {
    d.update(ups[k]);
    if (o.audit_every && (k + 1) % o.audit_every == 0 && k + 1 < ups.size()) {
      auto q = d.snapshot();
      auto a = audit_quadruple(q);
      json j{{"type", "audit"}, {"after", k + 1}};
      j.update(audit_json(q, a));
      *rep << j.dump() << '\n';
      if (!a.pass() && ok) ok = false, first_failure = j;
    }
  }
  auto q = d.snapshot();
  auto a = audit_quadruple(q);
  {
    Sink s(o.c.output);
    *s << "# G1\n";
    write_graph(*s, q.g1());
    *s << "# G2'\n";
    write_graph(*s, q.g2_prime(), q.n_x);
    *s << "# G3'\n";
    write_graph(*s, q.g3_prime(), q.n_x + q.n_y);
  }
  json j{{"type", "audit"}, {"after", ups.size()}};
  j["config"] = {{"beta", cfg.beta}, {"scale", cfg.scale}, {"lambda", cfg.lambda}, {"rational", cfg.rational},
                 {"seed", cfg.seed}};
  j.update(audit_json(q, a));
  *rep << j.dump() << '\n';
  if (!a.pass() && ok) ok = false, first_failure = j;
  if (!ok) throw AuditFailure{first_failure};
  return 0;
}

struct SolveOpts {
  Common c;
  std::string graph, rhs;
  double eps_solve = 1e-8, beta = 8.0;
  int max_outer = 2000;
};

int cmd_solve(const SolveOpts& o) {
  auto f = load_graph(o.graph);
  auto b = load_vector(o.rhs);
  if (static_cast<int>(b.size()) != f.g.n())
    throw DimensionMismatch("rhs has " + std::to_string(b.size()) + " entries for " + std::to_string(f.g.n()) + " vertices");
  if (!(o.eps_solve > 0.0)) throw PreconditionError("--eps-solve must be positive");
  QuadrupleConfig cfg;
  cfg.beta = o.beta;
  cfg.seed = o.c.seed;
  auto q = build_quadruple(f.g, cfg);
  EulerianSolveOptions opt;
  opt.max_outer = o.max_outer;
  Vector bv = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  auto r = solve_eulerian(f.g, q, bv, o.eps_solve, opt);
  {
    Sink s(o.c.output);
    write_vector(*s, std::vector<double>(r.x.data(), r.x.data() + r.x.size()));
  }
  json rep{{"command", "solve"}, {"config", {{"eps_solve", o.eps_solve}, {"beta", o.beta}, {"seed", o.c.seed}}},
           {"n", f.g.n()}, {"m", f.g.m()}, {"outer", r.outer}, {"residual", r.residual}, {"converged", r.converged}};
  emit(o.c.report, rep, std::cerr);
  if (!r.converged) throw AuditFailure{rep};
  return 0;
}

struct VerifyOpts {
  std::string graph, sparsifier, kind = "spectral", output;
  double eps = 0.25, beta = 1.0, tol = 1e-9;
  bool balance_only = false;
};

int cmd_verify(const VerifyOpts& o) {
  auto g = load_graph(o.graph);
  auto h = load_graph(o.sparsifier);
  if (g.n_aux) throw PreconditionError("verify: the input graph has auxiliary vertices");
  if (h.n_original() != g.g.n())
    throw DimensionMismatch("verify: sparsifier has " + std::to_string(h.n_original()) + " original vertices, graph has " +
                            std::to_string(g.g.n()));
  json rep{{"kind", o.kind}};
  bool pass = false;
  if (o.kind == "spectral") {
    Matrix L = schur_of(h);
    double e = spectral_error(g.g, L);
    auto bal = degree_check(g.g, L, true);
    pass = e <= o.eps && bal.gap <= o.tol;
    rep["value"] = e;
    rep["bound"] = o.eps;
    rep["balance_gap"] = bal.gap;
    if (bal.gap > o.tol) rep["witness"] = {{"vertex", bal.witness}};
  } else if (o.kind == "dicut") {
    if (h.n_aux) throw PreconditionError("verify: dicut sparsifiers have no auxiliary vertices");
    auto chk = cut_check_dicut(g.g, h.g, o.beta, o.eps);
    pass = chk.pass();
    rep["value"] = chk.max_violation;
    rep["bound"] = 1.0;
    rep["cuts"] = chk.cuts_checked;
    rep["witness"] = {{"U", mask_vertices(chk.witness, g.g.n())}};
  } else {
    auto c = degree_check(g.g, schur_of(h), o.balance_only);
    pass = c.gap <= o.tol;
    rep["value"] = c.gap;
    rep["bound"] = o.tol;
    if (c.witness >= 0) rep["witness"] = {{"vertex", c.witness}};
  }
  rep["pass"] = pass;
  emit(o.output, rep, std::cout);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed spectral and cut sparsification tools"};
  app.require_subcommand(1);
  std::function<int()> run;

  SpectralOpts so;
  auto* ss = app.add_subcommand("sparsify-spectral", "degree-balance preserving spectral sparsifier");
  ss->add_option("graph", so.graph)->required();
  ss->add_option("--eps", so.eps);
  ss->add_option("--delta", so.delta);
  ss->add_option("--scheme", so.scheme)->check(CLI::IsMember({"star", "external", "internal"}));
  ss->add_flag("--strict-degree", so.strict, "preserve in- and out-degrees");
  ss->add_flag("--rational", so.rational, "exact degree check in the report");
  ss->add_option("--rho", so.rho, "sampling rate, replaces the formula");
  ss->add_option("--c-ss", so.c_ss);
  ss->add_option("--phi-target", so.phi_target);
  ss->add_option("--measure-limit", so.measure_limit, "measure the spectral error up to this many vertices");
  add_common(ss, so.c);
  ss->callback([&] { run = [&] { return cmd_sparsify_spectral(so); }; });

  DicutOpts dc;
  auto* sd = app.add_subcommand("sparsify-dicut", "directed cut sparsifier by importance sampling");
  sd->add_option("graph", dc.graph)->required();
  sd->add_option("--beta", dc.beta);
  sd->add_option("--eps", dc.eps);
  sd->add_option("--delta", dc.delta);
  auto* ex = sd->add_flag("--exact-connectivity", dc.exact);
  auto* xp = sd->add_flag("--expander", dc.expander);
  auto* ms = sd->add_flag("--msf", dc.msf);
  ex->excludes(xp)->excludes(ms);
  xp->excludes(ms);
  sd->add_option("--gamma", dc.gamma, "MSF mode factor");
  sd->add_option("--rho", dc.rho);
  sd->add_option("--c-bal", dc.c_bal);
  sd->add_option("--phi-target", dc.phi_target);
  sd->add_option("--measure-limit", dc.measure_limit);
  add_common(sd, dc.c);
  sd->callback([&] {
    if (!dc.exact && !dc.expander && !dc.msf) throw CLI::RequiredError("--exact-connectivity, --expander or --msf");
    run = [&] { return cmd_sparsify_dicut(dc); };
  });

  DynamicOpts dy;
  auto* sy = app.add_subcommand("dynamic", "run a dynamic sparsifier over an update stream");
  sy->add_option("graph", dy.graph)->required();
  sy->add_option("updates", dy.updates)->required();
  sy->add_option("--mode", dy.mode)
      ->check(CLI::IsMember({"spectral-star", "spectral-ext", "spectral-int", "dicut", "dicut-worst"}));
  sy->add_option("--audit-every", dy.audit_every, "0 disables audits");
  sy->add_option("--eps", dy.eps);
  sy->add_option("--beta", dy.beta);
  sy->add_option("--gamma", dy.gamma);
  sy->add_option("--rho", dy.rho);
  sy->add_option("--phi-target", dy.phi_target);
  sy->add_flag("--strict-degree", dy.strict);
  sy->add_option("--snapshot-at", dy.snapshot_at, "write the sparsifier after these update counts");
  sy->add_option("--snapshot-prefix", dy.snapshot_prefix);
  sy->add_option("--measure-limit", dy.measure_limit);
  add_common(sy, dy.c);
  sy->callback([&] { run = [&] { return cmd_dynamic(dy); }; });

  QuadOpts qo;
  auto* sq = app.add_subcommand("quadruple", "maintain the sparsification quadruple and audit it");
  sq->add_option("graph", qo.graph)->required();
  sq->add_option("--updates", qo.updates);
  sq->add_option("--beta", qo.beta);
  sq->add_option("--scale", qo.scale);
  sq->add_option("--lambda", qo.lambda);
  sq->add_option("--lemma-bounds", qo.lemma_phi, "use the lemma constants for this conductance");
  sq->add_flag("--rational", qo.rational);
  sq->add_option("--audit-every", qo.audit_every);
  add_common(sq, qo.c);
  sq->callback([&] { run = [&] { return cmd_quadruple(qo); }; });

  SolveOpts sv;
  auto* sl = app.add_subcommand("solve", "solve an Eulerian Laplacian system");
  sl->add_option("graph", sv.graph)->required();
  sl->add_option("rhs", sv.rhs)->required();
  sl->add_option("--eps-solve", sv.eps_solve);
  sl->add_option("--beta", sv.beta);
  sl->add_option("--max-outer", sv.max_outer);
  add_common(sl, sv.c);
  sl->callback([&] { run = [&] { return cmd_solve(sv); }; });

  VerifyOpts vo;
  auto* vf = app.add_subcommand("verify", "check a sparsifier against its graph");
  vf->add_option("graph", vo.graph)->required();
  vf->add_option("sparsifier", vo.sparsifier)->required();
  vf->add_option("--kind", vo.kind)->check(CLI::IsMember({"spectral", "dicut", "degrees"}));
  vf->add_option("--eps", vo.eps);
  vf->add_option("--beta", vo.beta);
  vf->add_option("--tol", vo.tol);
  vf->add_flag("--balance-only", vo.balance_only);
  vf->add_option("-o,--output", vo.output);
  vf->callback([&] { run = [&] { return cmd_verify(vo); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    return run();
  } catch (const AuditFailure& f) {
    std::cerr << "audit failure: " << f.record.dump() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "precondition violated: " << e.what() << '\n';
    return 3;
  }
}
