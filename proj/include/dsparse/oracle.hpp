#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "dsparse/graph.hpp"
#include "dsparse/union_find.hpp"

namespace dsparse {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Dense linear algebra

inline void require_symmetric(const Matrix& A) {
  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw PreconditionError("matrix is not symmetric");
}

// f applied to the eigenvalues above the cutoff 1e-10 * lambda_max; zero on the rest.
template <class F>
Matrix spectral_apply(const Matrix& A, F f) {
  require_symmetric(A);
  if (A.rows() == 0) return A;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
  const Vector& lam = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(std::abs(lam.minCoeff()), std::abs(lam.maxCoeff()));
  Vector g(lam.size());
  for (int i = 0; i < lam.size(); ++i) g(i) = lam(i) > cutoff ? f(lam(i)) : 0.0;
  return es.eigenvectors() * g.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix pinv_sym(const Matrix& A) {
  return spectral_apply(A, [](double x) { return 1.0 / x; });
}
inline Matrix pinv_sqrt_sym(const Matrix& A) {
  return spectral_apply(A, [](double x) { return 1.0 / std::sqrt(x); });
}
inline Matrix sqrt_psd(const Matrix& A) {
  return spectral_apply(A, [](double x) { return std::sqrt(x); });
}

inline Matrix pinv_general(const Matrix& A) {
  if (A.size() == 0) return A.transpose();
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = 1e-10 * (s.size() ? s(0) : 0.0);
  Vector inv(s.size());
  for (int i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline double op_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

// ||A||_{U->U} = ||U^{1/2} A U^{dag/2}||.
inline double norm_wrt(const Matrix& A, const Matrix& U) {
  return op_norm(sqrt_psd(U) * A * pinv_sqrt_sym(U));
}

// Orthogonal projection onto im(L) for symmetric L.
inline Matrix image_projection_sym(const Matrix& L) {
  return spectral_apply(L, [](double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// Components

inline std::vector<int> component_labels(const UGraph& g) {
  UnionFind uf(g.n);
  for (const auto& e : g.edges) uf.unite(e.u, e.v);
  std::vector<int> label(g.n, -1);
  int next = 0;
  std::vector<int> root_label(g.n, -1);
  for (int v = 0; v < g.n; ++v) {
    int r = uf.find(v);
    if (root_label[r] < 0) root_label[r] = next++;
    label[v] = root_label[r];
  }
  return label;
}

inline std::vector<std::vector<int>> components(const UGraph& g) {
  auto label = component_labels(g);
  int k = g.n ? *std::max_element(label.begin(), label.end()) + 1 : 0;
  std::vector<std::vector<int>> cs(k);
  for (int v = 0; v < g.n; ++v) cs[label[v]].push_back(v);
  return cs;
}

inline Matrix submatrix(const Matrix& A, const std::vector<int>& idx) {
  Matrix S(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) S(i, j) = A(idx[i], idx[j]);
  return S;
}

// ---------------------------------------------------------------------------
// Degree balance preserving directed spectral error

// ||L_G^{dag/2} (vL_G - vL_H) L_G^{dag/2}|| per component of und(g);
// +inf when vL_H crosses components or changes the degree balance.
inline double spectral_error(const DiGraph& g, const Matrix& vLH, double rel_tol = 1e-9) {
  const int n = g.n();
  if (vLH.rows() != n || vLH.cols() != n) throw DimensionMismatch("spectral_error: dimensions");
  const Matrix vLG = directed_laplacian(g);
  const UGraph ug = und(g);
  const Matrix LG = undirected_laplacian(ug);
  const Matrix D = vLG - vLH;
  double scale = 1.0;
  for (int v = 0; v < n; ++v) scale = std::max({scale, std::abs(vLG(v, v)), std::abs(vLH(v, v))});
  const double tol = rel_tol * scale;
  auto label = component_labels(ug);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (label[i] != label[j] && std::abs(vLH(i, j)) > tol) return kInf;
  if ((D.rowwise().sum()).cwiseAbs().maxCoeff() > tol) return kInf;
  if ((D.colwise().sum()).cwiseAbs().maxCoeff() > tol) return kInf;
  double err = 0.0;
  for (const auto& comp : components(ug)) {
    if (comp.size() < 2) {
      if (std::abs(D(comp[0], comp[0])) > tol) return kInf;
      continue;
    }
    Matrix P = pinv_sqrt_sym(submatrix(LG, comp));
    err = std::max(err, op_norm(P * submatrix(D, comp) * P));
  }
  return err;
}

// h may carry auxiliary vertices beyond g.n(); they are eliminated first.
inline double spectral_error(const DiGraph& g, const DiGraph& h, double rel_tol = 1e-9) {
  if (h.n() < g.n()) throw DimensionMismatch("spectral_error: h has fewer vertices than g");
  Matrix vLH = directed_laplacian(h);
  if (h.n() > g.n()) vLH = schur_onto_prefix(vLH, g.n());
  return spectral_error(g, vLH, rel_tol);
}

// ---------------------------------------------------------------------------
// Approximate pseudoinverse

// ||P_im(M) - Z M||_{U->U}; checks ker(U) <= ker(M) = ker(M^T) <= ker(Z) ∩ ker(Z^T).
inline double approx_pinv_error(const Matrix& Z, const Matrix& M, const Matrix& U, double tol = 1e-8) {
  const auto N = M.rows();
  if (M.cols() != N || Z.rows() != N || Z.cols() != N || U.rows() != N || U.cols() != N)
    throw DimensionMismatch("approx_pinv_error: dimensions");
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int r = 0;
  while (r < s.size() && s(r) > 1e-10 * smax) ++r;
  const Matrix Q = svd.matrixU().leftCols(r);
  const Matrix K = svd.matrixV().rightCols(N - r);
  const double mscale = std::max(1.0, smax);
  const double zscale = std::max(1.0, Z.cwiseAbs().maxCoeff());
  if (K.cols() > 0) {
    if ((M.transpose() * K).cwiseAbs().maxCoeff() > tol * mscale) throw KernelMismatch("ker(M) != ker(M^T)");
    if ((Z * K).cwiseAbs().maxCoeff() > tol * zscale) throw KernelMismatch("ker(M) not in ker(Z)");
    if ((Z.transpose() * K).cwiseAbs().maxCoeff() > tol * zscale) throw KernelMismatch("ker(M) not in ker(Z^T)");
  }
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (U + U.transpose()));
    const Vector& lam = es.eigenvalues();
    const double cut = 1e-10 * std::max(1e-300, lam.cwiseAbs().maxCoeff());
    for (int i = 0; i < lam.size(); ++i)
      if (lam(i) <= cut && (M * es.eigenvectors().col(i)).norm() > tol * mscale)
        throw KernelMismatch("ker(U) not in ker(M)");
  }
  const Matrix P = Q * Q.transpose();
  return norm_wrt(P - Z * M, U);
}

// ||P_V - P_V vL_H^dag vL_G||_{L_G -> L_G} with H on V ∪ X (V first).
inline double schur_precondition_error(const DiGraph& g, const DiGraph& h) {
  const int n = g.n();
  if (h.n() < n) throw DimensionMismatch("schur_precondition_error: dimensions");
  const Matrix vLG = directed_laplacian(g);
  const Matrix LG = undirected_laplacian(g);
  const Matrix Hdag = pinv_general(directed_laplacian(h));
  const Matrix PV = image_projection_sym(LG);
  const Matrix A = PV - PV * Hdag.topLeftCorner(n, n) * vLG;
  return norm_wrt(A, LG);
}

// Max of the three degree-approximation quantities for a reweighting wp of es:
// ||R^{+/2} (A' - A) C^{+/2}||, ||R^+ (A' - A) 1||_inf, ||C^+ (A' - A)^T 1||_inf with R, C the in/out degrees.
inline double degree_approx_error(int n, const std::vector<Edge>& es, const std::vector<double>& wp) {
  Matrix D = Matrix::Zero(n, n);
  Vector r = Vector::Zero(n), c = Vector::Zero(n);
  for (std::size_t i = 0; i < es.size(); ++i) {
    D(es[i].v, es[i].u) += wp[i] - es[i].w;
    r(es[i].v) += es[i].w;
    c(es[i].u) += es[i].w;
  }
  Vector ri = Vector::Zero(n), ci = Vector::Zero(n);
  for (int v = 0; v < n; ++v) {
    if (r(v) > 0) ri(v) = 1.0 / r(v);
    if (c(v) > 0) ci(v) = 1.0 / c(v);
  }
  Matrix M = ri.cwiseSqrt().asDiagonal() * D * ci.cwiseSqrt().asDiagonal();
  double e1 = M.rows() ? Eigen::JacobiSVD<Matrix>(M).singularValues()(0) : 0.0;
  double e2 = (ri.asDiagonal() * D.rowwise().sum()).cwiseAbs().maxCoeff();
  double e3 = (ci.asDiagonal() * D.colwise().sum().transpose()).cwiseAbs().maxCoeff();
  return std::max({e1, e2, e3});
}

// ---------------------------------------------------------------------------
// Directed cut enumeration

struct DicutReport {
  double max_violation = 0.0;  // max |w_H - w_G| / allowed slack; <= 1 means pass
  std::uint32_t witness = 0;   // bitmask of U for the worst dicut U -> V \ U
  std::size_t cuts_checked = 0;
  bool pass() const { return max_violation <= 1.0 + 1e-9; }
};

namespace detail {
struct CutSums {
  std::vector<double> fwd;  // w(U -> V\U) per mask
};

inline std::vector<double> dicut_values(int n, const std::vector<Edge>& es) {
  const std::uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1u);
  std::vector<double> val(static_cast<std::size_t>(full) + 1, 0.0);
  // Accumulate per edge over masks containing u and not v, via enumeration.
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    double s = 0.0;
    for (const auto& e : es)
      if (((mask >> e.u) & 1u) && !((mask >> e.v) & 1u)) s += e.w;
    val[mask] = s;
  }
  return val;
}
}  // namespace detail

// Checks |w_H(C) - w_G(C)| <= eps / sqrt(beta + 1) * sqrt(w_G(C) * w_G(und C)) on every dicut.
inline DicutReport cut_check_dicut(const DiGraph& g, const DiGraph& h, double beta, double eps) {
  const int n = g.n();
  if (n > 24) throw TooLarge("cut_check_dicut: n > 24");
  if (h.n() != n) throw DimensionMismatch("cut_check_dicut: dimensions");
  auto gv = detail::dicut_values(n, g.edges());
  auto hv = detail::dicut_values(n, h.edges());
  const std::uint32_t full = (1u << n) - 1u;
  DicutReport rep;
  const double c = eps / std::sqrt(beta + 1.0);
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    const double fwd = gv[mask], bwd = gv[full ^ mask];
    const double slack = c * std::sqrt(fwd * (fwd + bwd));
    const double diff = std::abs(hv[mask] - fwd);
    const double scale = std::max(1.0, fwd + bwd);
    double viol;
    if (slack > 0.0) {
      viol = diff / slack;
    } else {
      viol = diff > 1e-12 * scale ? kInf : 0.0;
    }
    ++rep.cuts_checked;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.witness = mask;
    }
  }
  return rep;
}

// (1 ± eps) check restricted to beta-balanced dicuts.
inline DicutReport balanced_cut_check(const DiGraph& g, const DiGraph& h, double beta, double eps) {
  const int n = g.n();
  if (n > 24) throw TooLarge("balanced_cut_check: n > 24");
  if (h.n() != n) throw DimensionMismatch("balanced_cut_check: dimensions");
  auto gv = detail::dicut_values(n, g.edges());
  auto hv = detail::dicut_values(n, h.edges());
  const std::uint32_t full = (1u << n) - 1u;
  DicutReport rep;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    const double fwd = gv[mask], bwd = gv[full ^ mask];
    if (!(fwd * beta >= bwd && fwd <= beta * bwd)) continue;
    if (fwd <= 0.0) continue;
    ++rep.cuts_checked;
    const double viol = std::abs(hv[mask] - fwd) / (eps * fwd);
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.witness = mask;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Conductance

struct ConductanceResult {
  double phi = kInf;
  std::vector<int> side;  // vertex ids of the smaller-volume side of the witness cut
};

inline std::vector<int> active_vertices(const UGraph& g) {
  auto d = weighted_degrees(g);
  std::vector<int> vs;
  for (int v = 0; v < g.n; ++v)
    if (d[v] > 0.0) vs.push_back(v);
  return vs;
}

// Exact conductance by Gray-code enumeration over the vertices with positive degree.
inline ConductanceResult conductance_exact(const UGraph& g, int max_vertices = 24) {
  auto vs = active_vertices(g);
  const int k = static_cast<int>(vs.size());
  if (k > max_vertices) throw TooLarge("conductance_exact: too many vertices");
  ConductanceResult res;
  if (k < 2) return res;
  std::vector<int> local(g.n, -1);
  for (int i = 0; i < k; ++i) local[vs[i]] = i;
  std::vector<std::vector<std::pair<int, double>>> adj(k);
  std::vector<double> deg(k, 0.0);
  double vol = 0.0;
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    int a = local[e.u], b = local[e.v];
    adj[a].push_back({b, e.w});
    adj[b].push_back({a, e.w});
    deg[a] += e.w;
    deg[b] += e.w;
    vol += 2 * e.w;
  }
  std::vector<char> in(k, 0);
  double cut = 0.0, volS = 0.0;
  std::uint64_t best_code = 0;
  const std::uint64_t steps = 1ull << (k - 1);
  for (std::uint64_t i = 1; i < steps; ++i) {
    int bit = __builtin_ctzll(i);
    double inner = 0.0;
    for (auto [to, w] : adj[bit])
      if (in[to]) inner += w;
    if (!in[bit]) {
      in[bit] = 1;
      cut += deg[bit] - 2 * inner;
      volS += deg[bit];
    } else {
      in[bit] = 0;
      cut -= deg[bit] - 2 * inner;
      volS -= deg[bit];
    }
    const double denom = std::min(volS, vol - volS);
    if (denom <= 0.0) continue;
    const double phi = std::max(0.0, cut) / denom;
    if (phi < res.phi) {
      res.phi = phi;
      best_code = i ^ (i >> 1);
    }
  }
  std::vector<int> S, T;
  double volA = 0.0;
  for (int b = 0; b < k; ++b) {
    if ((best_code >> b) & 1ull) {
      S.push_back(vs[b]);
      volA += deg[b];
    } else {
      T.push_back(vs[b]);
    }
  }
  res.side = (volA <= vol - volA) ? S : T;
  return res;
}

struct CheegerResult {
  double lambda2 = 0.0;      // second eigenvalue of D^{-1/2} L D^{-1/2}
  double lower_bound = 0.0;  // lambda2 / 2 <= phi
  double sweep_phi = kInf;   // conductance of the best sweep cut (>= phi)
  std::vector<int> sweep_side;
};

namespace detail {
// Sweep over vertices sorted by score; returns the best prefix cut.
inline void sweep(const UGraph& g, const std::vector<int>& vs, const std::vector<double>& score,
                  CheegerResult& res) {
  const int k = static_cast<int>(vs.size());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] < score[b]; });
  std::vector<int> local(g.n, -1);
  for (int i = 0; i < k; ++i) local[vs[i]] = i;
  std::vector<std::vector<std::pair<int, double>>> adj(k);
  std::vector<double> deg(k, 0.0);
  double vol = 0.0;
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    int a = local[e.u], b = local[e.v];
    adj[a].push_back({b, e.w});
    adj[b].push_back({a, e.w});
    deg[a] += e.w;
    deg[b] += e.w;
    vol += 2 * e.w;
  }
  std::vector<char> in(k, 0);
  double cut = 0.0, volS = 0.0;
  int best_len = 0;
  double best_bal = kInf;
  for (int i = 0; i + 1 < k; ++i) {
    int v = order[i];
    double inner = 0.0;
    for (auto [to, w] : adj[v])
      if (in[to]) inner += w;
    in[v] = 1;
    cut += deg[v] - 2 * inner;
    volS += deg[v];
    const double denom = std::min(volS, vol - volS);
    if (denom <= 0.0) continue;
    const double phi = std::max(0.0, cut) / denom;
    const double bal = std::abs(volS - vol / 2);
    if (phi < res.sweep_phi - 1e-15 || (std::abs(phi - res.sweep_phi) <= 1e-15 && bal < best_bal)) {
      res.sweep_phi = phi;
      best_len = i + 1;
      best_bal = bal;
    }
  }
  std::vector<int> S, T;
  double volA = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i < best_len) {
      S.push_back(vs[order[i]]);
      volA += deg[order[i]];
    } else {
      T.push_back(vs[order[i]]);
    }
  }
  std::sort(S.begin(), S.end());
  std::sort(T.begin(), T.end());
  res.sweep_side = (volA <= vol - volA) ? S : T;
}

inline bool connected_on(const UGraph& g, const std::vector<int>& vs) {
  if (vs.empty()) return true;
  UnionFind uf(g.n);
  for (const auto& e : g.edges) uf.unite(e.u, e.v);
  for (int v : vs)
    if (!uf.same(v, vs[0])) return false;
  return true;
}
}  // namespace detail

// Spectral certificate and sweep cut on the vertices of positive degree.
inline CheegerResult cheeger(const UGraph& g) {
  auto vs = active_vertices(g);
  CheegerResult res;
  const int k = static_cast<int>(vs.size());
  if (k < 2) {
    res.lambda2 = 2.0;
    res.lower_bound = 1.0;
    return res;
  }
  if (!detail::connected_on(g, vs)) throw Disconnected("cheeger: graph is disconnected");
  const Matrix L = submatrix(undirected_laplacian(g), vs);
  Vector dis(k);
  for (int i = 0; i < k; ++i) dis(i) = 1.0 / std::sqrt(L(i, i));
  const Matrix N = dis.asDiagonal() * L * dis.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(N);
  res.lambda2 = std::max(0.0, es.eigenvalues()(1));
  res.lower_bound = res.lambda2 / 2;
  std::vector<double> score(k);
  for (int i = 0; i < k; ++i) score[i] = es.eigenvectors()(i, 1) * dis(i);
  detail::sweep(g, vs, score, res);
  return res;
}

// Sweep cut from a power-iteration estimate of the Fiedler vector; no certificate.
inline CheegerResult sweep_cut_fast(const UGraph& g, int iters, std::uint64_t seed) {
  auto vs = active_vertices(g);
  CheegerResult res;
  const int k = static_cast<int>(vs.size());
  if (k < 2) return res;
  std::vector<int> local(g.n, -1);
  for (int i = 0; i < k; ++i) local[vs[i]] = i;
  std::vector<double> deg(k, 0.0);
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    deg[local[e.u]] += e.w;
    deg[local[e.v]] += e.w;
  }
  Vector sd(k), x(k);
  double vol = 0.0;
  for (int i = 0; i < k; ++i) {
    sd(i) = std::sqrt(deg[i]);
    vol += deg[i];
  }
  std::uint64_t s = seed;
  for (int i = 0; i < k; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    x(i) = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
  }
  auto deflate = [&](Vector& y) { y -= (sd.dot(y) / vol) * sd; };
  deflate(x);
  for (int it = 0; it < iters; ++it) {
    // y = (I + D^{-1/2} A D^{-1/2}) x / 2
    Vector y = x;
    for (const auto& e : g.edges) {
      if (e.u == e.v) continue;
      int a = local[e.u], b = local[e.v];
      double c = e.w / (sd(a) * sd(b));
      y(a) += c * x(b);
      y(b) += c * x(a);
    }
    y *= 0.5;
    deflate(y);
    double nrm = y.norm();
    if (nrm <= 0.0) break;
    x = y / nrm;
  }
  std::vector<double> score(k);
  for (int i = 0; i < k; ++i) score[i] = x(i) / sd(i);
  detail::sweep(g, vs, score, res);
  return res;
}

// ---------------------------------------------------------------------------
// Max-flow and edge connectivity

class MaxFlow {
 public:
  explicit MaxFlow(int n) : adj_(n), level_(n), it_(n) {}

  void add_undirected(int u, int v, double c) {
    adj_[u].push_back({v, static_cast<int>(adj_[v].size()), c});
    adj_[v].push_back({u, static_cast<int>(adj_[u].size()) - 1, c});
  }
  void add_directed(int u, int v, double c) {
    adj_[u].push_back({v, static_cast<int>(adj_[v].size()), c});
    adj_[v].push_back({u, static_cast<int>(adj_[u].size()) - 1, 0.0});
  }

  double run(int s, int t) {
    double total_cap = 0.0;
    for (auto& a : adj_)
      for (auto& e : a) total_cap += e.cap;
    eps_ = 1e-13 * std::max(1.0, total_cap);
    double flow = 0.0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (true) {
        double f = dfs(s, t, kInf);
        if (f <= eps_) break;
        flow += f;
      }
    }
    return flow;
  }

  // Vertices reachable from s in the residual graph after run().
  std::vector<char> source_side(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (const auto& e : adj_[u])
        if (e.cap > eps_ && !seen[e.to]) {
          seen[e.to] = 1;
          q.push(e.to);
        }
    }
    return seen;
  }

 private:
  struct Arc {
    int to;
    int rev;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (const auto& e : adj_[u])
        if (e.cap > eps_ && level_[e.to] < 0) {
          level_[e.to] = level_[u] + 1;
          q.push(e.to);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double f) {
    if (u == t) return f;
    for (int& i = it_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
      Arc& e = adj_[u][i];
      if (e.cap > eps_ && level_[e.to] == level_[u] + 1) {
        double d = dfs(e.to, t, std::min(f, e.cap));
        if (d > eps_) {
          e.cap -= d;
          adj_[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_, it_;
  double eps_ = 0.0;
};

inline double edge_connectivity(const UGraph& g, int u, int v) {
  if (u == v) return kInf;
  MaxFlow mf(g.n);
  for (const auto& e : g.edges)
    if (e.u != e.v) mf.add_undirected(e.u, e.v, e.w);
  return mf.run(u, v);
}

// All-pairs minimum cut values via a Gomory-Hu tree (Gusfield), n - 1 max-flows.
inline Matrix all_pairs_connectivity(const UGraph& g) {
  const int n = g.n;
  std::vector<int> p(n, 0);
  std::vector<double> fl(n, 0.0);
  for (int s = 1; s < n; ++s) {
    int t = p[s];
    MaxFlow mf(n);
    for (const auto& e : g.edges)
      if (e.u != e.v) mf.add_undirected(e.u, e.v, e.w);
    double f = mf.run(s, t);
    auto X = mf.source_side(s);
    fl[s] = f;
    for (int i = 0; i < n; ++i)
      if (i != s && X[i] && p[i] == t) p[i] = s;
    if (X[p[t]]) {
      p[s] = p[t];
      p[t] = s;
      fl[s] = fl[t];
      fl[t] = f;
    }
  }
  std::vector<std::vector<std::pair<int, double>>> tree(n);
  for (int s = 1; s < n; ++s) {
    tree[s].push_back({p[s], fl[s]});
    tree[p[s]].push_back({s, fl[s]});
  }
  Matrix K = Matrix::Constant(n, n, kInf);
  for (int src = 0; src < n; ++src) {
    std::vector<char> seen(n, 0);
    std::vector<std::pair<int, double>> stack{{src, kInf}};
    seen[src] = 1;
    while (!stack.empty()) {
      auto [u, m] = stack.back();
      stack.pop_back();
      K(src, u) = m;
      for (auto [to, c] : tree[u])
        if (!seen[to]) {
          seen[to] = 1;
          stack.push_back({to, std::min(m, c)});
        }
    }
  }
  return K;
}

// k_e of und(g) for every edge of the edge list (same order).
inline std::vector<double> edge_connectivities(int n, const std::vector<Edge>& es) {
  UGraph ug{n, es};
  Matrix K = all_pairs_connectivity(ug);
  std::vector<double> k(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) k[i] = K(es[i].u, es[i].v);
  return k;
}

// ---------------------------------------------------------------------------
// Approximate Laplacian solver

struct SolveResult {
  Vector x;
  bool converged = true;
  int iterations = 0;
};

// Returns x with ||x - L^dag b||_L <= xi ||L^dag b||_L by preconditioned CG; the residual
// target uses lambda_2 >= lambda2_lower (default 4 w_min / n^2) and lambda_max <= 2 d_max.
inline SolveResult laplacian_solve(const UGraph& g, const Vector& b, double xi,
                                   std::optional<double> lambda2_lower = std::nullopt) {
  const int n = g.n;
  if (b.size() != n) throw DimensionMismatch("laplacian_solve: demand dimension");
  SolveResult res;
  res.x = Vector::Zero(n);
  if (b.cwiseAbs().maxCoeff() == 0.0) return res;
  auto label = component_labels(g);
  int k = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<double> sum(k, 0.0);
  for (int v = 0; v < n; ++v) sum[label[v]] += b(v);
  const double bscale = b.cwiseAbs().sum();
  for (double s : sum)
    if (std::abs(s) > 1e-9 * bscale) throw PreconditionError("laplacian_solve: demand not orthogonal to 1");
  auto deg = weighted_degrees(g);
  std::vector<int> act;
  std::vector<int> local(n, -1);
  for (int v = 0; v < n; ++v)
    if (deg[v] > 0.0) {
      local[v] = static_cast<int>(act.size());
      act.push_back(v);
    }
  const int a = static_cast<int>(act.size());
  std::vector<Eigen::Triplet<double>> trip;
  double wmin = kInf, dmax = 0.0;
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    int i = local[e.u], j = local[e.v];
    trip.emplace_back(i, i, e.w);
    trip.emplace_back(j, j, e.w);
    trip.emplace_back(i, j, -e.w);
    trip.emplace_back(j, i, -e.w);
    wmin = std::min(wmin, e.w);
  }
  for (double d : deg) dmax = std::max(dmax, d);
  Eigen::SparseMatrix<double> L(a, a);
  L.setFromTriplets(trip.begin(), trip.end());
  Vector bl(a);
  for (int i = 0; i < a; ++i) bl(i) = b(act[i]);
  std::vector<int> comp_size(k, 0);
  for (int v : act) ++comp_size[label[v]];
  const double nc = *std::max_element(comp_size.begin(), comp_size.end());
  const double l2 = lambda2_lower.value_or(4.0 * wmin / (nc * nc));
  const double target = xi * std::sqrt(l2 / (2.0 * dmax));
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(target);
  cg.setMaxIterations(20 * a + 1000);
  cg.compute(L);
  Vector xl = cg.solve(bl);
  res.iterations = static_cast<int>(cg.iterations());
  res.converged = (L * xl - bl).norm() <= target * bl.norm() * (1 + 1e-6);
  std::vector<double> mean(k, 0.0);
  for (int i = 0; i < a; ++i) mean[label[act[i]]] += xl(i);
  for (int c = 0; c < k; ++c)
    if (comp_size[c]) mean[c] /= comp_size[c];
  for (int i = 0; i < a; ++i) res.x(act[i]) = xl(i) - mean[label[act[i]]];
  return res;
}

}  // namespace dsparse
