#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dsparse/errors.hpp"
#include "dsparse/graph.hpp"

namespace dsparse {

using Rational = boost::multiprecision::cpp_rational;
using RationalEdge = BasicEdge<Rational>;

// Exact value of a finite double.
inline Rational to_rational(double x) {
  if (!std::isfinite(x)) throw PreconditionError("to_rational: non-finite value");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);  // x = mant * 2^exp, |mant| in [0.5, 1)
  auto m = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  boost::multiprecision::cpp_int num(m), den(1);
  if (exp > 0) num <<= exp;
  else den <<= -exp;
  return Rational(num, den);
}

inline std::vector<RationalEdge> to_rational(const std::vector<Edge>& es) {
  std::vector<RationalEdge> r;
  r.reserve(es.size());
  for (const auto& e : es) r.push_back({e.u, e.v, to_rational(e.w)});
  return r;
}

inline std::string to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

// Merges parallel edges by exact summation, drops self-loops and zero weights; sorted by (u, v).
inline std::vector<RationalEdge> merge_exact(const std::vector<RationalEdge>& es) {
  std::map<std::pair<int, int>, Rational> acc;
  for (const auto& e : es)
    if (e.u != e.v) acc[{e.u, e.v}] += e.w;
  std::vector<RationalEdge> r;
  for (auto& [k, w] : acc)
    if (w != 0) r.push_back({k.first, k.second, w});
  return r;
}

inline std::vector<RationalEdge> contract_exact(const std::vector<RationalEdge>& es, const std::vector<int>& group) {
  std::vector<RationalEdge> r;
  r.reserve(es.size());
  for (const auto& e : es) r.push_back({group[e.u], group[e.v], e.w});
  return merge_exact(r);
}

// Exact Schur complement onto [0, n) for graphs whose vertices >= n have no edges among themselves.
inline std::vector<RationalEdge> eliminate_stars_exact(int n, int total, const std::vector<RationalEdge>& es) {
  std::vector<std::vector<std::pair<int, Rational>>> in(total), out(total);
  std::vector<RationalEdge> r;
  for (const auto& e : es) {
    if (e.u >= n && e.v >= n) throw PreconditionError("eliminate_stars_exact: edge between eliminated vertices");
    if (e.u < n && e.v < n) r.push_back(e);
    else if (e.v >= n) in[e.v].push_back({e.u, e.w});
    else out[e.u].push_back({e.v, e.w});
  }
  for (int x = n; x < total; ++x) {
    Rational tot(0);
    for (const auto& [v, w] : out[x]) tot += w;
    if (tot == 0) {
      if (!in[x].empty()) throw SingularBlock("eliminate_stars_exact: center without out-edges");
      continue;
    }
    for (const auto& [u, a] : in[x])
      for (const auto& [v, b] : out[x]) r.push_back({u, v, a * b / tot});
  }
  return merge_exact(r);
}

inline DiGraph to_digraph(int n, const std::vector<RationalEdge>& es) {
  DiGraph g(n);
  for (const auto& e : es) g.add_weight(e.u, e.v, e.w.convert_to<double>());
  return g;
}

}  // namespace dsparse
