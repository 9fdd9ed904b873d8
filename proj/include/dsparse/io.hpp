#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsparse/errors.hpp"
#include "dsparse/graph.hpp"

namespace dsparse {

// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace detail {

struct LineReader {
  explicit LineReader(std::istream& in) : in(in) {}
  std::istream& in;
  int line = 0;
  std::vector<std::string> comments;  // comment bodies seen so far, without '#'

  // Next line with data, split on whitespace; false at end of input.
  bool next(std::vector<std::string_view>& toks, std::string& buf) {
    while (std::getline(in, buf)) {
      ++line;
      auto hash = buf.find('#');
      if (hash != std::string::npos) {
        comments.push_back(buf.substr(hash + 1));
        buf.resize(hash);
      }
      toks.clear();
      std::string_view s(buf);
      std::size_t i = 0;
      while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) toks.push_back(s.substr(i, j - i));
        i = j;
      }
      if (!toks.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line) + ": " + msg, line);
  }

  long long integer(std::string_view t) const {
    long long x = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) fail("expected an integer, got '" + std::string(t) + "'");
    return x;
  }

  double real(std::string_view t) const {
    double x = 0.0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(x))
      fail("expected a number, got '" + std::string(t) + "'");
    return x;
  }
};

}  // namespace detail

struct GraphFile {
  DiGraph g;      // on n + n_aux vertices
  int n_aux = 0;  // trailing auxiliary vertices
  int n_original() const { return g.n() - n_aux; }
};

// `n m`, then m lines `u v w`; `# aux k` marks the last k vertices as auxiliary.
inline GraphFile read_graph(std::istream& in) {
  detail::LineReader rd(in);
  std::vector<std::string_view> t;
  std::string buf;
  if (!rd.next(t, buf)) rd.fail("missing header 'n m'");
  if (t.size() != 2) rd.fail("header must be 'n m'");
  long long n = rd.integer(t[0]), m = rd.integer(t[1]);
  if (n < 0 || n > (1 << 30) || m < 0) rd.fail("invalid header");
  GraphFile f;
  f.g = DiGraph(static_cast<int>(n));
  for (const auto& c : rd.comments) {
    std::istringstream cs(c);
    std::string word;
    long long k;
    if (cs >> word && word == "aux" && cs >> k) {
      if (k < 0 || k > n) rd.fail("invalid aux count");
      f.n_aux = static_cast<int>(k);
    }
  }
  for (long long i = 0; i < m; ++i) {
    if (!rd.next(t, buf)) rd.fail("expected " + std::to_string(m) + " edges, found " + std::to_string(i));
    if (t.size() != 3) rd.fail("edge line must be 'u v w'");
    long long u = rd.integer(t[0]), v = rd.integer(t[1]);
    double w = rd.real(t[2]);
    if (u < 0 || v < 0 || u >= n || v >= n) rd.fail("vertex out of range");
    if (u == v) rd.fail("self-loop");
    if (!(w > 0.0)) rd.fail("weight must be positive");
    if (f.g.has_edge(static_cast<int>(u), static_cast<int>(v))) rd.fail("parallel edge");
    f.g.add_edge(static_cast<int>(u), static_cast<int>(v), w);
  }
  if (rd.next(t, buf)) rd.fail("data after the last edge");
  return f;
}

inline void write_graph(std::ostream& out, const DiGraph& g, int n_aux = 0) {
  if (n_aux > 0) out << "# aux " << n_aux << '\n';
  out << g.n() << ' ' << g.m() << '\n';
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << ' ' << format_double(e.w) << '\n';
}

inline std::string graph_to_string(const DiGraph& g, int n_aux = 0) {
  std::ostringstream os;
  write_graph(os, g, n_aux);
  return os.str();
}

inline GraphFile graph_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_graph(is);
}

// `I u v w` or `D u v`.
inline std::vector<UpdateEvent> read_updates(std::istream& in) {
  detail::LineReader rd(in);
  std::vector<std::string_view> t;
  std::string buf;
  std::vector<UpdateEvent> ups;
  while (rd.next(t, buf)) {
    UpdateEvent e;
    if (t[0] == "I") {
      if (t.size() != 4) rd.fail("insert line must be 'I u v w'");
      e.kind = UpdateEvent::Insert;
      e.w = rd.real(t[3]);
      if (!(e.w > 0.0)) rd.fail("weight must be positive");
    } else if (t[0] == "D") {
      if (t.size() != 3) rd.fail("delete line must be 'D u v'");
      e.kind = UpdateEvent::Delete;
      e.w = 0.0;
    } else {
      rd.fail("update must start with I or D");
    }
    long long u = rd.integer(t[1]), v = rd.integer(t[2]);
    if (u < 0 || v < 0 || u > (1 << 30) || v > (1 << 30)) rd.fail("vertex out of range");
    e.u = static_cast<int>(u);
    e.v = static_cast<int>(v);
    ups.push_back(e);
  }
  return ups;
}

inline void write_updates(std::ostream& out, const std::vector<UpdateEvent>& ups) {
  for (const auto& e : ups) {
    if (e.kind == UpdateEvent::Insert) out << "I " << e.u << ' ' << e.v << ' ' << format_double(e.w) << '\n';
    else out << "D " << e.u << ' ' << e.v << '\n';
  }
}

inline std::vector<double> read_vector(std::istream& in) {
  detail::LineReader rd(in);
  std::vector<std::string_view> t;
  std::string buf;
  std::vector<double> x;
  while (rd.next(t, buf)) {
    if (t.size() != 1) rd.fail("expected one number per line");
    x.push_back(rd.real(t[0]));
  }
  return x;
}

inline void write_vector(std::ostream& out, const std::vector<double>& x) {
  for (double v : x) out << format_double(v) << '\n';
}

}  // namespace dsparse
