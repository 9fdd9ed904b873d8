#pragma once

#include <cstddef>
#include <vector>

namespace dsparse {

// Array-backed segment tree over positions [0, n) with sum, nonzero count and max aggregates.
template <class W>
class SegTree {
 public:
  SegTree() = default;
  explicit SegTree(std::size_t n) { assign(std::vector<W>(n, W(0))); }
  explicit SegTree(const std::vector<W>& vals) { assign(vals); }

  void assign(const std::vector<W>& vals) {
    n_ = vals.size();
    size_ = 1;
    while (size_ < n_) size_ <<= 1;
    sum_.assign(2 * size_, W(0));
    nnz_.assign(2 * size_, 0);
    max_.assign(2 * size_, W(0));
    arg_.assign(2 * size_, 0);
    for (std::size_t i = 0; i < size_; ++i) arg_[size_ + i] = i;
    for (std::size_t i = 0; i < n_; ++i) {
      sum_[size_ + i] = vals[i];
      max_[size_ + i] = vals[i];
      nnz_[size_ + i] = vals[i] != W(0);
    }
    for (std::size_t k = size_ - 1; k >= 1; --k) pull(k);
  }

  std::size_t size() const { return n_; }
  const W& operator[](std::size_t i) const { return sum_[size_ + i]; }
  const W& total() const { return sum_[1]; }
  std::size_t nonzeros() const { return nnz_[1]; }

  // Largest value and its smallest position.
  const W& max() const { return max_[1]; }
  std::size_t argmax() const { return arg_[1]; }

  void set(std::size_t i, const W& x) {
    std::size_t k = size_ + i;
    sum_[k] = x;
    max_[k] = x;
    nnz_[k] = x != W(0);
    for (k >>= 1; k >= 1; k >>= 1) pull(k);
  }

  void swap_leaves(std::size_t i, std::size_t j) {
    W a = (*this)[i], b = (*this)[j];
    set(i, b);
    set(j, a);
  }

  // Sum of positions [0, i).
  W prefix(std::size_t i) const {
    W s(0);
    std::size_t lo = size_, hi = size_ + i;
    while (lo < hi) {
      if (lo & 1) s += sum_[lo++];
      if (hi & 1) s += sum_[--hi];
      lo >>= 1;
      hi >>= 1;
    }
    return s;
  }

  // Smallest position i with prefix(i + 1) > x, or size() when none.
  std::size_t search(W x) const {
    if (!(sum_[1] > x)) return n_;
    std::size_t k = 1;
    while (k < size_) {
      if (sum_[2 * k] > x) {
        k = 2 * k;
      } else {
        x -= sum_[2 * k];
        k = 2 * k + 1;
      }
    }
    return k - size_;
  }

  // Smallest position >= i holding a nonzero, or size() when none.
  std::size_t next_nonzero(std::size_t i) const {
    if (i >= n_) return n_;
    std::size_t k = size_ + i;
    if (nnz_[k]) return i;
    // climb until a right sibling subtree has a nonzero
    while (k > 1) {
      if (!(k & 1) && nnz_[k + 1]) {
        k = k + 1;
        while (k < size_) k = nnz_[2 * k] ? 2 * k : 2 * k + 1;
        std::size_t p = k - size_;
        return p < n_ ? p : n_;
      }
      k >>= 1;
    }
    return n_;
  }

 private:
  void pull(std::size_t k) {
    sum_[k] = sum_[2 * k] + sum_[2 * k + 1];
    nnz_[k] = nnz_[2 * k] + nnz_[2 * k + 1];
    if (max_[2 * k + 1] > max_[2 * k]) {
      max_[k] = max_[2 * k + 1];
      arg_[k] = arg_[2 * k + 1];
    } else {
      max_[k] = max_[2 * k];
      arg_[k] = arg_[2 * k];
    }
  }

  std::size_t n_ = 0, size_ = 1;
  std::vector<W> sum_, max_;
  std::vector<std::size_t> nnz_, arg_;
};

}  // namespace dsparse
