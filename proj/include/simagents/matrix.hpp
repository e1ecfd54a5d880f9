#pragma once

#include <cstddef>
#include <vector>

namespace simagents {

// Dense row-major square matrix.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

  bool is_symmetric() const {
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = r + 1; c < n_; ++c)
        if (!((*this)(r, c) == (*this)(c, r))) return false;
    return true;
  }

  SquareMatrix transposed() const {
    SquareMatrix t(n_);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

}  // namespace simagents
