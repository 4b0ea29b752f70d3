#pragma once

// Dense n^rank arrays with a per-slot variance signature.
//
// Slots are stored in the order the indices are written: B_j^i_kl lives at
// (j, i, k, l) with variance (lower, upper, lower, lower).

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/jets.hpp"

namespace finslab {

enum class Variance : std::uint8_t { upper, lower };

inline constexpr int kMaxRank = 6;
using MultiIndex = std::array<int, kMaxRank>;

template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, std::vector<Variance> variance, const T& fill = T(0.0))
      : n_(n), variance_(std::move(variance)) {
    if (n < 1) throw Error("tensor extent must be positive");
    if (variance_.size() > static_cast<std::size_t>(kMaxRank)) throw Error("tensor rank too large");
    std::size_t size = 1;
    for (std::size_t s = 0; s < variance_.size(); ++s) size *= static_cast<std::size_t>(n);
    data_.assign(size, fill);
  }

  int dim() const noexcept { return n_; }
  int rank() const noexcept { return static_cast<int>(variance_.size()); }
  const std::vector<Variance>& variance() const noexcept { return variance_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat(std::span<const int> idx) const {
    if (idx.size() != variance_.size()) throw Error("tensor index of wrong rank");
    std::size_t f = 0;
    for (int i : idx) {
      if (i < 0 || i >= n_) throw Error("tensor index out of range");
      f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    return f;
  }
  std::size_t flat(std::initializer_list<int> idx) const {
    return flat(std::span<const int>(idx.begin(), idx.size()));
  }
  std::size_t flat(const MultiIndex& idx) const {
    return flat(std::span<const int>(idx.data(), variance_.size()));
  }

  T& at(std::initializer_list<int> idx) { return data_[flat(idx)]; }
  const T& at(std::initializer_list<int> idx) const { return data_[flat(idx)]; }
  T& at(const MultiIndex& idx) { return data_[flat(idx)]; }
  const T& at(const MultiIndex& idx) const { return data_[flat(idx)]; }

  MultiIndex unflatten(std::size_t f) const {
    MultiIndex idx{};
    for (int s = rank() - 1; s >= 0; --s) {
      idx[static_cast<std::size_t>(s)] = static_cast<int>(f % static_cast<std::size_t>(n_));
      f /= static_cast<std::size_t>(n_);
    }
    return idx;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t f = 0; f < data_.size(); ++f) fn(unflatten(f), data_[f]);
  }

  template <class Fn>
  auto map(Fn&& fn) const {
    using U = decltype(fn(data_[0]));
    Tensor<U> out(n_, variance_, U(0.0));
    for (std::size_t f = 0; f < data_.size(); ++f) out[f] = fn(data_[f]);
    return out;
  }

  std::span<const T> data() const noexcept { return data_; }

 private:
  int n_ = 1;
  std::vector<Variance> variance_;
  std::vector<T> data_{T(0.0)};
};

// A numeric tensor tagged with the state it was evaluated at.
struct TensorValue : Tensor<double> {
  TensorValue() = default;
  TensorValue(Tensor<double> t, std::vector<double> x_, std::vector<double> y_)
      : Tensor<double>(std::move(t)), x(std::move(x_)), y(std::move(y_)) {}
  std::vector<double> x, y;
};

template <class T>
Tensor<double> values(const Tensor<T>& t) {
  return t.map([](const T& v) { return value_of(v); });
}

template <class T>
double max_abs(const Tensor<T>& t) {
  double m = 0.0;
  for (const auto& v : t.data()) m = std::max(m, std::fabs(value_of(v)));
  return m;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.size() != b.size()) throw Error("tensor size mismatch");
  double m = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) m = std::max(m, std::fabs(a[f] - b[f]));
  return m;
}

inline Tensor<double> operator-(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.size() != b.size()) throw Error("tensor size mismatch");
  Tensor<double> out = a;
  for (std::size_t f = 0; f < a.size(); ++f) out[f] -= b[f];
  return out;
}

inline std::vector<Variance> variance_of(const std::string& pattern) {
  std::vector<Variance> v;
  for (char c : pattern) {
    if (c == 'u')
      v.push_back(Variance::upper);
    else if (c == 'l')
      v.push_back(Variance::lower);
    else
      throw Error("variance pattern uses only 'u' and 'l'");
  }
  return v;
}

}  // namespace finslab
