#pragma once

// Nested dual-number towers.
//
// A level-k jet is a pair (primal, tangent) of level-(k-1) jets, bottoming out
// in a double at level 0.  The tower is stored flat: coefficient `mask` holds
// the term multiplying the product of the infinitesimals whose bits are set in
// `mask`, so the first half of the array is the primal and the second half the
// tangent of the outermost level.  Every infinitesimal squares to zero, which
// makes the top coefficient of f(seeded inputs) the exact mixed partial in the
// seeded directions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "finslab/error.hpp"

namespace finslab {

class Jet {
 public:
  static constexpr int kMaxLevel = 12;

  Jet() : level_(0), c_(1, 0.0) {}
  Jet(double value) : level_(0), c_(1, value) {}  // NOLINT: implicit lift of constants

  static Jet lift(double value, int level) {
    check_level(level);
    Jet j;
    j.level_ = level;
    j.c_.assign(std::size_t{1} << level, 0.0);
    j.c_[0] = value;
    return j;
  }

  int level() const noexcept { return level_; }
  double value() const noexcept { return c_[0]; }
  std::size_t size() const noexcept { return c_.size(); }
  std::span<const double> coefficients() const noexcept { return c_; }

  double coefficient(std::size_t mask) const {
    if (mask >= c_.size()) return 0.0;
    return c_[mask];
  }
  double& coefficient_ref(std::size_t mask) { return c_.at(mask); }

  Jet primal() const { return slice(0, level_ - 1); }
  Jet tangent() const { return slice(1, level_ - 1); }

  // Coefficients whose bits at positions >= low_level equal `pattern`,
  // returned as a level-`low_level` jet.
  Jet slice(std::size_t pattern, int low_level) const {
    if (low_level < 0 || low_level > level_)
      throw Error("jet slice below level 0 or above the jet level");
    Jet out;
    out.level_ = low_level;
    const std::size_t width = std::size_t{1} << low_level;
    const std::size_t begin = pattern * width;
    if (begin + width > c_.size()) throw Error("jet slice pattern out of range");
    out.c_.assign(c_.begin() + static_cast<std::ptrdiff_t>(begin),
                  c_.begin() + static_cast<std::ptrdiff_t>(begin + width));
    return out;
  }

  Jet promoted(int level) const {
    if (level <= level_) return *this;
    check_level(level);
    Jet out;
    out.level_ = level;
    out.c_.assign(std::size_t{1} << level, 0.0);
    std::copy(c_.begin(), c_.end(), out.c_.begin());
    return out;
  }

  // this += eps_generator * t, where t does not involve generators >= generator.
  void add_tangent(int generator, const Jet& t) {
    if (generator < 0) throw Error("negative jet generator index");
    if (t.level_ > generator)
      throw Error("tangent seed uses a generator at or above the seeded level");
    if (generator + 1 > level_) *this = promoted(generator + 1);
    const std::size_t bit = std::size_t{1} << generator;
    for (std::size_t s = 0; s < t.c_.size(); ++s) c_[s | bit] += t.c_[s];
  }

  Jet operator-() const {
    Jet out = *this;
    for (double& v : out.c_) v = -v;
    return out;
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet out = a.promoted(std::max(a.level_, b.level_));
    for (std::size_t s = 0; s < b.c_.size(); ++s) out.c_[s] += b.c_[s];
    return out;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet out = a.promoted(std::max(a.level_, b.level_));
    for (std::size_t s = 0; s < b.c_.size(); ++s) out.c_[s] -= b.c_[s];
    return out;
  }
  friend Jet operator+(const Jet& a, double b) {
    Jet out = a;
    out.c_[0] += b;
    return out;
  }
  friend Jet operator+(double a, const Jet& b) { return b + a; }
  friend Jet operator-(const Jet& a, double b) {
    Jet out = a;
    out.c_[0] -= b;
    return out;
  }
  friend Jet operator-(double a, const Jet& b) {
    Jet out = -b;
    out.c_[0] += a;
    return out;
  }
  friend Jet operator*(const Jet& a, double b) {
    Jet out = a;
    for (double& v : out.c_) v *= b;
    return out;
  }
  friend Jet operator*(double a, const Jet& b) { return b * a; }
  friend Jet operator/(const Jet& a, double b) {
    if (b == 0.0) throw DomainError("jet division by zero");
    Jet out = a;
    for (double& v : out.c_) v /= b;
    return out;
  }

  // Subset convolution: out[S] = sum_{T subset S} a[T] b[S\T].
  friend Jet operator*(const Jet& a, const Jet& b) {
    const int level = std::max(a.level_, b.level_);
    if (a.level_ != b.level_) return a.promoted(level) * b.promoted(level);
    Jet out;
    out.level_ = level;
    out.c_.assign(a.c_.size(), 0.0);
    const std::size_t n = a.c_.size();
    for (std::size_t s = 0; s < n; ++s) {
      double acc = 0.0;
      std::size_t t = s;
      while (true) {
        acc += a.c_[t] * b.c_[s ^ t];
        if (t == 0) break;
        t = (t - 1) & s;
      }
      out.c_[s] = acc;
    }
    return out;
  }

  // Solves b*q = a coefficient by coefficient; q[0] is a0/b0 exactly.
  friend Jet operator/(const Jet& a, const Jet& b) {
    const int level = std::max(a.level_, b.level_);
    if (a.level_ != b.level_) return a.promoted(level) / b.promoted(level);
    if (b.c_[0] == 0.0) throw DomainError("jet division by a zero value part");
    Jet q;
    q.level_ = level;
    q.c_.assign(a.c_.size(), 0.0);
    const std::size_t n = a.c_.size();
    for (std::size_t s = 0; s < n; ++s) {
      double acc = a.c_[s];
      if (s != 0) {
        std::size_t t = s;
        while (t != 0) {
          acc -= b.c_[t] * q.c_[s ^ t];
          t = (t - 1) & s;
        }
      }
      q.c_[s] = acc / b.c_[0];
    }
    return q;
  }
  friend Jet operator/(double a, const Jet& b) { return Jet::lift(a, b.level_) / b; }

  // f(a) from the derivative values f^(k)(a0), k = 0..level.
  static Jet compose(const Jet& a, std::span<const double> derivs) {
    const int order = a.level_;
    Jet h = a;
    h.c_[0] = 0.0;
    std::vector<double> taylor(static_cast<std::size_t>(order) + 1);
    double fact = 1.0;
    for (int k = 0; k <= order; ++k) {
      if (k > 0) fact *= k;
      taylor[static_cast<std::size_t>(k)] = derivs[static_cast<std::size_t>(k)] / fact;
    }
    Jet r = Jet::lift(taylor[static_cast<std::size_t>(order)], order);
    for (int k = order - 1; k >= 0; --k) {
      r = r * h;
      r.c_[0] = taylor[static_cast<std::size_t>(k)];
    }
    r.c_[0] = derivs[0];
    return r;
  }

 private:
  static void check_level(int level) {
    if (level < 0 || level > kMaxLevel)
      throw BudgetError("jet level " + std::to_string(level) + " outside [0, " +
                        std::to_string(kMaxLevel) + "]");
  }

  int level_;
  std::vector<double> c_;
};

inline double value_of(double v) noexcept { return v; }
inline double value_of(const Jet& j) noexcept { return j.value(); }

namespace detail {

// f^(k)(a0) for f(t) = t^p, k = 0..order, with f(a0) supplied so callers can
// use the exact library value (sqrt, reciprocal).
inline std::vector<double> power_derivatives(double a0, double p, int order, double f0) {
  std::vector<double> d(static_cast<std::size_t>(order) + 1);
  d[0] = f0;
  double coeff = 1.0;
  for (int k = 1; k <= order; ++k) {
    coeff *= (p - (k - 1));
    d[static_cast<std::size_t>(k)] = coeff * std::pow(a0, p - k);
  }
  return d;
}

inline std::vector<double> log_derivatives(double a0, int order) {
  std::vector<double> d(static_cast<std::size_t>(order) + 1);
  d[0] = std::log(a0);
  double fact = 1.0;  // (k-1)!
  for (int k = 1; k <= order; ++k) {
    if (k > 1) fact *= (k - 1);
    d[static_cast<std::size_t>(k)] = ((k % 2 == 1) ? 1.0 : -1.0) * fact / std::pow(a0, k);
  }
  return d;
}

inline std::vector<double> exp_derivatives(double a0, int order) {
  return std::vector<double>(static_cast<std::size_t>(order) + 1, std::exp(a0));
}

}  // namespace detail

inline Jet sqrt(const Jet& a) {
  const double v = a.value();
  if (v < 0.0 || (v == 0.0 && a.level() > 0))
    throw DomainError("sqrt of a non-positive jet value part");
  if (a.level() == 0) return Jet(std::sqrt(v));
  return Jet::compose(a, detail::power_derivatives(v, 0.5, a.level(), std::sqrt(v)));
}

inline Jet exp(const Jet& a) {
  return Jet::compose(a, detail::exp_derivatives(a.value(), a.level()));
}

inline Jet log(const Jet& a) {
  if (!(a.value() > 0.0)) throw DomainError("ln of a non-positive jet value part");
  return Jet::compose(a, detail::log_derivatives(a.value(), a.level()));
}

inline Jet pow(const Jet& a, double p) {
  const double v = a.value();
  if (!(v > 0.0)) throw DomainError("real power of a non-positive jet value part");
  return Jet::compose(a, detail::power_derivatives(v, p, a.level(), std::pow(v, p)));
}

// Acts on the value part; a zero value part inside a differentiated region has
// no derivative and is an error.
inline Jet abs(const Jet& a) {
  if (a.value() > 0.0) return a;
  if (a.value() < 0.0) return -a;
  if (a.level() == 0) return Jet(0.0);
  throw DomainError("abs of a jet whose value part is zero");
}

inline bool operator<(const Jet& a, const Jet& b) { return a.value() < b.value(); }
inline bool operator>(const Jet& a, const Jet& b) { return a.value() > b.value(); }

// Integer power by repeated multiplication (valid for negative bases).
template <class R>
R ipow(const R& base, int e) {
  if (e == 0) return R(1.0);
  if (e < 0) return R(1.0) / ipow(base, -e);
  R result = base;
  R b = base;
  int k = e - 1;
  while (k > 0) {
    if (k & 1) result = result * b;
    k >>= 1;
    if (k) b = b * b;
  }
  return result;
}

// Real power that falls back to integer powering for integral exponents.
template <class R>
R rpow(const R& base, double p) {
  if (std::floor(p) == p && std::fabs(p) <= 64.0) return ipow(base, static_cast<int>(p));
  using std::pow;
  return pow(base, p);
}

// ---------------------------------------------------------------------------
// Seeding and mixed partials

enum class Axis : std::uint8_t { x, y };

struct Slot {
  Axis axis;
  int index;
};

inline Slot xs(int i) { return {Axis::x, i}; }
inline Slot ys(int i) { return {Axis::y, i}; }

// Lifts `base` to `total_level` and puts a unit tangent on coordinate
// `direction_slot` at nesting level `level_index`.
inline std::vector<Jet> seed_direction(std::span<const double> base, int direction_slot,
                                       int level_index, int total_level) {
  if (direction_slot < 0 || static_cast<std::size_t>(direction_slot) >= base.size())
    throw Error("seed_direction: slot " + std::to_string(direction_slot) + " out of range");
  if (level_index < 0 || level_index >= total_level)
    throw Error("seed_direction: level index " + std::to_string(level_index) +
                " not below total level " + std::to_string(total_level));
  std::vector<Jet> out;
  out.reserve(base.size());
  for (double v : base) out.push_back(Jet::lift(v, total_level));
  out[static_cast<std::size_t>(direction_slot)].coefficient_ref(std::size_t{1} << level_index) += 1.0;
  return out;
}

// Adds a unit tangent at `level_index` to an existing jet vector.
inline void seed_direction(std::span<Jet> point, int direction_slot, int level_index) {
  if (direction_slot < 0 || static_cast<std::size_t>(direction_slot) >= point.size())
    throw Error("seed_direction: slot " + std::to_string(direction_slot) + " out of range");
  point[static_cast<std::size_t>(direction_slot)].add_tangent(level_index, Jet(1.0));
}

inline constexpr int kMaxMixedOrder = 8;

// Exact mixed partial of f at (x, y) in the listed coordinates.  `f` is any
// callable accepting (std::span<const Jet>, std::span<const Jet>).
template <class Fn>
double mixed_partial(const Fn& f, std::span<const double> x, std::span<const double> y,
                     std::span<const Slot> multi_index) {
  const int order = static_cast<int>(multi_index.size());
  if (order > kMaxMixedOrder)
    throw BudgetError("mixed_partial order " + std::to_string(order) + " exceeds " +
                      std::to_string(kMaxMixedOrder));
  std::vector<Jet> xj, yj;
  xj.reserve(x.size());
  yj.reserve(y.size());
  for (double v : x) xj.push_back(Jet::lift(v, order));
  for (double v : y) yj.push_back(Jet::lift(v, order));
  for (int b = 0; b < order; ++b) {
    const Slot s = multi_index[static_cast<std::size_t>(b)];
    auto& target = (s.axis == Axis::x) ? xj : yj;
    if (s.index < 0 || static_cast<std::size_t>(s.index) >= target.size())
      throw Error("mixed_partial: coordinate index " + std::to_string(s.index) + " out of range");
    target[static_cast<std::size_t>(s.index)].coefficient_ref(std::size_t{1} << b) += 1.0;
  }
  const Jet r = f(std::span<const Jet>(xj), std::span<const Jet>(yj));
  const double d = r.coefficient((std::size_t{1} << order) - 1);
  if (!std::isfinite(d)) throw DomainError("mixed_partial: non-finite result");
  return d;
}

// ---------------------------------------------------------------------------
// Dense linear algebra over any scalar ring.  Pivot choices look only at value
// parts, so the control flow matches the plain double computation.

template <class R>
using Matrix = std::vector<std::vector<R>>;

template <class R>
std::vector<R> solve_linear(Matrix<R> a, std::vector<R> b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw Error("solve_linear: dimension mismatch");
  double norm = 0.0;
  for (const auto& row : a) {
    if (row.size() != n) throw Error("solve_linear: matrix not square");
    for (const auto& v : row) norm = std::max(norm, std::fabs(value_of(v)));
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::fabs(value_of(a[col][col]));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = std::fabs(value_of(a[r][col]));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (!(best > 1e-14 * norm) || best == 0.0)
      throw SingularMatrixError("solve_linear: singular value matrix (pivot magnitude " +
                                    std::to_string(best) + ")",
                                best);
    if (piv != col) {
      std::swap(a[piv], a[col]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      if constexpr (std::is_same_v<R, double>) {
        if (a[r][col] == 0.0) continue;
      }
      const R factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] = a[r][c] - factor * a[col][c];
      b[r] = b[r] - factor * b[col];
    }
  }
  std::vector<R> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    R acc = b[ii];
    for (std::size_t c = ii + 1; c < n; ++c) acc = acc - a[ii][c] * x[c];
    x[ii] = acc / a[ii][ii];
  }
  return x;
}

template <class R>
R determinant(Matrix<R> a) {
  const std::size_t n = a.size();
  R det(1.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::fabs(value_of(a[col][col]));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = std::fabs(value_of(a[r][col]));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best == 0.0) throw SingularMatrixError("determinant: zero pivot", 0.0);
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det = det * a[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const R factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] = a[r][c] - factor * a[col][c];
    }
  }
  return det;
}

}  // namespace finslab
