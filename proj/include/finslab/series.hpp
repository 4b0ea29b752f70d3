#pragma once

// Truncated multivariate Taylor series in the 2n state coordinates (x, y).
//
// A Series holds the Taylor coefficients of a function around a base state on
// a fixed monomial universe {x-degree <= x_cap, total degree <= total_cap}.
// Each Series also tracks how much of that universe is still exact: after a
// derivative the coefficients of the highest degrees are no longer known, so
// validity shrinks to {x-degree <= x_order, total degree <= total_order}.
// Reading a coefficient outside the valid set throws BudgetError.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/jets.hpp"

namespace finslab {

class SeriesLayout {
 public:
  static constexpr int kMaxVars = 10;
  using Exponents = std::array<std::uint8_t, kMaxVars>;

  SeriesLayout(int nx, int ny, int x_cap, int total_cap)
      : nx_(nx), ny_(ny), vars_(nx + ny), x_cap_(x_cap), total_cap_(total_cap) {
    if (nx < 0 || ny < 0 || vars_ == 0 || vars_ > kMaxVars)
      throw Error("SeriesLayout: unsupported variable count");
    if (x_cap < 0 || total_cap < 0 || total_cap > 24)
      throw Error("SeriesLayout: unsupported truncation orders");
    build();
  }

  // Layouts are immutable and shared; this returns a process-lifetime instance.
  static const SeriesLayout& get(int nx, int ny, int x_cap, int total_cap) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, int>, std::unique_ptr<SeriesLayout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(nx, ny, x_cap, total_cap);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, std::make_unique<SeriesLayout>(nx, ny, x_cap, total_cap)).first;
    return *it->second;
  }

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  int vars() const noexcept { return vars_; }
  int x_cap() const noexcept { return x_cap_; }
  int total_cap() const noexcept { return total_cap_; }
  std::size_t size() const noexcept { return exps_.size(); }

  // Number of monomials with total degree <= t (t may be negative).
  std::size_t prefix(int t) const noexcept {
    if (t < 0) return 0;
    if (t > total_cap_) t = total_cap_;
    return prefix_[static_cast<std::size_t>(t)];
  }

  const Exponents& exponents(std::size_t k) const { return exps_[k]; }
  int total_degree(std::size_t k) const { return tdeg_[k]; }
  int x_degree(std::size_t k) const { return xdeg_[k]; }

  // Index of monomial k multiplied by variable v, or -1 outside the universe.
  int shifted(std::size_t k, int v) const {
    return shift_[k * static_cast<std::size_t>(vars_) + static_cast<std::size_t>(v)];
  }

  int index_of(const Exponents& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : it->second;
  }

  // Product of the factorials of the exponents (Taylor coefficient -> derivative).
  double factorial_weight(std::size_t k) const { return fact_weight_[k]; }

  std::size_t pair_begin(std::size_t k) const { return pair_begin_[k]; }
  std::size_t pair_end(std::size_t k) const { return pair_begin_[k + 1]; }
  const std::vector<std::int32_t>& pair_left() const { return pair_i_; }
  const std::vector<std::int32_t>& pair_right() const { return pair_j_; }

 private:
  void build() {
    std::vector<Exponents> all;
    Exponents e{};
    enumerate(0, 0, 0, e, all);
    std::sort(all.begin(), all.end(), [this](const Exponents& a, const Exponents& b) {
      const int ta = degree(a, 0, vars_), tb = degree(b, 0, vars_);
      if (ta != tb) return ta < tb;
      const int xa = degree(a, 0, nx_), xb = degree(b, 0, nx_);
      if (xa != xb) return xa < xb;
      return a > b;
    });
    exps_ = std::move(all);
    const std::size_t m = exps_.size();
    tdeg_.resize(m);
    xdeg_.resize(m);
    fact_weight_.resize(m);
    prefix_.assign(static_cast<std::size_t>(total_cap_) + 1, 0);
    for (std::size_t k = 0; k < m; ++k) {
      tdeg_[k] = static_cast<std::uint8_t>(degree(exps_[k], 0, vars_));
      xdeg_[k] = static_cast<std::uint8_t>(degree(exps_[k], 0, nx_));
      index_[exps_[k]] = static_cast<int>(k);
      double w = 1.0;
      for (int v = 0; v < vars_; ++v)
        for (int q = 2; q <= exps_[k][static_cast<std::size_t>(v)]; ++q) w *= q;
      fact_weight_[k] = w;
    }
    for (int t = 0; t <= total_cap_; ++t) {
      std::size_t c = 0;
      while (c < m && tdeg_[c] <= t) ++c;
      prefix_[static_cast<std::size_t>(t)] = c;
    }
    shift_.assign(m * static_cast<std::size_t>(vars_), -1);
    for (std::size_t k = 0; k < m; ++k) {
      for (int v = 0; v < vars_; ++v) {
        Exponents up = exps_[k];
        up[static_cast<std::size_t>(v)]++;
        shift_[k * static_cast<std::size_t>(vars_) + static_cast<std::size_t>(v)] = index_of(up);
      }
    }
    // All divisor pairs of every monomial, grouped by product.
    pair_begin_.assign(m + 1, 0);
    for (std::size_t k = 0; k < m; ++k) {
      pair_begin_[k] = pair_i_.size();
      Exponents d{};
      divisors(k, 0, d);
    }
    pair_begin_[m] = pair_i_.size();
  }

  int degree(const Exponents& e, int from, int to) const {
    int s = 0;
    for (int v = from; v < to; ++v) s += e[static_cast<std::size_t>(v)];
    return s;
  }

  void enumerate(int v, int xsum, int tsum, Exponents& e, std::vector<Exponents>& out) {
    if (v == vars_) {
      out.push_back(e);
      return;
    }
    for (int p = 0; tsum + p <= total_cap_ && (v >= nx_ || xsum + p <= x_cap_); ++p) {
      e[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(p);
      enumerate(v + 1, v < nx_ ? xsum + p : xsum, tsum + p, e, out);
    }
    e[static_cast<std::size_t>(v)] = 0;
  }

  void divisors(std::size_t k, int v, Exponents& d) {
    if (v == vars_) {
      Exponents rest = exps_[k];
      for (int q = 0; q < vars_; ++q) rest[static_cast<std::size_t>(q)] -= d[static_cast<std::size_t>(q)];
      pair_i_.push_back(index_of(d));
      pair_j_.push_back(index_of(rest));
      return;
    }
    for (int p = 0; p <= exps_[k][static_cast<std::size_t>(v)]; ++p) {
      d[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(p);
      divisors(k, v + 1, d);
    }
    d[static_cast<std::size_t>(v)] = 0;
  }

  int nx_, ny_, vars_, x_cap_, total_cap_;
  std::vector<Exponents> exps_;
  std::vector<std::uint8_t> tdeg_, xdeg_;
  std::vector<double> fact_weight_;
  std::vector<std::size_t> prefix_;
  std::vector<int> shift_;
  std::map<Exponents, int> index_;
  std::vector<std::size_t> pair_begin_;
  std::vector<std::int32_t> pair_i_, pair_j_;
};

class Series {
 public:
  static constexpr int kExact = 1 << 20;

  // A layout-free exact constant; adopts the layout of whatever it meets.
  Series(double v = 0.0) : layout_(nullptr), xo_(kExact), to_(kExact), c_(1, v) {}  // NOLINT

  static Series constant(const SeriesLayout& layout, double v) {
    Series s;
    s.layout_ = &layout;
    s.xo_ = layout.x_cap();
    s.to_ = layout.total_cap();
    s.c_.assign(layout.prefix(s.to_), 0.0);
    s.c_[0] = v;
    return s;
  }

  // base + (variable `var`), exact on the whole universe.
  static Series variable(const SeriesLayout& layout, int var, double base) {
    Series s = constant(layout, base);
    SeriesLayout::Exponents e{};
    e[static_cast<std::size_t>(var)] = 1;
    const int k = layout.index_of(e);
    if (k < 0) throw Error("Series::variable: variable outside the layout");
    s.c_[static_cast<std::size_t>(k)] = 1.0;
    return s;
  }

  const SeriesLayout* layout() const noexcept { return layout_; }
  int x_order() const noexcept { return xo_; }
  int total_order() const noexcept { return to_; }
  bool valid() const noexcept { return xo_ >= 0 && to_ >= 0; }

  double value() const {
    if (!valid())
      throw BudgetError("series derivative budget exhausted: value no longer determined");
    return c_[0];
  }

  bool known(const SeriesLayout::Exponents& e) const {
    int t = 0, x = 0;
    const int vars = layout_ ? layout_->vars() : 0;
    const int nx = layout_ ? layout_->nx() : 0;
    for (int v = 0; v < vars; ++v) {
      t += e[static_cast<std::size_t>(v)];
      if (v < nx) x += e[static_cast<std::size_t>(v)];
    }
    return t <= to_ && x <= xo_;
  }

  // Taylor coefficient of the monomial with exponents e.
  double coefficient(const SeriesLayout::Exponents& e) const {
    if (!known(e)) throw BudgetError("series coefficient outside the valid truncation");
    if (!layout_) {
      for (auto v : e)
        if (v) return 0.0;
      return c_[0];
    }
    const int k = layout_->index_of(e);
    if (k < 0 || static_cast<std::size_t>(k) >= c_.size()) return 0.0;
    return c_[static_cast<std::size_t>(k)];
  }

  // Partial derivative of the represented function at the base state.
  double derivative(const SeriesLayout::Exponents& e) const {
    double w = 1.0;
    for (auto v : e)
      for (int q = 2; q <= v; ++q) w *= q;
    return coefficient(e) * w;
  }

  std::span<const double> raw() const noexcept { return c_; }

  // d/d(var) as a series; shrinks validity by one order.
  Series d(int var) const {
    if (!layout_) return Series(0.0);
    if (var < 0 || var >= layout_->vars()) throw Error("Series::d: variable out of range");
    Series out;
    out.layout_ = layout_;
    out.to_ = to_ - 1;
    out.xo_ = var < layout_->nx() ? xo_ - 1 : xo_;
    const std::size_t m = layout_->prefix(std::min(out.to_, layout_->total_cap()));
    out.c_.assign(std::max<std::size_t>(m, 1), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const int up = layout_->shifted(k, var);
      if (up < 0 || static_cast<std::size_t>(up) >= c_.size()) continue;
      out.c_[k] = (layout_->exponents(k)[static_cast<std::size_t>(var)] + 1) * c_[static_cast<std::size_t>(up)];
    }
    return out;
  }

  Series operator-() const {
    Series out = *this;
    for (double& v : out.c_) v = -v;
    return out;
  }

  Series& operator+=(const Series& o) { return *this = *this + o; }
  Series& operator-=(const Series& o) { return *this = *this - o; }
  Series& operator*=(const Series& o) { return *this = *this * o; }
  Series& operator/=(const Series& o) { return *this = *this / o; }

  friend Series operator+(const Series& a, const Series& b) { return combine(a, b, 1.0); }
  friend Series operator-(const Series& a, const Series& b) { return combine(a, b, -1.0); }
  friend Series operator+(const Series& a, double b) {
    Series out = a;
    out.c_[0] += b;
    return out;
  }
  friend Series operator+(double a, const Series& b) { return b + a; }
  friend Series operator-(const Series& a, double b) { return a + (-b); }
  friend Series operator-(double a, const Series& b) { return (-b) + a; }
  friend Series operator*(const Series& a, double b) {
    Series out = a;
    for (double& v : out.c_) v *= b;
    return out;
  }
  friend Series operator*(double a, const Series& b) { return b * a; }
  friend Series operator/(const Series& a, double b) {
    if (b == 0.0) throw DomainError("series division by zero");
    Series out = a;
    for (double& v : out.c_) v /= b;
    return out;
  }

  friend Series operator*(const Series& a, const Series& b) {
    if (!a.layout_) return b * a.c_[0];
    if (!b.layout_) return a * b.c_[0];
    check_same(a, b);
    const SeriesLayout& L = *a.layout_;
    Series out;
    out.layout_ = a.layout_;
    out.to_ = std::min(a.to_, b.to_);
    out.xo_ = std::min(a.xo_, b.xo_);
    const std::size_t m = L.prefix(std::min(out.to_, L.total_cap()));
    out.c_.assign(std::max<std::size_t>(m, 1), 0.0);
    if (out.xo_ < 0) return out;
    const auto& pi = L.pair_left();
    const auto& pj = L.pair_right();
    const double* ac = a.c_.data();
    const double* bc = b.c_.data();
    const std::size_t nnz_a = a.nonzero_count(m);
    const std::size_t nnz_b = b.nonzero_count(m);
    if (std::min(nnz_a, nnz_b) <= 4) {
      // Scatter the sparse factor (typically a coordinate variable).
      const Series& sparse = nnz_a <= nnz_b ? a : b;
      const Series& dense = nnz_a <= nnz_b ? b : a;
      for (std::size_t i = 0; i < m; ++i) {
        const double s = sparse.c_[i];
        if (s == 0.0) continue;
        scatter(L, i, s, dense, out, m);
      }
      return out;
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (L.x_degree(k) > out.xo_) continue;
      double acc = 0.0;
      const std::size_t e = L.pair_end(k);
      for (std::size_t p = L.pair_begin(k); p < e; ++p) acc += ac[pi[p]] * bc[pj[p]];
      out.c_[k] = acc;
    }
    return out;
  }

  friend Series operator/(const Series& a, const Series& b) {
    if (!b.layout_) return a / b.c_[0];
    return a * reciprocal(b);
  }
  friend Series operator/(double a, const Series& b) { return reciprocal(b) * a; }

  static Series reciprocal(const Series& b) {
    const double v = b.c_[0];
    if (v == 0.0) throw DomainError("series division by a zero value part");
    if (!b.layout_) return Series(1.0 / v);
    return compose(b, detail::power_derivatives(v, -1.0, b.order_needed(), 1.0 / v));
  }

  // f(a) from f^(k)(a0), k = 0..total order.
  static Series compose(const Series& a, std::span<const double> derivs) {
    if (!a.layout_) return Series(derivs[0]);
    const int order = a.order_needed();
    Series h = a;
    h.c_[0] = 0.0;
    double fact = 1.0;
    std::vector<double> taylor(static_cast<std::size_t>(order) + 1);
    for (int k = 0; k <= order; ++k) {
      if (k > 0) fact *= k;
      taylor[static_cast<std::size_t>(k)] = derivs[static_cast<std::size_t>(k)] / fact;
    }
    Series r = h * taylor[static_cast<std::size_t>(order)];
    r.c_[0] = taylor[static_cast<std::size_t>(order > 0 ? order - 1 : 0)];
    if (order == 0) {
      r.c_[0] = derivs[0];
      return r;
    }
    for (int k = order - 2; k >= 0; --k) {
      r = r * h;
      r.c_[0] = taylor[static_cast<std::size_t>(k)];
    }
    r.c_[0] = derivs[0];
    return r;
  }

  // Embeds a series over the x coordinates only into a layout that also has
  // y coordinates.  The function is y-independent, so every monomial with
  // x-degree within the source's known range is determined.
  static Series embed_x_only(const Series& src, const SeriesLayout& dst) {
    if (!src.layout_) return Series::constant(dst, src.c_[0]);
    const SeriesLayout& S = *src.layout_;
    if (S.ny() != 0 || S.nx() != dst.nx())
      throw Error("embed_x_only: source must be a series in the x coordinates only");
    Series out = Series::constant(dst, 0.0);
    const int known = std::min(src.xo_, src.to_);
    out.xo_ = std::min(known, dst.x_cap());
    const std::size_t m = S.prefix(std::min(src.to_, S.total_cap()));
    for (std::size_t k = 0; k < m; ++k) {
      SeriesLayout::Exponents e{};
      for (int v = 0; v < S.nx(); ++v) e[static_cast<std::size_t>(v)] = S.exponents(k)[static_cast<std::size_t>(v)];
      const int j = dst.index_of(e);
      if (j >= 0) out.c_[static_cast<std::size_t>(j)] = src.c_[k];
    }
    return out;
  }

 private:
  int order_needed() const {
    return std::max(0, std::min(to_, layout_ ? layout_->total_cap() : 0));
  }

  std::size_t nonzero_count(std::size_t m) const {
    std::size_t n = 0;
    const std::size_t lim = std::min(m, c_.size());
    for (std::size_t k = 0; k < lim; ++k)
      if (c_[k] != 0.0 && ++n > 4) return n;
    return n;
  }

  static void scatter(const SeriesLayout& L, std::size_t i, double s, const Series& dense,
                      Series& out, std::size_t m) {
    // out += s * monomial_i * dense, restricted to the first m monomials.
    const auto& ei = L.exponents(i);
    for (std::size_t k = 0; k < m; ++k) {
      const double d = dense.c_[k];
      if (d == 0.0) continue;
      int idx = static_cast<int>(k);
      for (int v = 0; v < L.vars() && idx >= 0; ++v)
        for (int q = 0; q < ei[static_cast<std::size_t>(v)] && idx >= 0; ++q)
          idx = L.shifted(static_cast<std::size_t>(idx), v);
      if (idx < 0 || static_cast<std::size_t>(idx) >= m) continue;
      if (L.x_degree(static_cast<std::size_t>(idx)) > out.xo_) continue;
      out.c_[static_cast<std::size_t>(idx)] += s * d;
    }
  }

  static void check_same(const Series& a, const Series& b) {
    if (a.layout_ != b.layout_) throw Error("series from different layouts combined");
  }

  static Series combine(const Series& a, const Series& b, double sign) {
    if (!b.layout_) return a + sign * b.c_[0];
    if (!a.layout_) {
      Series out = b * sign;
      out.c_[0] += a.c_[0];
      return out;
    }
    check_same(a, b);
    Series out;
    out.layout_ = a.layout_;
    out.to_ = std::min(a.to_, b.to_);
    out.xo_ = std::min(a.xo_, b.xo_);
    const std::size_t m = a.layout_->prefix(std::min(out.to_, a.layout_->total_cap()));
    out.c_.assign(std::max<std::size_t>(m, 1), 0.0);
    for (std::size_t k = 0; k < m; ++k) out.c_[k] = a.c_[k] + sign * b.c_[k];
    return out;
  }

  const SeriesLayout* layout_;
  int xo_, to_;
  std::vector<double> c_;
};

inline double value_of(const Series& s) { return s.value(); }

inline Series sqrt(const Series& a) {
  const double v = a.raw()[0];
  if (!(v > 0.0)) {
    if (v == 0.0 && !a.layout()) return Series(0.0);
    throw DomainError("sqrt of a non-positive series value part");
  }
  return Series::compose(a, detail::power_derivatives(v, 0.5, std::max(0, std::min(a.total_order(), a.layout() ? a.layout()->total_cap() : 0)), std::sqrt(v)));
}

inline Series exp(const Series& a) {
  const int order = a.layout() ? std::max(0, std::min(a.total_order(), a.layout()->total_cap())) : 0;
  return Series::compose(a, detail::exp_derivatives(a.raw()[0], order));
}

inline Series log(const Series& a) {
  const double v = a.raw()[0];
  if (!(v > 0.0)) throw DomainError("ln of a non-positive series value part");
  const int order = a.layout() ? std::max(0, std::min(a.total_order(), a.layout()->total_cap())) : 0;
  return Series::compose(a, detail::log_derivatives(v, order));
}

inline Series pow(const Series& a, double p) {
  const double v = a.raw()[0];
  if (!(v > 0.0)) throw DomainError("real power of a non-positive series value part");
  const int order = a.layout() ? std::max(0, std::min(a.total_order(), a.layout()->total_cap())) : 0;
  return Series::compose(a, detail::power_derivatives(v, p, order, std::pow(v, p)));
}

inline Series abs(const Series& a) {
  const double v = a.raw()[0];
  if (v > 0.0) return a;
  if (v < 0.0) return -a;
  if (!a.layout()) return Series(0.0);
  throw DomainError("abs of a series whose value part is zero");
}

}  // namespace finslab
