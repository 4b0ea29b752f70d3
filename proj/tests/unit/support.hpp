#pragma once

#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "finslab/finslab.hpp"

namespace support {

using namespace finslab;

// Small hand-rolled generator; every property test owns one with a fixed seed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return a + (b - a) * rng_.uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng_.uniform() * (hi - lo + 1)); }
  double normal() { return rng_.normal(); }
  std::vector<double> vec(int n, double a, double b) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& e : v) e = uniform(a, b);
    return v;
  }
  std::vector<double> unit(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& e : v) {
      e = normal();
      s += e * e;
    }
    for (double& e : v) e /= std::sqrt(s);
    return v;
  }

 private:
  StateRng rng_;
};

using Fd = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

inline double fd_nested(const Fd& f, std::vector<double> x, std::vector<double> y, std::span<const Slot> slots,
                        double h) {
  if (slots.empty()) return f(x, y);
  const Slot s = slots.back();
  const auto rest = slots.first(slots.size() - 1);
  auto& v = s.axis == Axis::x ? x : y;
  const double c = v[static_cast<std::size_t>(s.index)];
  v[static_cast<std::size_t>(s.index)] = c + h;
  const double p = fd_nested(f, x, y, rest, h);
  v[static_cast<std::size_t>(s.index)] = c - h;
  const double m = fd_nested(f, x, y, rest, h);
  return (p - m) / (2.0 * h);
}

// Nested central differences with one Richardson step: O(h^4).
inline double fd_richardson(const Fd& f, const std::vector<double>& x, const std::vector<double>& y,
                            std::span<const Slot> slots, double h) {
  const double coarse = fd_nested(f, x, y, slots, h);
  const double fine = fd_nested(f, x, y, slots, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

inline Fd fd_of(const MetricSpec& m, bool squared) {
  return [&m, squared](const std::vector<double>& x, const std::vector<double>& y) {
    const double f = m(std::span<const double>(x), std::span<const double>(y));
    return squared ? f * f : f;
  };
}

inline double rel_err(double got, double want, double floor = 1.0) {
  return std::fabs(got - want) / std::max(floor, std::fabs(want));
}

// Polynomials in (x, y) with analytic partial derivatives.
struct Monomial {
  double c = 0.0;
  std::vector<int> ex, ey;
};

struct Polynomial {
  int n = 0;
  std::vector<Monomial> terms;

  template <class R>
  R operator()(std::span<const R> x, std::span<const R> y) const {
    R acc(0.0);
    for (const auto& t : terms) {
      R m(t.c);
      for (int i = 0; i < n; ++i) {
        if (t.ex[static_cast<std::size_t>(i)]) m = m * ipow(x[static_cast<std::size_t>(i)], t.ex[static_cast<std::size_t>(i)]);
        if (t.ey[static_cast<std::size_t>(i)]) m = m * ipow(y[static_cast<std::size_t>(i)], t.ey[static_cast<std::size_t>(i)]);
      }
      acc = acc + m;
    }
    return acc;
  }

  double partial(std::span<const double> x, std::span<const double> y, std::span<const Slot> slots) const {
    double acc = 0.0;
    for (const auto& t : terms) {
      std::vector<int> ex = t.ex, ey = t.ey;
      double c = t.c;
      for (const Slot s : slots) {
        int& e = (s.axis == Axis::x ? ex : ey)[static_cast<std::size_t>(s.index)];
        c *= e;
        if (e > 0) --e;
      }
      if (c == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        c *= std::pow(x[static_cast<std::size_t>(i)], ex[static_cast<std::size_t>(i)]);
        c *= std::pow(y[static_cast<std::size_t>(i)], ey[static_cast<std::size_t>(i)]);
      }
      acc += c;
    }
    return acc;
  }
};

inline Polynomial random_polynomial(Gen& g, int n, int terms, int max_degree) {
  Polynomial p;
  p.n = n;
  for (int k = 0; k < terms; ++k) {
    Monomial m;
    m.c = g.uniform(-2.0, 2.0);
    m.ex.assign(static_cast<std::size_t>(n), 0);
    m.ey.assign(static_cast<std::size_t>(n), 0);
    const int deg = g.integer(0, max_degree);
    for (int d = 0; d < deg; ++d) {
      const int v = g.integer(0, 2 * n - 1);
      if (v < n)
        ++m.ex[static_cast<std::size_t>(v)];
      else
        ++m.ey[static_cast<std::size_t>(v - n)];
    }
    p.terms.push_back(std::move(m));
  }
  return p;
}

inline std::vector<Slot> random_slots(Gen& g, int n, int order) {
  std::vector<Slot> s;
  for (int k = 0; k < order; ++k) s.push_back(g.integer(0, 1) ? xs(g.integer(0, n - 1)) : ys(g.integer(0, n - 1)));
  return s;
}

inline SamplePlan plan(int count, std::uint64_t seed = 20250405) {
  SamplePlan p;
  p.count = count;
  p.seed = seed;
  return p;
}

inline double tol_for(Geometry& geo, double rel) { return 1e-9 + rel * geo.scale(); }

}  // namespace support
