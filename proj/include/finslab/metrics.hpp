#pragma once

// Finsler metrics: a ring-generic F(x, y) plus its domain, and the tensors
// obtained from F alone (fundamental tensor, its inverse, Cartan torsion).

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/expr.hpp"
#include "finslab/jets.hpp"
#include "finslab/ring.hpp"
#include "finslab/tensor.hpp"

namespace finslab {

struct MetricSpec {
  std::string name;
  std::string family;
  int dimension = 0;
  StateFunction F;
  std::function<bool(std::span<const double>)> chart_domain;
  std::function<bool(std::span<const double>, std::span<const double>)> cone_domain;
  Parameters parameters;
  double chart_radius = 1.0;
  bool conic = false;
  // Busemann-Hausdorff density in closed form, when F is Randers with known (a, b).
  PointFunction randers_sigma;
  // A density that comes with the metric (file field or catalog recommendation).
  PointFunction volume_density;
  std::string volume_density_text;

  template <class R>
  R operator()(std::span<const R> x, std::span<const R> y) const {
    return F.operator()<R>(x, y);
  }

  bool in_chart(std::span<const double> x) const { return !chart_domain || chart_domain(x); }
  bool in_cone(std::span<const double> x, std::span<const double> y) const {
    return !cone_domain || cone_domain(x, y);
  }
};

inline std::string describe_state(std::span<const double> x, std::span<const double> y) {
  std::ostringstream os;
  os.precision(17);
  os << "x=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ") y=(";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? "," : "") << y[i];
  os << ")";
  return os.str();
}

// Generic Randers closed-form density (1 - |b|_a^2)^((n+1)/2) sqrt(det a);
// `data(x, A, b)` fills a_ij(x) and b_i(x).
template <class R, class DataFn>
R randers_density(std::span<const R> x, int n, const DataFn& data) {
  using std::sqrt;
  Matrix<R> a(static_cast<std::size_t>(n), std::vector<R>(static_cast<std::size_t>(n), R(0.0)));
  std::vector<R> b(static_cast<std::size_t>(n), R(0.0));
  data(x, a, b);
  const std::vector<R> z = solve_linear(a, b);
  R bb(0.0);
  for (std::size_t i = 0; i < b.size(); ++i) bb = bb + b[i] * z[i];
  if (!(value_of(bb) < 1.0)) throw DomainError("Randers form has |b|_a >= 1");
  const R det = determinant(a);
  if (!(value_of(det) > 0.0)) throw RegularityError("Randers a_ij is not positive definite");
  return rpow(R(1.0) - bb, 0.5 * (n + 1)) * sqrt(det);
}

namespace detail {

inline void check_state(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<std::size_t>(m.dimension);
  if (x.size() != n || y.size() != n) throw Error("state dimension does not match the metric");
}

// Cholesky factorization as a positive-definiteness test.
inline bool positive_definite(const Tensor<double>& g) {
  const int n = g.dim();
  std::vector<double> l(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = g.at({i, j});
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i * n + k)] * l[static_cast<std::size_t>(j * n + k)];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[static_cast<std::size_t>(i * n + i)] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i * n + j)] = s / l[static_cast<std::size_t>(j * n + j)];
      }
    }
  }
  return true;
}

}  // namespace detail

template <class R>
R metric_squared(const MetricSpec& m, std::span<const R> x, std::span<const R> y) {
  R f = m.F.operator()<R>(x, y);
  return f * f;
}

inline TensorValue fundamental_tensor(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  detail::check_state(m, x, y);
  const int n = m.dimension;
  auto f2 = [&m](auto xs_, auto ys_) { return metric_squared(m, xs_, ys_); };
  Tensor<double> g(n, variance_of("ll"));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Slot idx[2] = {ys(i), ys(j)};
      const double v = 0.5 * mixed_partial(f2, x, y, idx);
      g.at({i, j}) = v;
      g.at({j, i}) = v;
    }
  if (!detail::positive_definite(g))
    throw RegularityError("fundamental tensor not positive definite at " + describe_state(x, y));
  return TensorValue(std::move(g), {x.begin(), x.end()}, {y.begin(), y.end()});
}

inline TensorValue inverse_fundamental(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  const TensorValue g = fundamental_tensor(m, x, y);
  const int n = m.dimension;
  Matrix<double> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g.at({i, j});
  Tensor<double> inv(n, variance_of("uu"));
  for (int col = 0; col < n; ++col) {
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    e[static_cast<std::size_t>(col)] = 1.0;
    const auto c = solve_linear(a, e);
    for (int i = 0; i < n; ++i) inv.at({i, col}) = c[static_cast<std::size_t>(i)];
  }
  return TensorValue(std::move(inv), g.x, g.y);
}

inline TensorValue cartan_torsion(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  detail::check_state(m, x, y);
  const int n = m.dimension;
  auto f2 = [&m](auto xs_, auto ys_) { return metric_squared(m, xs_, ys_); };
  Tensor<double> c(n, variance_of("lll"));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const Slot idx[3] = {ys(i), ys(j), ys(k)};
        const double v = 0.25 * mixed_partial(f2, x, y, idx);
        for (auto [a, b, d] : {std::array{i, j, k}, std::array{i, k, j}, std::array{j, i, k},
                               std::array{j, k, i}, std::array{k, i, j}, std::array{k, j, i}})
          c.at({a, b, d}) = v;
      }
  return TensorValue(std::move(c), {x.begin(), x.end()}, {y.begin(), y.end()});
}

// Largest relative deviation of F(x, t y) from t F(x, y) over t in {0.5, 2, 3}.
template <class Fn>
double homogeneity_defect(const Fn& f, std::span<const double> x, std::span<const double> y, double degree = 1.0) {
  const double f0 = f(x, y);
  double worst = 0.0;
  for (double t : {0.5, 2.0, 3.0}) {
    std::vector<double> ty(y.begin(), y.end());
    for (double& v : ty) v *= t;
    const double ft = f(x, std::span<const double>(ty));
    const double expect = std::pow(t, degree) * f0;
    worst = std::max(worst, std::fabs(ft - expect) / std::max(std::fabs(expect), 1e-300));
  }
  return worst;
}

inline double homogeneity_defect(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  return homogeneity_defect([&m](std::span<const double> a, std::span<const double> b) { return m(a, b); }, x, y);
}

// Definition of a metric from DSL pieces.
struct MetricDefinition {
  std::string name;
  std::string family;  // euclidean | riemannian | randers | alpha_beta_power | dsl
  int dimension = 0;
  std::vector<std::string> a;  // n*n row-major a_ij(x)
  std::vector<std::string> b;  // n entries b_i(x)
  std::string F;
  std::string volume_density;
  Parameters parameters;
  double chart_radius = 1.0;
};

namespace detail {

inline std::set<std::string> names_of(const Parameters& p) {
  std::set<std::string> s;
  for (const auto& [k, v] : p) s.insert(k);
  return s;
}

struct FormData {
  int n = 0;
  std::vector<Expr> a, b;
  Parameters params;

  template <class R>
  void fill(std::span<const R> x, Matrix<R>& A, std::vector<R>& bv) const {
    const std::span<const R> none;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            evaluate<R>(a[static_cast<std::size_t>(i * n + j)], x, none, params);
      if (!b.empty()) bv[static_cast<std::size_t>(i)] = evaluate<R>(b[static_cast<std::size_t>(i)], x, none, params);
    }
  }

  template <class R>
  R alpha_sq(std::span<const R> x, std::span<const R> y) const {
    const std::span<const R> none;
    R s(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s = s + evaluate<R>(a[static_cast<std::size_t>(i * n + j)], x, none, params) *
                    y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    return s;
  }

  template <class R>
  R beta(std::span<const R> x, std::span<const R> y) const {
    const std::span<const R> none;
    R s(0.0);
    for (int i = 0; i < n; ++i)
      s = s + evaluate<R>(b[static_cast<std::size_t>(i)], x, none, params) * y[static_cast<std::size_t>(i)];
    return s;
  }
};

inline void check_variables(const Expr& e, Axis forbidden, const std::string& what) {
  std::function<void(const Node&)> walk = [&](const Node& nd) {
    if (nd.kind == NodeKind::variable && nd.axis == forbidden)
      throw ParseError(what + " may not depend on " + (forbidden == Axis::y ? "y" : "x"), nd.position);
    if (nd.left) walk(*nd.left);
    if (nd.right) walk(*nd.right);
  };
  walk(e.root());
}

}  // namespace detail

inline MetricSpec construct_metric(const MetricDefinition& def) {
  const int n = def.dimension;
  if (n < 2) throw Error("metric dimension must be at least 2");
  MetricSpec m;
  m.name = def.name.empty() ? def.family : def.name;
  m.family = def.family;
  m.dimension = n;
  m.parameters = def.parameters;
  m.chart_radius = def.chart_radius;
  const double radius = def.chart_radius;
  m.chart_domain = [radius](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s) < radius;
  };
  const auto names = detail::names_of(def.parameters);

  if (!def.volume_density.empty()) {
    Expr e = parse(def.volume_density, n, names);
    detail::check_variables(e, Axis::y, "volume density");
    Parameters params = def.parameters;
    m.volume_density = [e, params](auto x) {
      using R = typename decltype(x)::value_type;
      return evaluate<std::remove_const_t<R>>(e, x, {}, params);
    };
    m.volume_density_text = def.volume_density;
  }

  auto form = std::make_shared<detail::FormData>();
  form->n = n;
  form->params = def.parameters;
  auto load_forms = [&](bool need_b) {
    if (def.a.size() != static_cast<std::size_t>(n * n))
      throw Error("family '" + def.family + "' needs " + std::to_string(n * n) + " entries a_ij");
    for (const auto& s : def.a) {
      form->a.push_back(parse(s, n, names));
      detail::check_variables(form->a.back(), Axis::y, "a_ij");
    }
    if (need_b) {
      if (def.b.size() != static_cast<std::size_t>(n))
        throw Error("family '" + def.family + "' needs " + std::to_string(n) + " entries b_i");
      for (const auto& s : def.b) {
        form->b.push_back(parse(s, n, names));
        detail::check_variables(form->b.back(), Axis::y, "b_i");
      }
    }
    // symmetry of a_ij at the chart center and a few interior points
    for (double r : {0.0, 0.3, -0.2}) {
      std::vector<double> x(static_cast<std::size_t>(n), r * radius);
      x[0] = -x[0];
      Matrix<double> A(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
      std::vector<double> bv(static_cast<std::size_t>(n));
      form->fill<double>(x, A, bv);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
          const double u = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          const double v = A[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
          if (std::fabs(u - v) > 1e-12 * std::max(1.0, std::fabs(u)))
            throw Error("a_ij is not symmetric (entries " + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + ")");
        }
    }
  };

  if (def.family == "euclidean") {
    m.F = [](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      using std::sqrt;
      (void)x;
      R s(0.0);
      for (const auto& v : y) s = s + v * v;
      return sqrt(s);
    };
  } else if (def.family == "riemannian") {
    load_forms(false);
    m.F = [form](auto x, auto y) {
      using std::sqrt;
      return sqrt(form->alpha_sq(x, y));
    };
  } else if (def.family == "randers") {
    load_forms(true);
    m.F = [form](auto x, auto y) {
      using std::sqrt;
      return sqrt(form->alpha_sq(x, y)) + form->beta(x, y);
    };
    m.randers_sigma = [form](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return randers_density<R>(x, form->n, [&](auto xx, auto& A, auto& bv) { form->fill<R>(xx, A, bv); });
    };
    std::vector<double> center(static_cast<std::size_t>(n), 0.0);
    try {
      (void)m.randers_sigma.operator()<double>(center);
    } catch (const DomainError&) {
      throw RegularityError("Randers metric has |b|_a >= 1 at the chart center");
    }
  } else if (def.family == "alpha_beta_power") {
    load_forms(true);
    auto it = def.parameters.find("m");
    if (it == def.parameters.end()) throw Error("alpha_beta_power needs parameter m");
    const double mm = it->second;
    if (mm == 0.0 || mm == 1.0) throw Error("alpha_beta_power exponent m must differ from 0 and 1");
    m.conic = true;
    m.F = [form, mm](auto x, auto y) {
      using std::sqrt;
      auto alpha = sqrt(form->alpha_sq(x, y));
      auto beta = form->beta(x, y);
      if (!(value_of(beta) > 0.0)) throw DomainError("alpha_beta_power evaluated outside beta > 0");
      return rpow(alpha, mm) * rpow(beta, 1.0 - mm);
    };
    m.cone_domain = [form](std::span<const double> x, std::span<const double> y) {
      return form->beta<double>(x, y) > 0.0;
    };
  } else if (def.family == "dsl") {
    if (def.F.empty()) throw Error("family 'dsl' needs an expression for F");
    Expr e = parse(def.F, n, names);
    Parameters params = def.parameters;
    m.F = [e, params](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return evaluate<R>(e, x, y, params);
    };
  } else {
    throw Error("unknown metric family '" + def.family + "'");
  }
  return m;
}

}  // namespace finslab
