#pragma once

// Built-in metrics: four published examples and four controls.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/metrics.hpp"
#include "finslab/volume.hpp"

namespace finslab {

struct ExpectedVerdict {
  std::string predicate;
  bool holds = true;
  std::string note;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  MetricSpec metric;
  std::vector<ExpectedVerdict> expected;
  VolumeKind recommended_volume = VolumeKind::bh_quadrature;
  std::optional<double> expected_flag_curvature;
};

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {"euclidean",         "riemannian_sphere", "riemannian_conformal",
                                                 "minkowski_quartic", "randers_osaka",     "randers_humo",
                                                 "randers_baoshen",   "mkropina_yang"};
  return names;
}

inline const std::vector<std::string>& predicate_names() {
  static const std::vector<std::string> names = {"riemannian", "berwald",      "weakly_berwald", "douglas",
                                                 "dbar",       "gdw",          "r_quadratic",    "pr_quadratic",
                                                 "s_flat",     "constant_flag"};
  return names;
}

namespace detail {

template <class R>
R norm_sq(std::span<const R> v) {
  R s(0.0);
  for (const auto& a : v) s = s + a * a;
  return s;
}

template <class R>
R dot(std::span<const R> a, std::span<const R> b) {
  R s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

inline double param(const Parameters& p, const std::string& k) { return p.at(k); }

inline Parameters merge_parameters(const std::string& entry, const Parameters& defaults, const Parameters& overrides) {
  Parameters out = defaults;
  for (const auto& [k, v] : overrides) {
    if (!defaults.count(k)) throw Error("catalog entry '" + entry + "' has no parameter '" + k + "'");
    out[k] = v;
  }
  return out;
}

inline std::vector<ExpectedVerdict> verdicts(std::initializer_list<std::pair<const char*, bool>> list,
                                             const std::string& note) {
  std::vector<ExpectedVerdict> v;
  for (const auto& [k, h] : list) v.push_back({k, h, note});
  return v;
}

inline std::vector<ExpectedVerdict> all_hold(const std::string& note, bool riemannian = true, bool flag = true) {
  std::vector<ExpectedVerdict> v;
  for (const auto& p : predicate_names()) {
    if (p == "riemannian" && !riemannian) {
      v.push_back({p, false, note});
      continue;
    }
    if (p == "constant_flag" && !flag) continue;
    v.push_back({p, true, note});
  }
  return v;
}

inline bool unbounded_chart(std::span<const double>) { return true; }

// a = (lambda I + W W^T) / lambda^2, b = s W / lambda with lambda = 1 - |W|^2:
// the Randers data of Zermelo navigation on Euclidean space with wind -sW.
template <class R>
void navigation_data(std::span<const R> W, double s, Matrix<R>& A, std::vector<R>& b) {
  const std::size_t n = W.size();
  const R lam = R(1.0) - norm_sq(W);
  const R lam2 = lam * lam;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) A[i][j] = ((i == j ? lam : R(0.0)) + W[i] * W[j]) / lam2;
    b[i] = s * W[i] / lam;
  }
}

}  // namespace detail

inline CatalogEntry get_example(const std::string& name, const Parameters& overrides = {},
                                std::optional<int> dimension = std::nullopt) {
  CatalogEntry e;
  e.name = name;
  MetricSpec& m = e.metric;
  m.name = name;
  m.chart_radius = std::numeric_limits<double>::infinity();
  m.chart_domain = detail::unbounded_chart;
  const bool fixed_dim = name == "randers_osaka" || name == "randers_humo" || name == "randers_baoshen" ||
                         name == "mkropina_yang";
  const int n = dimension.value_or(3);
  if (fixed_dim && n != 3) throw Error("catalog entry '" + name + "' is defined for n = 3 only");
  if (n < 2) throw Error("dimension must be at least 2");
  m.dimension = n;

  if (name == "euclidean") {
    m.family = "euclidean";
    m.parameters = detail::merge_parameters(name, {}, overrides);
    m.F = [](auto x, auto y) {
      using std::sqrt;
      (void)x;
      return sqrt(detail::norm_sq(y));
    };
    m.volume_density = [](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return R(1.0);
    };
    m.volume_density_text = "1";
    e.description = "F = |y|";
    e.expected = detail::all_hold("flat control: every tensor vanishes");
    e.expected_flag_curvature = 0.0;
  } else if (name == "riemannian_sphere") {
    m.family = "riemannian";
    m.parameters = detail::merge_parameters(name, {}, overrides);
    m.F = [](auto x, auto y) {
      using std::sqrt;
      return 2.0 * sqrt(detail::norm_sq(y)) / (1.0 + detail::norm_sq(x));
    };
    m.volume_density = [n](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return ipow(R(2.0) / (1.0 + detail::norm_sq(x)), n);
    };
    m.volume_density_text = "(2/(1+|x|^2))^n";
    e.description = "a_ij = 4 delta_ij / (1 + |x|^2)^2, round sphere of curvature 1";
    e.expected = detail::all_hold("Riemannian of constant curvature 1 (stereographic chart)");
    e.expected_flag_curvature = 1.0;
  } else if (name == "riemannian_conformal") {
    m.family = "riemannian";
    m.parameters = detail::merge_parameters(name, {}, overrides);
    m.F = [](auto x, auto y) {
      using std::exp;
      using std::sqrt;
      return exp(x[0]) * sqrt(detail::norm_sq(y));
    };
    m.volume_density = [n](auto x) {
      using std::exp;
      return exp(static_cast<double>(n) * x[0]);
    };
    m.volume_density_text = "exp(n x1)";
    e.description = "F = exp(x1) |y|";
    e.expected = detail::all_hold("Riemannian; curvature is not constant for n >= 3", true, n == 2);
    if (n >= 3) e.expected.push_back({"constant_flag", false, "warped product: radial planes flat, others -exp(-2 x1)"});
    e.expected_flag_curvature = n == 2 ? std::optional<double>(0.0) : std::nullopt;
  } else if (name == "minkowski_quartic") {
    m.family = "dsl";
    m.parameters = detail::merge_parameters(name, {{"eps", 0.5}}, overrides);
    const double eps = m.parameters.at("eps");
    if (!(eps > 0.0)) throw RegularityError("minkowski_quartic needs eps > 0 for strong convexity");
    m.F = [eps](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      (void)x;
      R q(0.0);
      for (const auto& v : y) q = q + ipow(v, 4);
      const R s = detail::norm_sq(y);
      return rpow(q + eps * s * s, 0.25);
    };
    m.volume_density = [](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return R(1.0);
    };
    m.volume_density_text = "1";
    e.description = "F = (sum y_i^4 + eps |y|^4)^(1/4), a locally Minkowski control";
    e.expected = detail::all_hold("x-independent non-quadratic norm: Berwald with R = 0, S = 0", false);
  } else if (name == "randers_osaka") {
    m.family = "randers";
    m.parameters = detail::merge_parameters(name, {}, overrides);
    m.chart_radius = 1.0;
    m.chart_domain = [](std::span<const double> x) { return detail::norm_sq(x) < 1.0; };
    m.F = [](auto x, auto y) {
      using std::sqrt;
      const auto q = 1.0 - x[0] * x[0] - x[1] * x[1];
      const auto w = -x[1] * y[0] + x[0] * y[1];
      return sqrt(w * w + detail::norm_sq(y) * q) / q + w / q;
    };
    m.randers_sigma = [](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return randers_density<R>(x, 3, [](auto xx, auto& A, auto& b) {
        const std::vector<R> W = {-xx[1], xx[0], R(0.0)};
        detail::navigation_data<R>(W, 1.0, A, b);
      });
    };
    e.description = "Randers metric on the unit ball, rotational wind";
    e.expected = detail::verdicts({{"riemannian", false},
                                   {"berwald", false},
                                   {"weakly_berwald", true},
                                   {"douglas", false},
                                   {"dbar", true},
                                   {"gdw", true},
                                   {"r_quadratic", true},
                                   {"pr_quadratic", true},
                                   {"s_flat", true},
                                   {"constant_flag", true}},
                                  "flag curvature 0 and S = 0 with beta not closed");
    e.recommended_volume = VolumeKind::bh_randers_closed;
    e.expected_flag_curvature = 0.0;
  } else if (name == "randers_humo") {
    m.family = "randers";
    m.parameters = detail::merge_parameters(name, {{"q12", 0.3}, {"q13", 0.0}, {"q23", 0.0}}, overrides);
    const double q12 = m.parameters.at("q12"), q13 = m.parameters.at("q13"), q23 = m.parameters.at("q23");
    // (xQ)_j = x_i q_ij with q antisymmetric
    auto wind = [q12, q13, q23](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return std::vector<R>{-q12 * x[1] - q13 * x[2], q12 * x[0] - q23 * x[2], q13 * x[0] + q23 * x[1]};
    };
    m.chart_radius = 1.0;
    m.chart_domain = [wind](std::span<const double> x) {
      const auto W = wind(x);
      return detail::norm_sq<double>(W) < 1.0;
    };
    m.F = [wind](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      using std::sqrt;
      const std::vector<R> W = wind(x);
      const R w2 = detail::norm_sq<R>(W);
      const R yw = detail::dot<R>(y, W);
      const R y2 = detail::norm_sq(y);
      const R q = 1.0 - w2;
      return sqrt(y2 - (w2 * y2 - yw * yw)) / q - yw / q;
    };
    m.randers_sigma = [wind](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return randers_density<R>(x, 3, [&wind](auto xx, auto& A, auto& b) {
        const std::vector<R> W = wind(xx);
        detail::navigation_data<R>(W, -1.0, A, b);
      });
    };
    e.description = "Randers metric near the origin built from an antisymmetric matrix Q";
    e.recommended_volume = VolumeKind::bh_randers_closed;
    e.expected_flag_curvature = 0.0;
    if (q12 == 0.0 && q13 == 0.0 && q23 == 0.0) {
      e.expected = detail::all_hold("Q = 0 reduces to the Euclidean metric");
    } else {
      e.expected = detail::verdicts({{"riemannian", false},
                                     {"berwald", false},
                                     {"weakly_berwald", true},
                                     {"douglas", false},
                                     {"dbar", true},
                                     {"gdw", true},
                                     {"r_quadratic", true},
                                     {"pr_quadratic", true},
                                     {"s_flat", true},
                                     {"constant_flag", true}},
                                    "R = 0, e_ij = 0 and S = 0 with beta not closed");
    }
  } else if (name == "randers_baoshen") {
    m.family = "randers";
    m.parameters = detail::merge_parameters(name, {{"lam", 1.44}, {"sign", 1.0}, {"c", 1.0}, {"c_conformal", 0.0}},
                                            overrides);
    const double lam = m.parameters.at("lam");
    const double sg = m.parameters.at("sign") < 0.0 ? -1.0 : 1.0;
    const double c0 = m.parameters.at("c");
    const bool conformal_c = m.parameters.at("c_conformal") != 0.0;
    if (!(lam > 1.0)) throw RegularityError("randers_baoshen needs lam > 1");
    const double k = sg * std::sqrt(lam - 1.0);
    // rows z1, z2, z3 with alpha^2 = (lam (z1.y)^2 + (z2.y)^2 + (z3.y)^2) / rho^4
    auto frame = [c0, conformal_c](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      const R rho2 = 1.0 + detail::norm_sq(x);
      const R c = conformal_c ? 0.25 * rho2 : R(c0);
      return std::array<std::array<R, 3>, 3>{std::array<R, 3>{c, -x[2], x[1]}, std::array<R, 3>{x[2], c, -x[0]},
                                            std::array<R, 3>{-x[1], x[0], c}};
    };
    m.F = [frame, lam, k](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      using std::sqrt;
      const auto z = frame(x);
      const R rho2 = 1.0 + detail::norm_sq(x);
      R p[3];
      for (int r = 0; r < 3; ++r) p[r] = z[r][0] * y[0] + z[r][1] * y[1] + z[r][2] * y[2];
      return sqrt(lam * p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / rho2 + k * p[0] / rho2;
    };
    m.randers_sigma = [frame, lam, k](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      return randers_density<R>(x, 3, [&](auto xx, auto& A, auto& b) {
        const auto z = frame(xx);
        const R rho2 = 1.0 + detail::norm_sq(xx);
        const R rho4 = rho2 * rho2;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j)
            A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                (lam * z[0][i] * z[0][j] + z[1][i] * z[1][j] + z[2][i] * z[2][j]) / rho4;
          b[static_cast<std::size_t>(i)] = k * z[0][i] / rho2;
        }
      });
    };
    e.description = "Bao-Shen Randers metric on S^3 (stereographic chart)";
    e.recommended_volume = VolumeKind::bh_randers_closed;
    if (!conformal_c && c0 == 1.0) {
      e.expected = detail::verdicts({{"riemannian", false},
                                     {"berwald", false},
                                     {"weakly_berwald", true},
                                     {"douglas", false},
                                     {"dbar", false},
                                     {"gdw", true},
                                     {"r_quadratic", false},
                                     {"pr_quadratic", false},
                                     {"s_flat", true},
                                     {"constant_flag", true}},
                                    "constant flag curvature and S = 0: GDW but neither Dbar nor PR-quadratic");
      // the navigation data of this chart give K = lam, not 1
      e.expected_flag_curvature = lam;
    }
  } else if (name == "mkropina_yang") {
    m.family = "alpha_beta_power";
    m.parameters = detail::merge_parameters(
        name,
        {{"m", 0.5}, {"t", 1.0}, {"lam", 1.0}, {"f1", 1.0}, {"f2", 0.0}, {"f3", 0.0}, {"eta_k", 0.0}, {"literal_beta", 0.0}},
        overrides);
    const Parameters& p = m.parameters;
    const double mm = p.at("m"), t = p.at("t"), lam = p.at("lam"), eta_k = p.at("eta_k");
    const std::array<double, 3> f = {p.at("f1"), p.at("f2"), p.at("f3")};
    const bool literal = p.at("literal_beta") != 0.0;
    if (mm == 0.0 || mm == 1.0) throw Error("mkropina_yang needs m different from 0 and 1");
    double f2 = 0.0;
    for (double v : f) f2 += v * v;
    if (t * std::sqrt(f2) == 0.0) throw Error("mkropina_yang needs t f != 0");
    if (lam * lam + t * f2 == 0.0) throw Error("mkropina_yang needs lam^2 + t |f|^2 != 0");
    // u^i = -2(lam + t<f,x>) x^i + t|x|^2 f^i + f^i
    auto field = [f, t, lam](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      const R fx = f[0] * x[0] + f[1] * x[1] + f[2] * x[2];
      const R x2 = detail::norm_sq(x);
      std::vector<R> u;
      for (int i = 0; i < 3; ++i) u.push_back(-2.0 * (lam + t * fx) * x[static_cast<std::size_t>(i)] + t * x2 * f[static_cast<std::size_t>(i)] + f[static_cast<std::size_t>(i)]);
      return u;
    };
    auto beta_tilde = [field, literal](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      const std::vector<R> u = field(x);
      const R u2 = detail::norm_sq<R>(u);
      return literal ? detail::dot<R>(x, y) / u2 : detail::dot<R>(u, y) / u2;
    };
    m.conic = true;
    m.chart_radius = 0.41;
    m.chart_domain = [field](std::span<const double> x) {
      return detail::norm_sq(x) < 0.41 * 0.41 && detail::norm_sq<double>(field(x)) > 1e-6;
    };
    m.cone_domain = [beta_tilde](std::span<const double> x, std::span<const double> y) {
      return beta_tilde(x, y) > 0.0;
    };
    m.F = [field, beta_tilde, mm, eta_k](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      using std::exp;
      using std::sqrt;
      const std::vector<R> u = field(x);
      const R alpha_t = sqrt(detail::norm_sq(y) / detail::norm_sq<R>(u));
      const R beta_t = beta_tilde(x, y);
      if (!(value_of(beta_t) > 0.0)) throw DomainError("m-Kropina metric evaluated outside beta > 0");
      if (eta_k == 0.0) return rpow(alpha_t, mm) * rpow(beta_t, 1.0 - mm);
      const R eta = exp(eta_k * x[0]);
      const R alpha = rpow(eta, -mm / (1.0 - mm)) * alpha_t;
      const R beta = eta * beta_t;
      return rpow(alpha, mm) * rpow(beta, 1.0 - mm);
    };
    m.volume_density = [field](auto x) {
      using R = std::remove_const_t<typename decltype(x)::value_type>;
      const std::vector<R> u = field(x);
      return rpow(detail::norm_sq<R>(u), -1.5);
    };
    m.volume_density_text = "|u|^-3";
    e.description = "m-Kropina metric alpha~^m beta~^(1-m) with beta~ parallel for alpha~";
    e.recommended_volume = VolumeKind::dsl;
    if (!literal && eta_k == 0.0) {
      e.expected = detail::verdicts({{"riemannian", false},
                                     {"berwald", true},
                                     {"weakly_berwald", true},
                                     {"douglas", true},
                                     {"dbar", true},
                                     {"gdw", true},
                                     {"r_quadratic", true},
                                     {"pr_quadratic", true},
                                     {"s_flat", true}},
                                    "beta~ parallel for alpha~: Berwald, hence Douglas");
    }
  } else {
    throw Error("unknown catalog entry '" + name + "'");
  }
  return e;
}

}  // namespace finslab
