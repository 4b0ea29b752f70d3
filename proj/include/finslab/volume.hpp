#pragma once

// Volume forms dV = sigma(x) dx.

#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/expr.hpp"
#include "finslab/metrics.hpp"
#include "finslab/ring.hpp"

namespace finslab {

enum class VolumeKind : std::uint8_t { constant, bh_quadrature, bh_randers_closed, dsl };

inline std::string to_string(VolumeKind k) {
  switch (k) {
    case VolumeKind::constant: return "constant";
    case VolumeKind::bh_quadrature: return "bh-quadrature";
    case VolumeKind::bh_randers_closed: return "bh-randers";
    case VolumeKind::dsl: return "dsl";
  }
  return "?";
}

inline VolumeKind volume_kind_from_string(const std::string& s) {
  if (s == "constant") return VolumeKind::constant;
  if (s == "bh-quadrature" || s == "bh_quadrature") return VolumeKind::bh_quadrature;
  if (s == "bh-randers" || s == "bh_randers_closed") return VolumeKind::bh_randers_closed;
  if (s == "dsl") return VolumeKind::dsl;
  throw Error("unknown volume form '" + s + "'");
}

struct VolumeForm {
  VolumeKind kind = VolumeKind::constant;
  PointFunction sigma;
  std::string description;

  template <class R>
  R operator()(std::span<const R> x) const {
    return sigma.operator()<R>(x);
  }
};

// Unit directions and weights for integrals over S^{n-1}.
struct SphereRule {
  int n = 0;
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;
};

inline constexpr int kCircleNodes = 256;
inline constexpr int kPolarNodes = 48;
inline constexpr int kAzimuthNodes = 96;

// n = 2: trapezoid on the circle.  n = 3: Gauss-Legendre in cos(polar angle)
// times trapezoid in the azimuth.
inline std::shared_ptr<const SphereRule> sphere_rule(int n) {
  const double pi = boost::math::constants::pi<double>();
  auto rule = std::make_shared<SphereRule>();
  rule->n = n;
  if (n == 2) {
    for (int k = 0; k < kCircleNodes; ++k) {
      const double t = 2.0 * pi * k / kCircleNodes;
      rule->nodes.push_back({std::cos(t), std::sin(t)});
      rule->weights.push_back(2.0 * pi / kCircleNodes);
    }
  } else if (n == 3) {
    std::vector<double> z, w;
    for (double r : boost::math::legendre_p_zeros<double>(kPolarNodes)) {
      const double d = boost::math::legendre_p_prime<double>(kPolarNodes, r);
      const double wt = 2.0 / ((1.0 - r * r) * d * d);
      z.push_back(r);
      w.push_back(wt);
      if (r != 0.0) {
        z.push_back(-r);
        w.push_back(wt);
      }
    }
    for (std::size_t p = 0; p < z.size(); ++p) {
      const double s = std::sqrt(1.0 - z[p] * z[p]);
      for (int k = 0; k < kAzimuthNodes; ++k) {
        const double t = 2.0 * pi * k / kAzimuthNodes;
        rule->nodes.push_back({s * std::cos(t), s * std::sin(t), z[p]});
        rule->weights.push_back(w[p] * 2.0 * pi / kAzimuthNodes);
      }
    }
  } else {
    throw Error("Busemann-Hausdorff quadrature is implemented for n = 2 and n = 3 only");
  }
  return rule;
}

inline double unit_ball_volume(int n) {
  return std::pow(boost::math::constants::pi<double>(), 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// sigma(x) = Vol(B^n) / ((1/n) * integral over S^{n-1} of F(x, theta)^{-n}).
template <class R>
R bh_sigma_quadrature(const MetricSpec& m, const SphereRule& rule, std::span<const R> x) {
  if (m.conic) throw DomainError("Busemann-Hausdorff quadrature needs F on every direction; supply a density for conic metrics");
  const int n = m.dimension;
  R acc(0.0);
  std::vector<R> theta(static_cast<std::size_t>(n), R(0.0));
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    for (int i = 0; i < n; ++i) theta[static_cast<std::size_t>(i)] = R(rule.nodes[k][static_cast<std::size_t>(i)]);
    R f = m.F.operator()<R>(x, theta);
    if (!(value_of(f) > 0.0)) throw DomainError("F is not positive on a quadrature direction");
    acc = acc + rule.weights[k] * ipow(R(1.0) / f, n);
  }
  return unit_ball_volume(n) * n / acc;
}

inline double bh_sigma_quadrature(const MetricSpec& m, std::span<const double> x) {
  return bh_sigma_quadrature<double>(m, *sphere_rule(m.dimension), x);
}

inline double bh_randers_closed(const MetricSpec& m, std::span<const double> x) {
  if (!m.randers_sigma) throw Error("metric '" + m.name + "' is not of Randers type");
  return m.randers_sigma.operator()<double>(x);
}

inline VolumeForm constant_volume(double c = 1.0) {
  if (!(c > 0.0)) throw DomainError("constant density must be positive");
  VolumeForm v;
  v.kind = VolumeKind::constant;
  v.sigma = [c](auto x) {
    using R = std::remove_const_t<typename decltype(x)::value_type>;
    return R(c);
  };
  v.description = "constant";
  return v;
}

inline VolumeForm bh_quadrature_volume(const MetricSpec& m) {
  if (m.conic) throw DomainError("Busemann-Hausdorff quadrature is not available for conic metric '" + m.name + "'");
  auto rule = sphere_rule(m.dimension);
  VolumeForm v;
  v.kind = VolumeKind::bh_quadrature;
  v.sigma = [m, rule](auto x) {
    using R = std::remove_const_t<typename decltype(x)::value_type>;
    return bh_sigma_quadrature<R>(m, *rule, x);
  };
  v.description = "bh-quadrature";
  return v;
}

inline VolumeForm bh_randers_volume(const MetricSpec& m) {
  if (!m.randers_sigma) throw Error("bh-randers volume requested for non-Randers metric '" + m.name + "'");
  VolumeForm v;
  v.kind = VolumeKind::bh_randers_closed;
  v.sigma = m.randers_sigma;
  v.description = "bh-randers";
  return v;
}

inline VolumeForm dsl_volume(const std::string& source, int n, const Parameters& params = {}) {
  std::set<std::string> names;
  for (const auto& [k, val] : params) names.insert(k);
  Expr e = parse(source, n, names);
  VolumeForm v;
  v.kind = VolumeKind::dsl;
  v.sigma = [e, params](auto x) {
    using R = std::remove_const_t<typename decltype(x)::value_type>;
    R s = evaluate<R>(e, x, {}, params);
    if (!(value_of(s) > 0.0)) throw DomainError("volume density is not positive");
    return s;
  };
  v.description = "dsl: " + source;
  return v;
}

inline VolumeForm density_volume(PointFunction sigma, std::string description) {
  VolumeForm v;
  v.kind = VolumeKind::dsl;
  v.sigma = std::move(sigma);
  v.description = std::move(description);
  return v;
}

inline VolumeForm make_volume(VolumeKind kind, const MetricSpec& m) {
  switch (kind) {
    case VolumeKind::constant: return constant_volume();
    case VolumeKind::bh_quadrature: return bh_quadrature_volume(m);
    case VolumeKind::bh_randers_closed: return bh_randers_volume(m);
    case VolumeKind::dsl:
      if (!m.volume_density) throw Error("metric '" + m.name + "' carries no volume density");
      return density_volume(m.volume_density, "dsl: " + m.volume_density_text);
  }
  throw Error("unknown volume kind");
}

}  // namespace finslab
