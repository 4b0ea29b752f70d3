#pragma once

// Projective spray, projective Ricci/Riemann curvature and the identity
// residuals that tie them to the Douglas tensor and the S-curvature.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "finslab/curvature.hpp"
#include "finslab/metrics.hpp"

namespace finslab {

struct ProjectiveState {
  TensorValue spray_tilde;  // G~^i
  double S = 0.0;
};

// G~^i = G^i - S y^i / (n+1)
inline ProjectiveState projective_spray(Geometry& geo) {
  ProjectiveState p;
  Tensor<double> t(geo.dim(), variance_of("u"));
  for (int i = 0; i < geo.dim(); ++i) t.at({i}) = geo.projective().G()[static_cast<std::size_t>(i)].value();
  p.spray_tilde = geo.tag(std::move(t));
  p.S = geo.s_curvature();
  return p;
}

struct ProjectiveRicci {
  double route_a = 0.0;  // trace of the Riemann curvature of G~
  double route_b = 0.0;  // Ric + (n-1){S_|0/(n+1) + (S/(n+1))^2}
};

inline ProjectiveRicci projective_ricci(Geometry& geo) {
  const int n = geo.dim();
  ProjectiveRicci r;
  const auto& PR = geo.projective().riemann();
  const auto& R = geo.base().riemann();
  double ric = 0.0;
  for (int m = 0; m < n; ++m) {
    r.route_a += PR.at({m, m}).value();
    ric += R.at({m, m}).value();
  }
  const double s = geo.s_curvature() / (n + 1);
  r.route_b = ric + (n - 1) * (geo.s_along_y() / (n + 1) + s * s);
  return r;
}

struct PrRiemann {
  TensorValue PR;        // PR^i_k
  TensorValue PR_full;   // PR_j^i_kl
  TensorValue residual;  // PR_j^i_kl.m  (j,i,k,l,m)
};

inline PrRiemann pr_riemann(Geometry& geo) {
  auto& P = geo.projective();
  return {geo.tag(P.riemann()), geo.tag(P.riemann_full()), geo.tag(P.vertical(P.riemann_full()))};
}

enum class IdentityKind : std::uint8_t { thm31, master, thm33, constflag, pricci, lemma21, ricci };

inline std::string to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::thm31: return "thm31";
    case IdentityKind::master: return "master";
    case IdentityKind::thm33: return "thm33";
    case IdentityKind::constflag: return "constflag";
    case IdentityKind::pricci: return "pricci";
    case IdentityKind::lemma21: return "lemma21";
    case IdentityKind::ricci: return "ricci";
  }
  return "?";
}

inline IdentityKind identity_kind_from_string(const std::string& s) {
  for (auto k : {IdentityKind::thm31, IdentityKind::master, IdentityKind::thm33, IdentityKind::constflag,
                 IdentityKind::pricci, IdentityKind::lemma21, IdentityKind::ricci})
    if (to_string(k) == s) return k;
  throw Error("unknown identity '" + s + "'");
}

struct IdentityOptions {
  double lambda = 1.0;  // constflag
  StateFunction P;      // lemma21
};

namespace detail {

// y_k = g_km y^m
inline std::vector<double> lowered_y(Geometry& geo) {
  const int n = geo.dim();
  const auto g = geo.fundamental();
  std::vector<double> yl(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) yl[static_cast<std::size_t>(k)] += g.at({k, m}) * geo.y()[static_cast<std::size_t>(m)];
  return yl;
}

// F^2 d^i_k - y_k y^i
inline Tensor<double> flag_model(Geometry& geo) {
  const int n = geo.dim();
  const auto yl = lowered_y(geo);
  const double F2 = geo.F2_series().value();
  Tensor<double> M(n, variance_of("ul"));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      M.at({i, k}) = (i == k ? F2 : 0.0) - yl[static_cast<std::size_t>(k)] * geo.y()[static_cast<std::size_t>(i)];
  return M;
}

// S.r, S.r.m as values
inline std::pair<std::vector<double>, Tensor<double>> s_vertical(Geometry& geo) {
  const int n = geo.dim();
  const Frame& f = geo.frame();
  std::vector<double> s1(static_cast<std::size_t>(n));
  Tensor<double> s2(n, variance_of("ll"));
  for (int r = 0; r < n; ++r) {
    const Series Sr = geo.S_series().d(f.yv(r));
    s1[static_cast<std::size_t>(r)] = Sr.value();
    for (int m = 0; m < n; ++m) s2.at({r, m}) = Sr.d(f.yv(m)).value();
  }
  return {s1, s2};
}

// Ricci-identity right-hand side X_j^i_ml.k stored at (j,i,k,l,m).
inline Tensor<double> ricci_rhs(SprayField& spray) {
  const auto Rv = values(spray.vertical(spray.riemann_full()));  // (j,i,a,b,c) = R_j^i_ab.c
  const int n = spray.dim();
  Tensor<double> t(n, variance_of("lulll"));
  for (std::size_t q = 0; q < t.size(); ++q) {
    const MultiIndex I = t.unflatten(q);  // j,i,k,l,m
    t[q] = Rv.at({I[0], I[1], I[4], I[3], I[2]});
  }
  return t;
}

// T_kl|m - T_km|l for a (j,i,k,l) tensor, stored at (j,i,k,l,m).
inline Tensor<double> antisymmetrized_horizontal(SprayField& spray, const Tensor<Series>& T) {
  const auto H = values(spray.horizontal(T));
  Tensor<double> t(spray.dim(), variance_of("lulll"));
  for (std::size_t q = 0; q < t.size(); ++q) {
    const MultiIndex I = t.unflatten(q);
    MultiIndex J = I;
    std::swap(J[3], J[4]);
    t[q] = H.at(I) - H.at(J);
  }
  return t;
}

}  // namespace detail

// Least-squares lambda in R^i_k = lambda (F^2 d^i_k - y_k y^i).
inline double fit_flag_curvature(Geometry& geo) {
  const auto M = detail::flag_model(geo);
  const auto R = geo.riemann();
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < M.size(); ++q) {
    num += R[q] * M[q];
    den += M[q] * M[q];
  }
  return den > 0.0 ? num / den : 0.0;
}

inline TensorValue identity_residual(IdentityKind kind, Geometry& geo, const IdentityOptions& opt = {}) {
  const int n = geo.dim();
  const double c = 1.0 / (n + 1);
  std::span<const double> y = geo.y();
  switch (kind) {
    case IdentityKind::thm31: {
      // D_j^i_kl|0 - 1/(n+1) S.r D_j^r_kl y^i
      const auto gdw = geo.gdw();
      const auto D = geo.douglas();
      const auto [s1, s2] = detail::s_vertical(geo);
      Tensor<double> t(n, variance_of("lull"));
      for (std::size_t q = 0; q < t.size(); ++q) {
        const MultiIndex I = t.unflatten(q);
        double sd = 0.0;
        for (int r = 0; r < n; ++r) sd += s1[static_cast<std::size_t>(r)] * D.at({I[0], r, I[2], I[3]});
        t[q] = gdw.P[q] - c * sd * y[static_cast<std::size_t>(I[1])];
      }
      return geo.tag(std::move(t));
    }
    case IdentityKind::master: {
      // PR_j^i_ml.k - [D_kl|m - D_km|l - 1/(n+1){S.r D_j^r_kl d^i_m - S.r D_j^r_km d^i_l
      //                + (S.r.m D_j^r_kl - S.r.l D_j^r_km) y^i}]
      const auto lhs = detail::ricci_rhs(geo.projective());
      const auto Dh = values(geo.douglas_horizontal_series());
      const auto D = geo.douglas();
      const auto [s1, s2] = detail::s_vertical(geo);
      Tensor<double> t(n, variance_of("lulll"));
      for (std::size_t q = 0; q < t.size(); ++q) {
        const MultiIndex I = t.unflatten(q);
        const int j = I[0], i = I[1], k = I[2], l = I[3], m = I[4];
        double a = 0.0, b = 0.0, am = 0.0, bl = 0.0;
        for (int r = 0; r < n; ++r) {
          const double Dkl = D.at({j, r, k, l}), Dkm = D.at({j, r, k, m});
          a += s1[static_cast<std::size_t>(r)] * Dkl;
          b += s1[static_cast<std::size_t>(r)] * Dkm;
          am += s2.at({r, m}) * Dkl;
          bl += s2.at({r, l}) * Dkm;
        }
        const double brace = a * detail::kronecker(i, m) - b * detail::kronecker(i, l) +
                             (am - bl) * y[static_cast<std::size_t>(i)];
        const double rhs = Dh.at({j, i, k, l, m}) - Dh.at({j, i, k, m, l}) - c * brace;
        t[q] = lhs[q] - rhs;
      }
      return geo.tag(std::move(t));
    }
    case IdentityKind::thm33: {
      // S.j.k|m - S.r D_j^r_km
      const Frame& f = geo.frame();
      Tensor<Series> Sjk(n, variance_of("ll"));
      for (int j = 0; j < n; ++j) {
        const Series Sj = geo.S_series().d(f.yv(j));
        for (int k = 0; k < n; ++k) Sjk.at({j, k}) = Sj.d(f.yv(k));
      }
      const auto H = values(geo.base().horizontal(Sjk));
      const auto D = geo.douglas();
      const auto [s1, s2] = detail::s_vertical(geo);
      Tensor<double> t(n, variance_of("lll"));
      for (std::size_t q = 0; q < t.size(); ++q) {
        const MultiIndex I = t.unflatten(q);
        double sd = 0.0;
        for (int r = 0; r < n; ++r) sd += s1[static_cast<std::size_t>(r)] * D.at({I[0], r, I[1], I[2]});
        t[q] = H[q] - sd;
      }
      return geo.tag(std::move(t));
    }
    case IdentityKind::constflag: {
      const auto M = detail::flag_model(geo);
      auto R = geo.riemann();
      for (std::size_t q = 0; q < R.size(); ++q) R[q] -= opt.lambda * M[q];
      return R;
    }
    case IdentityKind::pricci: {
      // PB_kl||m - PB_km||l - PR_j^i_ml.k, PB the Douglas tensor of G~
      auto& P = geo.projective();
      const auto lhs = detail::antisymmetrized_horizontal(P, P.douglas());
      const auto rhs = detail::ricci_rhs(P);
      return geo.tag(lhs - rhs);
    }
    case IdentityKind::ricci: {
      // B_kl|m - B_km|l - R_j^i_ml.k for the spray of F
      auto& B = geo.base();
      const auto lhs = detail::antisymmetrized_horizontal(B, B.berwald());
      const auto rhs = detail::ricci_rhs(B);
      return geo.tag(lhs - rhs);
    }
    case IdentityKind::lemma21: {
      // R^_k - [R^i_k + E d^i_k + tau_k y^i] for G^ = G + P y
      if (!opt.P) throw Error("lemma21 needs a projective factor P");
      const Frame& f = geo.frame();
      const double defect = homogeneity_defect(
          [&opt](std::span<const double> a, std::span<const double> b) { return opt.P.operator()<double>(a, b); },
          geo.x(), geo.y());
      if (defect > 1e-10) throw DomainError("projective factor P is not positively 1-homogeneous in y");
      auto& base = geo.base();
      const Series P = opt.P.operator()<Series>(f.X, f.Y);
      std::vector<Series> Ghat;
      for (int i = 0; i < n; ++i)
        Ghat.push_back(base.G()[static_cast<std::size_t>(i)] + P * f.Y[static_cast<std::size_t>(i)]);
      SprayField hat(geo.frame_ptr(), std::move(Ghat));
      const auto& N_t = base.N();
      std::vector<Series> Ph;  // P_|m
      for (int m = 0; m < n; ++m) {
        Series acc = P.d(f.xv(m));
        for (int r = 0; r < n; ++r) acc -= N_t.at({r, m}) * P.d(f.yv(r));
        Ph.push_back(std::move(acc));
      }
      Series E = P * P;
      for (int m = 0; m < n; ++m) E -= Ph[static_cast<std::size_t>(m)] * f.Y[static_cast<std::size_t>(m)];
      const auto Rhat = values(hat.riemann());
      const auto R = geo.riemann();
      Tensor<double> t(n, variance_of("ul"));
      for (int k = 0; k < n; ++k) {
        const double tau_k =
            3.0 * (Ph[static_cast<std::size_t>(k)].value() - P.value() * P.d(f.yv(k)).value()) +
            E.d(f.yv(k)).value();
        for (int i = 0; i < n; ++i)
          t.at({i, k}) = Rhat.at({i, k}) -
                         (R.at({i, k}) + E.value() * detail::kronecker(i, k) + tau_k * y[static_cast<std::size_t>(i)]);
      }
      return geo.tag(std::move(t));
    }
  }
  throw Error("unknown identity kind");
}

}  // namespace finslab
