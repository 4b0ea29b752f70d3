#pragma once

// Spray, connections and curvature tensors.
//
// Everything is computed from truncated Taylor expansions around the state:
// F^2 is expanded to total order 8 (x-order 2), and each derivative taken
// afterwards uses up one order.  That is exactly enough for the deepest
// quantity in use, the y-derivative of the projective Riemann tensor.
//
// Index storage follows the written order (see tensor.hpp):
//   G^i (i)   N^i_j (i,j)   Gamma^i_jk (i,j,k)   R^i_k (i,k)   R^i_kl (i,k,l)
//   R_j^i_kl, B_j^i_kl, D_j^i_kl (j,i,k,l)   E_jk (j,k)
// A horizontal derivative appends its index last.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/metrics.hpp"
#include "finslab/series.hpp"
#include "finslab/tensor.hpp"
#include "finslab/volume.hpp"

namespace finslab {

inline constexpr int kSeriesXOrder = 2;
inline constexpr int kSeriesOrder = 8;

// The state (x, y) as series variables.
struct Frame {
  int n = 0;
  std::vector<double> x0, y0;
  const SeriesLayout* layout = nullptr;
  const SeriesLayout* x_layout = nullptr;
  std::vector<Series> X, Y;   // base + dx_i, base + dy_i
  std::vector<Series> X_only;  // the same x variables in the x-only layout

  Frame(std::span<const double> x, std::span<const double> y, int total_order = kSeriesOrder)
      : n(static_cast<int>(x.size())), x0(x.begin(), x.end()), y0(y.begin(), y.end()) {
    if (y.size() != x.size()) throw Error("state x and y differ in dimension");
    layout = &SeriesLayout::get(n, n, kSeriesXOrder, total_order);
    x_layout = &SeriesLayout::get(n, 0, kSeriesXOrder, kSeriesXOrder);
    for (int i = 0; i < n; ++i) {
      X.push_back(Series::variable(*layout, i, x0[static_cast<std::size_t>(i)]));
      Y.push_back(Series::variable(*layout, n + i, y0[static_cast<std::size_t>(i)]));
      X_only.push_back(Series::variable(*x_layout, i, x0[static_cast<std::size_t>(i)]));
    }
  }

  int xv(int i) const noexcept { return i; }
  int yv(int i) const noexcept { return n + i; }
};

namespace detail {

inline double kronecker(int a, int b) { return a == b ? 1.0 : 0.0; }

// Gauss-Jordan inverse with value-part pivoting.
template <class R>
Matrix<R> invert(Matrix<R> a) {
  const std::size_t n = a.size();
  Matrix<R> inv(n, std::vector<R>(n, R(0.0)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = R(1.0);
  double norm = 0.0;
  for (const auto& row : a)
    for (const auto& v : row) norm = std::max(norm, std::fabs(value_of(v)));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::fabs(value_of(a[col][col]));
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(value_of(a[r][col])) > best) {
        best = std::fabs(value_of(a[r][col]));
        piv = r;
      }
    if (!(best > 1e-14 * norm))
      throw SingularMatrixError("matrix inverse: singular value matrix", best);
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const R rp = R(1.0) / a[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] = a[col][c] * rp;
      inv[col][c] = inv[col][c] * rp;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const R f = a[r][col];
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] = a[r][c] - f * a[col][c];
        inv[r][c] = inv[r][c] - f * inv[col][c];
      }
    }
  }
  return inv;
}

}  // namespace detail

// A spray given by its coefficients G^i as series at a state, with the
// tensors derived from a spray alone.
class SprayField {
 public:
  SprayField(std::shared_ptr<const Frame> frame, std::vector<Series> G)
      : frame_(std::move(frame)), G_(std::move(G)) {
    if (static_cast<int>(G_.size()) != frame_->n) throw Error("spray has the wrong number of components");
  }

  const Frame& frame() const noexcept { return *frame_; }
  std::shared_ptr<const Frame> frame_ptr() const noexcept { return frame_; }
  int dim() const noexcept { return frame_->n; }
  const std::vector<Series>& G() const noexcept { return G_; }

  const Tensor<Series>& N() {
    if (!N_) {
      const int n = dim();
      Tensor<Series> t(n, variance_of("ul"));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.at({i, j}) = G_[static_cast<std::size_t>(i)].d(frame_->yv(j));
      N_ = std::move(t);
    }
    return *N_;
  }

  const Tensor<Series>& Gamma() {
    if (!Gamma_) {
      const int n = dim();
      const auto& N_t = N();
      Tensor<Series> t(n, variance_of("ull"));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = j; k < n; ++k) {
            t.at({i, j, k}) = N_t.at({i, j}).d(frame_->yv(k));
            if (k != j) t.at({i, k, j}) = t.at({i, j, k});
          }
      Gamma_ = std::move(t);
    }
    return *Gamma_;
  }

  // R^i_k = 2 dG^i/dx^k - y^m d2G^i/dx^m dy^k + 2 G^m Gamma^i_mk - N^i_m N^m_k
  const Tensor<Series>& riemann() {
    if (!R_) {
      const int n = dim();
      const auto& N_t = N();
      const auto& Gm = Gamma();
      const Frame& f = *frame_;
      Tensor<Series> t(n, variance_of("ul"));
      for (int i = 0; i < n; ++i) {
        const Series& Gi = G_[static_cast<std::size_t>(i)];
        for (int k = 0; k < n; ++k) {
          Series acc = 2.0 * Gi.d(f.xv(k));
          const Series Nik = N_t.at({i, k});
          for (int m = 0; m < n; ++m) {
            acc -= f.Y[static_cast<std::size_t>(m)] * Nik.d(f.xv(m));
            acc += 2.0 * (G_[static_cast<std::size_t>(m)] * Gm.at({i, m, k}));
            acc -= N_t.at({i, m}) * N_t.at({m, k});
          }
          t.at({i, k}) = std::move(acc);
        }
      }
      R_ = std::move(t);
    }
    return *R_;
  }

  // R^i_kl = (R^i_k.l - R^i_l.k) / 3
  const Tensor<Series>& riemann_kl() {
    if (!Rkl_) {
      const int n = dim();
      const auto& R = riemann();
      Tensor<Series> t(n, variance_of("ull"));
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          for (int l = k + 1; l < n; ++l) {
            Series v = (R.at({i, k}).d(frame_->yv(l)) - R.at({i, l}).d(frame_->yv(k))) / 3.0;
            t.at({i, l, k}) = -v;
            t.at({i, k, l}) = std::move(v);
          }
      Rkl_ = std::move(t);
    }
    return *Rkl_;
  }

  // R_j^i_kl = R^i_kl.j
  const Tensor<Series>& riemann_full() {
    if (!Rfull_) {
      const int n = dim();
      const auto& Rk = riemann_kl();
      Tensor<Series> t(n, variance_of("lull"));
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) t.at({j, i, k, l}) = Rk.at({i, k, l}).d(frame_->yv(j));
      Rfull_ = std::move(t);
    }
    return *Rfull_;
  }

  const Tensor<Series>& berwald() {
    if (!B_) {
      const int n = dim();
      const auto& Gm = Gamma();
      Tensor<Series> t(n, variance_of("lull"));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = j; k < n; ++k)
            for (int l = k; l < n; ++l) {
              const Series v = Gm.at({i, j, k}).d(frame_->yv(l));
              for (auto [a, b, c] : permutations(j, k, l)) t.at({a, i, b, c}) = v;
            }
      B_ = std::move(t);
    }
    return *B_;
  }

  // E_jk = 1/2 B_j^m_km
  const Tensor<Series>& mean_berwald() {
    if (!E_) {
      const int n = dim();
      const auto& B = berwald();
      Tensor<Series> t(n, variance_of("ll"));
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Series acc(0.0);
          for (int m = 0; m < n; ++m) acc += B.at({j, m, k, m});
          t.at({j, k}) = 0.5 * acc;
        }
      E_ = std::move(t);
    }
    return *E_;
  }

  // D = B - 1/(n+1) d^3 (G^m.m y^i) / dy^j dy^k dy^l
  const Tensor<Series>& douglas() {
    if (!D_) {
      const int n = dim();
      const auto& B = berwald();
      const auto& N_t = N();
      const Frame& f = *frame_;
      Series trace(0.0);
      for (int m = 0; m < n; ++m) trace += N_t.at({m, m});
      Tensor<Series> t(n, variance_of("lull"));
      for (int i = 0; i < n; ++i) {
        const Series H = trace * f.Y[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
          const Series Hj = H.d(f.yv(j));
          for (int k = j; k < n; ++k) {
            const Series Hjk = Hj.d(f.yv(k));
            for (int l = k; l < n; ++l) {
              const Series v = B.at({j, i, k, l}) - Hjk.d(f.yv(l)) / static_cast<double>(n + 1);
              for (auto [a, b, c] : permutations(j, k, l)) t.at({a, i, b, c}) = v;
            }
          }
        }
      }
      D_ = std::move(t);
    }
    return *D_;
  }

  // B - 2/(n+1) {E_jk d^i_l + E_jl d^i_k + E_kl d^i_j + E_jk.l y^i}
  Tensor<Series> douglas_from_mean_berwald() {
    const int n = dim();
    const auto& B = berwald();
    const auto& E = mean_berwald();
    const Frame& f = *frame_;
    const double c = 2.0 / (n + 1);
    Tensor<Series> t(n, variance_of("lull"));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            Series brace = E.at({j, k}).d(f.yv(l)) * f.Y[static_cast<std::size_t>(i)];
            if (i == l) brace += E.at({j, k});
            if (i == k) brace += E.at({j, l});
            if (i == j) brace += E.at({k, l});
            t.at({j, i, k, l}) = B.at({j, i, k, l}) - c * brace;
          }
    return t;
  }

  // T_|m = dT/dx^m - N^r_m dT/dy^r + sum_upper T Gamma^i_rm - sum_lower T Gamma^r_jm
  Tensor<Series> horizontal(const Tensor<Series>& T) {
    const int n = dim();
    const auto& N_t = N();
    const auto& Gm = Gamma();
    const Frame& f = *frame_;
    std::vector<Variance> var = T.variance();
    var.push_back(Variance::lower);
    Tensor<Series> out(n, var);
    const int rank = T.rank();
    std::vector<std::vector<Series>> dy(T.size());
    for (std::size_t q = 0; q < T.size(); ++q)
      for (int r = 0; r < n; ++r) dy[q].push_back(T[q].d(f.yv(r)));
    for (std::size_t q = 0; q < T.size(); ++q) {
      const MultiIndex I = T.unflatten(q);
      for (int m = 0; m < n; ++m) {
        Series acc = T[q].d(f.xv(m));
        for (int r = 0; r < n; ++r) acc -= N_t.at({r, m}) * dy[q][static_cast<std::size_t>(r)];
        for (int s = 0; s < rank; ++s) {
          MultiIndex J = I;
          const int a = I[static_cast<std::size_t>(s)];
          for (int r = 0; r < n; ++r) {
            J[static_cast<std::size_t>(s)] = r;
            const Series& tv = T.at(J);
            if (T.variance()[static_cast<std::size_t>(s)] == Variance::upper)
              acc += tv * Gm.at({a, r, m});
            else
              acc -= tv * Gm.at({r, a, m});
          }
        }
        MultiIndex K = I;
        K[static_cast<std::size_t>(rank)] = m;
        out.at(K) = std::move(acc);
      }
    }
    return out;
  }

  // Horizontal derivative of a scalar contracted with y: f_|m y^m.
  Series horizontal_along_y(const Series& s) {
    const int n = dim();
    const auto& N_t = N();
    const Frame& f = *frame_;
    Series acc(0.0);
    for (int m = 0; m < n; ++m) {
      Series hm = s.d(f.xv(m));
      for (int r = 0; r < n; ++r) hm -= N_t.at({r, m}) * s.d(f.yv(r));
      acc += f.Y[static_cast<std::size_t>(m)] * hm;
    }
    return acc;
  }

  // Contraction of the last slot with y.
  Tensor<Series> contract_last_with_y(const Tensor<Series>& T) const {
    const int n = frame_->n;
    std::vector<Variance> var(T.variance().begin(), T.variance().end() - 1);
    Tensor<Series> out(n, var);
    for (std::size_t q = 0; q < out.size(); ++q) {
      MultiIndex I = out.unflatten(q);
      Series acc(0.0);
      for (int m = 0; m < n; ++m) {
        I[static_cast<std::size_t>(out.rank())] = m;
        acc += T.at(I) * frame_->Y[static_cast<std::size_t>(m)];
      }
      out[q] = std::move(acc);
    }
    return out;
  }

  // y-derivative appended as the last index.
  Tensor<Series> vertical(const Tensor<Series>& T) const {
    const int n = frame_->n;
    std::vector<Variance> var = T.variance();
    var.push_back(Variance::lower);
    Tensor<Series> out(n, var);
    for (std::size_t q = 0; q < T.size(); ++q) {
      MultiIndex K = T.unflatten(q);
      for (int m = 0; m < n; ++m) {
        K[static_cast<std::size_t>(T.rank())] = m;
        out.at(K) = T[q].d(frame_->yv(m));
      }
    }
    return out;
  }

 private:
  static std::vector<std::array<int, 3>> permutations(int a, int b, int c) {
    return {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
  }

  std::shared_ptr<const Frame> frame_;
  std::vector<Series> G_;
  std::optional<Tensor<Series>> N_, Gamma_, R_, Rkl_, Rfull_, B_, E_, D_;
};

struct GdwParts {
  TensorValue P;         // D_j^i_kl|m y^m  (j,i,k,l)
  TensorValue T;         // <P, y> / |y|^2  (j,k,l)
  TensorValue residual;  // h(P) = P - T y  (j,i,k,l)
};

// Geometry of a metric with a volume form at one state.  All quantities are
// evaluated lazily and cached for this state only.
class Geometry {
 public:
  Geometry(const MetricSpec& metric, const VolumeForm& volume, std::span<const double> x,
           std::span<const double> y)
      : metric_(metric), volume_(volume), frame_(std::make_shared<Frame>(x, y)) {
    if (static_cast<int>(x.size()) != metric.dimension) throw Error("state dimension does not match the metric");
    if (!metric.in_chart(x)) throw DomainError("state outside the chart domain: " + describe_state(x, y));
    if (!metric.in_cone(x, y)) throw DomainError("direction outside the admissible cone: " + describe_state(x, y));
  }

  const MetricSpec& metric() const noexcept { return metric_; }
  const VolumeForm& volume() const noexcept { return volume_; }
  const Frame& frame() const noexcept { return *frame_; }
  std::shared_ptr<const Frame> frame_ptr() const noexcept { return frame_; }
  int dim() const noexcept { return frame_->n; }
  std::span<const double> x() const noexcept { return frame_->x0; }
  std::span<const double> y() const noexcept { return frame_->y0; }

  // --- series level ------------------------------------------------------

  const Series& F2_series() {
    if (!F2_) {
      const Frame& f = *frame_;
      Series F = metric_.F.operator()<Series>(f.X, f.Y);
      if (!(F.value() > 0.0)) throw RegularityError("F is not positive at " + describe_state(x(), y()));
      F2_ = F * F;
    }
    return *F2_;
  }

  const Tensor<Series>& g_series() {
    if (!g_) {
      const int n = dim();
      const Series& F2 = F2_series();
      Tensor<Series> t(n, variance_of("ll"));
      for (int i = 0; i < n; ++i) {
        const Series Fi = F2.d(frame_->yv(i));
        for (int j = i; j < n; ++j) {
          t.at({i, j}) = 0.5 * Fi.d(frame_->yv(j));
          if (j != i) t.at({j, i}) = t.at({i, j});
        }
      }
      if (!detail::positive_definite(values(t)))
        throw RegularityError("fundamental tensor not positive definite at " + describe_state(x(), y()));
      g_ = std::move(t);
    }
    return *g_;
  }

  const Tensor<Series>& g_inverse_series() {
    if (!ginv_) {
      const int n = dim();
      const auto& g = g_series();
      Matrix<Series> a(static_cast<std::size_t>(n), std::vector<Series>(static_cast<std::size_t>(n)));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g.at({i, j});
      const auto inv = detail::invert(std::move(a));
      Tensor<Series> t(n, variance_of("uu"));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.at({i, j}) = inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      ginv_ = std::move(t);
    }
    return *ginv_;
  }

  // G^i = 1/4 g^il (d2F^2/dx^k dy^l y^k - dF^2/dx^l)
  SprayField& base() {
    if (!base_) {
      const int n = dim();
      const Frame& f = *frame_;
      const Series& F2 = F2_series();
      const auto& ginv = g_inverse_series();
      std::vector<Series> rhs;
      for (int l = 0; l < n; ++l) {
        const Series dl = F2.d(f.yv(l));
        Series acc = -F2.d(f.xv(l));
        for (int k = 0; k < n; ++k) acc += dl.d(f.xv(k)) * f.Y[static_cast<std::size_t>(k)];
        rhs.push_back(std::move(acc));
      }
      std::vector<Series> G;
      for (int i = 0; i < n; ++i) {
        Series acc(0.0);
        for (int l = 0; l < n; ++l) acc += ginv.at({i, l}) * rhs[static_cast<std::size_t>(l)];
        G.push_back(0.25 * acc);
      }
      base_.emplace(frame_, std::move(G));
    }
    return *base_;
  }

  const Series& log_sigma_series() {
    if (!log_sigma_) {
      Series s = volume_.sigma.operator()<Series>(frame_->X_only);
      if (!(s.value() > 0.0)) throw DomainError("volume density is not positive at " + describe_state(x(), y()));
      log_sigma_ = Series::embed_x_only(log(s), *frame_->layout);
    }
    return *log_sigma_;
  }

  // S = G^m.m - y^m d(ln sigma)/dx^m
  const Series& S_series() {
    if (!S_) {
      const int n = dim();
      const auto& N_t = base().N();
      const Series& ls = log_sigma_series();
      Series acc(0.0);
      for (int m = 0; m < n; ++m) {
        acc += N_t.at({m, m});
        acc -= frame_->Y[static_cast<std::size_t>(m)] * ls.d(frame_->xv(m));
      }
      S_ = std::move(acc);
    }
    return *S_;
  }

  // tau = ln(sqrt(det g) / sigma)
  const Series& tau_series() {
    if (!tau_) {
      const int n = dim();
      const auto& g = g_series();
      Matrix<Series> a(static_cast<std::size_t>(n), std::vector<Series>(static_cast<std::size_t>(n)));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g.at({i, j});
      tau_ = 0.5 * log(determinant(std::move(a))) - log_sigma_series();
    }
    return *tau_;
  }

  // G~^i = G^i - S y^i / (n+1)
  SprayField& projective() {
    if (!projective_) {
      const int n = dim();
      const Series& S = S_series();
      std::vector<Series> G;
      for (int i = 0; i < n; ++i)
        G.push_back(base().G()[static_cast<std::size_t>(i)] -
                    S * frame_->Y[static_cast<std::size_t>(i)] / static_cast<double>(n + 1));
      projective_.emplace(frame_, std::move(G));
    }
    return *projective_;
  }

  const Tensor<Series>& douglas_horizontal_series() {
    if (!Dh_) Dh_ = base().horizontal(base().douglas());
    return *Dh_;
  }

  // --- values ------------------------------------------------------------

  TensorValue tag(const Tensor<Series>& t) const { return TensorValue(values(t), frame_->x0, frame_->y0); }
  TensorValue tag(Tensor<double> t) const { return TensorValue(std::move(t), frame_->x0, frame_->y0); }

  double F() { return std::sqrt(F2_series().value()); }
  TensorValue fundamental() { return tag(g_series()); }
  TensorValue fundamental_inverse() { return tag(g_inverse_series()); }

  TensorValue cartan() {
    const int n = dim();
    const auto& g = g_series();
    Tensor<double> c(n, variance_of("lll"));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) c.at({i, j, k}) = 0.5 * g.at({i, j}).d(frame_->yv(k)).value();
    return tag(std::move(c));
  }

  TensorValue spray() {
    Tensor<double> t(dim(), variance_of("u"));
    for (int i = 0; i < dim(); ++i) t.at({i}) = base().G()[static_cast<std::size_t>(i)].value();
    return tag(std::move(t));
  }
  TensorValue nonlinear_connection() { return tag(base().N()); }
  TensorValue berwald_connection() { return tag(base().Gamma()); }
  TensorValue riemann() { return tag(base().riemann()); }
  TensorValue riemann_kl() { return tag(base().riemann_kl()); }
  TensorValue riemann_full() { return tag(base().riemann_full()); }
  TensorValue riemann_quadratic_residual() { return tag(base().vertical(base().riemann_full())); }
  TensorValue berwald() { return tag(base().berwald()); }
  TensorValue mean_berwald() { return tag(base().mean_berwald()); }

  // E_jk = 1/2 S.j.k
  TensorValue mean_berwald_from_s() {
    const int n = dim();
    Tensor<double> t(n, variance_of("ll"));
    for (int j = 0; j < n; ++j) {
      const Series Sj = S_series().d(frame_->yv(j));
      for (int k = 0; k < n; ++k) t.at({j, k}) = 0.5 * Sj.d(frame_->yv(k)).value();
    }
    return tag(std::move(t));
  }

  TensorValue douglas() { return tag(base().douglas()); }
  TensorValue douglas_from_mean_berwald() { return tag(base().douglas_from_mean_berwald()); }

  double s_curvature() { return S_series().value(); }
  double distortion() { return tau_series().value(); }
  double distortion_along_y() { return base().horizontal_along_y(tau_series()).value(); }
  double s_along_y() { return base().horizontal_along_y(S_series()).value(); }

  TensorValue douglas_horizontal() { return tag(douglas_horizontal_series()); }

  // Dbar_j^i_klm = D_j^i_kl|m - D_j^i_km|l
  TensorValue dbar() {
    const auto Dh = values(douglas_horizontal_series());
    const int n = dim();
    Tensor<double> t(n, variance_of("lulll"));
    for (std::size_t q = 0; q < t.size(); ++q) {
      const MultiIndex I = t.unflatten(q);
      MultiIndex J = I;
      std::swap(J[3], J[4]);
      t[q] = Dh.at(I) - Dh.at(J);
    }
    return tag(std::move(t));
  }

  GdwParts gdw() {
    const int n = dim();
    const auto Dh = values(douglas_horizontal_series());
    std::span<const double> yy = y();
    double yy2 = 0.0;
    for (double v : yy) yy2 += v * v;
    Tensor<double> P(n, variance_of("lull")), T(n, variance_of("lll")), h(n, variance_of("lull"));
    for (std::size_t q = 0; q < P.size(); ++q) {
      MultiIndex I = P.unflatten(q);
      double acc = 0.0;
      for (int m = 0; m < n; ++m) {
        I[4] = m;
        acc += Dh.at(I) * yy[static_cast<std::size_t>(m)];
      }
      P[q] = acc;
    }
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += P.at({j, i, k, l}) * yy[static_cast<std::size_t>(i)];
          T.at({j, k, l}) = acc / yy2;
        }
    for (std::size_t q = 0; q < P.size(); ++q) {
      const MultiIndex I = P.unflatten(q);
      h[q] = P[q] - T.at({I[0], I[2], I[3]}) * yy[static_cast<std::size_t>(I[1])];
    }
    return {tag(std::move(P)), tag(std::move(T)), tag(std::move(h))};
  }

  // Horizontal derivative of a user field given as a ring-generic scalar f(x, y).
  TensorValue horizontal_derivative(const StateFunction& field) {
    Tensor<Series> t(dim(), {});
    t[0] = field.operator()<Series>(frame_->X, frame_->Y);
    return tag(base().horizontal(t));
  }

  // Horizontal derivative of a ring-generic vector field V^i(x, y).
  TensorValue horizontal_derivative(const std::vector<StateFunction>& field) {
    if (static_cast<int>(field.size()) != dim()) throw Error("vector field has the wrong number of components");
    Tensor<Series> t(dim(), variance_of("u"));
    for (int i = 0; i < dim(); ++i) t.at({i}) = field[static_cast<std::size_t>(i)].operator()<Series>(frame_->X, frame_->Y);
    return tag(base().horizontal(t));
  }

  // scale = max(1, max|B|, max|D|)
  double scale() {
    if (!scale_) scale_ = std::max({1.0, max_abs(base().berwald()), max_abs(base().douglas())});
    return *scale_;
  }

 private:
  const MetricSpec& metric_;
  const VolumeForm& volume_;
  std::shared_ptr<const Frame> frame_;
  std::optional<Series> F2_, log_sigma_, S_, tau_;
  std::optional<Tensor<Series>> g_, ginv_, Dh_;
  std::optional<SprayField> base_, projective_;
  std::optional<double> scale_;
};

// Independent route for the spray: nested jets on F^2 only.
inline TensorValue spray_by_jets(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  const int n = m.dimension;
  auto f2 = [&m](auto xs_, auto ys_) { return metric_squared(m, xs_, ys_); };
  const TensorValue ginv = inverse_fundamental(m, x, y);
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  for (int l = 0; l < n; ++l) {
    const Slot dx[1] = {xs(l)};
    double acc = -mixed_partial(f2, x, y, dx);
    for (int k = 0; k < n; ++k) {
      const Slot dxy[2] = {xs(k), ys(l)};
      acc += mixed_partial(f2, x, y, dxy) * y[static_cast<std::size_t>(k)];
    }
    rhs[static_cast<std::size_t>(l)] = acc;
  }
  Tensor<double> G(n, variance_of("u"));
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int l = 0; l < n; ++l) acc += ginv.at({i, l}) * rhs[static_cast<std::size_t>(l)];
    G.at({i}) = 0.25 * acc;
  }
  return TensorValue(std::move(G), {x.begin(), x.end()}, {y.begin(), y.end()});
}

}  // namespace finslab
