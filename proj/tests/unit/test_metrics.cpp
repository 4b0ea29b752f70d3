#include "support.hpp"

using namespace finslab;
using support::Gen;

namespace {

MetricDefinition def_of(std::string family, int n, std::vector<std::string> a = {}, std::vector<std::string> b = {},
                        Parameters p = {}) {
  MetricDefinition d;
  d.family = std::move(family);
  d.dimension = n;
  d.a = std::move(a);
  d.b = std::move(b);
  d.parameters = std::move(p);
  return d;
}

double F_at(const MetricSpec& m, std::vector<double> x, std::vector<double> y) {
  return m(std::span<const double>(x), std::span<const double>(y));
}

Tensor<double> identity(int n) {
  Tensor<double> t(n, variance_of("ll"));
  for (int i = 0; i < n; ++i) t.at({i, i}) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("construct_metric small cases") {
  CHECK(F_at(construct_metric(def_of("euclidean", 2)), {0.1, 0.2}, {3, 4}) == 5.0);
  const auto randers = construct_metric(def_of("randers", 2, {"1", "0", "0", "1"}, {"0.5", "0"}));
  CHECK(F_at(randers, {0.1, 0.2}, {1, 0}) == 1.5);
  const auto kropina = construct_metric(def_of("alpha_beta_power", 2, {"1", "0", "0", "1"}, {"1", "0"}, {{"m", 0.5}}));
  CHECK(F_at(kropina, {0.0, 0.0}, {1, 0}) == Catch::Approx(1.0));
  CHECK(kropina.conic);
  const std::vector<double> x = {0.0, 0.0}, up = {1.0, 0.0}, down = {-1.0, 0.0};
  CHECK(kropina.in_cone(x, up));
  CHECK_FALSE(kropina.in_cone(x, down));
  CHECK(randers.in_cone(x, down));
}

TEST_CASE("construct_metric rejects bad input") {
  CHECK_THROWS_AS(construct_metric(def_of("riemannian", 2, {"1", "x1", "0", "1"})), Error);
  CHECK_THROWS_AS(construct_metric(def_of("randers", 2, {"1", "0", "0", "1"}, {"1.0", "0"})), RegularityError);
  CHECK_THROWS_AS(construct_metric(def_of("randers", 2, {"1", "0", "0", "1"}, {"0.2", "0", "0"})), Error);
  CHECK_THROWS_AS(construct_metric(def_of("alpha_beta_power", 2, {"1", "0", "0", "1"}, {"1", "0"}, {{"m", 1.0}})),
                  Error);
  CHECK_THROWS_AS(construct_metric(def_of("riemannian", 2, {"y1", "0", "0", "1"})), Error);
  CHECK_THROWS_AS(construct_metric(def_of("spline", 2)), Error);
  CHECK_THROWS_AS(construct_metric(def_of("euclidean", 1)), Error);
}

TEST_CASE("fundamental tensor of Euclidean and Riemannian metrics") {
  const auto e = construct_metric(def_of("euclidean", 3));
  const std::vector<double> x = {0.1, 0.2, 0.3}, y = {0.3, -1.2, 0.7};
  CHECK(max_abs_diff(fundamental_tensor(e, x, y), identity(3)) <= 1e-14);
  CHECK(max_abs_diff(inverse_fundamental(e, x, y), identity(3)) <= 1e-14);

  const auto r = construct_metric(def_of("riemannian", 2, {"1 + x1^2", "x1*x2", "x1*x2", "2 + x2^2"}));
  Gen g(41);
  for (int k = 0; k < 10; ++k) {
    const auto xs2 = g.vec(2, -0.5, 0.5), ys2 = g.unit(2);
    const auto gt = fundamental_tensor(r, xs2, ys2);
    CHECK(gt.at({0, 0}) == Catch::Approx(1 + xs2[0] * xs2[0]).epsilon(1e-13));
    CHECK(gt.at({0, 1}) == Catch::Approx(xs2[0] * xs2[1]).margin(1e-13));
    CHECK(gt.at({1, 1}) == Catch::Approx(2 + xs2[1] * xs2[1]).epsilon(1e-13));
    CHECK(max_abs(cartan_torsion(r, xs2, ys2)) <= 1e-12);
  }

  const auto d = construct_metric(def_of("riemannian", 2, {"4", "0", "0", "9"}));
  const std::vector<double> x2 = {0, 0}, y2 = {0.6, 0.8};
  const auto inv = inverse_fundamental(d, x2, y2);
  CHECK(inv.at({0, 0}) == Catch::Approx(0.25).epsilon(1e-14));
  CHECK(inv.at({1, 1}) == Catch::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(std::fabs(inv.at({0, 1})) <= 1e-15);
}

TEST_CASE("fundamental tensor of the Q-rotation Randers metric matches a difference Hessian") {
  const auto m = get_example("randers_humo").metric;
  const auto f = support::fd_of(m, true);
  for (const auto& s : sample_states(m, support::plan(5, 3)).states) {
    const auto g = fundamental_tensor(m, s.x, s.y);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Slot sl[2] = {ys(i), ys(j)};
        const double fd = 0.5 * support::fd_richardson(f, s.x, s.y, sl, 1e-3);
        CHECK(std::fabs(g.at({i, j}) - fd) <= 1e-6 * std::max(1.0, std::fabs(fd)));
      }
  }
}

TEST_CASE("Cartan torsion of the rotational Randers metric") {
  const auto m = get_example("randers_osaka").metric;
  const auto states = sample_states(m, support::plan(8, 7)).states;
  for (const auto& s : states) {
    const auto c = cartan_torsion(m, s.x, s.y);
    double worst_contract = 0.0, worst_sym = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
          acc += c.at({i, j, k}) * s.y[static_cast<std::size_t>(k)];
          worst_sym = std::max(worst_sym, std::fabs(c.at({i, j, k}) - c.at({k, i, j})));
          worst_sym = std::max(worst_sym, std::fabs(c.at({i, j, k}) - c.at({j, i, k})));
        }
        worst_contract = std::max(worst_contract, std::fabs(acc));
      }
    CHECK(worst_contract <= 1e-11);
    CHECK(worst_sym == 0.0);
  }

  const State& s = states.front();
  const auto c = cartan_torsion(m, s.x, s.y);
  CHECK(max_abs(c) > 1e-3);
  const auto f = support::fd_of(m, true);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int k = j; k < 3; ++k) {
        const Slot sl[3] = {ys(i), ys(j), ys(k)};
        const double fd = 0.25 * support::fd_richardson(f, s.x, s.y, sl, 1e-2);
        CHECK(std::fabs(c.at({i, j, k}) - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
      }
}

TEST_CASE("property: catalog metrics are homogeneous and strongly convex on samples") {
  for (const auto& name : catalog_names()) {
    const auto m = get_example(name).metric;
    for (const auto& s : sample_states(m, support::plan(10, 11)).states) {
      INFO(name << " " << describe_state(s.x, s.y));
      CHECK(homogeneity_defect(m, s.x, s.y) <= 1e-10);
      const auto g = fundamental_tensor(m, s.x, s.y);
      const auto inv = inverse_fundamental(m, s.x, s.y);
      double gyy = 0.0, worst = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          gyy += g.at({i, j}) * s.y[static_cast<std::size_t>(i)] * s.y[static_cast<std::size_t>(j)];
          double p = 0.0;
          for (int k = 0; k < 3; ++k) p += inv.at({i, k}) * g.at({k, j});
          worst = std::max(worst, std::fabs(p - (i == j ? 1.0 : 0.0)));
        }
      }
      const double F = m(std::span<const double>(s.x), std::span<const double>(s.y));
      CHECK(std::fabs(gyy - F * F) <= 1e-10 * F * F);
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("property: random Riemannian forms have vanishing Cartan torsion") {
  Gen g(42);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = g.uniform(1.0, 3.0), b = g.uniform(-0.4, 0.4), c = g.uniform(1.0, 3.0);
    auto num = [](double v) {
      std::ostringstream os;
      os.precision(17);
      os << "(" << v << ")";
      return os.str();
    };
    const std::string off = num(b) + "*x1";
    const auto m = construct_metric(def_of("riemannian", 2, {num(a) + " + x2^2", off, off, num(c)}));
    const auto x = g.vec(2, -0.5, 0.5), y = g.unit(2);
    CHECK(max_abs(cartan_torsion(m, x, y)) <= 1e-12);
  }
}

TEST_CASE("non-convex and non-homogeneous functions are caught") {
  MetricDefinition d = def_of("dsl", 2);
  d.F = "(y1^4 - y2^4 + 3*(y1^2 + y2^2)^2)^(1/4)";
  const auto ok = construct_metric(d);
  const std::vector<double> x = {0, 0}, y = {0.6, 0.8};
  CHECK_NOTHROW(fundamental_tensor(ok, x, y));
  // f + f'' < 0 near the diagonal for F = |y| (1 + 0.4 sin 2t)
  d.F = "sqrt(y1^2 + y2^2) + 0.8*y1*y2/sqrt(y1^2 + y2^2)";
  const auto bad = construct_metric(d);
  const std::vector<double> diag = {1.0, 1.0};
  CHECK_THROWS_AS(fundamental_tensor(bad, x, diag), RegularityError);
  d.F = "y1^2 + y2^2";
  const auto quad = construct_metric(d);
  CHECK(homogeneity_defect(quad, x, y) > 0.4);
}
