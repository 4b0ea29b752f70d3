#include "support.hpp"

using namespace finslab;
using support::Gen;

namespace {

MetricSpec randers2(std::string b1, std::string b2) {
  MetricDefinition d;
  d.family = "randers";
  d.dimension = 2;
  d.a = {"1", "0", "0", "1"};
  d.b = {std::move(b1), std::move(b2)};
  return construct_metric(d);
}

MetricSpec riemannian(int n, std::vector<std::string> a) {
  MetricDefinition d;
  d.family = "riemannian";
  d.dimension = n;
  d.a = std::move(a);
  return construct_metric(d);
}

}  // namespace

TEST_CASE("Busemann-Hausdorff quadrature on quadratic metrics") {
  MetricDefinition e;
  e.family = "euclidean";
  for (int n : {2, 3}) {
    e.dimension = n;
    const auto m = construct_metric(e);
    const std::vector<double> x(static_cast<std::size_t>(n), 0.1);
    CHECK(std::fabs(bh_sigma_quadrature(m, x) - 1.0) <= 1e-12);
  }
  const std::vector<double> x2 = {0.0, 0.0};
  CHECK(std::fabs(bh_sigma_quadrature(riemannian(2, {"4", "0", "0", "9"}), x2) - 6.0) <= 1e-8 * 6.0);
  const auto r3 = riemannian(3, {"2", "0.5", "0", "0.5", "3", "0.2", "0", "0.2", "1.5"});
  const double det = 2 * (3 * 1.5 - 0.04) - 0.5 * (0.5 * 1.5);
  const std::vector<double> x3 = {0.1, 0.2, 0.3};
  CHECK(std::fabs(bh_sigma_quadrature(r3, x3) - std::sqrt(det)) <= 1e-8 * std::sqrt(det));
}

TEST_CASE("closed-form Randers density") {
  const std::vector<double> x = {0.3, -0.2};
  CHECK(bh_randers_closed(randers2("0", "0"), x) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(bh_randers_closed(randers2("0.5", "0"), x) == Catch::Approx(std::pow(0.75, 1.5)).epsilon(1e-14));
  MetricDefinition d;
  d.family = "randers";
  d.dimension = 2;
  d.a = {"4", "0", "0", "9"};
  d.b = {"0", "0"};
  CHECK(bh_randers_closed(construct_metric(d), x) == Catch::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS_AS(bh_randers_closed(riemannian(2, {"1", "0", "0", "1"}), x), Error);
  const auto wide = randers2("2*x1", "0");
  const std::vector<double> far = {0.6, 0.0};
  CHECK_THROWS_AS(bh_randers_closed(wide, far), DomainError);
}

TEST_CASE("closed form agrees with quadrature on the catalog Randers metrics") {
  const auto osaka = get_example("randers_osaka").metric;
  const std::vector<double> x = {0.1, 0.2, 0.0};
  CHECK(support::rel_err(bh_sigma_quadrature(osaka, x), bh_randers_closed(osaka, x)) <= 1e-6);

  // |xQ| = 0.3 for Q = q12 e12: x = (1, 0, 0)
  const auto humo = get_example("randers_humo").metric;
  const std::vector<double> xq = {1.0, 0.0, 0.0};
  CHECK(support::rel_err(bh_sigma_quadrature(humo, xq), bh_randers_closed(humo, xq)) <= 1e-6);
}

TEST_CASE("property: closed form agrees with quadrature on random Randers data") {
  Gen g(51);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = g.integer(2, 3);
    MetricDefinition d;
    d.family = "randers";
    d.dimension = n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d.a.push_back(i == j ? "1 + 0.3*x" + std::to_string(i + 1) + "^2" : "0.1");
    for (int i = 0; i < n; ++i) {
      std::ostringstream os;
      os.precision(17);
      os << g.uniform(-0.35, 0.35) << " + 0.2*x" << (i + 1);
      d.b.push_back(os.str());
    }
    const auto m = construct_metric(d);
    const auto x = g.vec(n, -0.4, 0.4);
    INFO("n=" << n << " trial " << trial);
    CHECK(support::rel_err(bh_sigma_quadrature(m, x), bh_randers_closed(m, x)) <= 1e-6);
  }
}

TEST_CASE("densities of x-independent metrics have zero gradient") {
  const auto quartic = get_example("minkowski_quartic").metric;
  const auto v = bh_quadrature_volume(quartic);
  const std::vector<double> x = {0.2, -0.1, 0.3};
  for (int i = 0; i < 3; ++i) {
    const Slot s[1] = {xs(i)};
    auto f = [&v](auto xx, auto) { return v.operator()<std::remove_const_t<typename decltype(xx)::value_type>>(xx); };
    CHECK(std::fabs(mixed_partial(f, x, x, s)) <= 1e-10);
  }
  const auto c = constant_volume(2.5);
  CHECK(c.operator()<double>(x) == 2.5);
}

TEST_CASE("volume construction errors") {
  const auto kropina = get_example("mkropina_yang").metric;
  CHECK_THROWS_AS(bh_quadrature_volume(kropina), DomainError);
  const std::vector<double> x = {0.1, 0.1, 0.1};
  CHECK_THROWS_AS(bh_sigma_quadrature(kropina, x), DomainError);
  CHECK_NOTHROW(make_volume(VolumeKind::dsl, kropina));
  CHECK_THROWS_AS(make_volume(VolumeKind::dsl, get_example("randers_osaka").metric), Error);
  CHECK_THROWS_AS(make_volume(VolumeKind::bh_randers_closed, get_example("minkowski_quartic").metric), Error);
  CHECK_THROWS_AS(constant_volume(0.0), DomainError);
  CHECK_THROWS_AS(volume_kind_from_string("holmes-thompson"), Error);
  CHECK(volume_kind_from_string("bh-randers") == VolumeKind::bh_randers_closed);
  MetricDefinition d;
  d.family = "euclidean";
  d.dimension = 4;
  CHECK_THROWS_AS(bh_quadrature_volume(construct_metric(d)), Error);
  const auto neg = dsl_volume("x1", 2);
  const std::vector<double> xn = {-0.5, 0.0};
  CHECK_THROWS_AS(neg.operator()<double>(xn), DomainError);
}
