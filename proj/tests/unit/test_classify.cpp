#include "support.hpp"

using namespace finslab;

namespace {

bool same_states(const std::vector<State>& a, const std::vector<State>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
  return true;
}

PredicateResult verdict(const std::string& name, Verdict v) {
  PredicateResult p;
  p.name = name;
  p.verdict = v;
  return p;
}

}  // namespace

TEST_CASE("sampling is deterministic") {
  const auto m = get_example("randers_osaka").metric;
  const auto a = sample_states(m, support::plan(12, 7));
  const auto b = sample_states(m, support::plan(12, 7));
  CHECK(same_states(a.states, b.states));
  CHECK(a.draws == b.draws);
  const auto c = sample_states(m, support::plan(12, 8));
  CHECK_FALSE(same_states(a.states, c.states));
  // a longer run extends a shorter one
  const auto longer = sample_states(m, support::plan(20, 7));
  CHECK(same_states(a.states, std::vector<State>(longer.states.begin(), longer.states.begin() + 12)));
}

TEST_CASE("sampling Euclidean space") {
  const auto m = get_example("euclidean").metric;
  const auto s = sample_states(m, support::plan(5, 42));
  CHECK(s.states.size() == 5);
  CHECK(s.rejected() == 0);
  CHECK(s.draws == 5);
  for (const auto& st : s.states) {
    double nx = 0.0, ny = 0.0;
    for (double v : st.x) nx += v * v;
    for (double v : st.y) ny += v * v;
    CHECK(std::sqrt(nx) <= 0.4);
    CHECK(std::fabs(std::sqrt(ny) - 1.0) <= 1e-15);
  }
  SamplePlan sphere = support::plan(5, 42);
  sphere.y_mode = YMode::unit_sphere;
  const auto osaka = get_example("randers_osaka").metric;
  for (const auto& st : sample_states(osaka, sphere).states) {
    double ny = 0.0;
    for (double v : st.y) ny += v * v;
    CHECK(std::fabs(ny - 1.0) <= 1e-14);
  }
  for (const auto& st : sample_states(osaka, support::plan(5, 42)).states)
    CHECK(std::fabs(osaka(std::span<const double>(st.x), std::span<const double>(st.y)) - 1.0) <= 1e-14);
}

TEST_CASE("conic metrics are sampled inside the cone") {
  const auto m = get_example("mkropina_yang").metric;
  const auto s = sample_states(m, support::plan(20, 3));
  CHECK(s.states.size() == 20);
  CHECK(s.rejections.count("cone domain"));
  for (const auto& st : s.states) {
    CHECK(m.in_cone(st.x, st.y));
    CHECK(condition_number(fundamental_tensor(m, st.x, st.y)) <= 20.0);
  }
}

TEST_CASE("sampling failures") {
  auto m = get_example("euclidean").metric;
  SamplePlan wide = support::plan(5);
  CHECK_THROWS_AS(sample_states(get_example("randers_osaka").metric, [] {
                    SamplePlan p;
                    p.x_radius = 1.2;
                    return p;
                  }()),
                  SamplingError);
  wide.count = 0;
  CHECK_THROWS_AS(sample_states(m, wide), Error);
  m.cone_domain = [](std::span<const double>, std::span<const double> y) { return y[0] > 0.98; };
  try {
    sample_states(m, support::plan(5));
    FAIL("expected a sampling failure");
  } catch (const SamplingError& e) {
    CHECK(std::string(e.what()).find("cone domain") != std::string::npos);
  }
}

TEST_CASE("condition number") {
  Tensor<double> g(2, variance_of("ll"));
  g.at({0, 0}) = 4.0;
  g.at({1, 1}) = 1.0;
  CHECK(condition_number(g) == Catch::Approx(4.0));
}

TEST_CASE("report structure") {
  const auto e = get_example("randers_humo");
  const auto rep = classify_entry(e, support::plan(6, 5));
  CHECK(rep.predicates.size() == predicate_names().size());
  CHECK(rep.identities.size() == identity_check_names().size());
  CHECK(rep.states.size() == 6);
  CHECK(rep.sampling.requested == 6);
  CHECK(rep.volume == "bh-randers");
  for (const auto& p : rep.predicates) {
    INFO(p.name);
    CHECK(p.tolerance > 0.0);
    CHECK(p.scale >= 1.0);
    CHECK(p.worst_state);
    CHECK(p.verdict == (p.max_residual <= p.tolerance ? Verdict::holds : Verdict::fails));
  }
  CHECK_THROWS_AS(rep.predicate("nonsense"), Error);
  CHECK_THROWS_AS(rep.identity("nonsense"), Error);
  CHECK(to_string(Verdict::indeterminate) == "indeterminate");
}

TEST_CASE("a state that fails to evaluate makes verdicts indeterminate") {
  const auto m = get_example("euclidean").metric;
  const auto v = dsl_volume("x1 + 0.2", 3);  // negative on part of the sampling ball
  const auto rep = classify_metric(m, v, support::plan(20, 9), {}, {{"s_flat", true, "test"}});
  bool any_error = false;
  for (const auto& r : rep.states) any_error = any_error || !r.error.empty();
  REQUIRE(any_error);
  CHECK(rep.predicate("s_flat").verdict == Verdict::indeterminate);
  CHECK_FALSE(rep.expectations_met());
}

TEST_CASE("hierarchy check") {
  std::vector<PredicateResult> ok = {verdict("berwald", Verdict::fails), verdict("douglas", Verdict::fails),
                                     verdict("dbar", Verdict::holds),    verdict("gdw", Verdict::holds),
                                     verdict("pr_quadratic", Verdict::holds)};
  CHECK(hierarchy_violations(ok).empty());
  auto bad = ok;
  bad[3].verdict = Verdict::fails;
  const auto v = hierarchy_violations(bad);
  CHECK(v.size() == 2);
  CHECK(std::find(v.begin(), v.end(), "dbar holds but gdw fails") != v.end());
  CHECK(std::find(v.begin(), v.end(), "pr_quadratic holds but gdw fails") != v.end());
  bad = ok;
  bad[0].verdict = Verdict::holds;
  CHECK(hierarchy_violations(bad) == std::vector<std::string>{"berwald holds but douglas fails"});
}

TEST_CASE("property: refinement never turns a comfortable pass into a failure") {
  for (const auto& name : catalog_names()) {
    const auto e = get_example(name);
    const auto coarse = classify_entry(e, support::plan(8));
    const auto fine = classify_entry(e, support::plan(24));
    for (const auto& p : fine.predicates) {
      const auto& q = coarse.predicate(p.name);
      INFO(name << " " << p.name);
      CHECK(q.max_residual <= p.max_residual);
      if (p.max_residual <= 0.5 * p.tolerance) {
        CHECK(q.verdict == Verdict::holds);
        CHECK(p.verdict == Verdict::holds);
      }
    }
  }
}

TEST_CASE("identity verification reports") {
  const auto e = get_example("randers_humo");
  const auto v = make_volume(e.recommended_volume, e.metric);
  const auto rep = verify_identity(e.metric, v, IdentityKind::master, {}, support::plan(5));
  CHECK(rep.rows.size() == 5);
  CHECK(rep.all_pass());
  CHECK(rep.max_residual() <= 1e-6 * 10.0);
  for (const auto& r : rep.rows) CHECK(r.max_residual <= r.tolerance);

  const auto bs = get_example("randers_baoshen");
  const auto vb = make_volume(bs.recommended_volume, bs.metric);
  IdentityOptions one;
  one.lambda = 1.0;
  CHECK_FALSE(verify_identity(bs.metric, vb, IdentityKind::constflag, one, support::plan(3)).all_pass());
  one.lambda = 1.44;
  CHECK(verify_identity(bs.metric, vb, IdentityKind::constflag, one, support::plan(3)).all_pass());
}
