#pragma once

// Sampling plans, tolerance policy and metric classification.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "finslab/catalog.hpp"
#include "finslab/curvature.hpp"
#include "finslab/projective.hpp"
#include "finslab/volume.hpp"

namespace finslab {

inline constexpr const char* kVersion = "0.1.0";

enum class YMode : std::uint8_t { unit_sphere, unit_F };

struct SamplePlan {
  int count = 20;
  std::uint64_t seed = 20250405;
  double x_radius = 0.4;
  YMode y_mode = YMode::unit_F;
  // States with cond(g) above this are rejected: residuals of fifth-order
  // quantities grow roughly like eps * cond^6 near the convexity boundary.
  double max_condition = 20.0;
};

struct Tolerances {
  double rel = 1e-6;
  double abs = 1e-9;
  double quadrature_rel = 1e-5;  // residuals that go through a quadrature density
  double flag_constancy = 1e-4;
};

struct State {
  std::vector<double> x, y;
};

struct SampleSet {
  std::vector<State> states;
  int draws = 0;
  std::map<std::string, int> rejections;  // reason -> count

  int rejected() const {
    int r = 0;
    for (const auto& [k, v] : rejections) r += v;
    return r;
  }
};

// Portable draws from mt19937_64: the library distributions are not
// specified bit-for-bit across standard libraries.
class StateRng {
 public:
  explicit StateRng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

inline double condition_number(const Tensor<double>& g) {
  const int n = g.dim();
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = g.at({i, j});
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 0.0)) return std::numeric_limits<double>::infinity();
  return ev(n - 1) / ev(0);
}

inline SampleSet sample_states(const MetricSpec& metric, const SamplePlan& plan) {
  if (plan.count < 1) throw Error("sample count must be positive");
  if (!(plan.x_radius >= 0.0)) throw Error("x radius must be non-negative");
  if (plan.x_radius >= metric.chart_radius)
    throw SamplingError("x radius " + std::to_string(plan.x_radius) + " reaches outside the chart of '" +
                        metric.name + "' (radius " + std::to_string(metric.chart_radius) + ")");
  const int n = metric.dimension;
  StateRng rng(plan.seed);
  SampleSet out;
  const int max_draws = std::max(200, 100 * plan.count);
  auto give_up = [&](const std::string& why) {
    std::string reasons;
    for (const auto& [k, v] : out.rejections) reasons += (reasons.empty() ? "" : ", ") + k + ": " + std::to_string(v);
    throw SamplingError("sampling failed for '" + metric.name + "' (" + why + "; rejections " + reasons + ")");
  };
  while (static_cast<int>(out.states.size()) < plan.count) {
    if (out.draws >= max_draws) give_up("draw budget exhausted");
    if (out.draws >= 50 && out.rejected() > 0.9 * out.draws) give_up("more than 90% of draws rejected");
    ++out.draws;
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    double nx = 0.0;
    for (double& v : x) {
      v = rng.normal();
      nx += v * v;
    }
    const double r = plan.x_radius * std::pow(rng.uniform(), 1.0 / n);
    nx = std::sqrt(nx);
    for (double& v : x) v = nx > 0.0 ? v / nx * r : 0.0;
    double ny = 0.0;
    for (double& v : y) {
      v = rng.normal();
      ny += v * v;
    }
    ny = std::sqrt(ny);
    if (!(ny > 0.0)) {
      ++out.rejections["degenerate direction"];
      continue;
    }
    for (double& v : y) v /= ny;
    if (!metric.in_chart(x)) {
      ++out.rejections["chart domain"];
      continue;
    }
    if (!metric.in_cone(x, y)) {
      ++out.rejections["cone domain"];
      continue;
    }
    try {
      const double f = metric(std::span<const double>(x), std::span<const double>(y));
      if (!(f > 0.0) || !std::isfinite(f)) {
        ++out.rejections["F not positive"];
        continue;
      }
      if (plan.y_mode == YMode::unit_F)
        for (double& v : y) v /= f;
      if (condition_number(fundamental_tensor(metric, x, y)) > plan.max_condition) {
        ++out.rejections["ill-conditioned g"];
        continue;
      }
    } catch (const RegularityError&) {
      ++out.rejections["strong convexity"];
      continue;
    } catch (const DomainError&) {
      ++out.rejections["evaluation domain"];
      continue;
    }
    out.states.push_back({std::move(x), std::move(y)});
  }
  return out;
}

enum class Verdict : std::uint8_t { holds, fails, indeterminate };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

// Residuals of one sampled state.
struct StateRecord {
  State state;
  double scale = 1.0;
  std::map<std::string, double> residual;  // predicate or identity name -> max |residual|
  std::map<std::string, double> tolerance;
  double lambda_hat = 0.0;
  std::string error;

  bool holds(const std::string& key) const {
    return residual.at(key) <= tolerance.at(key);
  }
};

struct PredicateResult {
  std::string name;
  Verdict verdict = Verdict::indeterminate;
  double max_residual = 0.0;
  double scale = 1.0;
  double tolerance = 0.0;
  std::optional<State> worst_state;
  std::optional<bool> expected;
  std::string expected_note;
  std::optional<double> lambda_hat;
};

struct SamplingInfo {
  int requested = 0;
  int accepted = 0;
  int draws = 0;
  std::map<std::string, int> rejections;
};

struct ClassificationReport {
  std::string metric_name;
  std::string volume;
  SamplePlan plan;
  Tolerances tolerances;
  std::vector<PredicateResult> predicates;
  std::vector<PredicateResult> identities;
  std::vector<std::string> hierarchy_violations;
  SamplingInfo sampling;
  std::vector<StateRecord> states;

  const PredicateResult& predicate(const std::string& name) const {
    for (const auto& p : predicates)
      if (p.name == name) return p;
    throw Error("no predicate named '" + name + "'");
  }
  const PredicateResult& identity(const std::string& name) const {
    for (const auto& p : identities)
      if (p.name == name) return p;
    throw Error("no identity named '" + name + "'");
  }

  // True when every expected verdict is met (indeterminate never matches).
  bool expectations_met() const {
    auto met = [](const PredicateResult& p) {
      return !p.expected || (p.verdict != Verdict::indeterminate && (p.verdict == Verdict::holds) == *p.expected);
    };
    return std::all_of(predicates.begin(), predicates.end(), met) &&
           std::all_of(identities.begin(), identities.end(), met);
  }
};

inline const std::vector<std::string>& identity_check_names() {
  static const std::vector<std::string> names = {"master", "thm31", "pricci", "ricci",
                                                 "douglas_two_forms", "mean_berwald_two_routes", "distortion"};
  return names;
}

namespace detail {

inline bool volume_coupled(const std::string& key) {
  return key == "s_flat" || key == "pr_quadratic" || key == "master" || key == "thm31" || key == "pricci" ||
         key == "mean_berwald_two_routes" || key == "distortion";
}

inline StateRecord evaluate_state(const MetricSpec& metric, const VolumeForm& volume, const State& s,
                                  const Tolerances& tol) {
  StateRecord rec;
  rec.state = s;
  try {
    Geometry geo(metric, volume, s.x, s.y);
    const double scale = geo.scale();
    rec.scale = scale;
    const bool quad = volume.kind == VolumeKind::bh_quadrature;
    auto put = [&](const std::string& key, double residual, double rel, double abs_tol) {
      rec.residual[key] = residual;
      rec.tolerance[key] = abs_tol + rel * scale;
    };
    auto standard = [&](const std::string& key, double residual) {
      const double rel = quad && volume_coupled(key) ? tol.quadrature_rel : tol.rel;
      put(key, residual, rel, tol.abs);
    };
    standard("riemannian", max_abs(geo.cartan()));
    standard("berwald", max_abs(geo.base().berwald()));
    standard("weakly_berwald", max_abs(geo.base().mean_berwald()));
    standard("douglas", max_abs(geo.base().douglas()));
    standard("dbar", max_abs(geo.dbar()));
    standard("gdw", max_abs(geo.gdw().residual));
    standard("r_quadratic", max_abs(geo.riemann_quadratic_residual()));
    standard("pr_quadratic", max_abs(pr_riemann(geo).residual));
    standard("s_flat", std::fabs(geo.s_curvature()));
    rec.lambda_hat = fit_flag_curvature(geo);
    standard("constant_flag", max_abs(identity_residual(IdentityKind::constflag, geo, {rec.lambda_hat, {}})));

    standard("master", max_abs(identity_residual(IdentityKind::master, geo)));
    standard("thm31", max_abs(identity_residual(IdentityKind::thm31, geo)));
    standard("pricci", max_abs(identity_residual(IdentityKind::pricci, geo)));
    standard("ricci", max_abs(identity_residual(IdentityKind::ricci, geo)));
    put("douglas_two_forms", max_abs_diff(geo.douglas(), geo.douglas_from_mean_berwald()), 1e-9, 0.0);
    put("mean_berwald_two_routes", max_abs_diff(geo.mean_berwald(), geo.mean_berwald_from_s()),
        quad ? tol.quadrature_rel : 1e-8, 0.0);
    const double S = geo.s_curvature();
    rec.residual["distortion"] = std::fabs(geo.distortion_along_y() - S);
    rec.tolerance["distortion"] = (quad ? tol.quadrature_rel : 1e-7) * std::max(1.0, std::fabs(S));
  } catch (const std::exception& ex) {
    rec.error = ex.what();
  }
  return rec;
}

inline PredicateResult aggregate(const std::string& name, const std::vector<StateRecord>& records) {
  PredicateResult r;
  r.name = name;
  bool errored = false, failed = false;
  double worst_ratio = -1.0;
  for (const auto& rec : records) {
    if (!rec.error.empty() || !rec.residual.count(name)) {
      errored = true;
      continue;
    }
    const double res = rec.residual.at(name);
    const double t = rec.tolerance.at(name);
    r.max_residual = std::max(r.max_residual, res);
    if (!(res <= t)) failed = true;
    const double ratio = t > 0.0 ? res / t : res;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      r.scale = rec.scale;
      r.tolerance = t;
      r.worst_state = rec.state;
    }
  }
  r.verdict = errored ? Verdict::indeterminate : failed ? Verdict::fails : Verdict::holds;
  return r;
}

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline std::vector<StateRecord> evaluate_states(const MetricSpec& metric, const VolumeForm& volume,
                                                const std::vector<State>& states, const Tolerances& tol) {
  std::vector<StateRecord> records(states.size());
  detail::parallel_for(states.size(), [&](std::size_t i) {
    records[i] = detail::evaluate_state(metric, volume, states[i], tol);
  });
  return records;
}

inline std::vector<std::string> hierarchy_violations(const std::vector<PredicateResult>& preds) {
  auto find = [&](const std::string& n) -> Verdict {
    for (const auto& p : preds)
      if (p.name == n) return p.verdict;
    return Verdict::indeterminate;
  };
  std::vector<std::string> out;
  const std::pair<const char*, const char*> chain[] = {{"berwald", "douglas"},     {"douglas", "dbar"},
                                                       {"dbar", "gdw"},            {"douglas", "pr_quadratic"},
                                                       {"pr_quadratic", "gdw"}};
  for (const auto& [a, b] : chain)
    if (find(a) == Verdict::holds && find(b) == Verdict::fails)
      out.push_back(std::string(a) + " holds but " + b + " fails");
  return out;
}

inline ClassificationReport classify_metric(const MetricSpec& metric, const VolumeForm& volume,
                                            const SamplePlan& plan = {}, const Tolerances& tol = {},
                                            const std::vector<ExpectedVerdict>& expected = {}) {
  ClassificationReport rep;
  rep.metric_name = metric.name;
  rep.volume = volume.description;
  rep.plan = plan;
  rep.tolerances = tol;
  const SampleSet samples = sample_states(metric, plan);
  rep.sampling = {plan.count, static_cast<int>(samples.states.size()), samples.draws, samples.rejections};
  rep.states = evaluate_states(metric, volume, samples.states, tol);

  for (const auto& name : predicate_names()) {
    PredicateResult r = detail::aggregate(name, rep.states);
    if (name == "constant_flag" && r.verdict != Verdict::indeterminate) {
      double lo = rep.states.front().lambda_hat, hi = lo, sum = 0.0;
      for (const auto& s : rep.states) {
        lo = std::min(lo, s.lambda_hat);
        hi = std::max(hi, s.lambda_hat);
        sum += s.lambda_hat;
      }
      const double mean = sum / static_cast<double>(rep.states.size());
      r.lambda_hat = mean;
      if (hi - lo > tol.flag_constancy * std::max(1.0, std::fabs(mean))) r.verdict = Verdict::fails;
    }
    for (const auto& e : expected)
      if (e.predicate == name) {
        r.expected = e.holds;
        r.expected_note = e.note;
      }
    rep.predicates.push_back(std::move(r));
  }
  for (const auto& name : identity_check_names()) {
    PredicateResult r = detail::aggregate(name, rep.states);
    // master, pricci, ricci and the cross-checks must vanish for every metric
    if (name != "thm31") r.expected = true;
    rep.identities.push_back(std::move(r));
  }
  rep.hierarchy_violations = hierarchy_violations(rep.predicates);
  return rep;
}

inline ClassificationReport classify_entry(const CatalogEntry& entry, const SamplePlan& plan = {},
                                           const Tolerances& tol = {},
                                           std::optional<VolumeKind> volume = std::nullopt) {
  const VolumeForm v = make_volume(volume.value_or(entry.recommended_volume), entry.metric);
  return classify_metric(entry.metric, v, plan, tol, entry.expected);
}

// Residual statistics of one identity over a sample.
struct IdentityReport {
  std::string identity;
  std::string metric_name;
  std::string volume;
  SamplePlan plan;
  Tolerances tolerances;
  IdentityOptions options;
  struct Row {
    State state;
    double max_residual = 0.0;
    double scale = 1.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string error;
  };
  std::vector<Row> rows;
  SamplingInfo sampling;

  bool all_pass() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.pass; });
  }
  double max_residual() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.max_residual);
    return m;
  }
};

inline IdentityReport verify_identity(const MetricSpec& metric, const VolumeForm& volume, IdentityKind kind,
                                      const IdentityOptions& opt = {}, const SamplePlan& plan = {},
                                      const Tolerances& tol = {}) {
  IdentityReport rep;
  rep.identity = to_string(kind);
  rep.metric_name = metric.name;
  rep.volume = volume.description;
  rep.plan = plan;
  rep.tolerances = tol;
  rep.options = opt;
  const SampleSet samples = sample_states(metric, plan);
  rep.sampling = {plan.count, static_cast<int>(samples.states.size()), samples.draws, samples.rejections};
  rep.rows.resize(samples.states.size());
  const bool quad = volume.kind == VolumeKind::bh_quadrature;
  const bool coupled = kind == IdentityKind::thm31 || kind == IdentityKind::master || kind == IdentityKind::thm33 ||
                       kind == IdentityKind::pricci;
  detail::parallel_for(samples.states.size(), [&](std::size_t i) {
    auto& row = rep.rows[i];
    row.state = samples.states[i];
    try {
      Geometry geo(metric, volume, row.state.x, row.state.y);
      row.scale = geo.scale();
      row.max_residual = max_abs(identity_residual(kind, geo, opt));
      row.tolerance = tol.abs + ((quad && coupled) ? tol.quadrature_rel : tol.rel) * row.scale;
      row.pass = row.max_residual <= row.tolerance;
    } catch (const std::exception& ex) {
      row.error = ex.what();
      row.pass = false;
    }
  });
  return rep;
}

}  // namespace finslab
