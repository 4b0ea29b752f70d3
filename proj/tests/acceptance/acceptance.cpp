// Acceptance run: one PASS/FAIL line per criterion.  Exit status is 0 when the
// failing criteria are exactly the ones named with --known-failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "finslab/finslab.hpp"

using namespace finslab;

namespace {

constexpr double kRel = 1e-6;
constexpr double kAbs = 1e-9;
constexpr double kFloor = 1e3;  // "above floor" means at least 1000 x tolerance

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Probe {
  CatalogEntry entry;
  VolumeForm volume;
  std::vector<State> states;
  explicit Probe(CatalogEntry e, std::optional<VolumeKind> kind = {})
      : entry(std::move(e)),
        volume(make_volume(kind.value_or(entry.recommended_volume), entry.metric)),
        states(sample_states(entry.metric, SamplePlan{}).states) {}
};

double tol(double scale) { return kAbs + kRel * scale; }

// Running maximum of residual / tolerance, with the worst raw residual kept for the report.
struct Ratio {
  double worst = 0.0;
  double raw = 0.0;
  void add(double residual, double tolerance) {
    if (residual / tolerance > worst) {
      worst = residual / tolerance;
      raw = residual;
    }
  }
  bool below() const { return worst <= 1.0; }
  bool above_floor() const { return worst >= kFloor; }
};

Outcome criterion1() {
  Probe p(get_example("randers_osaka"), VolumeKind::bh_randers_closed);
  Ratio R, S, Db, D;
  for (const auto& s : p.states) {
    Geometry geo(p.entry.metric, p.volume, s.x, s.y);
    const double t = tol(geo.scale());
    R.add(max_abs(geo.riemann()), t);
    S.add(std::fabs(geo.s_curvature()), t);
    Db.add(max_abs(geo.dbar()), t);
    D.add(max_abs(geo.douglas()), t);
  }
  return {R.below() && S.below() && Db.below() && D.above_floor(),
          "R " + num(R.raw) + ", S " + num(S.raw) + ", Dbar " + num(Db.raw) + ", max|D|/tol " + num(D.worst)};
}

Outcome criterion2() {
  Probe p(get_example("randers_humo"));
  Ratio R, E, S, P, B, D;
  for (const auto& s : p.states) {
    Geometry geo(p.entry.metric, p.volume, s.x, s.y);
    const double t = tol(geo.scale());
    R.add(max_abs(geo.riemann()), t);
    E.add(max_abs(geo.mean_berwald()), t);
    S.add(std::fabs(geo.s_curvature()), t);
    P.add(max_abs(geo.gdw().P), t);
    B.add(max_abs(geo.berwald()), t);
    D.add(max_abs(geo.douglas()), t);
  }
  return {R.below() && E.below() && S.below() && P.below() && B.above_floor() && D.above_floor(),
          "R " + num(R.raw) + ", E " + num(E.raw) + ", S " + num(S.raw) + ", D|0 " + num(P.raw) + ", max|B|/tol " +
              num(B.worst) + ", max|D|/tol " + num(D.worst)};
}

Outcome criterion3() {
  std::ostringstream detail;
  bool any = false;
  for (const auto& [label, params] : std::vector<std::pair<std::string, Parameters>>{
           {"c=1", {}}, {"c=(1+|x|^2)/4", {{"c_conformal", 1.0}}}}) {
    Probe p(get_example("randers_baoshen", params));
    Ratio S, G, T, P, T31, flag;
    std::vector<double> lambdas;
    for (const auto& s : p.states) {
      Geometry geo(p.entry.metric, p.volume, s.x, s.y);
      const double sc = geo.scale();
      const double t = tol(sc);
      S.add(std::fabs(geo.s_curvature()), t);
      const auto parts = geo.gdw();
      G.add(max_abs(parts.residual), t);
      const auto C = geo.cartan();
      double dt = 0.0;
      for (std::size_t q = 0; q < C.size(); ++q) dt = std::max(dt, std::fabs(parts.T[q] - 2.0 * C[q]));
      T.add(dt, 1e-5 * sc);
      P.add(max_abs(parts.P), t);
      T31.add(max_abs(identity_residual(IdentityKind::thm31, geo)), t);
      const double lh = fit_flag_curvature(geo);
      lambdas.push_back(lh);
      flag.add(max_abs(identity_residual(IdentityKind::constflag, geo, {lh, {}})), t);
    }
    double mean = 0.0;
    for (double v : lambdas) mean += v;
    mean /= static_cast<double>(lambdas.size());
    double spread = 0.0;
    for (double v : lambdas) spread = std::max(spread, std::fabs(v - mean));
    const bool constant = flag.below() && spread <= 1e-4 * std::max(1.0, std::fabs(mean));
    const bool ok = S.below() && constant && std::fabs(mean - 1.0) <= 1e-3 && G.below() && T.below() &&
                    P.above_floor() && T31.above_floor();
    any = any || ok;
    detail << label << ": S " << num(S.raw) << ", lambda_hat " << num(mean) << (constant ? " (constant)" : " (varies)")
           << ", GDW " << num(G.raw) << ", |T-2C| " << num(T.raw) << ", D|0/tol " << num(P.worst)
           << ", THM31/tol " << num(T31.worst) << (ok ? " ok" : " no") << "; ";
  }
  return {any, detail.str()};
}

Outcome criterion4() {
  Probe p(get_example("mkropina_yang"));
  Ratio D;
  bool cone = true;
  for (const auto& s : p.states) {
    cone = cone && p.entry.metric.in_cone(s.x, s.y);
    Geometry geo(p.entry.metric, p.volume, s.x, s.y);
    D.add(max_abs(geo.douglas()), tol(geo.scale()));
  }
  return {D.below() && cone && p.states.size() == 20,
          std::to_string(p.states.size()) + " admissible states, max|D| " + num(D.raw)};
}

std::vector<ClassificationReport>& catalog_reports() {
  static std::vector<ClassificationReport> reps = [] {
    std::vector<ClassificationReport> r;
    for (const auto& name : catalog_names()) r.push_back(classify_entry(get_example(name)));
    return r;
  }();
  return reps;
}

bool all_evaluated(const ClassificationReport& rep, std::string& why) {
  for (const auto& s : rep.states)
    if (!s.error.empty()) {
      why = rep.metric_name + ": " + s.error;
      return false;
    }
  return rep.states.size() == 20;
}

Outcome criterion5() {
  std::ostringstream d;
  bool ok = true;
  for (const auto& rep : catalog_reports()) {
    std::string why;
    if (!all_evaluated(rep, why)) return {false, why};
    Ratio m;
    for (const auto& s : rep.states) m.add(s.residual.at("master"), s.tolerance.at("master"));
    ok = ok && m.below();
    d << rep.metric_name << " " << num(m.raw) << "; ";
  }
  return {ok, d.str()};
}

Outcome criterion6() {
  int disagreements = 0, compared = 0;
  for (const auto& rep : catalog_reports()) {
    std::string why;
    if (!all_evaluated(rep, why)) return {false, why};
    for (const auto& s : rep.states) {
      ++compared;
      if (s.holds("pr_quadratic") != s.holds("thm31")) ++disagreements;
    }
  }
  return {disagreements == 0,
          std::to_string(disagreements) + " disagreements over " + std::to_string(compared) + " states"};
}

Outcome criterion7() {
  Ratio d2, e2, dist;
  for (const auto& rep : catalog_reports()) {
    std::string why;
    if (!all_evaluated(rep, why)) return {false, why};
    for (const auto& s : rep.states) {
      d2.add(s.residual.at("douglas_two_forms"), s.tolerance.at("douglas_two_forms"));
      e2.add(s.residual.at("mean_berwald_two_routes"), s.tolerance.at("mean_berwald_two_routes"));
      dist.add(s.residual.at("distortion"), s.tolerance.at("distortion"));
    }
  }
  return {d2.below() && e2.below() && dist.below(), "D vs D2 " + num(d2.raw) + ", E two routes " + num(e2.raw) +
                                                        ", S vs tau|0 " + num(dist.raw)};
}

using Fd = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

double fd_nested(const Fd& f, std::vector<double> x, std::vector<double> y, std::span<const Slot> slots, double h) {
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

// Two Romberg levels on central differences: truncation error O(h^6).
double fd_romberg(const Fd& f, const std::vector<double>& x, const std::vector<double>& y,
                  std::span<const Slot> slots, double h) {
  const double d0 = fd_nested(f, x, y, slots, h);
  const double d1 = fd_nested(f, x, y, slots, 0.5 * h);
  const double d2 = fd_nested(f, x, y, slots, 0.25 * h);
  const double r0 = (4.0 * d1 - d0) / 3.0;
  const double r1 = (4.0 * d2 - d1) / 3.0;
  return (16.0 * r1 - r0) / 15.0;
}

// Step selection: estimates on a halving ladder of steps; keep the coarser member
// of the adjacent pair that agrees best (truncation error falls and rounding error
// grows as the step shrinks).  Rungs whose stencil leaves the domain are skipped.
double fd_ladder(const Fd& f, const std::vector<double>& x, const std::vector<double>& y, std::span<const Slot> slots,
                 double h0, int rungs) {
  std::vector<double> est;
  for (int k = 0; k < rungs; ++k) try {
      est.push_back(fd_romberg(f, x, y, slots, h0 / std::pow(2.0, k)));
    } catch (const Error&) {
      est.clear();
    }
  if (est.size() < 2) throw Error("finite differences: no usable step");
  std::size_t best = 0;
  for (std::size_t k = 1; k + 1 < est.size(); ++k)
    if (std::fabs(est[k] - est[k + 1]) < std::fabs(est[best] - est[best + 1])) best = k;
  return est[best];
}

Outcome criterion8() {
  StateRng rng(8);
  double worst = 0.0;
  std::string where;
  int checked = 0;
  for (const auto& name : catalog_names()) {
    const auto e = get_example(name);
    SamplePlan plan;
    plan.count = 10;
    plan.seed = 808;
    const auto states = sample_states(e.metric, plan).states;
    const MetricSpec& m = e.metric;
    const Fd f2 = [&m](const std::vector<double>& x, const std::vector<double>& y) {
      const double v = m(std::span<const double>(x), std::span<const double>(y));
      return v * v;
    };
    auto ad_f2 = [&m](auto x, auto y) { return metric_squared(m, x, y); };
    for (const auto& s : states) {
      for (int order = 1; order <= 6; ++order) {
        std::vector<Slot> slots;
        int xcount = 0;
        for (int k = 0; k < order; ++k) {
          const int idx = static_cast<int>(rng.uniform() * m.dimension);
          if (xcount < 2 && rng.uniform() < 0.4) {
            slots.push_back(xs(idx));
            ++xcount;
          } else {
            slots.push_back(ys(idx));
          }
        }
        const double h0 = order <= 2 ? 1.6e-2 : 8e-2;
        const double ad = mixed_partial(ad_f2, s.x, s.y, slots);
        const double fd = fd_ladder(f2, s.x, s.y, slots, h0, 6);
        const double err = std::fabs(ad - fd) / std::max(1.0, std::fabs(ad));
        ++checked;
        if (err > worst) {
          worst = err;
          where = name + " order " + std::to_string(order);
        }
      }
    }
  }
  return {worst <= 1e-4, std::to_string(checked) + " partials, worst relative error " + num(worst) + " (" + where + ")"};
}

Outcome criterion9() {
  double worst = 0.0;
  int points = 0;
  for (const char* name : {"randers_osaka", "randers_humo"}) {
    const auto e = get_example(name);
    SamplePlan plan;
    plan.count = 10;
    plan.seed = 909;
    for (const auto& s : sample_states(e.metric, plan).states) {
      const double q = bh_sigma_quadrature(e.metric, s.x);
      const double c = bh_randers_closed(e.metric, s.x);
      worst = std::max(worst, std::fabs(q - c) / std::fabs(c));
      ++points;
    }
  }
  return {worst <= 1e-6 && points == 20, std::to_string(points) + " points, worst relative gap " + num(worst)};
}

Outcome criterion10() {
  int violations = 0;
  std::string first;
  for (const auto& rep : catalog_reports()) {
    for (const auto& p : rep.predicates)
      if (p.verdict == Verdict::indeterminate) return {false, rep.metric_name + ": " + p.name + " indeterminate"};
    violations += static_cast<int>(rep.hierarchy_violations.size());
    if (first.empty() && !rep.hierarchy_violations.empty())
      first = rep.metric_name + ": " + rep.hierarchy_violations.front();
  }
  return {violations == 0, std::to_string(violations) + " violations over " +
                               std::to_string(catalog_reports().size()) + " metrics" +
                               (first.empty() ? "" : " (" + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> known;
  std::vector<int> only;
  app.add_option("--known-failure", known, "criterion allowed to fail");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"rotational Randers: R, S, Dbar vanish; not Douglas", criterion1},
      {"Q-rotation Randers: R, E, S, D|0 vanish; not Berwald, not Douglas", criterion2},
      {"Bao-Shen sphere: S = 0, flag curvature 1, GDW with T = 2C, not Dbar, not PR-quadratic", criterion3},
      {"m-Kropina: Douglas on 20 admissible states", criterion4},
      {"projective Ricci master identity on the catalog", criterion5},
      {"PR-quadratic verdict equals the Douglas-relation verdict", criterion6},
      {"Douglas two forms, mean Berwald two routes, distortion", criterion7},
      {"jet mixed partials vs Richardson differences up to order 6", criterion8},
      {"closed-form vs quadrature Busemann-Hausdorff density", criterion9},
      {"hierarchy consistency on the catalog", criterion10}};

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) failed.insert(id);
    const bool expected = std::find(known.begin(), known.end(), id) != known.end();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " [" << num(secs)
              << " s]" << (!o.pass && expected ? " (known failure)" : "") << "\n      " << o.detail << "\n"
              << std::flush;
  }
  std::set<int> expected;
  for (int k : known)
    if (only.empty() || std::find(only.begin(), only.end(), k) != only.end()) expected.insert(k);
  const bool ok = failed == expected;
  std::cout << (ok ? "acceptance: failures match the known list" : "acceptance: unexpected outcome") << "\n";
  return ok ? 0 : 1;
}
