#pragma once

// Command-line front end: list, classify, verify.

#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finslab/catalog.hpp"
#include "finslab/classify.hpp"
#include "finslab/io.hpp"
#include "finslab/projective.hpp"
#include "finslab/volume.hpp"

namespace finslab {

struct RunConfig {
  std::string command;
  std::string metric;  // catalog name
  std::string file;    // or definition file
  std::optional<int> dim;
  SamplePlan plan;
  Tolerances tol;
  std::string volume_form;  // empty: recommended for the metric
  std::string identity;
  std::vector<std::string> params;  // raw key=value
  std::string output = "json";
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (!c.metric.empty()) j["metric"] = c.metric;
  if (!c.file.empty()) j["file"] = c.file;
  j["dim"] = c.dim ? json(*c.dim) : json(nullptr);
  j["plan"] = to_json(c.plan);
  j["tolerances"] = to_json(c.tol);
  j["volume_form"] = c.volume_form.empty() ? json(nullptr) : json(c.volume_form);
  if (!c.identity.empty()) j["identity"] = c.identity;
  j["params"] = c.params;
  j["output"] = c.output;
  return j;
}

namespace detail {

struct ResolvedMetric {
  MetricSpec metric;
  std::vector<ExpectedVerdict> expected;
  VolumeForm volume;
  std::optional<double> expected_flag_curvature;
};

inline std::map<std::string, std::string> split_params(const std::vector<std::string>& raw) {
  std::map<std::string, std::string> out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--param expects key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

inline double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error("parameter '" + key + "' needs a number, got '" + text + "'");
  return v;
}

inline ResolvedMetric resolve_metric(const RunConfig& c, const std::map<std::string, std::string>& raw) {
  if (c.metric.empty() == c.file.empty()) throw Error("give exactly one of --metric or --file");
  Parameters numeric;
  for (const auto& [k, v] : raw) numeric[k] = parse_number(k, v);
  ResolvedMetric r;
  std::optional<VolumeKind> recommended;
  if (!c.metric.empty()) {
    CatalogEntry e = get_example(c.metric, numeric, c.dim);
    r.metric = std::move(e.metric);
    r.expected = std::move(e.expected);
    r.expected_flag_curvature = e.expected_flag_curvature;
    recommended = e.recommended_volume;
  } else {
    MetricDefinition d = load_metric_file(c.file);
    if (c.dim && *c.dim != d.dimension) throw Error("--dim disagrees with the dimension in '" + c.file + "'");
    for (const auto& [k, v] : numeric) d.parameters[k] = v;
    r.metric = construct_metric(d);
    recommended = r.metric.volume_density ? VolumeKind::dsl : VolumeKind::bh_quadrature;
  }
  const VolumeKind kind = c.volume_form.empty() ? *recommended : volume_kind_from_string(c.volume_form);
  r.volume = make_volume(kind, r.metric);
  return r;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

inline void print_classification(std::ostream& out, const ClassificationReport& rep) {
  out << "metric " << rep.metric_name << ", volume " << rep.volume << ", " << rep.sampling.accepted << " states ("
      << rep.sampling.draws << " draws)\n";
  auto table = [&](const std::vector<PredicateResult>& rows) {
    for (const auto& p : rows) {
      out << "  " << std::left << std::setw(24) << p.name << std::setw(14) << to_string(p.verdict)
          << " max " << fmt(p.max_residual) << "  tol " << fmt(p.tolerance);
      if (p.expected) {
        const bool ok = p.verdict != Verdict::indeterminate && (p.verdict == Verdict::holds) == *p.expected;
        out << "  expected " << (*p.expected ? "holds" : "fails") << (ok ? "" : "  MISMATCH");
      }
      if (p.lambda_hat) out << "  lambda " << std::setprecision(8) << *p.lambda_hat;
      out << "\n";
    }
  };
  out << "predicates\n";
  table(rep.predicates);
  out << "identities\n";
  table(rep.identities);
  for (const auto& v : rep.hierarchy_violations) out << "hierarchy violation: " << v << "\n";
  out << (rep.expectations_met() ? "expectations met" : "expectations NOT met") << "\n";
}

inline void print_identity(std::ostream& out, const IdentityReport& rep) {
  out << "identity " << rep.identity << " on " << rep.metric_name << ", volume " << rep.volume << "\n";
  for (const auto& r : rep.rows) {
    out << "  " << describe_state(r.state.x, r.state.y) << "  max " << fmt(r.max_residual) << "  tol "
        << fmt(r.tolerance) << "  " << (r.pass ? "pass" : "FAIL");
    if (!r.error.empty()) out << "  (" << r.error << ")";
    out << "\n";
  }
  out << (rep.all_pass() ? "pass" : "fail") << ", max residual " << fmt(rep.max_residual()) << "\n";
}

inline int run_list(const RunConfig& c, std::ostream& out) {
  if (c.output == "json") {
    json j;
    j["catalog"] = json::array();
    for (const auto& name : catalog_names()) {
      const CatalogEntry e = get_example(name);
      json p = json::object();
      for (const auto& [k, v] : e.metric.parameters) p[k] = v;
      j["catalog"].push_back({{"name", name},
                              {"description", e.description},
                              {"family", e.metric.family},
                              {"parameters", p},
                              {"volume_form", to_string(e.recommended_volume)}});
    }
    j["predicates"] = predicate_names();
    j["identities"] = json::array();
    for (auto k : {IdentityKind::thm31, IdentityKind::master, IdentityKind::thm33, IdentityKind::constflag,
                   IdentityKind::pricci, IdentityKind::lemma21, IdentityKind::ricci})
      j["identities"].push_back(to_string(k));
    j["version"] = kVersion;
    out << j.dump(2) << "\n";
  } else {
    for (const auto& name : catalog_names()) {
      const CatalogEntry e = get_example(name);
      out << std::left << std::setw(22) << name << e.description << "\n";
    }
  }
  return 0;
}

inline int run_classify(const RunConfig& c, std::ostream& out) {
  const auto raw = split_params(c.params);
  const ResolvedMetric r = resolve_metric(c, raw);
  const ClassificationReport rep = classify_metric(r.metric, r.volume, c.plan, c.tol, r.expected);
  if (c.output == "json") {
    json j;
    j["config"] = to_json(c);
    json p = json::object();
    for (const auto& [k, v] : r.metric.parameters) p[k] = v;
    j["metric"] = {{"name", r.metric.name},
                   {"family", r.metric.family},
                   {"dimension", r.metric.dimension},
                   {"parameters", p},
                   {"volume_form", r.volume.description}};
    if (r.expected_flag_curvature) j["metric"]["expected_flag_curvature"] = *r.expected_flag_curvature;
    j.update(to_json(rep));
    j["timestamp"] = utc_timestamp();
    j["version"] = kVersion;
    out << j.dump(2) << "\n";
  } else {
    print_classification(out, rep);
  }
  return rep.expectations_met() ? 0 : 1;
}

inline int run_verify(const RunConfig& c, std::ostream& out) {
  if (c.identity.empty()) throw Error("verify needs --identity");
  const IdentityKind kind = identity_kind_from_string(c.identity);
  auto raw = split_params(c.params);
  IdentityOptions opt;
  std::optional<std::string> p_text;
  if (auto it = raw.find("lambda"); it != raw.end()) {
    opt.lambda = parse_number("lambda", it->second);
    raw.erase(it);
  }
  if (auto it = raw.find("P"); it != raw.end()) {
    p_text = it->second;
    raw.erase(it);
  }
  const ResolvedMetric r = resolve_metric(c, raw);
  if (kind == IdentityKind::lemma21) {
    if (!p_text) throw Error("lemma21 needs --param P=<expression>");
    const Parameters params = r.metric.parameters;
    std::set<std::string> names;
    for (const auto& [k, v] : params) names.insert(k);
    const Expr e = parse(*p_text, r.metric.dimension, names);
    opt.P = [e, params](auto x, auto y) {
      using R = std::remove_const_t<typename decltype(y)::value_type>;
      return evaluate<R>(e, x, y, params);
    };
    SamplePlan probe = c.plan;
    probe.count = 3;
    for (const auto& st : sample_states(r.metric, probe).states) {
      const double defect = homogeneity_defect(
          [&opt](std::span<const double> a, std::span<const double> b) { return opt.P.operator()<double>(a, b); },
          st.x, st.y);
      if (defect > 1e-10) throw Error("P = " + *p_text + " is not positively 1-homogeneous in y");
    }
  }
  const IdentityReport rep = verify_identity(r.metric, r.volume, kind, opt, c.plan, c.tol);
  if (c.output == "json") {
    json j;
    j["config"] = to_json(c);
    j["metric"] = {{"name", r.metric.name}, {"dimension", r.metric.dimension}, {"volume_form", r.volume.description}};
    j.update(to_json(rep));
    if (kind == IdentityKind::constflag) j["lambda"] = opt.lambda;
    if (p_text) j["P"] = *p_text;
    j["timestamp"] = utc_timestamp();
    j["version"] = kVersion;
    out << j.dump(2) << "\n";
  } else {
    print_identity(out, rep);
  }
  return rep.all_pass() ? 0 : 1;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"finslab: sprays, curvatures and projective invariants of Finsler metrics"};
  app.require_subcommand(1);
  RunConfig c;
  auto* list = app.add_subcommand("list", "catalog entries, predicates and identities");
  auto* classify = app.add_subcommand("classify", "decide the curvature predicates on sampled states");
  auto* verify = app.add_subcommand("verify", "evaluate one identity residual on sampled states");
  for (auto* sub : {list, classify, verify})
    sub->add_option("--output", c.output, "json or text")->check(CLI::IsMember({"json", "text"}));
  for (auto* sub : {classify, verify}) {
    sub->add_option("--metric", c.metric, "catalog entry");
    sub->add_option("--file", c.file, "metric definition file (JSON)");
    sub->add_option("--dim", c.dim, "dimension for catalog entries that allow it");
    sub->add_option("--samples", c.plan.count, "number of states")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.plan.seed, "sampling seed");
    sub->add_option("--x-radius", c.plan.x_radius, "radius of the base-point ball");
    sub->add_option("--tol-rel", c.tol.rel, "relative tolerance");
    sub->add_option("--tol-abs", c.tol.abs, "absolute tolerance");
    sub->add_option("--volume-form", c.volume_form, "constant | bh-quadrature | bh-randers | dsl")
        ->check(CLI::IsMember({"constant", "bh-quadrature", "bh-randers", "dsl"}));
    sub->add_option("--param", c.params, "key=value, repeatable");
  }
  verify->add_option("--identity", c.identity, "thm31 | master | thm33 | constflag | pricci | lemma21 | ricci")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (list->parsed()) {
      c.command = "list";
      return detail::run_list(c, out);
    }
    if (classify->parsed()) {
      c.command = "classify";
      return detail::run_classify(c, out);
    }
    c.command = "verify";
    return detail::run_verify(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace finslab
