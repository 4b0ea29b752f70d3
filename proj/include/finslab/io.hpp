#pragma once

// Metric-definition files and JSON reports.

#include <ctime>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "finslab/classify.hpp"
#include "finslab/metrics.hpp"

namespace finslab {

using json = nlohmann::json;

// File layout:
//   { "name": "...", "dimension": 3, "family": "randers",
//     "expressions": { "a": [["1","0"],["0","1"]], "b": ["0.1*x1", "0"], "F": "" },
//     "parameters": { "k": 0.5 }, "chart_radius": 1.0, "volume_density": "" }
// "a" is row-major n x n; "F" is used by the dsl family only.
inline MetricDefinition metric_definition_from_json(const json& j) {
  MetricDefinition d;
  try {
    d.name = j.at("name").get<std::string>();
    d.dimension = j.at("dimension").get<int>();
    d.family = j.at("family").get<std::string>();
    if (j.contains("expressions")) {
      const json& e = j.at("expressions");
      if (e.contains("a")) {
        for (const auto& row : e.at("a")) {
          if (row.is_array())
            for (const auto& v : row) d.a.push_back(v.get<std::string>());
          else
            d.a.push_back(row.get<std::string>());
        }
      }
      if (e.contains("b"))
        for (const auto& v : e.at("b")) d.b.push_back(v.get<std::string>());
      if (e.contains("F")) d.F = e.at("F").get<std::string>();
    }
    if (j.contains("parameters"))
      for (const auto& [k, v] : j.at("parameters").items()) d.parameters[k] = v.get<double>();
    if (j.contains("chart_radius")) d.chart_radius = j.at("chart_radius").get<double>();
    if (j.contains("volume_density")) d.volume_density = j.at("volume_density").get<std::string>();
  } catch (const json::exception& ex) {
    throw Error(std::string("bad metric file: ") + ex.what());
  }
  return d;
}

inline json to_json(const MetricDefinition& d) {
  json j;
  j["name"] = d.name;
  j["dimension"] = d.dimension;
  j["family"] = d.family;
  json e = json::object();
  if (!d.a.empty()) {
    json a = json::array();
    const auto n = static_cast<std::size_t>(d.dimension);
    for (std::size_t i = 0; i < n; ++i) {
      json row = json::array();
      for (std::size_t k = 0; k < n; ++k) row.push_back(d.a.at(i * n + k));
      a.push_back(row);
    }
    e["a"] = a;
  }
  if (!d.b.empty()) e["b"] = d.b;
  if (!d.F.empty()) e["F"] = d.F;
  j["expressions"] = e;
  j["parameters"] = json::object();
  for (const auto& [k, v] : d.parameters) j["parameters"][k] = v;
  j["chart_radius"] = d.chart_radius;
  if (!d.volume_density.empty()) j["volume_density"] = d.volume_density;
  return j;
}

inline MetricDefinition load_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metric file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw Error("metric file '" + path + "' is not valid JSON: " + ex.what());
  }
  return metric_definition_from_json(j);
}

inline void save_metric_file(const MetricDefinition& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write metric file '" + path + "'");
  out << to_json(d).dump(2) << "\n";
}

inline json state_json(const State& s) { return {{"x", s.x}, {"y", s.y}}; }

inline json to_json(const PredicateResult& p) {
  json j;
  j["name"] = p.name;
  j["verdict"] = to_string(p.verdict);
  j["max_residual"] = p.max_residual;
  j["scale"] = p.scale;
  j["tolerance"] = p.tolerance;
  j["worst_state"] = p.worst_state ? state_json(*p.worst_state) : json(nullptr);
  if (p.expected) j["expected"] = *p.expected ? "holds" : "fails";
  if (p.lambda_hat) j["lambda_hat"] = *p.lambda_hat;
  return j;
}

inline json to_json(const SamplePlan& p) {
  return {{"samples", p.count},
          {"seed", p.seed},
          {"x_radius", p.x_radius},
          {"y_mode", p.y_mode == YMode::unit_F ? "unit_F" : "unit_sphere"},
          {"max_condition", p.max_condition}};
}

inline json to_json(const Tolerances& t) {
  return {{"rel", t.rel}, {"abs", t.abs}, {"quadrature_rel", t.quadrature_rel}, {"flag_constancy", t.flag_constancy}};
}

inline json to_json(const SamplingInfo& s) {
  json r = json::object();
  for (const auto& [k, v] : s.rejections) r[k] = v;
  return {{"requested", s.requested}, {"accepted", s.accepted}, {"draws", s.draws}, {"rejections", r}};
}

inline json to_json(const ClassificationReport& rep) {
  json j;
  j["predicates"] = json::array();
  for (const auto& p : rep.predicates) j["predicates"].push_back(to_json(p));
  j["identities"] = json::array();
  for (const auto& p : rep.identities) j["identities"].push_back(to_json(p));
  j["hierarchy_violations"] = rep.hierarchy_violations;
  j["sampling"] = to_json(rep.sampling);
  j["expectations_met"] = rep.expectations_met();
  return j;
}

inline json to_json(const IdentityReport& rep) {
  json j;
  j["identity"] = rep.identity;
  j["states"] = json::array();
  for (const auto& r : rep.rows) {
    json row = state_json(r.state);
    row["max_residual"] = r.max_residual;
    row["scale"] = r.scale;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    if (!r.error.empty()) row["error"] = r.error;
    j["states"].push_back(row);
  }
  j["max_residual"] = rep.max_residual();
  j["pass"] = rep.all_pass();
  j["sampling"] = to_json(rep.sampling);
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace finslab
