// Copyright 2021 Google LLC
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tiqc/sampler.hpp"

namespace tiqc {

constexpr const char* kVersion = "tiqc 1.0.0";
constexpr const char* kSweepSchema = "tiqc-sweep/1";
constexpr const char* kResourcesSchema = "tiqc-resources/1";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline uint32_t default_weight_cap(const std::string& protocol) {
  return protocol == "transversal-cnot" ? 7 : 5;
}

struct RunConfig {
  std::vector<std::string> protocols{"transversal-cnot", "lattice-surgery-cnot"};
  NoiseParams noise = NoiseParams::anticipated();
  ProtocolOptions options;
  std::string axis;  // empty: single point
  std::vector<double> values;
  double p5q_ratio = 0;  // p_5q = ratio * p_2q along a p_2q axis when > 0
  std::optional<double> delta;
  std::map<std::string, uint32_t> weight_cap;
  std::vector<uint64_t> shots_by_weight{0, 0, 10000, 10000, 4000};
  uint64_t seed = 1;
  unsigned workers = 1;
  CensusPolicy policy = CensusPolicy::Program;
  uint64_t traditional_shots = 0;
  std::string out = "tiqc_out";
  std::vector<std::string> results;  // results files for export

  uint32_t cap_for(const std::string& p) const {
    auto it = weight_cap.find(p);
    return it != weight_cap.end() ? it->second : default_weight_cap(p);
  }
};

inline const std::vector<std::string>& axis_names() {
  static const std::vector<std::string> v{"p_m", "p_1q", "p_2q", "p_5q", "p_idle", "p_cross", "p"};
  return v;
}

// Noise parameters at one axis value.
inline NoiseParams at_axis(const RunConfig& c, double v) {
  NoiseParams n = c.noise;
  if (c.axis.empty()) return n;
  if (c.axis == "p_m") n.p_m = v;
  else if (c.axis == "p_1q") n.p_1q = v;
  else if (c.axis == "p_2q") {
    n.p_2q = v;
    if (c.p5q_ratio > 0) n.p_5q = c.p5q_ratio * v;
  } else if (c.axis == "p_5q") n.p_5q = v;
  else if (c.axis == "p_idle") n.p_idle_override = v;
  else if (c.axis == "p_cross") n.p_cross = v;
  else if (c.axis == "p") n.p_m = n.p_1q = n.p_2q = n.p_5q = v;
  else throw ConfigError("unknown sweep axis: " + c.axis);
  n.validate();
  return n;
}

inline std::vector<NoiseParams> grid_points(const RunConfig& c) {
  std::vector<NoiseParams> g;
  if (c.axis.empty()) {
    g.push_back(c.noise);
  } else {
    for (double v : c.values) g.push_back(at_axis(c, v));
  }
  return g;
}

inline ClassProbs hypercube(const std::vector<NoiseParams>& g) {
  ClassProbs m{};
  for (auto& n : g) {
    auto p = class_probs(n);
    for (size_t c = 0; c < kNumClasses; c++) m[c] = std::max(m[c], p[c]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Config parsing

inline void read_noise(const nlohmann::json& j, NoiseParams& n) {
  auto num = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = j.at(k).get<double>();
  };
  if (j.contains("model")) {
    std::string m = j.at("model");
    if (m == "anticipated") n = NoiseParams::anticipated();
    else if (m == "depolarizing") n = NoiseParams::depolarizing(j.at("p").get<double>());
    else throw ConfigError("noise.model must be anticipated or depolarizing");
  }
  num("p_m", n.p_m);
  num("p_1q", n.p_1q);
  num("p_2q", n.p_2q);
  num("p_5q", n.p_5q);
  num("p_cross", n.p_cross);
  num("T2_s", n.T2);
  num("time_quantum_s", n.time_quantum);
  if (j.contains("p_idle")) n.p_idle_override = j.at("p_idle").get<double>();
  if (j.contains("accounting")) n.accounting = parse_accounting(j.at("accounting"));
  if (j.contains("durations_s")) {
    auto& d = j.at("durations_s");
    auto dur = [&](const char* k, double& dst) {
      if (d.contains(k)) dst = d.at(k).get<double>();
    };
    dur("ms2", n.durations.ms2);
    dur("ms5", n.durations.ms5);
    dur("one_q", n.durations.one_q);
    dur("measure", n.durations.measure);
    dur("reset", n.durations.reset);
    dur("cool", n.durations.cool);
    dur("shuttle", n.durations.shuttle);
    dur("split_merge", n.durations.split_merge);
    dur("rotate", n.durations.rotate);
  }
}

inline RunConfig parse_config(const nlohmann::json& j) {
  static const std::set<std::string> keys{"protocol", "protocols", "noise", "options", "sweep", "delta",
                                          "weight_cap", "shots_by_weight", "seed", "workers", "census_policy",
                                          "traditional_shots", "out", "results"};
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (auto& [k, v] : j.items())
      if (!keys.count(k)) throw ConfigError("unknown config key: " + k);
    if (j.contains("protocol")) c.protocols = {j.at("protocol").get<std::string>()};
    if (j.contains("protocols")) c.protocols = j.at("protocols").get<std::vector<std::string>>();
    for (auto& p : c.protocols) {
      auto names = protocol_names();
      if (std::find(names.begin(), names.end(), p) == names.end()) throw ConfigError("unknown protocol: " + p);
    }
    if (j.contains("noise")) read_noise(j.at("noise"), c.noise);
    if (j.contains("options")) {
      auto& o = j.at("options");
      auto flag = [&](const char* k, bool& dst) {
        if (o.contains(k)) dst = o.at(k).get<bool>();
      };
      flag("ancilla_prep_round", c.options.ancilla_prep_round);
      flag("case_logic", c.options.case_logic);
      flag("flags", c.options.flags);
      flag("case2_flip_outcome", c.options.case2_flip_outcome);
      flag("full_split", c.options.full_split);
      flag("omit_f2", c.options.omit_f2);
    }
    if (j.contains("sweep")) {
      auto& s = j.at("sweep");
      c.axis = s.at("axis").get<std::string>();
      if (std::find(axis_names().begin(), axis_names().end(), c.axis) == axis_names().end())
        throw ConfigError("unknown sweep axis: " + c.axis);
      if (s.contains("values")) {
        c.values = s.at("values").get<std::vector<double>>();
      } else {
        double lo = s.at("min"), hi = s.at("max");
        int n = s.at("points");
        bool log = s.value("scale", std::string("log")) == "log";
        if (n < 1 || !(lo <= hi) || (log && !(lo > 0))) throw ConfigError("bad sweep range");
        for (int i = 0; i < n; i++) {
          double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
          c.values.push_back(log ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo));
        }
      }
      if (c.values.empty()) throw ConfigError("sweep needs at least one value");
      c.p5q_ratio = s.value("p5q_ratio", c.axis == "p_2q" ? 5.0 : 0.0);
    }
    if (j.contains("delta") && !j.at("delta").is_null()) c.delta = j.at("delta").get<double>();
    if (j.contains("weight_cap")) {
      auto& w = j.at("weight_cap");
      if (w.is_number()) {
        for (auto& p : protocol_names()) c.weight_cap[p] = w.get<uint32_t>();
      } else {
        for (auto& [k, v] : w.items()) c.weight_cap[k] = v.get<uint32_t>();
      }
    }
    if (j.contains("shots_by_weight")) c.shots_by_weight = j.at("shots_by_weight").get<std::vector<uint64_t>>();
    if (j.contains("seed")) c.seed = j.at("seed");
    if (j.contains("workers")) c.workers = j.at("workers");
    if (j.contains("census_policy")) c.policy = parse_policy(j.at("census_policy"));
    if (j.contains("traditional_shots")) c.traditional_shots = j.at("traditional_shots");
    if (j.contains("out")) c.out = j.at("out");
    if (j.contains("results")) c.results = j.at("results").get<std::vector<std::string>>();
    c.noise.validate();
    for (double v : c.values) at_axis(c, v);
    if (c.delta && !(*c.delta > 0 && *c.delta < 1)) throw ConfigError("delta must lie in (0, 1)");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Sampling per protocol

struct ProtocolRun {
  std::string protocol;
  Protocol pr;
  Selection sel;
  SubsetResults results;
  std::string selection_rule;
};

inline ProtocolRun sample_protocol(const RunConfig& c, const std::string& name, const ClassProbs& p_max) {
  ProtocolRun r{name, make_protocol(name, c.noise, c.options), {}, {}, {}};
  Census n = census_of(r.pr, c.policy);
  if (c.delta) {
    r.sel = select_subsets(p_max, n, *c.delta, c.cap_for(name));
    r.selection_rule = "delta";
  } else {
    r.sel = weight_cap_subsets(p_max, n, c.cap_for(name));
    r.selection_rule = "weight_cap";
  }
  SamplerOptions o;
  o.policy = c.policy;
  o.seed = c.seed;
  o.workers = c.workers;
  o.shots_by_weight = c.shots_by_weight;
  r.results = {r.pr.name, c.policy, n, p_max, c.seed, c.noise.T2, sample_all(r.pr, r.sel, n, o)};
  return r;
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

struct SweepRow {
  std::string protocol;
  double axis_value = 0;
  ClassProbs p{};
  Combined c;
  double duration_s = 0;
  double bare = 0;  // 8 p_2q / 15
};

inline std::vector<SweepRow> sweep_rows(const SubsetResults& r, const std::vector<NoiseParams>& grid,
                                        const std::vector<double>& axis_values) {
  std::vector<ClassProbs> g;
  for (auto& n : grid) g.push_back(class_probs(n));
  auto pts = sweep(g, r.subsets, r.census, r.p_max, r.T2);
  std::vector<SweepRow> rows;
  for (size_t i = 0; i < pts.size(); i++)
    rows.push_back({r.protocol, axis_values.empty() ? 0.0 : axis_values[i], pts[i].p, pts[i].c, pts[i].duration_s,
                    bare_bell_reference(grid[i].p_2q).first});
  return rows;
}

inline std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "schema,protocol,axis,axis_value[prob],p_m[prob],p_1q[prob],p_2q[prob],p_5q[prob],p_idle[prob],"
        "p_cross[prob],logical_z_lower[prob],logical_z_point[prob],logical_z_upper[prob],logical_z_se[prob],"
        "logical_x_lower[prob],logical_x_point[prob],logical_x_upper[prob],logical_x_se[prob],"
        "bare_reference[prob],sampled_mass[prob],mean_one_q[gates],mean_ms2[gates],mean_ms5[gates],"
        "mean_crossings[ion_crossings],mean_duration[s]\n";
  for (auto& r : rows) {
    os << kSweepSchema << ',' << r.protocol << ',' << (axis.empty() ? "none" : axis) << ',' << fmt(r.axis_value);
    for (double v : r.p) os << ',' << fmt(v);
    for (const Bounds* b : {&r.c.z, &r.c.x}) os << ',' << fmt(b->lower) << ',' << fmt(b->point) << ',' << fmt(b->upper) << ',' << fmt(b->se);
    const auto& m = r.c.resources;
    os << ',' << fmt(r.bare) << ',' << fmt(r.c.sampled_mass) << ',' << fmt(m.one_q) << ',' << fmt(m.ms2) << ','
       << fmt(m.ms5) << ',' << fmt(m.crossings) << ',' << fmt(r.duration_s) << '\n';
  }
  return os.str();
}

// Minimal reader for our own CSV (no quoting needed).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  size_t col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); i++)
      if (header[i] == name) return i;
    throw std::out_of_range("csv: no column " + name);
  }
  double num(size_t row, const std::string& name) const { return std::stod(rows[row][col(name)]); }
  const std::string& str(size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (std::getline(is, line)) t.header = split(line);
  while (std::getline(is, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

inline nlohmann::ordered_json sidecar(const RunConfig& c, const std::string& command,
                                      const std::vector<const SubsetResults*>& res,
                                      const std::map<std::string, std::pair<std::string, double>>& rules = {}) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = c.seed;
  j["census_policy"] = policy_name(c.policy);
  j["axis"] = c.axis;
  j["values"] = c.values;
  auto& ps = j["protocols"] = nlohmann::ordered_json::object();
  for (auto* r : res) {
    auto& e = ps[r->protocol];
    e["census"] = r->census;
    e["p_max"] = r->p_max;
    if (auto it = rules.find(r->protocol); it != rules.end()) {
      e["selection"] = it->second.first;
      e["coverage_at_p_max"] = it->second.second;
    }
    auto& subs = e["subsets"] = nlohmann::ordered_json::array();
    for (auto& s : r->subsets) {
      nlohmann::ordered_json h = nlohmann::ordered_json::object();
      for (auto& [k, v] : s.realized) h[std::to_string(k)] = v;
      subs.push_back({{"label", s.label}, {"shots", s.shots}, {"fail_z", s.fail_z}, {"fail_x", s.fail_x},
                      {"exhaustive", s.exhaustive}, {"realized_weight", h}});
    }
  }
  return j;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

// Error-free resources of a protocol built with the given accounting.
struct StaticResources {
  std::string protocol;
  CrossingAccounting accounting;
  ResourceTally tally;
};

inline StaticResources static_resources(const std::string& name, NoiseParams n, CrossingAccounting a,
                                        const ProtocolOptions& o = {}) {
  n.accounting = a;
  auto pr = make_protocol(name, n, o);
  return {pr.name, a, reference_run(pr).tally};
}

// Leading-order coefficients: lower bound ~= sum over labels of
// prod C(n_i, w_i) p_i^w_i times p_hat, at small p.
inline std::string scaling_csv(const SubsetResults& r) {
  std::ostringstream os;
  os << "schema,protocol,label,total_weight[count],coefficient_z[1],coefficient_x[1]\n";
  for (auto& s : r.subsets) {
    double lc = 0;
    for (size_t c = 0; c < kNumClasses; c++) lc += log_choose(r.census[c], s.label[c]);
    double k = std::exp(lc);
    os << "tiqc-scaling/1," << r.protocol << ",\"" << label_string(s.label) << "\"," << total_weight(s.label) << ','
       << fmt(k * s.p_z()) << ',' << fmt(k * s.p_x()) << '\n';
  }
  return os.str();
}

}  // namespace tiqc
