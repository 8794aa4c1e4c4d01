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

#include <CLI11.hpp>
#include <iostream>

#include "tiqc/experiment.hpp"
#include "tiqc/ft.hpp"

using namespace tiqc;

namespace {

enum Exit { kOk = 0, kFtViolation = 1, kConfigError = 2, kInfeasible = 3 };

struct Flags {
  std::string config;
  uint64_t seed = 0;
  unsigned workers = 1;
  uint32_t weight_cap = 0;
  double delta = 0;
  std::string out;
  std::vector<std::string> protocols;
  std::vector<std::string> results;
  bool omit_f2 = false;
};

void add_common(CLI::App* c, Flags& f) {
  c->add_option("--config", f.config, "JSON run configuration");
  c->add_option("--seed", f.seed, "master seed");
  c->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  c->add_option("--weight-cap", f.weight_cap, "maximum subset weight (all protocols)");
  c->add_option("--delta", f.delta, "truncation tolerance for subset selection")->check(CLI::Range(0.0, 1.0));
  c->add_option("--out", f.out, "output path prefix");
  c->add_option("--protocol", f.protocols, "protocol name (repeatable)");
}

RunConfig resolve(CLI::App* c, const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (c->count("--seed")) cfg.seed = f.seed;
  if (c->count("--workers")) cfg.workers = f.workers;
  if (c->count("--weight-cap"))
    for (auto& p : protocol_names()) cfg.weight_cap[p] = f.weight_cap;
  if (c->count("--delta")) cfg.delta = f.delta;
  if (c->count("--out")) cfg.out = f.out;
  if (!f.protocols.empty()) {
    cfg.protocols.clear();
    for (auto& p : f.protocols) cfg.protocols.push_back(make_protocol(p, cfg.noise).name);
  }
  if (!f.results.empty()) cfg.results = f.results;
  if (f.omit_f2) cfg.options.omit_f2 = true;
  return cfg;
}

int cmd_verify_ft(const RunConfig& cfg) {
  bool ok = true;
  nlohmann::ordered_json report = nlohmann::ordered_json::object();
  for (auto& name : cfg.protocols) {
    auto pr = make_protocol(name, cfg.noise, cfg.options);
    auto rep = verify_ft(pr, cfg.seed);
    ok = ok && rep.ok();
    std::cout << name << ": " << rep.trials << " single faults, " << rep.failures << " logical failures"
              << (rep.noiseless_ok ? "" : ", noiseless run FAILED") << (rep.ok() ? "  [pass]" : "  [FAIL]") << "\n";
    auto& e = report[name];
    e["trials"] = rep.trials;
    e["failures"] = rep.failures;
    e["noiseless_ok"] = rep.noiseless_ok;
    e["locations"] = rep.locations;
    auto& v = e["violations"] = nlohmann::ordered_json::array();
    for (auto& x : rep.violations) {
      std::cout << "  " << class_name(static_cast<size_t>(x.cls)) << " #" << x.ordinal << " error " << x.error
                << (x.x_fail ? " logical-X" : "") << (x.z_fail ? " logical-Z" : "") << "\n";
      v.push_back({{"class", class_name(static_cast<size_t>(x.cls))},
                   {"ordinal", x.ordinal},
                   {"error", x.error},
                   {"logical_x", x.x_fail},
                   {"logical_z", x.z_fail}});
    }
  }
  write_file(cfg.out + ".verify.json", report.dump(2) + "\n");
  return ok ? kOk : kFtViolation;
}

int cmd_sweep(const RunConfig& cfg) {
  auto grid = grid_points(cfg);
  auto pmax = hypercube(grid);
  std::vector<SweepRow> rows;
  std::vector<ProtocolRun> runs;
  std::map<std::string, std::pair<std::string, double>> rules;
  for (auto& name : cfg.protocols) {
    runs.push_back(sample_protocol(cfg, name, pmax));
    auto& r = runs.back();
    rules[r.pr.name] = {r.selection_rule, r.sel.coverage};
    write_file(cfg.out + "." + r.pr.name + ".results.json", to_json(r.results).dump(1) + "\n");
    auto part = sweep_rows(r.results, grid, cfg.values);
    rows.insert(rows.end(), part.begin(), part.end());
    std::cerr << r.pr.name << ": " << r.sel.labels.size() << " subsets, coverage at p_max "
              << r.sel.coverage << "\n";
  }
  std::vector<const SubsetResults*> res;
  for (auto& r : runs) res.push_back(&r.results);
  write_file(cfg.out + ".csv", sweep_csv(cfg.axis, rows));
  write_file(cfg.out + ".json", sidecar(cfg, "sweep", res, rules).dump(1) + "\n");
  return kOk;
}

std::vector<SubsetResults> load_results(const RunConfig& cfg) {
  if (cfg.results.empty()) throw ConfigError("export needs results files (--results or config \"results\")");
  std::vector<SubsetResults> out;
  for (auto& path : cfg.results) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open results file: " + path);
    try {
      out.push_back(results_from_json(nlohmann::json::parse(f)));
    } catch (const std::exception& e) {
      throw ConfigError("bad results file " + path + ": " + e.what());
    }
  }
  return out;
}

int cmd_export(const RunConfig& cfg) {
  auto all = load_results(cfg);
  auto grid = grid_points(cfg);
  std::vector<SweepRow> rows;
  std::vector<const SubsetResults*> res;
  for (auto& r : all) {
    auto part = sweep_rows(r, grid, cfg.values);
    rows.insert(rows.end(), part.begin(), part.end());
    res.push_back(&r);
    write_file(cfg.out + "." + r.protocol + ".scaling.csv", scaling_csv(r));
  }
  write_file(cfg.out + ".csv", sweep_csv(cfg.axis, rows));
  write_file(cfg.out + ".json", sidecar(cfg, "export", res).dump(1) + "\n");
  return kOk;
}

int cmd_resources(const RunConfig& cfg) {
  auto grid = grid_points(cfg);
  std::vector<double> axis = cfg.values.empty() ? std::vector<double>{0.0} : cfg.values;
  std::ostringstream os;
  os << "schema,protocol,kind,accounting,axis,axis_value[prob],p_cross[prob],one_q[gates],ms2[gates],ms5[gates],"
        "crossings[ion_crossings],duration[s]\n";
  auto row = [&](const std::string& proto, const char* kind, const char* acc, double av, double pc, double a,
                 double b, double c, double d, double dur) {
    os << kResourcesSchema << ',' << proto << ',' << kind << ',' << acc << ',' << (cfg.axis.empty() ? "none" : cfg.axis)
       << ',' << fmt(av) << ',' << fmt(pc) << ',' << fmt(a) << ',' << fmt(b) << ',' << fmt(c) << ',' << fmt(d) << ','
       << fmt(dur) << '\n';
  };
  std::vector<SubsetResults> stored;
  if (!cfg.results.empty()) stored = load_results(cfg);
  std::vector<ProtocolRun> runs;
  std::map<std::string, std::pair<std::string, double>> rules;
  for (auto& name : cfg.protocols) {
    std::string canon = make_protocol(name, cfg.noise, cfg.options).name;
    for (auto acc : {CrossingAccounting::PerIon, CrossingAccounting::PerEvent}) {
      auto s = static_resources(canon, cfg.noise, acc, cfg.options);
      const auto& t = s.tally;
      for (size_t i = 0; i < grid.size(); i++) {
        double tc = t_cross(grid[i].p_cross, grid[i].T2);
        row(canon, "error_free", accounting_name(acc), axis[i], grid[i].p_cross, static_cast<double>(t.one_q),
            static_cast<double>(t.ms2), static_cast<double>(t.ms5), static_cast<double>(t.crossings), t.elapsed(tc));
      }
    }
    const SubsetResults* r = nullptr;
    for (auto& s : stored)
      if (s.protocol == canon) r = &s;
    if (!r) {
      runs.push_back(sample_protocol(cfg, canon, hypercube(grid)));
      rules[canon] = {runs.back().selection_rule, runs.back().sel.coverage};
      r = &runs.back().results;
    }
    for (auto& sr : sweep_rows(*r, grid, axis)) {
      const auto& m = sr.c.resources;
      row(canon, "mean", accounting_name(cfg.noise.accounting), sr.axis_value, sr.p[static_cast<size_t>(FaultClass::Cross)],
          m.one_q, m.ms2, m.ms5, m.crossings, sr.duration_s);
    }
  }
  write_file(cfg.out + ".resources.csv", os.str());
  std::vector<const SubsetResults*> res;
  for (auto& r : runs) res.push_back(&r.results);
  write_file(cfg.out + ".resources.json", sidecar(cfg, "resources", res, rules).dump(1) + "\n");
  return kOk;
}

int cmd_run(RunConfig cfg) {
  cfg.axis.clear();
  cfg.values.clear();
  auto grid = grid_points(cfg);
  auto p = hypercube(grid);
  std::vector<SweepRow> rows;
  std::vector<ProtocolRun> runs;
  std::map<std::string, std::pair<std::string, double>> rules;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (auto& name : cfg.protocols) {
    runs.push_back(sample_protocol(cfg, name, p));
    auto& r = runs.back();
    rules[r.pr.name] = {r.selection_rule, r.sel.coverage};
    auto part = sweep_rows(r.results, grid, {});
    rows.insert(rows.end(), part.begin(), part.end());
    auto& s = summary[r.pr.name];
    const auto& c = part[0].c;
    s["logical_z"] = {c.z.lower, c.z.upper};
    s["logical_x"] = {c.x.lower, c.x.upper};
    s["subsets"] = r.sel.labels.size();
    if (cfg.traditional_shots) {
      auto t = traditional_sampler(r.pr, p, cfg.traditional_shots, cfg.seed, cfg.workers);
      s["traditional_z"] = {t.p_z(), t.se_z()};
      s["traditional_x"] = {t.p_x(), t.se_x()};
    }
  }
  std::vector<const SubsetResults*> res;
  for (auto& r : runs) res.push_back(&r.results);
  write_file(cfg.out + ".csv", sweep_csv("", rows));
  auto side = sidecar(cfg, "run", res, rules);
  side["summary"] = summary;
  write_file(cfg.out + ".json", side.dump(1) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion color-code CNOT simulator"};
  app.require_subcommand(1);
  Flags f;
  auto* verify = app.add_subcommand("verify-ft", "exhaustive single-fault check");
  auto* sweep_c = app.add_subcommand("sweep", "subset-sample and sweep one noise axis");
  auto* res_c = app.add_subcommand("resources", "gate, crossing and duration tallies");
  auto* export_c = app.add_subcommand("export", "re-weight stored subset estimates onto a grid");
  auto* run_c = app.add_subcommand("run", "single noise point");
  for (auto* c : {verify, sweep_c, res_c, export_c, run_c}) add_common(c, f);
  verify->add_flag("--omit-f2", f.omit_f2, "drop the second flag coupling of every flagged readout");
  export_c->add_option("--results", f.results, "results file from sweep (repeatable)");
  res_c->add_option("--results", f.results, "results file from sweep (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    auto* c = app.get_subcommands().front();
    RunConfig cfg = resolve(c, f);
    if (c == verify) return cmd_verify_ft(cfg);
    if (c == sweep_c) return cmd_sweep(cfg);
    if (c == res_c) return cmd_resources(cfg);
    if (c == export_c) return cmd_export(cfg);
    return cmd_run(cfg);
  } catch (const InfeasibleTolerance& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
