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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiqc/circuit.hpp"
#include "tiqc/gates.hpp"
#include "tiqc/noise.hpp"

namespace tiqc {

// ----------------------------------------------------------------------------
// Trap layout: arms meeting at one Y junction, five zones per arm ordered
// outward from the junction.

enum ZoneIdx : uint32_t { S1 = 0, M1 = 1, S2 = 2, M2 = 3, S3 = 4 };
inline constexpr uint32_t kZonesPerArm = 5;
inline const char* zone_name(uint32_t z) {
  static const char* n[] = {"S1", "M1", "S2", "M2", "S3"};
  return z < kZonesPerArm ? n[z] : "?";
}

struct Zone {
  uint32_t arm = 0;
  uint32_t idx = 0;
  bool operator==(const Zone&) const = default;
  bool operator<(const Zone& o) const { return arm != o.arm ? arm < o.arm : idx < o.idx; }
};

struct TrapLayout {
  std::vector<std::string> arms;
  uint32_t capacity = 8;  // ions per zone

  static TrapLayout y_junction(std::vector<std::string> names) {
    TrapLayout t;
    t.arms = std::move(names);
    return t;
  }
  static bool manipulation(uint32_t z) { return z == M1 || z == M2; }
  // Every pair of arms shares the junction.
  bool junction_adjacent(uint32_t a, uint32_t b) const { return a != b && a < arms.size() && b < arms.size(); }
  uint32_t arm(const std::string& name) const {
    for (uint32_t i = 0; i < arms.size(); i++)
      if (arms[i] == name) return i;
    throw std::invalid_argument("unknown arm: " + name);
  }
  std::string zone_str(Zone z) const { return arms.at(z.arm) + "." + zone_name(z.idx); }
  Zone parse_zone(const std::string& s) const {
    auto dot = s.find('.');
    if (dot == std::string::npos) throw std::invalid_argument("zone must be arm.zone: " + s);
    std::string zn = s.substr(dot + 1);
    for (uint32_t i = 0; i < kZonesPerArm; i++)
      if (zn == zone_name(i)) return {arm(s.substr(0, dot)), i};
    throw std::invalid_argument("unknown zone: " + s);
  }
};

// ----------------------------------------------------------------------------
// Ions.

enum class IonRole : uint8_t { Data, Flag, Syndrome, Cooling };

struct Ion {
  std::string name;
  IonRole role = IonRole::Data;
  uint32_t block = 0;
  int qubit = -1;  // simulator qubit, -1 for cooling ions
};

struct IonRegister {
  std::vector<Ion> ions;
  std::vector<Zone> pos;
  std::vector<uint32_t> crystal;
  std::set<uint32_t> cooled;  // crystal ids cooled since their last reconfiguration
  uint32_t next_crystal = 0;

  uint32_t add(Ion ion, Zone z) {
    // Ions placed in an occupied zone join the crystal already there.
    uint32_t cid = next_crystal;
    for (size_t i = 0; i < ions.size(); i++)
      if (pos[i] == z) cid = crystal[i];
    if (cid == next_crystal) next_crystal++;
    ions.push_back(std::move(ion));
    pos.push_back(z);
    crystal.push_back(cid);
    return static_cast<uint32_t>(ions.size() - 1);
  }
  uint32_t find(const std::string& name) const {
    for (uint32_t i = 0; i < ions.size(); i++)
      if (ions[i].name == name) return i;
    throw std::invalid_argument("unknown ion: " + name);
  }
  std::vector<uint32_t> in_zone(Zone z) const {
    std::vector<uint32_t> v;
    for (uint32_t i = 0; i < ions.size(); i++)
      if (pos[i] == z) v.push_back(i);
    return v;
  }
  std::vector<uint32_t> crystal_members(uint32_t cid) const {
    std::vector<uint32_t> v;
    for (uint32_t i = 0; i < ions.size(); i++)
      if (crystal[i] == cid) v.push_back(i);
    return v;
  }
  std::set<uint32_t> crystals_in(Zone z) const {
    std::set<uint32_t> s;
    for (uint32_t i = 0; i < ions.size(); i++)
      if (pos[i] == z) s.insert(crystal[i]);
    return s;
  }
  bool same_layout(const IonRegister& o) const { return pos == o.pos; }
};

// Ions of one code block in its home placement: flag in S1, d1..d4 in S2,
// d5..d7 in S3, syndrome and cooling ion in M2. Blocks use qubits
// offset..offset+6 for data, offset+7 for s and offset+8 for f.
struct BlockIons {
  uint32_t arm = 0;
  std::array<uint32_t, 7> d{};
  uint32_t s = 0, f = 0, c = 0;
  uint32_t qubit_offset = 0;
};

inline BlockIons add_block(IonRegister& reg, uint32_t arm, uint32_t block, const std::string& prefix,
                           uint32_t qubit_offset) {
  BlockIons b;
  b.arm = arm;
  b.qubit_offset = qubit_offset;
  b.f = reg.add({prefix + ".f", IonRole::Flag, block, static_cast<int>(qubit_offset + 8)}, {arm, S1});
  for (uint32_t i = 0; i < 7; i++)
    b.d[i] = reg.add({prefix + ".d" + std::to_string(i + 1), IonRole::Data, block, static_cast<int>(qubit_offset + i)},
                     {arm, i < 4 ? S2 : S3});
  b.s = reg.add({prefix + ".s", IonRole::Syndrome, block, static_cast<int>(qubit_offset + 7)}, {arm, M2});
  b.c = reg.add({prefix + ".c", IonRole::Cooling, block, -1}, {arm, M2});
  return b;
}

// ----------------------------------------------------------------------------
// Schedules.

enum class StepKind : uint8_t { Split, Merge, Shuttle, Rotate, JCross, Cool, Gate, Measure, Reset, Idle };

inline const char* step_name(StepKind k) {
  switch (k) {
    case StepKind::Split: return "split";
    case StepKind::Merge: return "merge";
    case StepKind::Shuttle: return "shuttle";
    case StepKind::Rotate: return "rotate";
    case StepKind::JCross: return "jcross";
    case StepKind::Cool: return "cool";
    case StepKind::Gate: return "gate";
    case StepKind::Measure: return "measure";
    case StepKind::Reset: return "reset";
    case StepKind::Idle: return "idle";
  }
  return "?";
}

// Gate targets are ion ids; compile() maps them to qubits.
struct ScheduleStep {
  StepKind kind = StepKind::Idle;
  std::vector<uint32_t> ions{};
  Zone zone{};
  GateOp gate{};
  int slot = -1;
  double seconds = 0;  // idle only
  bool par = false;    // runs in parallel with the previous step
};

struct Schedule {
  std::string name{};
  std::vector<ScheduleStep> steps{};
};

inline bool is_reconfiguration(StepKind k) {
  return k == StepKind::Split || k == StepKind::Merge || k == StepKind::Shuttle || k == StepKind::Rotate;
}

inline double step_duration(const ScheduleStep& s, const Durations& d) {
  switch (s.kind) {
    case StepKind::Split:
    case StepKind::Merge: return d.split_merge;
    case StepKind::Shuttle: return d.shuttle;
    case StepKind::Rotate: return d.rotate;
    case StepKind::Cool: return d.cool;
    case StepKind::Measure: return d.measure;
    case StepKind::Reset: return d.reset;
    case StepKind::Idle: return s.seconds;
    case StepKind::Gate:
      switch (s.gate.kind) {
        case GateKind::MS2:
        case GateKind::CNOT: return d.ms2;
        case GateKind::MS5: return d.ms5;
        default: return d.one_q;
      }
    case StepKind::JCross: return 0;  // charged through crossing units
  }
  return 0;
}

// ----------------------------------------------------------------------------
// Validation: replays the schedule on a copy of the register.

struct Violation {
  size_t step;
  std::string what;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool returns_home = true;
  IonRegister final_register;
  bool ok() const { return violations.empty(); }
};

namespace detail {

inline void reconfigure(IonRegister& r, const std::vector<uint32_t>& ions) {
  for (auto i : ions) r.cooled.erase(r.crystal[i]);
}

inline bool whole_crystal(const IonRegister& r, const std::vector<uint32_t>& ions) {
  if (ions.empty()) return false;
  uint32_t cid = r.crystal[ions[0]];
  auto members = r.crystal_members(cid);
  std::set<uint32_t> a(ions.begin(), ions.end()), b(members.begin(), members.end());
  return a == b;
}

}  // namespace detail

inline ValidationResult validate(const Schedule& sch, const TrapLayout& layout, const IonRegister& reg) {
  ValidationResult res;
  IonRegister r = reg;
  auto bad = [&](size_t i, std::string w) { res.violations.push_back({i, std::move(w)}); };
  auto in_range = [&](size_t i, const std::vector<uint32_t>& ions) {
    for (auto ion : ions)
      if (ion >= r.ions.size()) {
        bad(i, "ion index out of range");
        return false;
      }
    return true;
  };
  auto check_capacity = [&](size_t i, Zone z) {
    if (r.in_zone(z).size() > layout.capacity) bad(i, "zone capacity exceeded at " + layout.zone_str(z));
  };

  for (size_t i = 0; i < sch.steps.size(); i++) {
    const auto& s = sch.steps[i];
    if (!in_range(i, s.ions)) continue;
    switch (s.kind) {
      case StepKind::Split: {
        if (s.ions.empty()) {
          bad(i, "split needs operands");
          break;
        }
        uint32_t cid = r.crystal[s.ions[0]];
        bool same = true;
        for (auto ion : s.ions) same = same && r.crystal[ion] == cid;
        if (!same) {
          bad(i, "split operands must share a crystal");
          break;
        }
        if (detail::whole_crystal(r, s.ions)) {
          bad(i, "split operands form the whole crystal");
          break;
        }
        detail::reconfigure(r, r.crystal_members(cid));
        uint32_t fresh = r.next_crystal++;
        for (auto ion : s.ions) r.crystal[ion] = fresh;
        break;
      }
      case StepKind::Merge: {
        auto cs = r.crystals_in(s.zone);
        if (cs.size() < 2) {
          bad(i, "merge needs two crystals in " + layout.zone_str(s.zone));
          break;
        }
        uint32_t fresh = r.next_crystal++;
        for (auto ion : r.in_zone(s.zone)) {
          r.cooled.erase(r.crystal[ion]);
          r.crystal[ion] = fresh;
        }
        break;
      }
      case StepKind::Shuttle: {
        if (!detail::whole_crystal(r, s.ions)) {
          bad(i, "shuttle must move a whole crystal");
          break;
        }
        if (r.pos[s.ions[0]].arm != s.zone.arm) {
          bad(i, "shuttle stays within an arm; use jcross");
          break;
        }
        detail::reconfigure(r, s.ions);
        for (auto ion : s.ions) r.pos[ion] = s.zone;
        check_capacity(i, s.zone);
        break;
      }
      case StepKind::JCross: {
        if (!detail::whole_crystal(r, s.ions)) {
          bad(i, "jcross must move a whole crystal");
          break;
        }
        Zone from = r.pos[s.ions[0]];
        if (from.idx != S1 || s.zone.idx != S1) bad(i, "jcross connects the S1 zones next to the junction");
        if (!layout.junction_adjacent(from.arm, s.zone.arm)) bad(i, "arms are not junction-adjacent");
        detail::reconfigure(r, s.ions);
        for (auto ion : s.ions) r.pos[ion] = s.zone;
        check_capacity(i, s.zone);
        break;
      }
      case StepKind::Rotate: {
        auto cs = r.crystals_in(s.zone);
        if (cs.size() != 1) bad(i, "rotate needs exactly one crystal in " + layout.zone_str(s.zone));
        for (auto c : cs) r.cooled.erase(c);
        break;
      }
      case StepKind::Cool: {
        auto cs = r.crystals_in(s.zone);
        if (cs.size() != 1) {
          bad(i, "cool needs exactly one crystal in " + layout.zone_str(s.zone));
          break;
        }
        bool has = false;
        for (auto ion : r.in_zone(s.zone)) has = has || r.ions[ion].role == IonRole::Cooling;
        if (!has) bad(i, "no cooling ion in " + layout.zone_str(s.zone));
        r.cooled.insert(*cs.begin());
        break;
      }
      case StepKind::Gate: {
        const auto& t = s.gate.targets;
        if (!in_range(i, t)) break;
        bool ok = true;
        for (auto ion : t) {
          if (r.ions[ion].role == IonRole::Cooling) {
            bad(i, "cooling ion used as a gate target");
            ok = false;
          }
          if (!TrapLayout::manipulation(r.pos[ion].idx)) {
            bad(i, "gate outside a manipulation zone");
            ok = false;
          }
          if (r.crystal[ion] != r.crystal[t[0]]) {
            bad(i, "gate targets in different crystals");
            ok = false;
          }
        }
        if (ok && t.size() > 1 && !r.cooled.count(r.crystal[t[0]]))
          bad(i, "entangling gate without a cool step since the last reconfiguration");
        break;
      }
      case StepKind::Measure:
      case StepKind::Reset: {
        if (s.ions.size() != 1) {
          bad(i, "measure/reset takes one ion");
          break;
        }
        if (r.ions[s.ions[0]].role == IonRole::Cooling) bad(i, "cooling ions carry no qubit");
        if (!TrapLayout::manipulation(r.pos[s.ions[0]].idx)) bad(i, "measure/reset outside a manipulation zone");
        break;
      }
      case StepKind::Idle:
        if (s.seconds < 0) bad(i, "negative idle");
        break;
    }
  }
  res.returns_home = r.same_layout(reg);
  res.final_register = std::move(r);
  return res;
}

// ----------------------------------------------------------------------------
// Text format, one step per line. A leading '|' marks a step that runs in
// parallel with the previous one.

namespace detail {
inline std::string gate_token(const GateOp& g) {
  std::string s = gate_name(g.kind);
  if (g.kind == GateKind::RX || g.kind == GateKind::RY || g.kind == GateKind::RZ)
    s += g.pi ? "(pi)" : (g.sign > 0 ? "(+)" : "(-)");
  else if (g.kind == GateKind::MS2 || g.kind == GateKind::MS5)
    s += g.sign > 0 ? "(+)" : "(-)";
  return s;
}
}  // namespace detail

inline std::string to_text(const Schedule& sch, const TrapLayout& layout, const IonRegister& reg,
                           const std::vector<std::string>& reg_names = {}) {
  std::ostringstream os;
  os << "# schedule " << sch.name << "\n";
  for (const auto& s : sch.steps) {
    if (s.par) os << "| ";
    os << step_name(s.kind);
    auto names = [&](const std::vector<uint32_t>& v) {
      for (auto i : v) os << " " << reg.ions[i].name;
    };
    switch (s.kind) {
      case StepKind::Split: names(s.ions); break;
      case StepKind::Merge:
      case StepKind::Rotate:
      case StepKind::Cool: os << " " << layout.zone_str(s.zone); break;
      case StepKind::Shuttle: names(s.ions); os << " -> " << layout.zone_str(s.zone); break;
      case StepKind::JCross: names(s.ions); os << " -> " << layout.arms[s.zone.arm]; break;
      case StepKind::Gate: os << " " << detail::gate_token(s.gate); names(s.gate.targets); break;
      case StepKind::Measure:
        names(s.ions);
        if (s.slot >= 0)
          os << " -> " << (s.slot < static_cast<int>(reg_names.size()) ? reg_names[s.slot] : "r" + std::to_string(s.slot));
        break;
      case StepKind::Reset: names(s.ions); break;
      case StepKind::Idle: os << " " << s.seconds; break;
    }
    os << "\n";
  }
  return os.str();
}

// Register names not yet present in `names` are appended.
inline Schedule parse_text(const std::string& text, const TrapLayout& layout, const IonRegister& reg,
                           std::vector<std::string>& names) {
  Schedule sch;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  auto fail = [&](const std::string& w) {
    throw std::invalid_argument("schedule line " + std::to_string(lineno) + ": " + w);
  };
  while (std::getline(is, line)) {
    lineno++;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "#") {
      if (tok.size() >= 3 && tok[1] == "schedule") sch.name = tok[2];
      continue;
    }
    ScheduleStep s;
    size_t k = 0;
    if (tok[0] == "|") {
      s.par = true;
      k = 1;
    }
    if (k >= tok.size()) fail("missing step kind");
    std::string kind = tok[k++];
    auto rest_until_arrow = [&] {
      std::vector<uint32_t> v;
      while (k < tok.size() && tok[k] != "->") v.push_back(reg.find(tok[k++]));
      return v;
    };
    auto after_arrow = [&]() -> std::string {
      if (k >= tok.size() || tok[k] != "->" || k + 1 >= tok.size()) fail("expected '-> target'");
      return tok[k + 1];
    };
    if (kind == "split") {
      s.kind = StepKind::Split;
      s.ions = rest_until_arrow();
    } else if (kind == "merge" || kind == "rotate" || kind == "cool") {
      s.kind = kind == "merge" ? StepKind::Merge : kind == "rotate" ? StepKind::Rotate : StepKind::Cool;
      if (k >= tok.size()) fail("missing zone");
      s.zone = layout.parse_zone(tok[k]);
    } else if (kind == "shuttle") {
      s.kind = StepKind::Shuttle;
      s.ions = rest_until_arrow();
      s.zone = layout.parse_zone(after_arrow());
    } else if (kind == "jcross") {
      s.kind = StepKind::JCross;
      s.ions = rest_until_arrow();
      s.zone = {layout.arm(after_arrow()), S1};
    } else if (kind == "gate") {
      s.kind = StepKind::Gate;
      if (k >= tok.size()) fail("missing gate");
      std::string g = tok[k++];
      auto paren = g.find('(');
      std::string gname = g.substr(0, paren);
      std::string arg = paren == std::string::npos ? "" : g.substr(paren);
      std::vector<uint32_t> t = rest_until_arrow();
      GateKind gk;
      static const std::map<std::string, GateKind> kinds = {
          {"RX", GateKind::RX},   {"RY", GateKind::RY},     {"RZ", GateKind::RZ}, {"MS2", GateKind::MS2},
          {"MS5", GateKind::MS5}, {"CNOT", GateKind::CNOT}, {"H", GateKind::H},   {"S", GateKind::S}};
      auto it = kinds.find(gname);
      if (it == kinds.end()) fail("unknown gate " + gname);
      gk = it->second;
      int sign = arg == "(-)" ? -1 : 1;
      bool pi = arg == "(pi)";
      s.gate = GateOp{gk, t, sign, pi};
    } else if (kind == "measure" || kind == "reset") {
      s.kind = kind == "measure" ? StepKind::Measure : StepKind::Reset;
      s.ions = rest_until_arrow();
      if (s.kind == StepKind::Measure && k < tok.size()) {
        std::string rn = after_arrow();
        auto it = std::find(names.begin(), names.end(), rn);
        if (it == names.end()) {
          names.push_back(rn);
          s.slot = static_cast<int>(names.size()) - 1;
        } else {
          s.slot = static_cast<int>(it - names.begin());
        }
      }
    } else if (kind == "idle") {
      s.kind = StepKind::Idle;
      if (k >= tok.size()) fail("missing duration");
      s.seconds = std::stod(tok[k]);
    } else {
      fail("unknown step kind " + kind);
    }
    sch.steps.push_back(std::move(s));
  }
  return sch;
}

// ----------------------------------------------------------------------------
// Compilation into circuit nodes.

struct CompileContext {
  const NoiseParams* params = nullptr;
  std::vector<uint32_t> live_data;  // qubits that dephase whenever time passes
};

struct Compiled {
  std::vector<Node> nodes;
  ResourceTally tally;
};

inline uint32_t quanta_for(double seconds, double quantum) {
  if (seconds <= 0) return 0;
  return static_cast<uint32_t>(std::ceil(seconds / quantum - 1e-9));
}

inline Compiled compile(const Schedule& sch, const IonRegister& reg, const CompileContext& ctx) {
  if (!ctx.params) throw std::invalid_argument("compile: missing NoiseParams");
  const NoiseParams& p = *ctx.params;
  Compiled out;
  std::set<uint32_t> live_anc;
  auto live = [&]() {
    std::vector<uint32_t> v = ctx.live_data;
    v.insert(v.end(), live_anc.begin(), live_anc.end());
    return v;
  };
  auto qubit_of = [&](uint32_t ion) {
    int q = reg.ions.at(ion).qubit;
    if (q < 0) throw std::invalid_argument("compile: ion without qubit: " + reg.ions[ion].name);
    return static_cast<uint32_t>(q);
  };

  double pending = 0;
  ResourceTally pending_tally;
  auto flush = [&] {
    if (pending <= 0 && pending_tally == ResourceTally{}) return;
    pending_tally.fixed_seconds += pending;
    out.nodes.push_back(node::idle(live(), quanta_for(pending, p.time_quantum), pending_tally));
    out.tally += pending_tally;
    pending = 0;
    pending_tally = {};
  };

  size_t i = 0;
  while (i < sch.steps.size()) {
    size_t j = i + 1;
    while (j < sch.steps.size() && sch.steps[j].par) j++;
    bool cross = false, reconf = false;
    double dur = 0;
    for (size_t k = i; k < j; k++) {
      auto kind = sch.steps[k].kind;
      cross = cross || kind == StepKind::JCross;
      reconf = reconf || is_reconfiguration(kind) || kind == StepKind::Cool || kind == StepKind::Idle;
      dur = std::max(dur, step_duration(sch.steps[k], p.durations));
    }
    if (cross) {
      flush();
      ResourceTally t;
      uint32_t events = 0;
      for (size_t k = i; k < j; k++) {
        if (sch.steps[k].kind != StepKind::JCross) throw std::invalid_argument("compile: jcross must run alone");
        t.crossings += sch.steps[k].ions.size();
        events++;
      }
      t.cross_units = p.accounting == CrossingAccounting::PerIon ? t.crossings : events;
      out.nodes.push_back(node::cross(live(), static_cast<uint32_t>(t.cross_units), t));
      out.tally += t;
    } else if (reconf) {
      for (size_t k = i; k < j; k++) {
        auto kind = sch.steps[k].kind;
        if (is_reconfiguration(kind)) pending_tally.reorder++;
        if (kind == StepKind::Cool) pending_tally.cool++;
        if (kind == StepKind::Gate || kind == StepKind::Measure || kind == StepKind::Reset)
          throw std::invalid_argument("compile: operations cannot run in parallel with reconfiguration");
      }
      pending += dur;
    } else {
      flush();
      std::set<uint32_t> busy;
      for (size_t k = i; k < j; k++) {
        const auto& s = sch.steps[k];
        ResourceTally t;
        if (s.kind == StepKind::Gate) {
          GateOp g = s.gate;
          for (auto& q : g.targets) {
            q = qubit_of(q);
            busy.insert(q);
          }
          switch (g.kind) {
            case GateKind::MS2: t.ms2 = 1; break;
            case GateKind::MS5: t.ms5 = 1; break;
            case GateKind::CNOT: t.ms2 = 1; break;
            default: t.one_q = 1; break;
          }
          out.nodes.push_back(node::gate(g, t));
        } else if (s.kind == StepKind::Measure) {
          uint32_t q = qubit_of(s.ions[0]);
          busy.insert(q);
          t.measurements = 1;
          out.nodes.push_back(node::measure(q, s.slot, t));
          live_anc.erase(q);
        } else if (s.kind == StepKind::Reset) {
          uint32_t q = qubit_of(s.ions[0]);
          busy.insert(q);
          t.resets = 1;
          out.nodes.push_back(node::reset(q, t));
        }
        out.tally += t;
      }
      // Measured qubits stay dead; reset ones come alive after this group.
      for (size_t k = i; k < j; k++)
        if (sch.steps[k].kind == StepKind::Reset) live_anc.insert(qubit_of(sch.steps[k].ions[0]));
      if (dur > 0) {
        std::vector<uint32_t> idle_q;
        for (auto q : live())
          if (!busy.count(q)) idle_q.push_back(q);
        ResourceTally t;
        t.fixed_seconds = dur;
        out.nodes.push_back(node::idle(idle_q, quanta_for(dur, p.time_quantum), t));
        out.tally += t;
      }
    }
    i = j;
  }
  flush();
  return out;
}

// ----------------------------------------------------------------------------
// Builder: emits steps while tracking ion positions, with helpers for the
// recurring "bring an ion into the gate crystal" pattern.

class ScheduleBuilder {
 public:
  ScheduleBuilder(const TrapLayout& layout, IonRegister& reg, std::string name, std::vector<std::string>* reg_names)
      : layout_(layout), reg_(reg), names_(reg_names) {
    sch_.name = std::move(name);
  }

  const IonRegister& reg() const { return reg_; }
  Schedule take() { return std::move(sch_); }
  const Schedule& schedule() const { return sch_; }

  void par_next() { par_ = true; }

  void split(std::vector<uint32_t> ions) {
    push({StepKind::Split, ions});
    uint32_t fresh = reg_.next_crystal++;
    for (auto i : ions) reg_.crystal[i] = fresh;
  }
  void merge(Zone z) {
    ScheduleStep s{StepKind::Merge};
    s.zone = z;
    push(s);
    uint32_t fresh = reg_.next_crystal++;
    for (auto i : reg_.in_zone(z)) reg_.crystal[i] = fresh;
  }
  void shuttle(std::vector<uint32_t> ions, Zone z) {
    ScheduleStep s{StepKind::Shuttle, ions};
    s.zone = z;
    push(s);
    for (auto i : ions) reg_.pos[i] = z;
  }
  void jcross(std::vector<uint32_t> ions, uint32_t arm) {
    ScheduleStep s{StepKind::JCross, ions};
    s.zone = {arm, S1};
    push(s);
    for (auto i : ions) reg_.pos[i] = s.zone;
  }
  void rotate(Zone z) {
    ScheduleStep s{StepKind::Rotate};
    s.zone = z;
    push(s);
  }
  void cool(Zone z) {
    ScheduleStep s{StepKind::Cool};
    s.zone = z;
    push(s);
  }
  void gate(GateOp g) {
    ScheduleStep s{StepKind::Gate};
    s.gate = std::move(g);
    push(s);
  }
  int measure(uint32_t ion, const std::string& reg_name) {
    ScheduleStep s{StepKind::Measure, {ion}};
    if (names_) {
      names_->push_back(reg_name);
      s.slot = static_cast<int>(names_->size()) - 1;
    }
    push(s);
    return s.slot;
  }
  void reset(uint32_t ion) { push({StepKind::Reset, {ion}}); }
  void idle(double seconds) {
    ScheduleStep s{StepKind::Idle};
    s.seconds = seconds;
    push(s);
  }

  // Moves one ion (or a group sharing a crystal) into zone z and merges it
  // with whatever is there.
  void join(std::vector<uint32_t> ions, Zone z) {
    uint32_t cid = reg_.crystal[ions[0]];
    if (reg_.crystal_members(cid).size() != ions.size()) split(ions);
    Zone from = reg_.pos[ions[0]];
    if (from.arm != z.arm) throw std::logic_error("join across arms; cross the junction first");
    shuttle(ions, z);
    if (reg_.crystals_in(z).size() > 1) merge(z);
  }
  void join(uint32_t ion, Zone z) { join(std::vector<uint32_t>{ion}, z); }

  // Gate-ready: the crystal holding `anchor` is cooled if it is not already.
  void ensure_cool(uint32_t anchor) {
    if (!cooled_.count(reg_.crystal[anchor])) {
      cool(reg_.pos[anchor]);
      cooled_.insert(reg_.crystal[anchor]);
    }
  }

 private:
  void push(ScheduleStep s) {
    s.par = par_;
    par_ = false;
    if (s.kind != StepKind::Cool && s.kind != StepKind::Gate && s.kind != StepKind::Measure &&
        s.kind != StepKind::Reset && s.kind != StepKind::Idle)
      cooled_.clear();
    sch_.steps.push_back(std::move(s));
  }

  const TrapLayout& layout_;
  IonRegister& reg_;
  std::vector<std::string>* names_;
  Schedule sch_;
  bool par_ = false;
  std::set<uint32_t> cooled_;
};

}  // namespace tiqc
