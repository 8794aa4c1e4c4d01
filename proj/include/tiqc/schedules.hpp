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

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tiqc/color_code.hpp"
#include "tiqc/qccd.hpp"

namespace tiqc {

// Outcome conventions of the readout circuits below: the stabilizer value is
// sign * (raw syndrome outcome).
inline constexpr int kFlaggedSign = -1;
inline constexpr int kUnflaggedSign = +1;
inline constexpr int bare_sign(size_t weight) { return weight == 2 ? -1 : +1; }

// Three arms around one junction. Blocks present are given with their qubit
// offsets; missing blocks leave their arm empty.
struct Trap {
  TrapLayout layout = TrapLayout::y_junction({"control", "ancilla", "target"});
  IonRegister reg;
  std::map<std::string, BlockIons> blocks;

  const BlockIons& block(const std::string& name) const {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw std::invalid_argument("trap has no block " + name);
    return it->second;
  }
};

inline Trap make_trap(const std::vector<std::pair<std::string, uint32_t>>& present) {
  Trap t;
  uint32_t bid = 0;
  for (auto& [name, offset] : present) {
    uint32_t arm = t.layout.arm(name);
    t.blocks[name] = add_block(t.reg, arm, bid++, name.substr(0, 1), offset);
  }
  return t;
}

namespace sched {

inline Zone gate_zone(const BlockIons& host) { return {host.arm, M2}; }

// Brings d into the host's gate crystal, runs the coupling, and returns d to
// the zone it came from.
inline void couple(ScheduleBuilder& b, uint32_t s, uint32_t d, Basis basis, Zone gz) {
  Zone from = b.reg().pos[d];
  b.join(d, gz);
  b.ensure_cool(s);
  if (basis == Basis::Z) b.gate(GateOp::ry(d, +1));
  b.gate(GateOp::ms2(s, d, +1));
  b.gate(GateOp::rx(d, +1));
  if (basis == Basis::Z) b.gate(GateOp::ry(d, -1));
  b.split({d});
  b.shuttle({d}, from);
  if (b.reg().crystals_in(from).size() > 1) b.merge(from);
}

inline std::vector<uint32_t> plaquette_ions(const BlockIons& blk, uint32_t p) {
  std::vector<uint32_t> v;
  for (auto q : steane_layout().plaquettes[p]) v.push_back(blk.d[q]);
  return v;
}

struct FlaggedSlots {
  int s = -1, f = -1;
};

// Flagged readout of the stabilizer of type `basis` on plaquette p (0-based).
// Couplings: i1, f, i2, i3, f, i4. with_f2 = false drops the second flag
// coupling (fault-injection control only).
inline FlaggedSlots flagged_readout(ScheduleBuilder& b, const BlockIons& blk, Basis basis, uint32_t p,
                                    const std::string& label, bool with_f2 = true) {
  auto data = plaquette_ions(blk, p);
  Zone gz = gate_zone(blk);
  Zone fhome = b.reg().pos[blk.f];
  b.reset(blk.s);
  couple(b, blk.s, data[0], basis, gz);
  b.join(blk.f, gz);
  b.reset(blk.f);
  b.ensure_cool(blk.s);
  b.gate(GateOp::ms2(blk.s, blk.f, +1));
  b.gate(GateOp::rx(blk.f, +1));
  couple(b, blk.s, data[1], basis, gz);
  couple(b, blk.s, data[2], basis, gz);
  if (with_f2) {
    b.ensure_cool(blk.s);
    b.gate(GateOp::ms2(blk.s, blk.f, +1));
    b.gate(GateOp::rx(blk.f, +1));
  }
  couple(b, blk.s, data[3], basis, gz);
  FlaggedSlots out;
  out.s = b.measure(blk.s, label + ".s");
  b.par_next();
  out.f = b.measure(blk.f, label + ".f");
  b.split({blk.f});
  b.shuttle({blk.f}, fhome);
  if (b.reg().crystals_in(fhome).size() > 1) b.merge(fhome);
  return out;
}

// Un-flagged readout with two 5-ion MS gates on one crystal.
inline int unflagged_readout(ScheduleBuilder& b, const BlockIons& blk, Basis basis, uint32_t p,
                             const std::string& label) {
  auto data = plaquette_ions(blk, p);
  Zone gz = gate_zone(blk);
  std::vector<Zone> from;
  b.reset(blk.s);
  for (auto d : data) {
    from.push_back(b.reg().pos[d]);
    b.join(d, gz);
  }
  b.ensure_cool(blk.s);
  std::vector<uint32_t> t = {blk.s};
  t.insert(t.end(), data.begin(), data.end());
  b.gate(GateOp::rx(blk.s, +1));
  if (basis == Basis::Z)
    for (auto d : data) b.gate(GateOp::ry(d, +1));
  b.gate(GateOp::ms5(t, +1));
  b.gate(GateOp::rz(blk.s, +1));
  b.gate(GateOp::ms5(t, -1));
  b.gate(GateOp::ry(blk.s, -1));
  if (basis == Basis::Z)
    for (auto d : data) b.gate(GateOp::ry(d, -1));
  int slot = b.measure(blk.s, label + ".s");
  for (size_t i = 0; i < data.size(); i++) {
    b.split({data[i]});
    b.shuttle({data[i]}, from[i]);
    if (b.reg().crystals_in(from[i]).size() > 1) b.merge(from[i]);
  }
  return slot;
}

// Bare-ancilla readout of a product of `basis` Paulis on `data`, in the
// given coupling order. Data may belong to several blocks but must sit in
// the host's arm.
inline int bare_readout(ScheduleBuilder& b, const BlockIons& host, const std::vector<uint32_t>& data, Basis basis,
                        const std::string& label) {
  Zone gz = gate_zone(host);
  b.reset(host.s);
  for (auto d : data) couple(b, host.s, d, basis, gz);
  return b.measure(host.s, label + ".s");
}

// Transversal X-basis readout of the seven data qubits.
inline std::array<int, 7> final_mx(ScheduleBuilder& b, const BlockIons& blk, const std::string& label) {
  std::vector<uint32_t> lo(blk.d.begin(), blk.d.begin() + 4), hi(blk.d.begin() + 4, blk.d.end());
  Zone m1{blk.arm, M1}, m2{blk.arm, M2}, s2{blk.arm, S2}, s3{blk.arm, S3};
  b.shuttle(lo, m1);
  b.par_next();
  b.shuttle(hi, m2);
  b.merge(m2);
  for (auto d : blk.d) b.gate(GateOp::ry(d, -1));
  std::array<int, 7> slots{};
  for (int i = 0; i < 7; i++) {
    if (i) b.par_next();
    slots[i] = b.measure(blk.d[i], label + ".m" + std::to_string(i + 1));
  }
  b.split(hi);
  b.shuttle(lo, s2);
  b.par_next();
  b.shuttle(hi, s3);
  return slots;
}

// --- transversal CNOT -------------------------------------------------------
// Control ions travel through the vacated junction-side zones of the ancilla
// arm into the target arm and back: G1 = d1..d4, G2 = d5..d7 plus the
// control's cooling ion. Four junction legs of 8 ions each.

struct TransversalGroups {
  std::vector<uint32_t> g1, g2;
};

inline TransversalGroups transversal_groups(const Trap& t) {
  const auto& c = t.block("control");
  return {{c.d[0], c.d[1], c.d[2], c.d[3]}, {c.d[4], c.d[5], c.d[6], c.c}};
}

inline void transversal_a(ScheduleBuilder& b, const Trap& t) {
  const auto& c = t.block("control");
  uint32_t ca = c.arm, aa = t.layout.arm("ancilla"), ta = t.block("target").arm;
  auto [g1, g2] = transversal_groups(t);
  std::vector<uint32_t> d57 = {c.d[4], c.d[5], c.d[6]};
  // Pick up the control's cooling ion.
  b.shuttle(d57, {ca, M2});
  b.shuttle(g1, {ca, S1});
  b.merge({ca, M2});
  b.split(g2);
  b.jcross(g1, aa);
  b.shuttle(g1, {aa, M1});
  b.shuttle(g2, {ca, S1});
  b.jcross(g2, aa);
  // Ancilla arm -> target arm; G2 goes first so its cooling ion ends in M1.
  b.jcross(g2, ta);
  b.shuttle(g2, {ta, M1});
  b.shuttle(g1, {aa, S1});
  b.jcross(g1, ta);
}

// Pair gate decomposition in time order: Y_c(+), MS2, X_t(-), X_c(-), Y_c(-).
inline void pair_cnot(ScheduleBuilder& b, uint32_t ctrl, uint32_t tgt) {
  b.gate(GateOp::ry(ctrl, +1));
  b.gate(GateOp::ms2(ctrl, tgt, +1));
  b.gate(GateOp::rx(tgt, -1));
  b.gate(GateOp::rx(ctrl, -1));
  b.gate(GateOp::ry(ctrl, -1));
}

inline void transversal_b(ScheduleBuilder& b, const Trap& t) {
  const auto& c = t.block("control");
  const auto& x = t.block("target");
  uint32_t ta = x.arm;
  Zone m1{ta, M1}, m2{ta, M2}, s1{ta, S1}, s2{ta, S2}, s3{ta, S3};
  std::vector<uint32_t> t57 = {x.d[4], x.d[5], x.d[6]};
  std::vector<uint32_t> c12 = {c.d[0], c.d[1]}, c34 = {c.d[2], c.d[3]};
  std::vector<uint32_t> t12 = {x.d[0], x.d[1]}, t34 = {x.d[2], x.d[3]};
  // Three sequential rounds: pairs 5..7 in M1 beside the control's cooling
  // ion, then pairs 1..2 and 3..4 in M2 beside the target's.
  b.shuttle(t57, m1);
  b.merge(m1);
  b.cool(m1);
  for (int i = 4; i < 7; i++) pair_cnot(b, c.d[i], x.d[i]);
  b.split(t57);
  b.shuttle(t57, s3);
  b.split(c12);
  b.par_next();
  b.split(t12);
  b.shuttle(c12, m2);
  b.par_next();
  b.shuttle(t12, m2);
  b.merge(m2);
  b.cool(m2);
  pair_cnot(b, c.d[0], x.d[0]);
  pair_cnot(b, c.d[1], x.d[1]);
  b.split(c12);
  b.split(t12);
  b.shuttle(c12, s1);
  b.par_next();
  b.shuttle(t12, s2);
  // Round 2: pairs 3..4 in M2.
  b.shuttle(c34, m2);
  b.par_next();
  b.shuttle(t34, m2);
  b.merge(m2);
  b.cool(m2);
  pair_cnot(b, c.d[2], x.d[2]);
  pair_cnot(b, c.d[3], x.d[3]);
  b.split(c34);
  b.split(t34);
  b.shuttle(c34, s1);
  b.par_next();
  b.shuttle(t34, s2);
  // Regrouping G1 fuses it with the target flag; (c) splits it off again.
  b.merge(s1);
  b.par_next();
  b.merge(s2);
}

inline void transversal_c(ScheduleBuilder& b, const Trap& t) {
  uint32_t ta = t.block("target").arm, aa = t.layout.arm("ancilla");
  auto [g1, g2] = transversal_groups(t);
  b.split(g1);
  b.jcross(g1, aa);
  b.shuttle(g1, {aa, M1});
  b.shuttle(g2, {ta, S1});
  b.jcross(g2, aa);
}

inline void transversal_d(ScheduleBuilder& b, const Trap& t) {
  const auto& c = t.block("control");
  uint32_t ca = c.arm, aa = t.layout.arm("ancilla");
  auto [g1, g2] = transversal_groups(t);
  std::vector<uint32_t> d57 = {c.d[4], c.d[5], c.d[6]};
  b.jcross(g2, ca);
  b.shuttle(g2, {ca, M2});
  b.shuttle(g1, {aa, S1});
  b.merge({ca, M2});
  b.jcross(g1, ca);
  b.split(d57);
  b.shuttle(d57, {ca, S3});
  b.shuttle(g1, {ca, S2});
}

// --- lattice-surgery boundary modules -------------------------------------
// Guests are the boundary data ions of the travelling block; they park in
// the host arm's M1 zone.

inline void enter_guests(ScheduleBuilder& b, const Trap& t, const std::string& from, const std::string& to,
                         std::vector<uint32_t> guests) {
  uint32_t fa = t.block(from).arm, ta = t.block(to).arm;
  // Guests may sit in different home crystals; split them out and ferry each
  // group across, then fuse them in M1.
  std::map<uint32_t, std::vector<uint32_t>> by_crystal;
  for (auto g : guests) by_crystal[b.reg().crystal[g]].push_back(g);
  std::vector<std::vector<uint32_t>> groups;
  for (auto& [cid, v] : by_crystal) {
    if (b.reg().crystal_members(cid).size() != v.size()) {
      if (!groups.empty()) b.par_next();
      b.split(v);
    }
    groups.push_back(v);
  }
  for (size_t i = 0; i < groups.size(); i++) {
    b.shuttle(groups[i], {fa, S1});
    b.jcross(groups[i], ta);
    b.shuttle(groups[i], {ta, M1});
    if (i) b.merge({ta, M1});
  }
}

inline void exit_guests(ScheduleBuilder& b, const Trap& t, const std::string& from, const std::string& to,
                        std::vector<uint32_t> guests, const std::vector<Zone>& homes) {
  b.shuttle(guests, {t.block(to).arm, S1});
  b.jcross(guests, t.block(from).arm);
  // Send each guest back to its home zone, splitting the travelling crystal.
  std::map<Zone, std::vector<uint32_t>> by_home;
  for (size_t i = 0; i < guests.size(); i++) by_home[homes[i]].push_back(guests[i]);
  size_t left = guests.size();
  for (auto& [z, v] : by_home) {
    if (v.size() != left) b.split(v);
    left -= v.size();
    b.shuttle(v, z);
    if (b.reg().crystals_in(z).size() > 1) b.merge(z);
  }
}

}  // namespace sched

// Built-in schedules with the register they start from.
struct NamedSchedule {
  std::string name;
  Schedule schedule;
  IonRegister start;
  std::vector<std::string> reg_names;
};

inline Trap lattice_surgery_trap() { return make_trap({{"control", 0}, {"ancilla", 9}, {"target", 18}}); }
inline Trap transversal_trap() { return make_trap({{"control", 0}, {"target", 9}}); }
inline Trap single_block_trap() { return make_trap({{"control", 0}}); }

// Boundary data of the two merges.
struct MergeGeometry {
  std::string host, guest;  // guest ions travel into the host arm
  Basis basis;
  std::vector<uint32_t> w2_qubits, w4_qubits;  // 0-based, same on both blocks
  uint32_t collapsed;                           // 0-based plaquette of the conjugate type
  uint32_t edge;                                // boundary edge (logical support)
};

inline MergeGeometry merge_xx() { return {"target", "ancilla", Basis::X, {6}, {4, 5}, 2, 2}; }
inline MergeGeometry merge_zz() { return {"ancilla", "control", Basis::Z, {4}, {0, 1}, 1, 0}; }

// Weight-2 readout couples guest then host; weight-4 alternates blocks.
inline std::vector<uint32_t> boundary_ions(const Trap& t, const MergeGeometry& g, bool w4) {
  const auto& qs = w4 ? g.w4_qubits : g.w2_qubits;
  const auto& guest = t.block(g.guest);
  const auto& host = t.block(g.host);
  std::vector<uint32_t> v;
  for (auto q : qs) {
    v.push_back(guest.d[q]);
    v.push_back(host.d[q]);
  }
  return v;
}

inline std::vector<uint32_t> guest_ions(const Trap& t, const MergeGeometry& g, bool w2, bool w4) {
  std::vector<uint32_t> v;
  const auto& guest = t.block(g.guest);
  std::set<uint32_t> qs;
  if (w2) qs.insert(g.w2_qubits.begin(), g.w2_qubits.end());
  if (w4) qs.insert(g.w4_qubits.begin(), g.w4_qubits.end());
  for (auto q : qs) v.push_back(guest.d[q]);
  return v;
}

inline std::vector<Zone> home_zones(const IonRegister& r, const std::vector<uint32_t>& ions) {
  std::vector<Zone> z;
  for (auto i : ions) z.push_back(r.pos[i]);
  return z;
}

inline std::vector<NamedSchedule> builtin_schedules() {
  std::vector<NamedSchedule> out;
  auto add = [&](std::string name, const Trap& t, IonRegister start, auto&& fn) {
    NamedSchedule ns;
    ns.name = name;
    ns.start = start;
    IonRegister r = start;
    ScheduleBuilder b(t.layout, r, name, &ns.reg_names);
    fn(b, t);
    ns.schedule = b.take();
    out.push_back(std::move(ns));
    return r;
  };
  Trap one = single_block_trap();
  const auto& blk = one.block("control");
  for (auto basis : {Basis::X, Basis::Z})
    for (uint32_t p = 0; p < 3; p++) {
      std::string s = std::string("S") + basis_char(basis) + std::to_string(p + 1);
      add("flagged-" + s, one, one.reg,
          [&](ScheduleBuilder& b, const Trap&) { sched::flagged_readout(b, blk, basis, p, s); });
      add("unflagged-" + s, one, one.reg,
          [&](ScheduleBuilder& b, const Trap&) { sched::unflagged_readout(b, blk, basis, p, s); });
    }
  add("final-mx", one, one.reg, [&](ScheduleBuilder& b, const Trap&) { sched::final_mx(b, blk, "mx"); });

  Trap tv = transversal_trap();
  IonRegister r = tv.reg;
  r = add("transversal-a", tv, r, sched::transversal_a);
  r = add("transversal-b", tv, r, sched::transversal_b);
  r = add("transversal-c", tv, r, sched::transversal_c);
  add("transversal-d", tv, r, sched::transversal_d);

  Trap ls = lattice_surgery_trap();
  for (auto g : {merge_xx(), merge_zz()}) {
    std::string tag = g.basis == Basis::X ? "mxx" : "mzz";
    auto guests = guest_ions(ls, g, true, true);
    auto homes = home_zones(ls.reg, guests);
    IonRegister cur = ls.reg;
    cur = add(tag + "-enter", ls, cur,
              [&](ScheduleBuilder& b, const Trap& t) { sched::enter_guests(b, t, g.guest, g.host, guests); });
    cur = add(tag + "-w2", ls, cur, [&](ScheduleBuilder& b, const Trap& t) {
      sched::bare_readout(b, t.block(g.host), boundary_ions(t, g, false), g.basis, "w2");
    });
    cur = add(tag + "-w4", ls, cur, [&](ScheduleBuilder& b, const Trap& t) {
      sched::bare_readout(b, t.block(g.host), boundary_ions(t, g, true), g.basis, "w4");
    });
    add(tag + "-exit", ls, cur,
        [&](ScheduleBuilder& b, const Trap& t) { sched::exit_guests(b, t, g.guest, g.host, guests, homes); });
  }
  return out;
}

}  // namespace tiqc
