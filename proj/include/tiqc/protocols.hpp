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
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tiqc/circuit.hpp"
#include "tiqc/color_code.hpp"
#include "tiqc/schedules.hpp"

namespace tiqc {

struct ProtocolOptions {
  bool ancilla_prep_round = false;  // lattice surgery: run the step-0 X round on a |0>^7 ancilla
  bool case_logic = true;           // lattice surgery: boundary-error re-measurement
  bool flags = true;                // false drops the flag couplings (negative control)
  // Case 2 of the boundary re-measurement: false applies the complementary
  // edge operator on the same block, true corrects the qubit and flips the
  // recorded joint outcome.
  bool case2_flip_outcome = true;
  // Splitting before any detection: all conjugate checks (true) or only the
  // collapsed pair (false).
  bool full_split = false;
  bool omit_f2 = false;  // drop the second flag coupling (negative control)
};

struct Protocol {
  std::string name;
  Circuit circuit;
  StabilizerState initial{1};
  std::pair<uint32_t, uint32_t> bell_blocks;  // data offsets of the Bell pair
  std::vector<NamedSchedule> modules;         // in program order
  std::vector<uint32_t> live;
  std::vector<int> eps_regs;
  int lr_reg = -1;
  NoiseParams params;  // durations the circuit was compiled with
};

// Reference to a readout's registers; value() applies the sign convention.
struct ReadoutRef {
  int s = -1, f = -1, sign = 1;
  int value(const Exec& e) const { return sign * e.r(s); }
  int flag(const Exec& e) const { return f >= 0 ? e.r(f) : 1; }
};

namespace detail {

inline void apply_correction(Exec& e, const DecoderVerdict& v, uint32_t offset) {
  if (!v.qubits.empty()) e.correct(v.correction(e.circuit().n_qubits, offset));
}

inline PauliString paulis_on(size_t n, uint32_t offset, const std::vector<uint32_t>& qs, Basis b) {
  PauliString p(n);
  for (auto q : qs) p.set(offset + q, basis_code(b));
  return p;
}

}  // namespace detail

class ProtocolBuilder {
 public:
  ProtocolBuilder(std::string name, uint32_t n_qubits, Trap trap, std::vector<uint32_t> live, const NoiseParams& p,
                  ProtocolOptions opts)
      : trap_(std::move(trap)), cur_(trap_.reg), opts_(opts) {
    pr_.name = std::move(name);
    pr_.circuit.name = pr_.name;
    pr_.circuit.n_qubits = n_qubits;
    pr_.live = std::move(live);
    pr_.params = p;
    pr_.lr_reg = reg("lr");
  }

  const Trap& trap() const { return trap_; }
  const ProtocolOptions& options() const { return opts_; }
  Protocol& protocol() { return pr_; }
  int reg(const std::string& name) { return pr_.circuit.new_reg(name); }
  int lr() const { return pr_.lr_reg; }
  uint32_t n() const { return pr_.circuit.n_qubits; }

  // Builds one schedule module from the current ion layout, validates it and
  // returns its compiled nodes.
  template <class F>
  std::vector<Node> module(const std::string& name, F&& fn) {
    IonRegister start = cur_;
    ScheduleBuilder b(trap_.layout, cur_, name, &pr_.circuit.reg_names);
    fn(b);
    Schedule sch = b.take();
    auto res = validate(sch, trap_.layout, start);
    if (!res.ok())
      throw std::logic_error("schedule " + name + " step " + std::to_string(res.violations[0].step) + ": " +
                             res.violations[0].what);
    CompileContext ctx{&pr_.params, pr_.live};
    auto comp = compile(sch, start, ctx);
    pr_.modules.push_back({name, std::move(sch), std::move(start), {}});
    return comp.nodes;
  }

  std::vector<Node> flagged(const BlockIons& blk, Basis b, uint32_t p, const std::string& label, ReadoutRef& out) {
    if (!opts_.flags) {
      auto nodes = module(label, [&](ScheduleBuilder& sb) {
        out.s = sched::bare_readout(sb, blk, sched::plaquette_ions(blk, p), b, label);
      });
      out.f = -1;
      out.sign = bare_sign(4);
      return nodes;
    }
    auto nodes = module(label, [&](ScheduleBuilder& sb) {
      auto sl = sched::flagged_readout(sb, blk, b, p, label, !opts_.omit_f2);
      out.s = sl.s;
      out.f = sl.f;
    });
    out.sign = kFlaggedSign;
    return nodes;
  }

  std::vector<Node> unflagged(const BlockIons& blk, Basis b, uint32_t p, const std::string& label, ReadoutRef& out) {
    auto nodes = module(label, [&](ScheduleBuilder& sb) { out.s = sched::unflagged_readout(sb, blk, b, p, label); });
    out.f = -1;
    out.sign = kUnflaggedSign;
    return nodes;
  }

  // Un-flagged readouts of the three `b` checks of each block.
  std::vector<Node> unflagged_round(const std::vector<const BlockIons*>& blocks, Basis b, const std::string& label,
                                    std::vector<std::array<ReadoutRef, 3>>& refs) {
    std::vector<Node> nodes;
    refs.assign(blocks.size(), {});
    for (size_t k = 0; k < blocks.size(); k++)
      for (uint32_t p = 0; p < 3; p++) {
        auto m = unflagged(*blocks[k], b, p, label + "." + name_of(*blocks[k]) + ".S" + basis_char(b) + std::to_string(p + 1),
                           refs[k][p]);
        nodes.insert(nodes.end(), m.begin(), m.end());
      }
    return nodes;
  }

  std::string name_of(const BlockIons& blk) const {
    for (auto& [n, b] : trap_.blocks)
      if (b.arm == blk.arm) return n;
    return "?";
  }

  Protocol finish() {
    pr_.circuit.finalize();
    return std::move(pr_);
  }

 private:
  Trap trap_;
  IonRegister cur_;
  ProtocolOptions opts_;
  Protocol pr_;
};

inline std::array<int, 3> values(const std::array<ReadoutRef, 3>& refs, const Exec& e) {
  return {refs[0].value(e), refs[1].value(e), refs[2].value(e)};
}

// ----------------------------------------------------------------------------
// Flag-based QEC cycle on one block, Bell-paired with a noiseless reference.

inline Protocol flag_qec_protocol(const NoiseParams& params, ProtocolOptions opts = {}) {
  Trap trap = single_block_trap();
  const uint32_t n = 16, ref = 9;
  ProtocolBuilder pb("flag-qec", n, trap, {0, 1, 2, 3, 4, 5, 6}, params, opts);
  const BlockIons& blk = pb.trap().block("control");
  int stop = pb.reg("stop"), tb = pb.reg("trig.basis"), tp = pb.reg("trig.plaq"), tf = pb.reg("trig.flag");
  auto& nodes = pb.protocol().circuit.nodes;

  const std::array<std::pair<Basis, uint32_t>, 6> order = {
      {{Basis::X, 0}, {Basis::Z, 0}, {Basis::X, 1}, {Basis::Z, 1}, {Basis::X, 2}, {Basis::Z, 2}}};
  for (const auto& bp : order) {
    const Basis b = bp.first;
    const uint32_t p = bp.second;
    ReadoutRef r;
    std::string label = std::string("S") + basis_char(b) + std::to_string(p + 1);
    auto body = pb.flagged(blk, b, p, label, r);
    int lr = pb.lr();
    body.push_back(node::classical("check " + label, [=](Exec& e) {
      if (r.value(e) < 0 || r.flag(e) < 0) {
        e.r(stop) = 1;
        e.r(lr) = 1;
        e.r(tb) = b == Basis::X ? 0 : 1;
        e.r(tp) = static_cast<int>(p);
        e.r(tf) = r.flag(e);
      }
    }));
    nodes.push_back(node::block("stop==0", [=](const Exec& e) { return e.r(stop) == 0; }, std::move(body)));
  }

  std::vector<std::array<ReadoutRef, 3>> rx, rz;
  std::vector<Node> second;
  auto a = pb.unflagged_round({&blk}, Basis::X, "r2", rx);
  auto c = pb.unflagged_round({&blk}, Basis::Z, "r2", rz);
  second.insert(second.end(), a.begin(), a.end());
  second.insert(second.end(), c.begin(), c.end());
  auto rxs = rx[0], rzs = rz[0];
  second.push_back(node::classical("decode", [=](Exec& e) {
    bool flagged = e.r(tf) < 0;
    for (Basis sb : {Basis::Z, Basis::X}) {
      Syndrome s;
      s.basis = sb;
      s.r = values(sb == Basis::Z ? rzs : rxs, e);
      // A flag on a readout of the other type marks a possible hook.
      Basis readout_type = e.r(tb) == 0 ? Basis::X : Basis::Z;
      DecoderVerdict v;
      if (flagged && readout_type == conjugate(sb)) {
        s.flag = -1;
        s.flagged_plaquette = static_cast<uint32_t>(e.r(tp)) + 1;
        v = decode_flagged(s);
      } else {
        v = decode_unflagged(s);
      }
      detail::apply_correction(e, v, 0);
    }
  }));
  nodes.push_back(node::block("stop==1", [=](const Exec& e) { return e.r(stop) == 1; }, std::move(second)));

  Protocol pr = pb.finish();
  pr.bell_blocks = {0, ref};
  StabilizerState st(n);
  Rng rng(0x5eed);
  prepare_logical(st, steane_layout(), 0, Basis::X, rng);
  prepare_logical(st, steane_layout(), ref, Basis::Z, rng);
  for (uint32_t q = 0; q < 7; q++) st.apply(GateOp::cnot(q, ref + q));
  pr.initial = std::move(st);
  return pr;
}

// ----------------------------------------------------------------------------
// Transversal CNOT.

inline Protocol transversal_protocol(const NoiseParams& params, ProtocolOptions opts = {}) {
  Trap trap = transversal_trap();
  const uint32_t n = 18;
  std::vector<uint32_t> live;
  for (uint32_t q = 0; q < 7; q++) live.push_back(q);
  for (uint32_t q = 9; q < 16; q++) live.push_back(q);
  ProtocolBuilder pb("transversal-cnot", n, trap, live, params, opts);
  auto& nodes = pb.protocol().circuit.nodes;
  const Trap& t = pb.trap();
  const std::pair<const char*, void (*)(ScheduleBuilder&, const Trap&)> mods[] = {
      {"transversal-a", sched::transversal_a},
      {"transversal-b", sched::transversal_b},
      {"transversal-c", sched::transversal_c},
      {"transversal-d", sched::transversal_d}};
  for (auto& [name, fn] : mods) {
    auto m = pb.module(name, [&](ScheduleBuilder& b) { fn(b, t); });
    nodes.push_back(node::seq(name, std::move(m)));
  }
  Protocol pr = pb.finish();
  pr.bell_blocks = {0, 9};
  StabilizerState st(n);
  Rng rng(0x5eed);
  prepare_logical(st, steane_layout(), 0, Basis::X, rng);
  prepare_logical(st, steane_layout(), 9, Basis::Z, rng);
  pr.initial = std::move(st);
  return pr;
}

// ----------------------------------------------------------------------------
// Lattice-surgery CNOT: M_XX(ancilla, target), M_ZZ(control, ancilla), M_X(ancilla).

namespace detail {

struct MergeRegs {
  int eps = -1;    // joint logical outcome
  int split = -1;  // common sign of the collapsed checks before gauge fixing
};

class LatticeSurgery {
 public:
  LatticeSurgery(ProtocolBuilder& pb) : pb_(pb), t_(pb.trap()), nodes_(pb.protocol().circuit.nodes) {}

  // Weight-2 or weight-4 boundary readout with guests already in the host arm.
  std::vector<Node> boundary(const MergeGeometry& g, bool w4, const std::string& label, ReadoutRef& out) {
    auto ions = boundary_ions(t_, g, w4);
    auto nodes = pb_.module(label, [&](ScheduleBuilder& b) {
      out.s = sched::bare_readout(b, t_.block(g.host), ions, g.basis, label);
    });
    out.f = -1;
    out.sign = bare_sign(ions.size());
    return nodes;
  }

  // Measured twice, a third time iff the first two disagree (which sets the
  // low-resource switch); once when the switch is already set.
  void ft_boundary(const MergeGeometry& g, bool w4, const std::string& tag, int val) {
    int lr = pb_.lr();
    int need3 = pb_.reg(tag + ".need3");
    ReadoutRef m1, m2, m3;
    auto a = boundary(g, w4, tag + ".1", m1);
    nodes_.insert(nodes_.end(), a.begin(), a.end());
    nodes_.push_back(node::classical(tag + " first", [=](Exec& e) { e.r(val) = m1.value(e); }));
    auto b = boundary(g, w4, tag + ".2", m2);
    b.push_back(node::classical(tag + " compare", [=](Exec& e) {
      if (m2.value(e) != m1.value(e)) e.r(need3) = 1;
    }));
    nodes_.push_back(node::block("lr==0", [=](const Exec& e) { return e.r(lr) == 0; }, std::move(b)));
    auto c = boundary(g, w4, tag + ".3", m3);
    c.push_back(node::classical(tag + " third", [=](Exec& e) {
      e.r(val) = m3.value(e);
      e.r(lr) = 1;
    }));
    nodes_.push_back(node::block(tag + ".need3", [=](const Exec& e) { return e.r(need3) == 1; }, std::move(c)));
  }

  void merge(const MergeGeometry& g, const std::string& tag, MergeRegs regs, bool hook_round_on_guest,
             bool hook_round_on_host) {
    const int lr = pb_.lr();
    const uint32_t n = pb_.n();
    const BlockIons& guest = t_.block(g.guest);
    const BlockIons& host = t_.block(g.host);
    const std::array<const BlockIons*, 2> blocks = {&guest, &host};
    const std::array<uint32_t, 2> offs = {guest.qubit_offset, host.qubit_offset};
    const Basis cb = conjugate(g.basis);
    const auto& edge = steane_layout().edges[g.edge];

    // Boundary operators.
    auto all_guests = guest_ions(t_, g, true, true);
    auto homes = home_zones(t_.reg, all_guests);
    append(pb_.module(tag + ".enter", [&](ScheduleBuilder& b) {
      sched::enter_guests(b, t_, g.guest, g.host, all_guests);
    }));
    int v2 = pb_.reg(tag + ".w2"), v4 = pb_.reg(tag + ".w4");
    ft_boundary(g, false, tag + ".w2", v2);
    ft_boundary(g, true, tag + ".w4", v4);
    append(pb_.module(tag + ".exit", [&](ScheduleBuilder& b) {
      sched::exit_guests(b, t_, g.guest, g.host, all_guests, homes);
    }));
    nodes_.push_back(node::classical(tag + " eps", [=](Exec& e) { e.r(regs.eps) = e.r(v2) * e.r(v4); }));

    // Same-basis QEC: flagged round, un-flagged round on detection.
    std::array<int, 2> hook = {pb_.reg(tag + ".hook.guest"), pb_.reg(tag + ".hook.host")};
    std::array<int, 2> loc = {pb_.reg(tag + ".loc.guest"), pb_.reg(tag + ".loc.host")};
    for (int k = 0; k < 2; k++)
      for (uint32_t p = 0; p < 3; p++) {
        ReadoutRef r;
        std::string label = tag + ".qec." + (k ? "host" : "guest") + ".S" + basis_char(g.basis) + std::to_string(p + 1);
        auto body = pb_.flagged(*blocks[k], g.basis, p, label, r);
        int h = hook[k];
        body.push_back(node::classical("check " + label, [=](Exec& e) {
          if (r.flag(e) < 0) e.r(h) = static_cast<int>(p) + 1;
          if (r.value(e) < 0 || r.flag(e) < 0) e.r(lr) = 1;
        }));
        nodes_.push_back(node::block("lr==0", [=](const Exec& e) { return e.r(lr) == 0; }, std::move(body)));
      }
    {
      std::vector<std::array<ReadoutRef, 3>> refs;
      auto body = pb_.unflagged_round({&guest, &host}, g.basis, tag + ".qec2", refs);
      std::vector<uint32_t> boundary_q = g.w2_qubits;
      boundary_q.insert(boundary_q.end(), g.w4_qubits.begin(), g.w4_qubits.end());
      bool case_logic = pb_.options().case_logic;
      body.push_back(node::classical(tag + " qec decode", [=](Exec& e) {
        for (int k = 0; k < 2; k++) {
          Syndrome s;
          s.basis = g.basis;
          s.r = values(refs[k], e);
          auto v = decode_unflagged(s);
          if (v.qubits.empty()) continue;
          uint32_t q = v.qubits[0];
          bool on_boundary = std::find(boundary_q.begin(), boundary_q.end(), q) != boundary_q.end();
          if (case_logic && on_boundary)
            e.r(loc[k]) = static_cast<int>(q) + 1;
          else
            apply_correction(e, v, offs[k]);
        }
      }));
      nodes_.push_back(node::block("lr==1", [=](const Exec& e) { return e.r(lr) == 1; }, std::move(body)));
    }

    // Boundary-error re-measurement: third outcome differs -> the error came
    // after the boundary readout, correct it directly; agrees -> it came
    // before, correct with the complementary edge operator instead.
    if (pb_.options().case_logic) {
      for (int k = 0; k < 2; k++)
        for (bool w4 : {false, true}) {
          const auto& qs = w4 ? g.w4_qubits : g.w2_qubits;
          std::string wtag = tag + ".case." + (k ? "host" : "guest") + (w4 ? ".w4" : ".w2");
          auto guests = guest_ions(t_, g, !w4, w4);
          auto gh = home_zones(t_.reg, guests);
          std::vector<Node> body = pb_.module(wtag + ".enter", [&](ScheduleBuilder& b) {
            sched::enter_guests(b, t_, g.guest, g.host, guests);
          });
          ReadoutRef m;
          auto mm = boundary(g, w4, wtag, m);
          body.insert(body.end(), mm.begin(), mm.end());
          auto ex = pb_.module(wtag + ".exit", [&](ScheduleBuilder& b) {
            sched::exit_guests(b, t_, g.guest, g.host, guests, gh);
          });
          body.insert(body.end(), ex.begin(), ex.end());
          int recorded = w4 ? v4 : v2;
          int lk = loc[k];
          uint32_t off = offs[k];
          std::vector<uint32_t> edge_q(edge.begin(), edge.end());
          Basis err = cb;
          bool flip = pb_.options().case2_flip_outcome;
          int eps = regs.eps;
          body.push_back(node::classical(wtag + " correct", [=](Exec& e) {
            uint32_t q = static_cast<uint32_t>(e.r(lk) - 1);
            std::vector<uint32_t> fix;
            if (m.value(e) != e.r(recorded)) {
              fix = {q};
            } else if (flip) {
              fix = {q};
              e.r(eps) = -e.r(eps);
            } else {
              for (auto x : edge_q)
                if (x != q) fix.push_back(x);
            }
            e.correct(paulis_on(n, off, fix, err));
            e.r(lk) = 0;
          }));
          nodes_.push_back(node::block(wtag, [=](const Exec& e) {
            int v = e.r(lk);
            return v > 0 && std::find(qs.begin(), qs.end(), static_cast<uint32_t>(v - 1)) != qs.end();
          }, std::move(body)));
        }
    }

    // Splitting. Before any detection all conjugate checks are read out with
    // flags (early stop); the collapsed pair must agree.
    std::array<int, 2> sflag = {pb_.reg(tag + ".sflag.guest"), pb_.reg(tag + ".sflag.host")};
    std::array<ReadoutRef, 3> guest_refs;
    ReadoutRef guest_collapsed;
    for (int k = 0; k < 2; k++)
      for (uint32_t p = 0; p < 3; p++) {
        if (!pb_.options().full_split && p != g.collapsed) continue;
        std::string label = tag + ".split." + (k ? "host" : "guest") + ".S" + basis_char(cb) + std::to_string(p + 1);
        ReadoutRef mine;
        auto body = pb_.flagged(*blocks[k], cb, p, label, mine);
        if (k == 0 && p == g.collapsed) guest_collapsed = mine;
        ReadoutRef first = guest_collapsed;
        int sf = sflag[k];
        bool is_collapsed = p == g.collapsed;
        body.push_back(node::classical("check " + label, [=](Exec& e) {
          if (mine.flag(e) < 0) {
            e.r(sf) = static_cast<int>(p) + 1;
            e.r(lr) = 1;
          }
          if (!is_collapsed && mine.value(e) < 0) e.r(lr) = 1;
          if (is_collapsed && k == 1 && mine.value(e) != first.value(e)) e.r(lr) = 1;
        }));
        nodes_.push_back(node::block("lr==0", [=](const Exec& e) { return e.r(lr) == 0; }, std::move(body)));
      }
    PauliString gauge_op(n);
    for (auto q : g.w2_qubits) {
      gauge_op.set(offs[0] + q, basis_code(g.basis));
      gauge_op.set(offs[1] + q, basis_code(g.basis));
    }
    {
      std::vector<std::array<ReadoutRef, 3>> refs;
      auto body = pb_.unflagged_round({&guest, &host}, cb, tag + ".split2", refs);
      uint32_t col = g.collapsed;
      body.push_back(node::classical(tag + " joint decode", [=](Exec& e) {
        std::array<std::array<int, 3>, 2> r = {values(refs[0], e), values(refs[1], e)};
        std::array<std::optional<uint32_t>, 2> hk;
        for (int k = 0; k < 2; k++)
          if (e.r(hook[k]) > 0) hk[k] = static_cast<uint32_t>(e.r(hook[k]) - 1);
        auto jd = joint_decode_shared(r, col, hk);
        for (int k = 0; k < 2; k++) e.correct(paulis_on(n, offs[k], jd.qubits[k], g.basis));
        e.r(regs.split) = jd.gauge;
        if (jd.gauge < 0) e.correct(gauge_op);
      }));
      ReadoutRef s0 = guest_collapsed;
      std::vector<Node> orelse = {node::classical(tag + " gauge", [=](Exec& e) {
        int v = s0.value(e);
        e.r(regs.split) = v;
        if (v < 0) e.correct(gauge_op);
      })};
      nodes_.push_back(
          node::block("lr==1", [=](const Exec& e) { return e.r(lr) == 1; }, std::move(body), std::move(orelse)));
    }

    // Hook-error detection after a split flag.
    std::array<bool, 2> enabled = {hook_round_on_guest, hook_round_on_host};
    for (int k = 0; k < 2; k++) {
      if (!enabled[k]) continue;
      std::vector<std::array<ReadoutRef, 3>> refs;
      auto body = pb_.unflagged_round({blocks[k]}, g.basis, tag + ".hook", refs);
      uint32_t off = offs[k];
      Basis sb = g.basis;
      int sf = sflag[k];
      body.push_back(node::classical(tag + " hook decode", [=](Exec& e) {
        Syndrome s;
        s.basis = sb;
        s.r = values(refs[0], e);
        s.flag = -1;
        s.flagged_plaquette = static_cast<uint32_t>(e.r(sf));
        apply_correction(e, decode_flagged(s), off);
      }));
      nodes_.push_back(node::block(tag + ".sflag", [=](const Exec& e) { return e.r(sf) > 0; }, std::move(body)));
    }
  }

  void append(std::vector<Node> v) { nodes_.insert(nodes_.end(), v.begin(), v.end()); }

 private:
  ProtocolBuilder& pb_;
  const Trap& t_;
  std::vector<Node>& nodes_;
};

}  // namespace detail

inline Protocol lattice_surgery_protocol(const NoiseParams& params, ProtocolOptions opts = {}) {
  Trap trap = lattice_surgery_trap();
  const uint32_t n = 27;
  std::vector<uint32_t> live;
  for (uint32_t b = 0; b < 3; b++)
    for (uint32_t q = 0; q < 7; q++) live.push_back(9 * b + q);
  ProtocolBuilder pb("lattice-surgery-cnot", n, trap, live, params, opts);
  const Trap& t = pb.trap();
  auto& nodes = pb.protocol().circuit.nodes;
  const BlockIons& anc = t.block("ancilla");
  const uint32_t ctrl_off = t.block("control").qubit_offset, anc_off = anc.qubit_offset,
                 tgt_off = t.block("target").qubit_offset;
  int lr = pb.lr();

  if (opts.ancilla_prep_round) {
    // |0>^7 -> |0>_L: random X-check signs are fixed on the private qubits.
    for (uint32_t p = 0; p < 3; p++) {
      ReadoutRef r;
      auto body = pb.flagged(anc, Basis::X, p, "prep.SX" + std::to_string(p + 1), r);
      uint32_t pq = anc_off + private_qubit(steane_layout(), p);
      body.push_back(node::classical("prep fix", [=](Exec& e) {
        if (r.value(e) < 0) e.correct(pq, 3);
        if (r.flag(e) < 0) e.r(lr) = 1;
      }));
      nodes.push_back(node::seq("prep", std::move(body)));
    }
  }

  detail::LatticeSurgery ls(pb);
  detail::MergeRegs xx{pb.reg("eps1"), pb.reg("eps4")};
  detail::MergeRegs zz{pb.reg("eps2"), pb.reg("eps.split.zz")};
  ls.merge(merge_xx(), "mxx", xx, true, true);
  ls.merge(merge_zz(), "mzz", zz, true, false);  // the ancilla's X-type hooks cannot affect M_X

  int e3 = pb.reg("eps3");
  std::array<int, 7> mx{};
  auto fin = pb.module("final-mx", [&](ScheduleBuilder& b) { mx = sched::final_mx(b, anc, "mx"); });
  nodes.insert(nodes.end(), fin.begin(), fin.end());
  const auto& xedge = steane_layout().edges[steane_layout().default_edge];
  std::vector<uint32_t> xl(xedge.begin(), xedge.end());
  int e1 = xx.eps, e2 = zz.eps;
  PauliString zc = default_logical(steane_layout(), Basis::Z, n, ctrl_off);
  PauliString xt = default_logical(steane_layout(), Basis::X, n, tgt_off);
  nodes.push_back(node::classical("mx decode + frame", [=](Exec& e) {
    Syndrome s;
    s.basis = Basis::X;
    for (uint32_t p = 0; p < 3; p++) {
      int v = 1;
      for (auto q : steane_layout().plaquettes[p]) v *= e.r(mx[q]);
      s.r[p] = v;
    }
    auto v = decode_unflagged(s);
    int x = 1;
    for (auto q : xl) {
      int m = e.r(mx[q]);
      if (!v.qubits.empty() && v.qubits[0] == q) m = -m;
      x *= m;
    }
    e.r(e3) = x;
    if (e.r(e1) * x < 0) e.correct(zc);
    if (e.r(e2) < 0) e.correct(xt);
  }));

  Protocol pr = pb.finish();
  pr.bell_blocks = {ctrl_off, tgt_off};
  pr.eps_regs = {e1, e2, e3, xx.split};
  StabilizerState st(n);
  Rng rng(0x5eed);
  prepare_logical(st, steane_layout(), ctrl_off, Basis::X, rng);
  if (!opts.ancilla_prep_round) prepare_logical(st, steane_layout(), anc_off, Basis::Z, rng);
  prepare_logical(st, steane_layout(), tgt_off, Basis::Z, rng);
  pr.initial = std::move(st);
  return pr;
}

inline Protocol make_protocol(const std::string& name, const NoiseParams& p, ProtocolOptions o = {}) {
  if (name == "flag-qec") return flag_qec_protocol(p, o);
  if (name == "transversal-cnot" || name == "transversal") return transversal_protocol(p, o);
  if (name == "lattice-surgery-cnot" || name == "lattice-surgery") return lattice_surgery_protocol(p, o);
  throw std::invalid_argument("unknown protocol: " + name);
}

inline const std::vector<std::string>& protocol_names() {
  static const std::vector<std::string> v = {"flag-qec", "transversal-cnot", "lattice-surgery-cnot"};
  return v;
}

// ----------------------------------------------------------------------------
// One shot of the Bell-pair experiment.

struct ShotResult {
  bool x_fail = false;
  bool z_fail = false;
  ResourceTally tally;
  Census executed{};
  Census realized{};
  uint64_t unrealized = 0;
  bool low_resource = false;
  std::vector<int> eps;
};

struct FaultSource {
  const FaultAssignment* assignment = nullptr;
  CensusPolicy policy = CensusPolicy::Reference;
  const ClassProbs* bernoulli = nullptr;
};

inline ShotResult bell_pair_experiment(const Protocol& pr, FaultSource src, uint64_t seed) {
  Exec ex(pr.circuit, pr.initial, seed);
  if (src.assignment) ex.set_assignment(*src.assignment, src.policy);
  if (src.bernoulli) ex.set_bernoulli(*src.bernoulli);
  ex.run();
  ex.flush_frame();
  Rng vr(seed ^ 0x9e3779b97f4a7c15ull);
  auto v = bell_verdict(ex.state, steane_layout(), pr.bell_blocks.first, pr.bell_blocks.second, vr);
  ShotResult r;
  r.x_fail = v.x_fail;
  r.z_fail = v.z_fail;
  r.tally = ex.tally;
  r.executed = ex.executed;
  r.realized = ex.realized;
  r.unrealized = ex.unrealized;
  r.low_resource = pr.lr_reg >= 0 && ex.r(pr.lr_reg) != 0;
  for (int reg : pr.eps_regs) r.eps.push_back(ex.r(reg));
  return r;
}

// Error-free reference run: resources and per-class location counts n_i.
inline ShotResult reference_run(const Protocol& pr, uint64_t seed = 1) { return bell_pair_experiment(pr, {}, seed); }

}  // namespace tiqc
