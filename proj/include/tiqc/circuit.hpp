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
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tiqc/gates.hpp"
#include "tiqc/noise.hpp"
#include "tiqc/pauli.hpp"
#include "tiqc/tableau.hpp"

namespace tiqc {

struct ResourceTally {
  uint64_t one_q = 0;
  uint64_t ms2 = 0;
  uint64_t ms5 = 0;
  uint64_t measurements = 0;
  uint64_t resets = 0;
  uint64_t crossings = 0;  // ion-crossings, always counted per ion
  uint64_t reorder = 0;    // split/merge/shuttle/rotate steps
  uint64_t cool = 0;
  double fixed_seconds = 0;  // everything except junction crossings
  uint64_t cross_units = 0;  // crossings charged t_cross each (depends on accounting)

  double elapsed(double t_cross_s) const { return fixed_seconds + static_cast<double>(cross_units) * t_cross_s; }

  ResourceTally& operator+=(const ResourceTally& o) {
    one_q += o.one_q;
    ms2 += o.ms2;
    ms5 += o.ms5;
    measurements += o.measurements;
    resets += o.resets;
    crossings += o.crossings;
    reorder += o.reorder;
    cool += o.cool;
    fixed_seconds += o.fixed_seconds;
    cross_units += o.cross_units;
    return *this;
  }
  bool operator==(const ResourceTally&) const = default;
};

inline FaultClass gate_class(const GateOp& g) {
  switch (g.kind) {
    case GateKind::MS2:
    case GateKind::CNOT: return FaultClass::TwoQ;
    case GateKind::MS5: return FaultClass::FiveQ;
    default: return FaultClass::OneQ;
  }
}

class Exec;

enum class NodeKind : uint8_t { Gate, Measure, Reset, Idle, Cross, Classical, Block };

struct Node {
  NodeKind kind = NodeKind::Classical;
  GateOp gate{};
  std::vector<uint32_t> qubits;  // measure/reset: one qubit; idle/cross: affected qubits
  uint32_t count = 0;            // idle quanta or crossing units
  int slot = -1;                 // measurement register
  std::function<void(Exec&)> action;
  std::function<bool(const Exec&)> guard;
  std::vector<Node> body, orelse;
  std::string text;
  ResourceTally tally;
  Census base{};  // static ordinal of the first location per class

  uint64_t locations(FaultClass c) const {
    switch (kind) {
      case NodeKind::Gate: return gate_class(gate) == c ? 1 : 0;
      case NodeKind::Measure:
      case NodeKind::Reset: return c == FaultClass::PrepMeas ? 1 : 0;
      case NodeKind::Idle: return c == FaultClass::Idle ? qubits.size() * count : 0;
      case NodeKind::Cross: return c == FaultClass::Cross ? qubits.size() * count : 0;
      default: return 0;
    }
  }
  FaultClass location_class() const {
    switch (kind) {
      case NodeKind::Gate: return gate_class(gate);
      case NodeKind::Idle: return FaultClass::Idle;
      case NodeKind::Cross: return FaultClass::Cross;
      default: return FaultClass::PrepMeas;
    }
  }
};

// Node factories.
namespace node {
inline Node gate(GateOp g, ResourceTally t = {}) {
  Node n;
  n.kind = NodeKind::Gate;
  n.gate = std::move(g);
  n.tally = t;
  return n;
}
inline Node measure(uint32_t q, int slot, ResourceTally t = {}) {
  Node n;
  n.kind = NodeKind::Measure;
  n.qubits = {q};
  n.slot = slot;
  n.tally = t;
  return n;
}
inline Node reset(uint32_t q, ResourceTally t = {}) {
  Node n;
  n.kind = NodeKind::Reset;
  n.qubits = {q};
  n.tally = t;
  return n;
}
inline Node idle(std::vector<uint32_t> qs, uint32_t quanta, ResourceTally t = {}) {
  Node n;
  n.kind = NodeKind::Idle;
  n.qubits = std::move(qs);
  n.count = quanta;
  n.tally = t;
  return n;
}
inline Node cross(std::vector<uint32_t> qs, uint32_t units, ResourceTally t = {}) {
  Node n;
  n.kind = NodeKind::Cross;
  n.qubits = std::move(qs);
  n.count = units;
  n.tally = t;
  return n;
}
inline Node classical(std::string text, std::function<void(Exec&)> fn) {
  Node n;
  n.kind = NodeKind::Classical;
  n.text = std::move(text);
  n.action = std::move(fn);
  return n;
}
inline Node block(std::string text, std::function<bool(const Exec&)> guard, std::vector<Node> body,
                  std::vector<Node> orelse = {}) {
  Node n;
  n.kind = NodeKind::Block;
  n.text = std::move(text);
  n.guard = std::move(guard);
  n.body = std::move(body);
  n.orelse = std::move(orelse);
  return n;
}
// Unconditional grouping, used to attach a label to a module.
inline Node seq(std::string text, std::vector<Node> body) { return block(std::move(text), nullptr, std::move(body)); }
}  // namespace node

struct Circuit {
  std::string name;
  uint32_t n_qubits = 0;
  std::vector<Node> nodes{};
  std::vector<std::string> reg_names{};
  Census static_census{};

  int new_reg(std::string name) {
    reg_names.push_back(std::move(name));
    return static_cast<int>(reg_names.size()) - 1;
  }

  // Assigns static ordinals depth-first (body before orelse). Must be called
  // after construction and before execution.
  void finalize() {
    static_census = {};
    for (auto& n : nodes) number(n);
  }

  std::string dump() const {
    std::ostringstream os;
    os << "# circuit " << name << " qubits=" << n_qubits << " registers=" << reg_names.size() << "\n";
    for (auto& n : nodes) dump_node(os, n, 0);
    return os.str();
  }

 private:
  void number(Node& n) {
    for (size_t c = 0; c < kNumClasses; c++) {
      n.base[c] = static_census[c];
      static_census[c] += n.locations(static_cast<FaultClass>(c));
    }
    for (auto& b : n.body) number(b);
    for (auto& b : n.orelse) number(b);
  }

  void dump_node(std::ostringstream& os, const Node& n, int depth) const {
    std::string pad(2 * depth, ' ');
    auto qs = [&] {
      std::string s;
      for (auto q : n.qubits) s += " " + std::to_string(q);
      return s;
    };
    switch (n.kind) {
      case NodeKind::Gate: os << pad << "gate " << n.gate.str() << "\n"; break;
      case NodeKind::Measure:
        os << pad << "measure" << qs() << " -> " << (n.slot >= 0 ? reg_names[n.slot] : "_") << "\n";
        break;
      case NodeKind::Reset: os << pad << "reset" << qs() << "\n"; break;
      case NodeKind::Idle: os << pad << "idle quanta=" << n.count << qs() << "\n"; break;
      case NodeKind::Cross: os << pad << "jcross units=" << n.count << qs() << "\n"; break;
      case NodeKind::Classical: os << pad << "classical " << n.text << "\n"; break;
      case NodeKind::Block:
        os << pad << (n.guard ? "if " : "block ") << n.text << "\n";
        for (auto& b : n.body) dump_node(os, b, depth + 1);
        if (!n.orelse.empty()) {
          os << pad << "else\n";
          for (auto& b : n.orelse) dump_node(os, b, depth + 1);
        }
        os << pad << "end\n";
        break;
    }
  }
};

enum class CensusPolicy : uint8_t { Reference, Program };

inline const char* policy_name(CensusPolicy p) { return p == CensusPolicy::Reference ? "reference" : "program"; }
inline CensusPolicy parse_policy(const std::string& s) {
  if (s == "reference") return CensusPolicy::Reference;
  if (s == "program") return CensusPolicy::Program;
  throw std::invalid_argument("census policy must be reference or program");
}

// (class, ordinal) -> error index within the class support.
struct FaultAssignment {
  struct Item {
    uint64_t ordinal;
    uint32_t error;
  };
  std::array<std::vector<Item>, kNumClasses> items;

  void add(FaultClass c, uint64_t ordinal, uint32_t error) { items[static_cast<size_t>(c)].push_back({ordinal, error}); }
  void sort() {
    for (auto& v : items)
      std::sort(v.begin(), v.end(), [](const Item& a, const Item& b) { return a.ordinal < b.ordinal; });
  }
  size_t size() const {
    size_t s = 0;
    for (auto& v : items) s += v.size();
    return s;
  }
};

// Per-shot interpreter. Owns the state, the register file, the Pauli frame
// and the fault cursors. Thread-confined.
class Exec {
 public:
  Exec(const Circuit& c, StabilizerState initial, uint64_t seed)
      : state(std::move(initial)), rng(seed), reg(c.reg_names.size(), 0), frame(c.n_qubits), circuit_(&c) {
    if (state.n_qubits() != c.n_qubits) throw std::invalid_argument("Exec: state/circuit size mismatch");
  }

  StabilizerState state;
  Rng rng;
  std::vector<int> reg;
  PauliString frame;
  bool deferred = false;  // keep corrections in the frame instead of the state
  ResourceTally tally;
  Census executed{};  // locations walked, per class
  Census realized{};  // injected errors, per class
  uint64_t unrealized = 0;
  std::function<void(const Exec&, const Node&)> trace;  // called on classical and block nodes
  std::function<void(const Node&, uint64_t offset, uint32_t error)> on_fault;

  void set_assignment(FaultAssignment a, CensusPolicy policy) {
    a.sort();
    assignment_ = std::move(a);
    policy_ = policy;
    bernoulli_ = false;
  }
  // Independent per-location errors, indexed in execution order.
  void set_bernoulli(const ClassProbs& p) {
    bernoulli_ = true;
    probs_ = p;
    for (size_t c = 0; c < kNumClasses; c++) next_[c] = draw_gap(c, 0);
  }

  void run() {
    for (auto& n : circuit_->nodes) step(n);
    for (size_t c = 0; c < kNumClasses; c++) unrealized += assignment_.items[c].size() - cursor_[c];
  }

  // Pauli correction decided by the protocol.
  void correct(const PauliString& p) {
    if (deferred)
      frame = frame * p;
    else
      state.apply_pauli(p);
  }
  void correct(uint32_t q, uint8_t code) { correct(PauliString::single(circuit_->n_qubits, q, code)); }

  // Pushes the frame into the state (verdict time).
  void flush_frame() {
    if (!frame.is_identity()) state.apply_pauli(frame);
    frame = PauliString(circuit_->n_qubits);
  }

  const Circuit& circuit() const { return *circuit_; }
  int& r(int slot) { return reg[slot]; }
  int r(int slot) const { return reg[slot]; }

 private:
  // Ordinal of the next error at or after `from`.
  uint64_t draw_gap(size_t c, uint64_t from) {
    if (probs_[c] <= 0) return UINT64_MAX;
    if (probs_[c] >= 1) return from;
    std::geometric_distribution<uint64_t> g(probs_[c]);
    return from + g(rng);
  }

  void step(const Node& n) {
    switch (n.kind) {
      case NodeKind::Gate:
        state.apply(n.gate);
        if (deferred) frame = conjugate(n.gate, frame);
        break;
      case NodeKind::Measure: {
        uint32_t q = n.qubits[0];
        inject(n);  // flip before measuring
        int m = state.measure_z(q, rng);
        if (deferred && frame.x(q)) m = -m;
        if (n.slot >= 0) reg[n.slot] = m;
        break;
      }
      case NodeKind::Reset:
        state.reset(n.qubits[0], rng);
        if (deferred) frame.set(n.qubits[0], 0);
        break;
      case NodeKind::Classical:
        if (trace) trace(*this, n);
        if (n.action) n.action(*this);
        break;
      case NodeKind::Block:
        if (trace) trace(*this, n);
        tally += n.tally;
        if (!n.guard || n.guard(*this)) {
          for (auto& b : n.body) step(b);
        } else {
          for (auto& b : n.orelse) step(b);
        }
        return;
      default:
        break;
    }
    tally += n.tally;
    if (n.kind != NodeKind::Measure) inject(n);
  }

  void inject(const Node& n) {
    FaultClass fc = n.location_class();
    size_t c = static_cast<size_t>(fc);
    uint64_t len = n.locations(fc);
    if (len == 0) return;
    uint64_t lo = executed[c];
    executed[c] += len;
    if (bernoulli_) {
      while (next_[c] < lo + len) {
        uint32_t e = static_cast<uint32_t>(std::uniform_int_distribution<uint32_t>(0, support_size(fc) - 1)(rng));
        apply_error(n, fc, next_[c] - lo, e);
        realized[c]++;
        next_[c] = draw_gap(c, next_[c] + 1);
      }
      return;
    }
    auto& items = assignment_.items[c];
    size_t& cur = cursor_[c];
    if (policy_ == CensusPolicy::Program) lo = n.base[c];
    while (cur < items.size() && items[cur].ordinal < lo + len) {
      if (items[cur].ordinal >= lo) {
        apply_error(n, fc, items[cur].ordinal - lo, items[cur].error);
        realized[c]++;
      } else {
        unrealized++;
      }
      cur++;
    }
  }

  void apply_error(const Node& n, FaultClass fc, uint64_t offset, uint32_t error) {
    if (on_fault) on_fault(n, offset, error);
    uint32_t code = error_code(fc, error);
    switch (n.kind) {
      case NodeKind::Gate:
        for (size_t t = 0; t < n.gate.targets.size(); t++) {
          uint8_t p = code_on_target(code, t);
          if (p) state.apply_pauli(n.gate.targets[t], p);
        }
        break;
      case NodeKind::Measure:
      case NodeKind::Reset:
        state.apply_pauli(n.qubits[0], 1);
        break;
      case NodeKind::Idle:
      case NodeKind::Cross:
        state.apply_pauli(n.qubits[offset % n.qubits.size()], 3);
        break;
      default:
        break;
    }
  }

  const Circuit* circuit_;
  FaultAssignment assignment_;
  CensusPolicy policy_ = CensusPolicy::Reference;
  std::array<size_t, kNumClasses> cursor_{};
  bool bernoulli_ = false;
  ClassProbs probs_{};
  Census next_{};
};

}  // namespace tiqc
