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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiqc/pauli.hpp"
#include "tiqc/tableau.hpp"

namespace tiqc {

enum class Basis : uint8_t { X, Z };
inline Basis conjugate(Basis b) { return b == Basis::X ? Basis::Z : Basis::X; }
inline uint8_t basis_code(Basis b) { return b == Basis::X ? 1 : 3; }
inline char basis_char(Basis b) { return b == Basis::X ? 'X' : 'Z'; }

// d=3 triangular color code. Qubits are 0-based here; the docs and tables use
// 1..7. Plaquettes {1,2,3,4}, {2,3,5,6}, {3,4,6,7}; qubit 3 is the center.
struct CodeLayout {
  static constexpr uint32_t n_data = 7;
  static constexpr uint32_t distance = 3;
  static constexpr uint32_t n_plaquettes = 3;
  std::array<std::array<uint32_t, 4>, 3> plaquettes{};
  // Triangle edges, each of weight 3. Edge 2 carries the default logicals.
  std::array<std::array<uint32_t, 3>, 3> edges{};
  uint32_t default_edge = 2;

  // Plaquette membership bitmask of a data qubit (bit p set iff q in plaquette p).
  uint32_t membership(uint32_t q) const {
    uint32_t m = 0;
    for (uint32_t p = 0; p < 3; p++)
      for (auto v : plaquettes[p])
        if (v == q) m |= 1u << p;
    return m;
  }
};

inline const CodeLayout& steane_layout() {
  static const CodeLayout layout = [] {
    CodeLayout c;
    c.plaquettes = {{{0, 1, 2, 3}, {1, 2, 4, 5}, {2, 3, 5, 6}}};
    c.edges = {{{0, 1, 4}, {0, 3, 6}, {4, 5, 6}}};
    return c;
  }();
  return layout;
}

inline uint32_t code_size(uint32_t d) { return (d * d + 2 * d - 1) / 2; }

// Weight-4 stabilizer on plaquette p (1-based), embedded at `offset` in an
// n_total-qubit register.
inline PauliString stabilizer_pauli(const CodeLayout& c, Basis b, uint32_t p, size_t n_total = 7,
                                    uint32_t offset = 0) {
  if (p < 1 || p > 3) throw std::invalid_argument("plaquette id must be 1, 2 or 3");
  PauliString s(n_total);
  for (auto q : c.plaquettes[p - 1]) s.set(offset + q, basis_code(b));
  return s;
}

inline PauliString logical_operator(const CodeLayout& c, Basis b, uint32_t edge, size_t n_total = 7,
                                    uint32_t offset = 0) {
  if (edge > 2) throw std::invalid_argument("edge must be 0, 1 or 2");
  PauliString s(n_total);
  for (auto q : c.edges[edge]) s.set(offset + q, basis_code(b));
  return s;
}
inline PauliString default_logical(const CodeLayout& c, Basis b, size_t n_total = 7, uint32_t offset = 0) {
  return logical_operator(c, b, c.default_edge, n_total, offset);
}

// ----------------------------------------------------------------------------
// Look-up decoding.

// Syndrome bits: index = (r1<0)*4 + (r2<0)*2 + (r3<0).
inline uint32_t syndrome_index(const std::array<int, 3>& r) {
  return (r[0] < 0 ? 4u : 0u) | (r[1] < 0 ? 2u : 0u) | (r[2] < 0 ? 1u : 0u);
}
inline std::array<int, 3> syndrome_from_index(uint32_t i) {
  return {(i & 4) ? -1 : 1, (i & 2) ? -1 : 1, (i & 1) ? -1 : 1};
}

struct Syndrome {
  Basis basis = Basis::Z;  // type of the three stabilizers in r
  std::array<int, 3> r{1, 1, 1};
  std::optional<int> flag;
  std::optional<uint32_t> flagged_plaquette;  // 1-based

  void check() const {
    for (int v : r)
      if (v != 1 && v != -1) throw std::invalid_argument("syndrome entries must be +-1");
    if (flag.has_value() != flagged_plaquette.has_value())
      throw std::invalid_argument("flag and flagged_plaquette must be given together");
    if (flag && *flag != 1 && *flag != -1) throw std::invalid_argument("flag must be +-1");
    if (flagged_plaquette && (*flagged_plaquette < 1 || *flagged_plaquette > 3))
      throw std::invalid_argument("flagged plaquette must be 1, 2 or 3");
  }
};

enum class Verdict : uint8_t { NoError, MeasurementError, Weight1, Weight2Hook, FlagPlusData };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::NoError: return "no-error";
    case Verdict::MeasurementError: return "measurement-error";
    case Verdict::Weight1: return "weight-1";
    case Verdict::Weight2Hook: return "weight-2-hook";
    case Verdict::FlagPlusData: return "flag-plus-data";
  }
  return "?";
}

struct DecoderVerdict {
  std::vector<uint32_t> qubits;  // 0-based data qubits
  Basis error_basis = Basis::X;  // Pauli type of the correction
  Verdict classified_as = Verdict::NoError;
  bool grey = true;  // cell reachable by a single fault

  PauliString correction(size_t n_total = 7, uint32_t offset = 0) const {
    PauliString p(n_total);
    for (auto q : qubits) p.set(offset + q, basis_code(error_basis));
    return p;
  }
  // Number of faults the verdict explains.
  int fault_cost() const {
    switch (classified_as) {
      case Verdict::NoError: return 0;
      case Verdict::FlagPlusData: return 2;
      default: return 1;
    }
  }
};

namespace detail {

struct Cell {
  std::vector<uint32_t> qubits;  // 1-based as printed
  Verdict v;
  bool grey;
};

// Column 1: the single qubit (1-based) whose membership pattern matches.
inline constexpr std::array<uint32_t, 8> kUnflagged = {0, 7, 5, 6, 1, 4, 2, 3};

inline const std::array<std::array<Cell, 8>, 3>& flag_table() {
  using V = Verdict;
  static const std::array<std::array<Cell, 8>, 3> t = {{
      {{{{}, V::MeasurementError, true},
        {{7}, V::FlagPlusData, false},
        {{3, 4}, V::Weight2Hook, true},
        {{6}, V::FlagPlusData, false},
        {{1}, V::Weight1, true},
        {{4}, V::Weight1, true},
        {{2}, V::FlagPlusData, false},
        {{3}, V::FlagPlusData, false}}},
      {{{{}, V::MeasurementError, true},
        {{5, 6}, V::Weight2Hook, true},
        {{5}, V::FlagPlusData, false},
        {{6}, V::Weight1, true},
        {{1}, V::FlagPlusData, false},
        {{4}, V::FlagPlusData, false},
        {{2}, V::Weight1, true},
        {{3}, V::FlagPlusData, false}}},
      {{{{}, V::MeasurementError, true},
        {{7}, V::Weight1, true},
        {{6, 7}, V::Weight2Hook, true},
        {{6}, V::FlagPlusData, false},
        {{1}, V::FlagPlusData, false},
        {{4}, V::FlagPlusData, false},
        {{2}, V::FlagPlusData, false},
        {{3}, V::Weight1, true}}},
  }};
  return t;
}

}  // namespace detail

inline DecoderVerdict decode_unflagged(const Syndrome& s) {
  s.check();
  if (s.flag) throw std::invalid_argument("decode_unflagged: flag present");
  DecoderVerdict v;
  v.error_basis = conjugate(s.basis);
  uint32_t q = detail::kUnflagged[syndrome_index(s.r)];
  if (q == 0) {
    v.classified_as = Verdict::NoError;
  } else {
    v.classified_as = Verdict::Weight1;
    v.qubits = {q - 1};
  }
  return v;
}

// Flagged plaquette p was of type conjugate(s.basis); r holds the subsequent
// un-flagged readouts of the s.basis stabilizers. A flag of +1 falls back to
// column 1.
inline DecoderVerdict decode_flagged(const Syndrome& s) {
  s.check();
  if (!s.flag) throw std::invalid_argument("decode_flagged: flag absent");
  if (*s.flag > 0) {
    Syndrome u = s;
    u.flag.reset();
    u.flagged_plaquette.reset();
    return decode_unflagged(u);
  }
  const auto& cell = detail::flag_table()[*s.flagged_plaquette - 1][syndrome_index(s.r)];
  DecoderVerdict v;
  v.error_basis = conjugate(s.basis);
  v.classified_as = cell.v;
  v.grey = cell.grey;
  for (auto q : cell.qubits) v.qubits.push_back(q - 1);
  return v;
}

// ----------------------------------------------------------------------------
// Shared decoding after a split. Both blocks report un-flagged readouts of the
// three checks of one type; the collapsed check c (0-based) was randomized by
// the merge, so each raw value is only known up to a common gauge g.

struct JointDecode {
  int gauge = 1;
  std::array<std::vector<uint32_t>, 2> qubits;  // 0-based corrections per block
  int cost = 0;
};

// A block with a pending hook (flag -1 on a readout of plaquette p of the
// other type) is decoded with the flag table for p. The flag itself counts as
// one fault, so a trivial flagged syndrome costs 1 rather than 0.
inline JointDecode joint_decode_shared(const std::array<std::array<int, 3>, 2>& r, uint32_t collapsed,
                                       const std::array<std::optional<uint32_t>, 2>& hook = {}) {
  if (collapsed > 2) throw std::invalid_argument("collapsed plaquette index out of range");
  JointDecode best;
  bool have = false;
  int best_blocks = 0;
  for (int g : {r[0][collapsed], -r[0][collapsed]}) {
    JointDecode cand;
    cand.gauge = g;
    int blocks = 0;
    for (int b = 0; b < 2; b++) {
      Syndrome s;
      s.r = r[b];
      s.r[collapsed] *= g;
      DecoderVerdict v;
      if (hook[b]) {
        s.flag = -1;
        s.flagged_plaquette = *hook[b] + 1;
        v = decode_flagged(s);
      } else {
        v = decode_unflagged(s);
      }
      cand.qubits[b] = v.qubits;
      cand.cost += v.fault_cost();
      if (!v.qubits.empty()) blocks++;
    }
    if (!have || cand.cost < best.cost || (cand.cost == best.cost && blocks < best_blocks)) {
      best = cand;
      best_blocks = blocks;
      have = true;
    }
  }
  return best;
}

// Qubit (0-based) lying only in plaquette p (0-based): 1, 5, 7 in table labels.
inline uint32_t private_qubit(const CodeLayout& c, uint32_t p) {
  for (uint32_t q = 0; q < CodeLayout::n_data; q++)
    if (c.membership(q) == (1u << p)) return q;
  throw std::logic_error("layout has no private qubit");
}

// Noiseless projection of a block (assumed |0>^7) onto |0>_L or, with
// Basis::X, onto |+>_L.
inline void prepare_logical(StabilizerState& st, const CodeLayout& c, uint32_t offset, Basis eigen, Rng& rng) {
  size_t n = st.n_qubits();
  if (eigen == Basis::X)
    for (uint32_t q = 0; q < CodeLayout::n_data; q++) st.apply(GateOp::h(offset + q));
  Basis check = conjugate(eigen);
  for (uint32_t p = 1; p <= 3; p++) {
    if (st.measure(stabilizer_pauli(c, check, p, n, offset), rng) < 0)
      st.apply_pauli(offset + private_qubit(c, p - 1), basis_code(eigen));
  }
}

// ----------------------------------------------------------------------------
// Ideal verdict: one noiseless round of QEC on each block, then the logical
// correlators.

inline void ideal_qec(StabilizerState& st, const CodeLayout& c, uint32_t offset, Rng& rng) {
  size_t n = st.n_qubits();
  for (Basis b : {Basis::X, Basis::Z}) {
    Syndrome s;
    s.basis = b;
    for (uint32_t p = 1; p <= 3; p++) s.r[p - 1] = st.measure(stabilizer_pauli(c, b, p, n, offset), rng);
    st.apply_pauli(decode_unflagged(s).correction(n, offset));
  }
}

struct BellVerdict {
  bool x_fail = false;  // Z_L Z_L = -1
  bool z_fail = false;  // X_L X_L = -1
};

inline BellVerdict bell_verdict(StabilizerState& st, const CodeLayout& c, uint32_t off_a, uint32_t off_b,
                                Rng& rng) {
  ideal_qec(st, c, off_a, rng);
  ideal_qec(st, c, off_b, rng);
  size_t n = st.n_qubits();
  PauliString xx = default_logical(c, Basis::X, n, off_a) * default_logical(c, Basis::X, n, off_b);
  PauliString zz = default_logical(c, Basis::Z, n, off_a) * default_logical(c, Basis::Z, n, off_b);
  BellVerdict v;
  v.z_fail = st.measure(xx, rng) < 0;
  v.x_fail = st.measure(zz, rng) < 0;
  return v;
}

}  // namespace tiqc
