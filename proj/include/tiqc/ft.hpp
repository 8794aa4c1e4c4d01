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

#include <random>
#include <set>
#include <string>
#include <vector>

#include "tiqc/protocols.hpp"

namespace tiqc {

// Single-fault check: every location on the error-free path receives every
// nontrivial Pauli of its class (five-qubit locations get all weight-1 and
// weight-2 Paulis plus a seeded random sample of the rest).
struct FtViolation {
  FaultClass cls;
  uint64_t ordinal;
  uint32_t error;
  bool x_fail, z_fail;
};

struct FtReport {
  uint64_t trials = 0;
  Census locations{};
  uint64_t failures = 0;
  bool noiseless_ok = true;
  std::vector<FtViolation> violations;  // the first few
  bool ok() const { return noiseless_ok && failures == 0; }
};

inline uint32_t pauli_weight(uint32_t packed, uint32_t k) {
  uint32_t w = 0;
  for (uint32_t i = 0; i < k; i++) w += code_on_target(packed, i) != 0;
  return w;
}

// Error indices tried at a five-qubit location.
inline std::vector<uint32_t> five_qubit_sample(uint32_t random_extra, uint64_t seed) {
  std::set<uint32_t> s;
  for (uint32_t idx = 0; idx < 1023; idx++)
    if (pauli_weight(idx + 1, 5) <= 2) s.insert(idx);
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<uint32_t> d(0, 1022);
  size_t target = s.size() + random_extra;
  while (s.size() < target) s.insert(d(g));
  return {s.begin(), s.end()};
}

inline std::vector<uint32_t> error_indices(FaultClass c, uint32_t random_extra = 200, uint64_t seed = 7) {
  if (c == FaultClass::FiveQ) return five_qubit_sample(random_extra, seed);
  std::vector<uint32_t> v(support_size(c));
  for (uint32_t i = 0; i < v.size(); i++) v[i] = i;
  return v;
}

inline FtReport verify_ft(const Protocol& pr, uint64_t seed = 1, size_t max_violations = 64) {
  FtReport rep;
  auto ref = reference_run(pr, seed);
  rep.locations = ref.executed;
  rep.noiseless_ok = !ref.x_fail && !ref.z_fail;
  for (size_t c = 0; c < kNumClasses; c++) {
    auto cls = static_cast<FaultClass>(c);
    auto errs = error_indices(cls);
    for (uint64_t o = 0; o < ref.executed[c]; o++)
      for (auto e : errs) {
        FaultAssignment a;
        a.add(cls, o, e);
        auto r = bell_pair_experiment(pr, {&a, CensusPolicy::Reference, nullptr}, seed + rep.trials);
        rep.trials++;
        if (r.x_fail || r.z_fail) {
          rep.failures++;
          if (rep.violations.size() < max_violations) rep.violations.push_back({cls, o, e, r.x_fail, r.z_fail});
        }
      }
  }
  return rep;
}

}  // namespace tiqc

namespace tiqc {

// Table check for the flagged readout: every single fault inside one flagged
// readout, then an ideal readout of the conjugate checks. The decoded cell
// must undo the conjugate-type error, and the cells reached with flag -1 must
// be exactly the grey ones.
struct TableCheck {
  Basis readout;
  uint32_t plaquette;
  uint64_t trials = 0;
  uint64_t mismatches = 0;
  std::array<bool, 8> reached{};  // flag -1 cells, by syndrome index
  bool grey_match = true;
};

inline TableCheck check_flag_table_entry(Basis readout, uint32_t p, const NoiseParams& params) {
  const auto& L = steane_layout();
  ProtocolBuilder pb("table", 9, single_block_trap(), {0, 1, 2, 3, 4, 5, 6}, params, {});
  ReadoutRef ref;
  auto nodes = pb.flagged(pb.trap().block("control"), readout, p, "readout", ref);
  pb.protocol().circuit.nodes = std::move(nodes);
  Protocol pr = pb.finish();
  const Basis check = conjugate(readout);  // checks that see the hook
  StabilizerState init(9);
  Rng prng(3);
  // Eigenstate of the logical of the hook type, so a logical hook flips it.
  prepare_logical(init, L, 0, conjugate(readout) == Basis::Z ? Basis::Z : Basis::X, prng);

  TableCheck tc{readout, p};
  Exec clean(pr.circuit, init, 1);
  clean.run();
  for (size_t c = 0; c < kNumClasses; c++) {
    auto cls = static_cast<FaultClass>(c);
    for (uint64_t o = 0; o < clean.executed[c]; o++)
      for (auto e : error_indices(cls)) {
        FaultAssignment a;
        a.add(cls, o, e);
        Exec ex(pr.circuit, init, 100 + tc.trials);
        ex.set_assignment(a, CensusPolicy::Reference);
        ex.run();
        tc.trials++;
        Syndrome s;
        s.basis = check;
        for (uint32_t q = 0; q < 3; q++) s.r[q] = ex.state.measure(stabilizer_pauli(L, check, q + 1, 9), ex.rng);
        int flag = ref.flag(ex);
        DecoderVerdict v;
        if (flag < 0) {
          s.flag = -1;
          s.flagged_plaquette = p + 1;
          v = decode_flagged(s);
          tc.reached[syndrome_index(s.r)] = true;
        } else {
          v = decode_unflagged(s);
        }
        if (!v.qubits.empty()) ex.state.apply_pauli(v.correction(9));
        bool ok = true;
        for (uint32_t q = 0; q < 3; q++) ok = ok && ex.state.measure(stabilizer_pauli(L, check, q + 1, 9), ex.rng) > 0;
        ok = ok && ex.state.measure(default_logical(L, check, 9), ex.rng) > 0;
        if (!ok) tc.mismatches++;
      }
  }
  const auto& row = detail::flag_table()[p];
  for (uint32_t i = 0; i < 8; i++) tc.grey_match = tc.grey_match && (tc.reached[i] == row[i].grey);
  return tc;
}

inline std::vector<TableCheck> check_flag_table(const NoiseParams& params = NoiseParams::anticipated()) {
  std::vector<TableCheck> out;
  for (Basis b : {Basis::X, Basis::Z})
    for (uint32_t p = 0; p < 3; p++) out.push_back(check_flag_table_entry(b, p, params));
  return out;
}

}  // namespace tiqc
