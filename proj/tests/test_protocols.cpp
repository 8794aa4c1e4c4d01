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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "tiqc/ft.hpp"

using namespace tiqc;

namespace {

const NoiseParams kParams = NoiseParams::anticipated();

const Protocol& cached(const std::string& name) {
  static std::map<std::string, Protocol> m;
  auto it = m.find(name);
  if (it == m.end()) it = m.emplace(name, make_protocol(name, kParams)).first;
  return it->second;
}

}  // namespace

TEST(Protocols, NoiselessBellEveryBranch) {
  for (auto& name : protocol_names()) {
    const auto& pr = cached(name);
    std::set<std::vector<int>> branches;
    for (uint64_t s = 0; s < 1000; s++) {
      auto r = reference_run(pr, s);
      ASSERT_FALSE(r.x_fail || r.z_fail) << name << " seed " << s;
      ASSERT_FALSE(r.low_resource) << name << " seed " << s;
      branches.insert(r.eps);
    }
    // eps1..eps3 and the M_XX gauge sign are independent fair coins.
    if (name == "lattice-surgery-cnot") {
      EXPECT_EQ(branches.size(), 16u);
    }
  }
}

TEST(Protocols, ErrorFreeTallyIsDeterministic) {
  for (auto& name : protocol_names()) {
    const auto& pr = cached(name);
    auto a = reference_run(pr, 1);
    for (uint64_t s = 2; s < 40; s++) {
      auto b = reference_run(pr, s);
      EXPECT_EQ(a.tally, b.tally) << name;
      EXPECT_EQ(a.executed, b.executed) << name;
    }
  }
}

TEST(Protocols, LatticeSurgeryResources) {
  auto t = reference_run(cached("lattice-surgery-cnot")).tally;
  EXPECT_EQ(t.crossings, 12u);
  EXPECT_EQ(t.ms5, 0u);
  EXPECT_EQ(t.ms2, 120u);
  EXPECT_EQ(t.one_q, 215u);
  EXPECT_NEAR(static_cast<double>(t.one_q), 223.0, 0.05 * 223.0);
}

TEST(Protocols, TransversalResources) {
  auto t = reference_run(cached("transversal-cnot")).tally;
  EXPECT_EQ(t.one_q, 28u);
  EXPECT_EQ(t.ms2, 7u);
  EXPECT_EQ(t.crossings, 32u);
}

TEST(Protocols, LatticeSurgeryDurations) {
  auto t = reference_run(cached("lattice-surgery-cnot")).tally;
  double lo = t.elapsed(t_cross(1e-5, kParams.T2));
  double hi = t.elapsed(t_cross(1e-3, kParams.T2));
  EXPECT_GE(lo, 0.85 * 28.5e-3);
  EXPECT_LE(lo, 1.15 * 31.5e-3);
  EXPECT_GE(hi, 0.85 * 76.3e-3);
  EXPECT_LE(hi, 1.15 * 78.4e-3);
}

TEST(Protocols, FiveQubitSampleCoversLowWeight) {
  auto v = five_qubit_sample(200, 7);
  EXPECT_EQ(v.size(), 15u + 90u + 200u);
  std::set<uint32_t> s(v.begin(), v.end());
  for (uint32_t idx = 0; idx < 1023; idx++)
    if (pauli_weight(idx + 1, 5) <= 2) {
      EXPECT_TRUE(s.count(idx));
    }
}

TEST(Protocols, FlagQecSingleFaultExhaustive) {
  auto rep = verify_ft(cached("flag-qec"));
  EXPECT_GT(rep.trials, 1000u);
  EXPECT_EQ(rep.failures, 0u);
}

TEST(Protocols, TransversalSingleFaultExhaustive) {
  auto rep = verify_ft(cached("transversal-cnot"));
  EXPECT_EQ(rep.locations[static_cast<size_t>(FaultClass::Cross)], 32u * 14u);
  EXPECT_EQ(rep.failures, 0u);
}

TEST(Protocols, LatticeSurgerySingleFaultExhaustive) {
  auto rep = verify_ft(cached("lattice-surgery-cnot"));
  EXPECT_GT(rep.trials, 20000u);
  EXPECT_EQ(rep.failures, 0u);
}

TEST(Protocols, FullSplitVariantIsSingleFaultTolerant) {
  ProtocolOptions o;
  o.full_split = true;
  auto pr = lattice_surgery_protocol(kParams, o);
  auto t = reference_run(pr).tally;
  EXPECT_EQ(t.ms2, 168u);
  EXPECT_EQ(verify_ft(pr).failures, 0u);
}

// Negative controls: each ingredient is needed.
TEST(Protocols, WithoutFlagsSingleFaultsFail) {
  ProtocolOptions o;
  o.flags = false;
  EXPECT_GT(verify_ft(flag_qec_protocol(kParams, o), 1, 1).failures, 0u);
  EXPECT_GT(verify_ft(lattice_surgery_protocol(kParams, o), 1, 1).failures, 0u);
}

TEST(Protocols, WithoutCaseLogicSingleFaultsFail) {
  ProtocolOptions o;
  o.case_logic = false;
  EXPECT_GT(verify_ft(lattice_surgery_protocol(kParams, o), 1, 1).failures, 0u);
}

TEST(Protocols, WithoutSecondFlagCouplingFails) {
  ProtocolOptions o;
  o.omit_f2 = true;
  auto rep = verify_ft(flag_qec_protocol(kParams, o), 1, 1);
  EXPECT_TRUE(rep.noiseless_ok);
  EXPECT_GT(rep.failures, 0u);
}

TEST(Protocols, EdgeComplementOnMergedAncillaFails) {
  ProtocolOptions o;
  o.case2_flip_outcome = false;
  auto rep = verify_ft(lattice_surgery_protocol(kParams, o), 1, 1000);
  EXPECT_GT(rep.failures, 0u);
  for (auto& v : rep.violations) EXPECT_TRUE(v.x_fail && !v.z_fail);
}

TEST(Protocols, SomeWeightTwoFaultIsUncorrectable) {
  for (auto& name : protocol_names()) {
    const auto& pr = cached(name);
    auto ref = reference_run(pr);
    std::mt19937_64 g(5);
    bool found = false;
    for (int trial = 0; trial < 5000 && !found; trial++) {
      FaultAssignment a;
      for (int k = 0; k < 2; k++) {
        auto c = static_cast<size_t>(FaultClass::TwoQ);
        a.add(FaultClass::TwoQ, g() % ref.executed[c], static_cast<uint32_t>(g() % 15));
      }
      auto r = bell_pair_experiment(pr, {&a, CensusPolicy::Reference, nullptr}, trial);
      found = r.x_fail || r.z_fail;
    }
    EXPECT_TRUE(found) << name;
  }
}

TEST(Protocols, LowResourceSwitchIsMonotone) {
  const auto& pr = cached("lattice-surgery-cnot");
  NoiseParams hot = kParams;
  hot.p_2q = 5e-3;
  hot.p_1q = 1e-3;
  auto probs = class_probs(hot);
  int switched = 0;
  for (uint64_t s = 0; s < 300; s++) {
    Exec ex(pr.circuit, pr.initial, s);
    ex.set_bernoulli(probs);
    int last = 0;
    bool ok = true;
    ex.trace = [&](const Exec& e, const Node&) {
      int v = e.r(pr.lr_reg);
      ok = ok && v >= last;
      last = v;
    };
    ex.run();
    EXPECT_TRUE(ok) << "seed " << s;
    switched += last;
  }
  EXPECT_GT(switched, 0);
}

TEST(Protocols, FlagTableReproduction) {
  for (auto& t : check_flag_table(kParams)) {
    EXPECT_GT(t.trials, 500u);
    EXPECT_EQ(t.mismatches, 0u) << basis_char(t.readout) << t.plaquette + 1;
    EXPECT_TRUE(t.grey_match) << basis_char(t.readout) << t.plaquette + 1;
  }
}

TEST(Protocols, ModulesValidate) {
  for (auto& name : protocol_names()) {
    const auto& pr = cached(name);
    const Trap t = name == "flag-qec" ? single_block_trap()
                   : name == "transversal-cnot" ? transversal_trap()
                                                : lattice_surgery_trap();
    for (auto& m : pr.modules) {
      auto res = validate(m.schedule, t.layout, m.start);
      EXPECT_TRUE(res.ok()) << name << " " << m.name;
    }
  }
}
