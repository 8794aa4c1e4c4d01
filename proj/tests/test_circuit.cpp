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

#include "tiqc/circuit.hpp"

using namespace tiqc;

namespace {

Circuit finalize(Circuit c) {
  c.finalize();
  return c;
}

}  // namespace

TEST(CircuitIR, EmptyCircuit) {
  Circuit c = finalize({"empty", 2});
  for (auto v : c.static_census) EXPECT_EQ(v, 0u);
  Exec ex(c, StabilizerState(2), 1);
  ex.run();
  EXPECT_EQ(ex.tally, ResourceTally{});
}

TEST(CircuitIR, IdleCensus) {
  Circuit c{"idle", 3};
  c.nodes.push_back(node::idle({0, 1, 2}, 3));
  c.finalize();
  EXPECT_EQ(c.static_census[static_cast<size_t>(FaultClass::Idle)], 9u);
  Circuit d{"idle1", 1};
  d.nodes.push_back(node::idle({0}, 3));
  d.finalize();
  EXPECT_EQ(d.static_census[static_cast<size_t>(FaultClass::Idle)], 3u);
}

TEST(CircuitIR, GateCensus) {
  Circuit c{"g", 8};
  for (uint32_t i = 0; i < 7; i++) {
    c.nodes.push_back(node::gate(GateOp::ms2(7, i)));
    for (int k = 0; k < 4; k++) c.nodes.push_back(node::gate(GateOp::rx(i, 1)));
  }
  c.nodes.push_back(node::reset(7));
  c.nodes.push_back(node::measure(7, c.new_reg("m")));
  c.finalize();
  EXPECT_EQ(c.static_census[0], 2u);
  EXPECT_EQ(c.static_census[1], 28u);
  EXPECT_EQ(c.static_census[2], 7u);
  EXPECT_EQ(c.static_census[3], 0u);
}

TEST(CircuitIR, BranchOrdinalsProgramVsReference) {
  Circuit c{"b", 2};
  int m = c.new_reg("m");
  c.nodes.push_back(node::measure(0, m));
  c.nodes.push_back(node::block("m<0", [m](const Exec& e) { return e.r(m) < 0; }, {node::gate(GateOp::rx(1, 1))},
                                {node::gate(GateOp::ry(1, 1))}));
  c.nodes.push_back(node::gate(GateOp::rz(1, 1)));
  c.finalize();
  // Program numbering: rx=0, ry=1, rz=2. Reference numbering on the executed
  // path (m=+1): ry=0, rz=1.
  EXPECT_EQ(c.static_census[1], 3u);
  EXPECT_EQ(c.nodes[1].body[0].base[1], 0u);
  EXPECT_EQ(c.nodes[1].orelse[0].base[1], 1u);
  EXPECT_EQ(c.nodes[2].base[1], 2u);

  // The rz node under each policy's numbering.
  Circuit d = c;
  int f = d.new_reg("f");
  d.nodes.push_back(node::measure(1, f));
  d.finalize();
  for (auto [pol, ord] : {std::pair{CensusPolicy::Program, 2ull}, {CensusPolicy::Reference, 1ull}}) {
    Exec ex(d, StabilizerState(2), 3);
    FaultAssignment a;
    a.add(FaultClass::OneQ, ord, 0);
    ex.set_assignment(a, pol);
    ex.run();
    EXPECT_EQ(ex.realized[1], 1u);
    EXPECT_EQ(ex.unrealized, 0u);
  }
  // Program ordinal 0 sits in the skipped branch.
  Exec ex(d, StabilizerState(2), 3);
  FaultAssignment a;
  a.add(FaultClass::OneQ, 0, 0);
  ex.set_assignment(a, CensusPolicy::Program);
  ex.run();
  EXPECT_EQ(ex.realized[1], 0u);
  EXPECT_EQ(ex.unrealized, 1u);
}

TEST(CircuitIR, ReferenceOrdinalBeyondPathIsUnrealized) {
  Circuit c{"u", 1};
  c.nodes.push_back(node::gate(GateOp::rx(0, 1)));
  c.finalize();
  Exec ex(c, StabilizerState(1), 1);
  FaultAssignment a;
  a.add(FaultClass::OneQ, 5, 0);
  ex.set_assignment(a, CensusPolicy::Reference);
  ex.run();
  EXPECT_EQ(ex.unrealized, 1u);
}

TEST(CircuitIR, MeasurementErrorFlipsOutcome) {
  Circuit c{"m", 1};
  int m = c.new_reg("m");
  c.nodes.push_back(node::measure(0, m));
  c.finalize();
  Exec clean(c, StabilizerState(1), 1);
  clean.run();
  EXPECT_EQ(clean.r(m), 1);
  Exec ex(c, StabilizerState(1), 1);
  FaultAssignment a;
  a.add(FaultClass::PrepMeas, 0, 0);
  ex.set_assignment(a, CensusPolicy::Reference);
  ex.run();
  EXPECT_EQ(ex.r(m), -1);
}

TEST(CircuitIR, DeterministicGivenSeed) {
  Circuit c{"d", 2};
  int m0 = c.new_reg("m0"), m1 = c.new_reg("m1");
  c.nodes.push_back(node::gate(GateOp::h(0)));
  c.nodes.push_back(node::gate(GateOp::cnot(0, 1)));
  c.nodes.push_back(node::measure(0, m0));
  c.nodes.push_back(node::measure(1, m1));
  c.finalize();
  for (uint64_t s = 0; s < 20; s++) {
    Exec a(c, StabilizerState(2), s), b(c, StabilizerState(2), s);
    a.run();
    b.run();
    EXPECT_EQ(a.reg, b.reg);
    EXPECT_EQ(a.r(m0), a.r(m1));
  }
}

// Random Clifford circuit U, a correction, then U^-1 and Z readout. The
// outcomes are deterministic, so deferred and inline corrections must agree.
TEST(CircuitIR, DeferredFrameMatchesInline) {
  std::mt19937_64 g(11);
  const uint32_t n = 4;
  for (int trial = 0; trial < 1000; trial++) {
    std::vector<GateOp> u;
    for (int k = 0; k < 12; k++) {
      uint32_t a = g() % n, b = (a + 1 + g() % (n - 1)) % n;
      switch (g() % 4) {
        case 0: u.push_back(GateOp::rx(a, g() % 2 ? 1 : -1)); break;
        case 1: u.push_back(GateOp::ry(a, g() % 2 ? 1 : -1)); break;
        case 2: u.push_back(GateOp::rz(a, g() % 2 ? 1 : -1)); break;
        default: u.push_back(GateOp::ms2(a, b, g() % 2 ? 1 : -1)); break;
      }
    }
    uint32_t cq = g() % n;
    uint8_t code = 1 + g() % 3;
    Circuit c{"f", n};
    for (auto& op : u) c.nodes.push_back(node::gate(op));
    c.nodes.push_back(node::classical("fix", [cq, code](Exec& e) { e.correct(cq, code); }));
    for (auto it = u.rbegin(); it != u.rend(); ++it) {
      GateOp inv = *it;
      inv.sign = -inv.sign;
      c.nodes.push_back(node::gate(inv));
    }
    std::vector<int> slots;
    for (uint32_t q = 0; q < n; q++) {
      slots.push_back(c.new_reg("m"));
      c.nodes.push_back(node::measure(q, slots.back()));
    }
    c.finalize();
    Exec inl(c, StabilizerState(n), trial), def(c, StabilizerState(n), trial);
    def.deferred = true;
    inl.run();
    def.run();
    ASSERT_EQ(inl.reg, def.reg) << "trial " << trial;
  }
}

TEST(CircuitIR, BernoulliMeanWeight) {
  Circuit c{"bern", 2};
  for (int i = 0; i < 100; i++) c.nodes.push_back(node::gate(GateOp::rx(0, 1)));
  c.nodes.push_back(node::idle({0, 1}, 50));
  c.finalize();
  ClassProbs p{};
  p[1] = 0.05;
  p[4] = 0.02;
  double w1 = 0, w4 = 0;
  const int shots = 4000;
  for (int s = 0; s < shots; s++) {
    Exec ex(c, StabilizerState(2), 1000 + s);
    ex.set_bernoulli(p);
    ex.run();
    w1 += ex.realized[1];
    w4 += ex.realized[4];
  }
  EXPECT_NEAR(w1 / shots, 100 * 0.05, 0.15);
  EXPECT_NEAR(w4 / shots, 100 * 0.02, 0.1);
}

TEST(CircuitIR, BlockTallyCountsOnlyTakenPath) {
  Circuit c{"t", 1};
  ResourceTally one;
  one.one_q = 1;
  c.nodes.push_back(node::block("never", [](const Exec&) { return false; }, {node::gate(GateOp::rx(0, 1), one)}));
  c.nodes.push_back(node::gate(GateOp::rx(0, 1), one));
  c.finalize();
  Exec ex(c, StabilizerState(1), 1);
  ex.run();
  EXPECT_EQ(ex.tally.one_q, 1u);
}

TEST(CircuitIR, DumpIsLineOriented) {
  Circuit c{"dump", 2};
  int m = c.new_reg("syn");
  c.nodes.push_back(node::reset(1));
  c.nodes.push_back(node::gate(GateOp::ms2(1, 0)));
  c.nodes.push_back(node::measure(1, m));
  c.nodes.push_back(node::block("syn<0", [m](const Exec& e) { return e.r(m) < 0; }, {node::idle({0}, 2)}));
  c.finalize();
  std::string d = c.dump();
  EXPECT_NE(d.find("# circuit dump qubits=2 registers=1"), std::string::npos);
  EXPECT_NE(d.find("gate MS2(+) 1 0"), std::string::npos);
  EXPECT_NE(d.find("measure 1 -> syn"), std::string::npos);
  EXPECT_NE(d.find("if syn<0\n  idle quanta=2 0\nend"), std::string::npos);
}
