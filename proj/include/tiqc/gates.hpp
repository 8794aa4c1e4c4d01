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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiqc {

enum class GateKind : uint8_t { RX, RY, RZ, MS2, MS5, CNOT, H, S };

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::MS2: return "MS2";
    case GateKind::MS5: return "MS5";
    case GateKind::CNOT: return "CNOT";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
  }
  return "?";
}

// A Clifford gate of the trapped-ion set. Rotations are exp(-i theta/2 P)
// with theta in {+pi/2, -pi/2, pi}; MS gates are exp(-i sign pi/4 X_i X_j)
// per pair. `pi` is only meaningful for single-qubit rotations.
struct GateOp {
  GateKind kind = GateKind::RX;
  std::vector<uint32_t> targets;
  int sign = 1;
  bool pi = false;

  static GateOp rotation(GateKind k, uint32_t q, double angle) {
    if (k != GateKind::RX && k != GateKind::RY && k != GateKind::RZ)
      throw std::invalid_argument("rotation() needs RX/RY/RZ");
    constexpr double h = std::numbers::pi / 2;
    constexpr double eps = 1e-9;
    GateOp g{k, {q}, 1, false};
    if (std::abs(angle - h) < eps) {
      g.sign = 1;
    } else if (std::abs(angle + h) < eps) {
      g.sign = -1;
    } else if (std::abs(std::abs(angle) - std::numbers::pi) < eps) {
      g.pi = true;
    } else {
      throw std::invalid_argument("non-Clifford rotation angle");
    }
    return g;
  }
  static GateOp rx(uint32_t q, int s) { return {GateKind::RX, {q}, s >= 0 ? 1 : -1, false}; }
  static GateOp ry(uint32_t q, int s) { return {GateKind::RY, {q}, s >= 0 ? 1 : -1, false}; }
  static GateOp rz(uint32_t q, int s) { return {GateKind::RZ, {q}, s >= 0 ? 1 : -1, false}; }
  static GateOp rx_pi(uint32_t q) { return {GateKind::RX, {q}, 1, true}; }
  static GateOp ry_pi(uint32_t q) { return {GateKind::RY, {q}, 1, true}; }
  static GateOp rz_pi(uint32_t q) { return {GateKind::RZ, {q}, 1, true}; }
  static GateOp ms2(uint32_t a, uint32_t b, int s = 1) {
    if (a == b) throw std::invalid_argument("MS2 needs distinct targets");
    return {GateKind::MS2, {a, b}, s >= 0 ? 1 : -1, false};
  }
  static GateOp ms5(std::vector<uint32_t> t, int s = 1) {
    if (t.size() != 5) throw std::invalid_argument("MS5 needs exactly 5 targets");
    if (std::set<uint32_t>(t.begin(), t.end()).size() != 5)
      throw std::invalid_argument("MS5 targets must be distinct");
    return {GateKind::MS5, std::move(t), s >= 0 ? 1 : -1, false};
  }
  static GateOp cnot(uint32_t c, uint32_t t) {
    if (c == t) throw std::invalid_argument("CNOT needs distinct targets");
    return {GateKind::CNOT, {c, t}, 1, false};
  }
  static GateOp h(uint32_t q) { return {GateKind::H, {q}, 1, false}; }
  static GateOp s(uint32_t q) { return {GateKind::S, {q}, 1, false}; }

  bool single_qubit() const { return targets.size() == 1; }

  std::string str() const {
    std::string s = gate_name(kind);
    if (kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ)
      s += pi ? "(pi)" : (sign > 0 ? "(+pi/2)" : "(-pi/2)");
    else if (kind == GateKind::MS2 || kind == GateKind::MS5)
      s += sign > 0 ? "(+)" : "(-)";
    for (auto t : targets) s += " " + std::to_string(t);
    return s;
  }
};

}  // namespace tiqc
