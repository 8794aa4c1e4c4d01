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
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace tiqc {

enum class FaultClass : uint8_t { PrepMeas = 0, OneQ = 1, TwoQ = 2, FiveQ = 3, Idle = 4, Cross = 5 };
constexpr size_t kNumClasses = 6;
using Census = std::array<uint64_t, kNumClasses>;
using ClassProbs = std::array<double, kNumClasses>;

inline const char* class_name(size_t c) {
  static const char* names[] = {"prep_meas", "one_q", "two_q", "five_q", "idle", "cross"};
  return c < kNumClasses ? names[c] : "?";
}

enum class CrossingAccounting : uint8_t { PerIon, PerEvent };

inline const char* accounting_name(CrossingAccounting a) {
  return a == CrossingAccounting::PerIon ? "per-ion" : "per-event";
}
inline CrossingAccounting parse_accounting(const std::string& s) {
  if (s == "per-ion") return CrossingAccounting::PerIon;
  if (s == "per-event") return CrossingAccounting::PerEvent;
  throw std::invalid_argument("crossing accounting must be per-ion or per-event");
}

// Durations in seconds. Defaults are the anticipated toolbox values, with the
// MS/measure/prep entries replaced by the split/merge duration.
struct Durations {
  double ms2 = 30e-6;
  double ms5 = 30e-6;
  double one_q = 0.0;
  double measure = 30e-6;
  double reset = 30e-6;
  double cool = 100e-6;
  double shuttle = 5e-6;
  double split_merge = 30e-6;
  double rotate = 20e-6;

  // The table values before the equal-duration simplification.
  static Durations anticipated_raw() {
    Durations d;
    d.ms2 = 15e-6;
    d.ms5 = 15e-6;
    d.measure = 30e-6;
    d.reset = 10e-6;
    d.one_q = 1e-6;
    return d;
  }
  bool operator==(const Durations&) const = default;
};

struct NoiseParams {
  double p_m = 1e-4;
  double p_1q = 1e-5;
  double p_2q = 2e-4;
  double p_5q = 1e-3;
  double p_cross = 1e-5;
  double T2 = 2.2;
  Durations durations{};
  double time_quantum = 30e-6;
  CrossingAccounting accounting = CrossingAccounting::PerIon;
  // Replaces p_idle(time_quantum) when set (single-parameter studies).
  std::optional<double> p_idle_override;

  static NoiseParams anticipated() { return NoiseParams{}; }
  static NoiseParams zero() {
    NoiseParams p;
    p.p_m = p.p_1q = p.p_2q = p.p_5q = p.p_cross = 0.0;
    p.p_idle_override = 0.0;
    return p;
  }
  // Gate and measurement classes at p, no dephasing and no crossings.
  static NoiseParams depolarizing(double p) {
    NoiseParams n = zero();
    n.p_m = n.p_1q = n.p_2q = n.p_5q = p;
    return n;
  }

  bool non_default_durations() const { return !(durations == Durations{}); }

  void validate() const {
    auto prob = [](double v, double hi, const char* name) {
      if (!(v >= 0.0 && v <= hi)) throw std::invalid_argument(std::string("probability out of range: ") + name);
    };
    prob(p_m, 0.999999, "p_m");
    prob(p_1q, 0.999999, "p_1q");
    prob(p_2q, 0.999999, "p_2q");
    prob(p_5q, 0.999999, "p_5q");
    if (!(p_cross >= 0.0 && p_cross < 0.5)) throw std::invalid_argument("p_cross must lie in [0, 1/2)");
    if (p_idle_override) prob(*p_idle_override, 0.5, "p_idle");
    if (!(T2 > 0)) throw std::invalid_argument("T2 must be positive");
    if (!(time_quantum > 0)) throw std::invalid_argument("time_quantum must be positive");
    const double ds[] = {durations.ms2, durations.ms5, durations.measure, durations.reset,
                         durations.cool, durations.shuttle, durations.split_merge, durations.rotate};
    for (double d : ds)
      if (!(d > 0)) throw std::invalid_argument("durations must be positive");
    if (durations.one_q < 0) throw std::invalid_argument("durations must be non-negative");
  }
};

inline double p_idle(double t, double T2) {
  if (t < 0) throw std::invalid_argument("p_idle: negative time");
  return -0.5 * std::expm1(-t / T2);
}

inline double t_cross(double p_cross, double T2) {
  if (!(p_cross >= 0.0 && p_cross < 0.5)) throw std::invalid_argument("t_cross: p_cross must lie in [0, 1/2)");
  return -T2 * std::log1p(-2.0 * p_cross);
}

inline double p_idle_quantum(const NoiseParams& p) {
  return p.p_idle_override ? *p.p_idle_override : p_idle(p.time_quantum, p.T2);
}

inline ClassProbs class_probs(const NoiseParams& p) {
  return {p.p_m, p.p_1q, p.p_2q, p.p_5q, p_idle_quantum(p), p.p_cross};
}

// Number of nontrivial Paulis each class draws from uniformly.
inline uint32_t support_size(FaultClass c) {
  switch (c) {
    case FaultClass::PrepMeas: return 1;   // X
    case FaultClass::OneQ: return 3;       // X, Y, Z
    case FaultClass::TwoQ: return 15;
    case FaultClass::FiveQ: return 1023;
    case FaultClass::Idle: return 1;       // Z
    case FaultClass::Cross: return 1;      // Z
  }
  return 0;
}

// Error index (0-based within the support) to packed 2-bit Pauli codes, one
// per target in target order. Multi-qubit supports enumerate 1..4^k-1.
inline uint32_t error_code(FaultClass c, uint32_t index) {
  switch (c) {
    case FaultClass::PrepMeas: return 1;
    case FaultClass::Idle:
    case FaultClass::Cross: return 3;
    default: return index + 1;
  }
}
inline uint8_t code_on_target(uint32_t packed, size_t target) { return (packed >> (2 * target)) & 3; }

// Bare physical Bell pair: 8 of the 15 two-qubit Paulis flip each correlator.
inline std::pair<double, double> bare_bell_reference(double p2q) { return {8.0 * p2q / 15.0, 8.0 * p2q / 15.0}; }

}  // namespace tiqc
