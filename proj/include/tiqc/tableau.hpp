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

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "tiqc/gates.hpp"
#include "tiqc/pauli.hpp"

namespace tiqc {

using Rng = std::mt19937_64;

// Aaronson-Gottesman tableau with destabilizers. Rows 0..n-1 are
// destabilizers, n..2n-1 stabilizers. Each row is i^k X^x Z^z.
//
// Conjugation convention: a rotation exp(-i theta/2 G) maps an anticommuting
// row P to (i sign) P G for theta = sign pi/2 and to -P for theta = pi. So
// MS2(+) sends Z_i to -Y_i X_j and Y_i to +Z_i X_j.
class StabilizerState {
 public:
  StabilizerState() = default;
  explicit StabilizerState(size_t n) : n_(n), w_(num_words(n)) {
    if (n == 0) throw std::invalid_argument("StabilizerState needs n >= 1");
    x_.assign(2 * n * w_, 0);
    z_.assign(2 * n * w_, 0);
    k_.assign(2 * n, 0);
    for (size_t q = 0; q < n; q++) {
      set_bit(x_, q, q);
      set_bit(z_, n + q, q);
    }
  }

  size_t n_qubits() const { return n_; }
  const std::vector<int8_t>& record() const { return record_; }
  void clear_record() { record_.clear(); }

  // --- gates ---

  void apply(const GateOp& g) {
    const auto& t = g.targets;
    for (auto q : t)
      if (q >= n_) throw std::out_of_range("gate target out of range");
    switch (g.kind) {
      case GateKind::RX: rotate1(t[0], 1, g.sign, g.pi); break;
      case GateKind::RY: rotate1(t[0], 2, g.sign, g.pi); break;
      case GateKind::RZ: rotate1(t[0], 3, g.sign, g.pi); break;
      case GateKind::MS2: rotate_xx(t[0], t[1], g.sign); break;
      case GateKind::MS5:
        for (size_t a = 0; a < 5; a++)
          for (size_t b = a + 1; b < 5; b++) rotate_xx(t[a], t[b], g.sign);
        break;
      case GateKind::CNOT: {
        // CNOT = RZ_c(+) RX_t(+) exp(+i pi/4 Z_c X_t), all commuting.
        rotate1(t[0], 3, 1, false);
        rotate1(t[1], 1, 1, false);
        uint32_t qs[2] = {t[0], t[1]};
        uint8_t ps[2] = {3, 1};
        rotate_sparse(qs, ps, 2, -1, false);
        break;
      }
      case GateKind::H:
        rotate1(t[0], 3, 1, true);
        rotate1(t[0], 2, 1, false);
        break;
      case GateKind::S: rotate1(t[0], 3, 1, false); break;
    }
  }

  void apply_ms_n(const std::vector<uint32_t>& qubits, int sign) { apply(GateOp::ms5(qubits, sign)); }

  // Rotation exp(-i theta/2 G) for a sparse Pauli G.
  void rotate(const SparsePauli& g, int sign, bool pi) {
    std::vector<uint32_t> qs;
    std::vector<uint8_t> ps;
    for (auto [q, c] : g.terms) {
      qs.push_back(q);
      ps.push_back(c);
    }
    rotate_sparse(qs.data(), ps.data(), qs.size(), sign, pi);
  }

  // --- Pauli errors ---

  void apply_pauli(uint32_t q, uint8_t code) {
    if (code == 0) return;
    bool px = pauli_x(code), pz = pauli_z(code);
    size_t wi = q >> 6;
    uint64_t m = uint64_t{1} << (q & 63);
    for (size_t r = 0; r < 2 * n_; r++) {
      bool rx = x_[r * w_ + wi] & m, rz = z_[r * w_ + wi] & m;
      if ((rx && pz) != (rz && px)) k_[r] = (k_[r] + 2) & 3;
    }
  }
  void apply_pauli(const SparsePauli& p) {
    for (auto [q, c] : p.terms) apply_pauli(q, c);
  }
  void apply_pauli(const PauliString& p) {
    for (size_t r = 0; r < 2 * n_; r++)
      if (!row_commutes(r, p)) k_[r] = (k_[r] + 2) & 3;
  }

  // --- measurement ---

  // Returns +1/-1. Random outcomes use rng.
  int measure(const PauliString& p, Rng& rng) {
    int out = measure_impl(p, &rng, 0);
    record_.push_back(static_cast<int8_t>(out));
    return out;
  }
  // Forced outcome when random (for branch coverage); deterministic outcomes
  // are returned unchanged.
  int measure_forced(const PauliString& p, int forced) {
    int out = measure_impl(p, nullptr, forced);
    record_.push_back(static_cast<int8_t>(out));
    return out;
  }
  int measure_z(uint32_t q, Rng& rng) { return measure(PauliString::single(n_, q, 3), rng); }

  // +1 or -1 if p (up to sign) is in the stabilizer group, 0 otherwise. Does not
  // change the state.
  int expectation(const PauliString& p) const {
    for (size_t r = n_; r < 2 * n_; r++)
      if (!row_commutes(r, p)) return 0;
    return deterministic_value(p);
  }

  void reset(uint32_t q, Rng& rng) {
    PauliString z = PauliString::single(n_, q, 3);
    int o = measure_impl(z, &rng, 0);
    if (o < 0) apply_pauli(q, 1);
  }

  // --- inspection ---

  PauliString row(size_t r) const {
    PauliString p(n_);
    for (size_t w = 0; w < w_; w++) {
      p.xw()[w] = x_[r * w_ + w];
      p.zw()[w] = z_[r * w_ + w];
    }
    int diff = ((static_cast<int>(k_[r]) - static_cast<int>(p.y_count() & 3)) % 4 + 4) % 4;
    p.set_sign(diff == 0 ? 1 : -1);
    return p;
  }
  std::vector<PauliString> stabilizers() const {
    std::vector<PauliString> v;
    for (size_t r = n_; r < 2 * n_; r++) v.push_back(row(r));
    return v;
  }

  // Generators commute pairwise, are Hermitian and have full symplectic rank.
  bool check_invariants() const {
    for (size_t r = 0; r < 2 * n_; r++) {
      size_t yc = 0;
      for (size_t w = 0; w < w_; w++) yc += std::popcount(x_[r * w_ + w] & z_[r * w_ + w]);
      if (((k_[r] - yc) & 1) != 0) return false;
    }
    for (size_t a = n_; a < 2 * n_; a++)
      for (size_t b = a + 1; b < 2 * n_; b++)
        if (!rows_commute(a, b)) return false;
    // destabilizer i anticommutes with stabilizer j iff i == j
    for (size_t i = 0; i < n_; i++)
      for (size_t j = 0; j < n_; j++)
        if (rows_commute(i, n_ + j) == (i == j)) return false;
    return true;
  }

 private:
  void set_bit(std::vector<uint64_t>& v, size_t r, size_t q) {
    v[r * w_ + (q >> 6)] |= uint64_t{1} << (q & 63);
  }
  bool bit(const std::vector<uint64_t>& v, size_t r, size_t q) const {
    return (v[r * w_ + (q >> 6)] >> (q & 63)) & 1;
  }
  void flip(std::vector<uint64_t>& v, size_t r, size_t q) { v[r * w_ + (q >> 6)] ^= uint64_t{1} << (q & 63); }

  bool row_commutes(size_t r, const PauliString& p) const {
    size_t c = 0;
    for (size_t w = 0; w < w_; w++)
      c += std::popcount((x_[r * w_ + w] & p.zw()[w]) ^ (z_[r * w_ + w] & p.xw()[w]));
    return (c & 1) == 0;
  }
  bool rows_commute(size_t a, size_t b) const {
    size_t c = 0;
    for (size_t w = 0; w < w_; w++)
      c += std::popcount((x_[a * w_ + w] & z_[b * w_ + w]) ^ (z_[a * w_ + w] & x_[b * w_ + w]));
    return (c & 1) == 0;
  }

  // row a <- row a * row b
  void rowmult(size_t a, size_t b) {
    size_t zx = 0;
    for (size_t w = 0; w < w_; w++) {
      zx += std::popcount(z_[a * w_ + w] & x_[b * w_ + w]);
      x_[a * w_ + w] ^= x_[b * w_ + w];
      z_[a * w_ + w] ^= z_[b * w_ + w];
    }
    k_[a] = (k_[a] + k_[b] + 2 * (zx & 1)) & 3;
  }

  void rotate1(uint32_t q, uint8_t code, int sign, bool pi) { rotate_sparse(&q, &code, 1, sign, pi); }

  void rotate_xx(uint32_t a, uint32_t b, int sign) {
    uint32_t qs[2] = {a, b};
    uint8_t ps[2] = {1, 1};
    rotate_sparse(qs, ps, 2, sign, false);
  }

  void rotate_sparse(const uint32_t* qs, const uint8_t* ps, size_t m, int sign, bool pi) {
    int kg = 0;
    for (size_t i = 0; i < m; i++) kg += ps[i] == 2;
    for (size_t r = 0; r < 2 * n_; r++) {
      int anti = 0, zx = 0;
      for (size_t i = 0; i < m; i++) {
        bool rx = bit(x_, r, qs[i]), rz = bit(z_, r, qs[i]);
        bool gx = pauli_x(ps[i]), gz = pauli_z(ps[i]);
        anti ^= (rx && gz) ^ (rz && gx);
        zx += rz && gx;
      }
      if (!anti) continue;
      if (pi) {
        k_[r] = (k_[r] + 2) & 3;
        continue;
      }
      k_[r] = static_cast<uint8_t>((k_[r] + (sign > 0 ? 1 : 3) + kg + 2 * (zx & 1)) & 3);
      for (size_t i = 0; i < m; i++) {
        if (pauli_x(ps[i])) flip(x_, r, qs[i]);
        if (pauli_z(ps[i])) flip(z_, r, qs[i]);
      }
    }
  }

  int deterministic_value(const PauliString& p) const {
    // Product of stabilizers whose destabilizer anticommutes with p.
    std::vector<uint64_t> sx(w_, 0), sz(w_, 0);
    int k = 0;
    for (size_t i = 0; i < n_; i++) {
      if (row_commutes(i, p)) continue;
      size_t r = n_ + i, zx = 0;
      for (size_t w = 0; w < w_; w++) {
        zx += std::popcount(sz[w] & x_[r * w_ + w]);
        sx[w] ^= x_[r * w_ + w];
        sz[w] ^= z_[r * w_ + w];
      }
      k = (k + k_[r] + 2 * static_cast<int>(zx & 1)) & 3;
    }
    int diff = ((k - p.phase_exp()) % 4 + 4) % 4;
    return diff == 0 ? 1 : -1;
  }

  int measure_impl(const PauliString& p, Rng* rng, int forced) {
    if (p.n_qubits() != n_) throw std::invalid_argument("measure: size mismatch");
    size_t piv = 2 * n_;
    for (size_t r = n_; r < 2 * n_; r++)
      if (!row_commutes(r, p)) {
        piv = r;
        break;
      }
    if (piv == 2 * n_) return deterministic_value(p);
    for (size_t r = 0; r < 2 * n_; r++)
      if (r != piv && !row_commutes(r, p)) rowmult(r, piv);
    size_t d = piv - n_;
    for (size_t w = 0; w < w_; w++) {
      x_[d * w_ + w] = x_[piv * w_ + w];
      z_[d * w_ + w] = z_[piv * w_ + w];
    }
    k_[d] = k_[piv];
    int out;
    if (rng) {
      out = ((*rng)() & 1) ? -1 : 1;
    } else {
      out = forced >= 0 ? 1 : -1;
    }
    for (size_t w = 0; w < w_; w++) {
      x_[piv * w_ + w] = p.xw()[w];
      z_[piv * w_ + w] = p.zw()[w];
    }
    k_[piv] = static_cast<uint8_t>((p.phase_exp() + (out < 0 ? 2 : 0)) & 3);
    return out;
  }

  size_t n_ = 0, w_ = 0;
  std::vector<uint64_t> x_, z_;
  std::vector<uint8_t> k_;
  std::vector<int8_t> record_;
};

// Heisenberg action U P U^dagger of one gate on a single Pauli, using the same
// rotation convention as StabilizerState.
inline PauliString conjugate(const GateOp& g, PauliString p) {
  size_t n = p.n_qubits();
  auto rot = [&](std::initializer_list<std::pair<uint32_t, uint8_t>> terms, int sign, bool pi) {
    PauliString gp = SparsePauli::of(terms).dense(n);
    if (p.commutes(gp)) return;
    if (pi) {
      p.set_sign(-p.sign());
      return;
    }
    PauliString r = p * gp;  // i P G for anticommuting operands
    if (sign < 0) r.set_sign(-r.sign());
    p = r;
  };
  const auto& t = g.targets;
  switch (g.kind) {
    case GateKind::RX: rot({{t[0], 1}}, g.sign, g.pi); break;
    case GateKind::RY: rot({{t[0], 2}}, g.sign, g.pi); break;
    case GateKind::RZ: rot({{t[0], 3}}, g.sign, g.pi); break;
    case GateKind::MS2: rot({{t[0], 1}, {t[1], 1}}, g.sign, false); break;
    case GateKind::MS5:
      for (size_t a = 0; a < 5; a++)
        for (size_t b = a + 1; b < 5; b++) rot({{t[a], 1}, {t[b], 1}}, g.sign, false);
      break;
    case GateKind::CNOT:
      rot({{t[0], 3}}, 1, false);
      rot({{t[1], 1}}, 1, false);
      rot({{t[0], 3}, {t[1], 1}}, -1, false);
      break;
    case GateKind::H:
      rot({{t[0], 3}}, 1, true);
      rot({{t[0], 2}}, 1, false);
      break;
    case GateKind::S: rot({{t[0], 3}}, 1, false); break;
  }
  return p;
}

inline StabilizerState new_state(size_t n) { return StabilizerState(n); }

}  // namespace tiqc
