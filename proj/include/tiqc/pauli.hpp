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
#include <stdexcept>
#include <string>
#include <vector>

namespace tiqc {

inline size_t num_words(size_t n) { return (n + 63) / 64; }

// Single-qubit Pauli codes: 0=I, 1=X, 2=Y, 3=Z.
inline bool pauli_x(uint8_t p) { return p == 1 || p == 2; }
inline bool pauli_z(uint8_t p) { return p == 2 || p == 3; }
inline uint8_t pauli_code(bool x, bool z) { return x ? (z ? 2 : 1) : (z ? 3 : 0); }

class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(size_t n) : n_(n), x_(num_words(n), 0), z_(num_words(n), 0) {}

  // Accepts "+XYZI", "-ZZ", "XX" (leading sign optional).
  static PauliString from_str(const std::string& s) {
    size_t off = 0;
    int sign = 1;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
      sign = s[0] == '-' ? -1 : 1;
      off = 1;
    }
    PauliString p(s.size() - off);
    for (size_t i = off; i < s.size(); i++) {
      char c = s[i];
      uint8_t code;
      switch (c) {
        case 'I': case '_': code = 0; break;
        case 'X': code = 1; break;
        case 'Y': code = 2; break;
        case 'Z': code = 3; break;
        default: throw std::invalid_argument("bad Pauli character");
      }
      p.set(i - off, code);
    }
    p.sign_ = sign;
    return p;
  }

  static PauliString single(size_t n, size_t q, uint8_t code) {
    PauliString p(n);
    p.set(q, code);
    return p;
  }

  size_t n_qubits() const { return n_; }
  int sign() const { return sign_; }
  void set_sign(int s) { sign_ = s >= 0 ? 1 : -1; }

  bool x(size_t q) const { return (x_[q >> 6] >> (q & 63)) & 1; }
  bool z(size_t q) const { return (z_[q >> 6] >> (q & 63)) & 1; }
  uint8_t get(size_t q) const { return pauli_code(x(q), z(q)); }

  void set(size_t q, uint8_t code) {
    if (q >= n_) throw std::out_of_range("qubit index");
    uint64_t m = uint64_t{1} << (q & 63);
    x_[q >> 6] = pauli_x(code) ? (x_[q >> 6] | m) : (x_[q >> 6] & ~m);
    z_[q >> 6] = pauli_z(code) ? (z_[q >> 6] | m) : (z_[q >> 6] & ~m);
  }

  const std::vector<uint64_t>& xw() const { return x_; }
  const std::vector<uint64_t>& zw() const { return z_; }
  std::vector<uint64_t>& xw() { return x_; }
  std::vector<uint64_t>& zw() { return z_; }

  size_t weight() const {
    size_t w = 0;
    for (size_t i = 0; i < x_.size(); i++) w += std::popcount(x_[i] | z_[i]);
    return w;
  }
  bool is_identity() const { return weight() == 0; }

  // Y count, used to convert between the +-1 sign and i^k X^x Z^z phases.
  size_t y_count() const {
    size_t w = 0;
    for (size_t i = 0; i < x_.size(); i++) w += std::popcount(x_[i] & z_[i]);
    return w;
  }

  bool commutes(const PauliString& o) const {
    check_same(o);
    size_t c = 0;
    for (size_t i = 0; i < x_.size(); i++) c += std::popcount((x_[i] & o.z_[i]) ^ (z_[i] & o.x_[i]));
    return (c & 1) == 0;
  }

  // Hermitian product when the operands commute; when they anticommute the
  // product is anti-Hermitian and we return i*P*Q instead (used by rotations).
  PauliString operator*(const PauliString& o) const {
    check_same(o);
    // i^k X^x Z^z convention: k = 2[sign<0] + #Y.
    int k = phase_exp() + o.phase_exp();
    size_t zx = 0;
    for (size_t i = 0; i < x_.size(); i++) zx += std::popcount(z_[i] & o.x_[i]);
    k += 2 * static_cast<int>(zx & 1);
    PauliString r(n_);
    for (size_t i = 0; i < x_.size(); i++) {
      r.x_[i] = x_[i] ^ o.x_[i];
      r.z_[i] = z_[i] ^ o.z_[i];
    }
    int diff = ((k - static_cast<int>(r.y_count() & 3)) % 4 + 4) % 4;
    if (diff & 1) diff = (diff + 1) & 3;  // anticommuting: multiply by i
    r.sign_ = diff == 0 ? 1 : -1;
    return r;
  }

  bool operator==(const PauliString& o) const {
    return n_ == o.n_ && sign_ == o.sign_ && x_ == o.x_ && z_ == o.z_;
  }
  bool operator!=(const PauliString& o) const { return !(*this == o); }

  // Equality ignoring sign.
  bool same_support(const PauliString& o) const { return n_ == o.n_ && x_ == o.x_ && z_ == o.z_; }

  std::string str() const {
    std::string s(1, sign_ < 0 ? '-' : '+');
    for (size_t q = 0; q < n_; q++) s.push_back("IXYZ"[get(q)]);
    return s;
  }

  int phase_exp() const { return (sign_ < 0 ? 2 : 0) + static_cast<int>(y_count() & 3); }

 private:
  void check_same(const PauliString& o) const {
    if (o.n_ != n_) throw std::invalid_argument("PauliString size mismatch");
  }

  size_t n_ = 0;
  int sign_ = 1;
  std::vector<uint64_t> x_, z_;
};

// Sparse Pauli: a handful of (qubit, code) pairs. Noise and gates are sparse.
struct SparsePauli {
  std::vector<std::pair<uint32_t, uint8_t>> terms;
  int sign = 1;

  static SparsePauli of(std::initializer_list<std::pair<uint32_t, uint8_t>> t) {
    SparsePauli s;
    s.terms = t;
    return s;
  }
  PauliString dense(size_t n) const {
    PauliString p(n);
    for (auto [q, c] : terms) p.set(q, c);
    p.set_sign(sign);
    return p;
  }
};

}  // namespace tiqc
