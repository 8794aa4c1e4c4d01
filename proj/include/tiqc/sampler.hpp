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
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "tiqc/protocols.hpp"

namespace tiqc {

// Subset label: number of faults per noise class.
using SubsetLabel = std::array<uint32_t, kNumClasses>;

inline uint32_t total_weight(const SubsetLabel& w) {
  uint32_t t = 0;
  for (auto x : w) t += x;
  return t;
}

inline std::string label_string(const SubsetLabel& w) {
  std::string s;
  for (size_t c = 0; c < kNumClasses; c++) {
    if (c) s += ',';
    s += std::to_string(w[c]);
  }
  return s;
}

// Canonical order: total weight, then lexicographic.
inline bool label_less(const SubsetLabel& a, const SubsetLabel& b) {
  uint32_t ta = total_weight(a), tb = total_weight(b);
  return ta != tb ? ta < tb : a < b;
}

// Short product for small min(w, n - w); lgamma of large arguments loses ~1e-14.
inline double log_choose(uint64_t n, uint64_t w) {
  uint64_t k = std::min(w, n - w);
  if (k > 64) {
    double dn = static_cast<double>(n), dw = static_cast<double>(w);
    return std::lgamma(dn + 1) - std::lgamma(dw + 1) - std::lgamma(dn - dw + 1);
  }
  double lc = 0;
  for (uint64_t i = 1; i <= k; i++) lc += std::log(static_cast<double>(n - k + i) / static_cast<double>(i));
  return lc;
}

inline double log_binom_pmf(uint64_t n, uint64_t w, double p) {
  if (w > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0) return w == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1) return w == n ? 0.0 : -std::numeric_limits<double>::infinity();
  double dn = static_cast<double>(n), dw = static_cast<double>(w);
  return log_choose(n, w) + dw * std::log(p) + (dn - dw) * std::log1p(-p);
}

inline double occurrence_prob(const SubsetLabel& w, const ClassProbs& p, const Census& n) {
  double lg = 0;
  for (size_t c = 0; c < kNumClasses; c++) {
    if (w[c] > n[c]) throw std::invalid_argument("occurrence_prob: label exceeds census");
    lg += log_binom_pmf(n[c], w[c], p[c]);
  }
  return std::exp(lg);
}

// ---------------------------------------------------------------------------
// Selection

class InfeasibleTolerance : public std::runtime_error {
 public:
  InfeasibleTolerance(double coverage, double delta, uint32_t cap)
      : std::runtime_error(message(coverage, delta, cap)), coverage(coverage) {}
  double coverage;

 private:
  static std::string message(double cov, double delta, uint32_t cap) {
    std::ostringstream os;
    os.precision(12);
    os << "tolerance " << delta << " infeasible within weight cap " << cap << ": achieved coverage " << cov;
    return os.str();
  }
};

struct Selection {
  std::vector<SubsetLabel> labels;  // canonical order
  double coverage = 0;              // sum of A at p_max
  ClassProbs p_max{};
};

// All labels of total weight <= cap. Classes that cannot fault at p_max stay at 0.
inline std::vector<SubsetLabel> labels_up_to(const Census& n, const ClassProbs& p_max, uint32_t cap) {
  std::vector<SubsetLabel> out;
  SubsetLabel w{};
  auto rec = [&](auto&& self, size_t c, uint32_t left) -> void {
    if (c == kNumClasses) {
      out.push_back(w);
      return;
    }
    uint32_t hi = p_max[c] > 0 ? static_cast<uint32_t>(std::min<uint64_t>(n[c], left)) : 0;
    for (uint32_t k = 0; k <= hi; k++) {
      w[c] = k;
      self(self, c + 1, left - k);
    }
    w[c] = 0;
  };
  rec(rec, 0, cap);
  std::sort(out.begin(), out.end(), label_less);
  return out;
}

inline Selection weight_cap_subsets(const ClassProbs& p_max, const Census& n, uint32_t cap) {
  Selection s;
  s.p_max = p_max;
  s.labels = labels_up_to(n, p_max, cap);
  for (auto& l : s.labels) s.coverage += occurrence_prob(l, p_max, n);
  return s;
}

// Greedy by descending A (ties: total weight, then lexicographic), closing
// downward after each pick, until the covered mass reaches 1 - delta.
inline Selection select_subsets(const ClassProbs& p_max, const Census& n, double delta, uint32_t weight_cap = 10) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("select_subsets: delta must lie in (0, 1)");
  auto cand = labels_up_to(n, p_max, weight_cap);
  std::vector<std::pair<double, SubsetLabel>> ranked;
  ranked.reserve(cand.size());
  for (auto& l : cand) ranked.push_back({occurrence_prob(l, p_max, n), l});
  std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return label_less(a.second, b.second);
  });
  std::map<SubsetLabel, double> amass;
  for (auto& [a, l] : ranked) amass[l] = a;

  std::set<SubsetLabel> chosen;
  double cov = 0;
  auto close = [&](const SubsetLabel& top) {
    SubsetLabel w{};
    auto rec = [&](auto&& self, size_t c) -> void {
      if (c == kNumClasses) {
        if (chosen.insert(w).second) cov += amass.at(w);
        return;
      }
      for (uint32_t k = 0; k <= top[c]; k++) {
        w[c] = k;
        self(self, c + 1);
      }
    };
    rec(rec, 0);
  };
  const double target = 1.0 - delta;
  close(SubsetLabel{});
  for (auto& [a, l] : ranked) {
    if (cov >= target) break;
    if (!chosen.count(l)) close(l);
  }
  if (cov < target) throw InfeasibleTolerance(cov, delta, weight_cap);
  Selection s;
  s.p_max = p_max;
  s.coverage = cov;
  s.labels.assign(chosen.begin(), chosen.end());
  std::sort(s.labels.begin(), s.labels.end(), label_less);
  return s;
}

// ---------------------------------------------------------------------------
// Seeds and the worker pool

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, const std::string& label, uint64_t shot) {
  uint64_t h = splitmix64(master);
  for (unsigned char ch : label) h = splitmix64(h ^ ch);
  return splitmix64(h ^ splitmix64(shot));
}

// Runs fn(index, acc) for index in [0, count) on `workers` threads. Work is cut
// into fixed chunks, each with its own accumulator, merged in chunk order, so
// the result does not depend on the worker count.
template <class Acc, class Fn>
Acc parallel_reduce(uint64_t count, unsigned workers, Fn fn, uint64_t chunk = 512) {
  uint64_t nchunks = (count + chunk - 1) / chunk;
  std::vector<Acc> parts(nchunks);
  std::atomic<uint64_t> next{0};
  auto work = [&] {
    for (uint64_t k; (k = next.fetch_add(1)) < nchunks;) {
      uint64_t hi = std::min(count, (k + 1) * chunk);
      for (uint64_t i = k * chunk; i < hi; i++) fn(i, parts[k]);
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1 || nchunks <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<uint64_t>(workers, nchunks); t++) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  Acc out;
  for (auto& p : parts) out.merge(p);
  return out;
}

// ---------------------------------------------------------------------------
// Estimates

struct SubsetEstimate {
  SubsetLabel label{};
  uint64_t shots = 0;
  uint64_t fail_z = 0;  // logical Z error (X_L X_L flipped)
  uint64_t fail_x = 0;  // logical X error (Z_L Z_L flipped)
  bool exhaustive = false;
  ResourceTally tally_sum;
  std::map<uint32_t, uint64_t> realized;  // realized weight -> shots

  void add(const ShotResult& r) {
    shots++;
    fail_z += r.z_fail;
    fail_x += r.x_fail;
    tally_sum += r.tally;
    uint32_t rw = 0;
    for (auto v : r.realized) rw += static_cast<uint32_t>(v);
    realized[rw]++;
  }
  void merge(const SubsetEstimate& o) {
    shots += o.shots;
    fail_z += o.fail_z;
    fail_x += o.fail_x;
    tally_sum += o.tally_sum;
    for (auto& [k, v] : o.realized) realized[k] += v;
  }
  double p_z() const { return shots ? static_cast<double>(fail_z) / static_cast<double>(shots) : 0.0; }
  double p_x() const { return shots ? static_cast<double>(fail_x) / static_cast<double>(shots) : 0.0; }
  // Binomial standard error; zero for enumerated subsets.
  double se(uint64_t fails) const {
    if (exhaustive || shots == 0) return 0.0;
    double p = static_cast<double>(fails) / static_cast<double>(shots);
    return std::sqrt(p * (1 - p) / static_cast<double>(shots));
  }
  double se_z() const { return se(fail_z); }
  double se_x() const { return se(fail_x); }
};

struct SamplerOptions {
  CensusPolicy policy = CensusPolicy::Program;
  uint64_t seed = 1;
  unsigned workers = 1;
  // Shots per total weight; weights past the end use the last entry.
  std::vector<uint64_t> shots_by_weight{0, 0, 10000, 10000, 2000};

  uint64_t shots_for(uint32_t w) const {
    if (shots_by_weight.empty()) return 0;
    return w < shots_by_weight.size() ? shots_by_weight[w] : shots_by_weight.back();
  }
};

inline Census census_of(const Protocol& pr, CensusPolicy policy) {
  return policy == CensusPolicy::Program ? pr.circuit.static_census : reference_run(pr).executed;
}

// Floyd's algorithm: w distinct values in [0, n).
inline std::vector<uint64_t> floyd_sample(uint64_t n, uint32_t w, Rng& rng) {
  std::unordered_set<uint64_t> s;
  std::vector<uint64_t> out;
  for (uint64_t j = n - w; j < n; j++) {
    uint64_t t = std::uniform_int_distribution<uint64_t>(0, j)(rng);
    uint64_t v = s.count(t) ? j : t;
    s.insert(v);
    out.push_back(v);
  }
  return out;
}

inline SubsetEstimate sample_subset(const Protocol& pr, const SubsetLabel& label, const Census& census, uint64_t shots,
                                    const SamplerOptions& opt) {
  for (size_t c = 0; c < kNumClasses; c++)
    if (label[c] > census[c]) throw std::invalid_argument("sample_subset: label exceeds census");
  const uint32_t w = total_weight(label);
  SubsetEstimate est;
  if (w == 0) {
    // p_L = 0 without simulation; one error-free run supplies the tally.
    auto r = reference_run(pr, opt.seed);
    est.add(r);
    est.fail_z = est.fail_x = 0;
    est.exhaustive = true;
  } else if (w == 1) {
    size_t c = 0;
    while (label[c] == 0) c++;
    const auto cls = static_cast<FaultClass>(c);
    const uint64_t sup = support_size(cls);
    const std::string tag = pr.name + ":" + label_string(label);
    est = parallel_reduce<SubsetEstimate>(census[c] * sup, opt.workers, [&](uint64_t i, SubsetEstimate& acc) {
      FaultAssignment a;
      a.add(cls, i / sup, static_cast<uint32_t>(i % sup));
      acc.add(bell_pair_experiment(pr, {&a, opt.policy, nullptr}, derive_seed(opt.seed, tag, i)));
    });
    est.exhaustive = true;
  } else {
    const std::string tag = pr.name + ":" + label_string(label);
    est = parallel_reduce<SubsetEstimate>(shots, opt.workers, [&](uint64_t i, SubsetEstimate& acc) {
      Rng g(derive_seed(opt.seed, tag, i));
      FaultAssignment a;
      for (size_t c = 0; c < kNumClasses; c++) {
        if (!label[c]) continue;
        auto cls = static_cast<FaultClass>(c);
        std::uniform_int_distribution<uint32_t> e(0, support_size(cls) - 1);
        for (auto o : floyd_sample(census[c], label[c], g)) a.add(cls, o, e(g));
      }
      acc.add(bell_pair_experiment(pr, {&a, opt.policy, nullptr}, g()));
    });
  }
  est.label = label;
  return est;
}

inline std::vector<SubsetEstimate> sample_all(const Protocol& pr, const Selection& sel, const Census& census,
                                              const SamplerOptions& opt) {
  std::vector<SubsetEstimate> out;
  for (auto& l : sel.labels) out.push_back(sample_subset(pr, l, census, opt.shots_for(total_weight(l)), opt));
  return out;
}

// ---------------------------------------------------------------------------
// Bounds and re-weighting

struct Bounds {
  double lower = 0, point = 0, upper = 0;
  double se = 0;  // standard error of the lower bound
};

struct ResourceMeans {
  double one_q = 0, ms2 = 0, ms5 = 0, measurements = 0, resets = 0, crossings = 0;
  double fixed_seconds = 0, cross_units = 0;
  double duration(double t_cross_s) const { return fixed_seconds + cross_units * t_cross_s; }
};

struct Combined {
  Bounds z, x;
  double sampled_mass = 0;
  ResourceMeans resources;  // subset-weighted, normalized over sampled mass
};

inline Combined combine(const std::vector<SubsetEstimate>& est, const ClassProbs& p, const Census& census) {
  Combined out;
  double vz = 0, vx = 0;
  ResourceMeans& m = out.resources;
  for (auto& e : est) {
    double a = occurrence_prob(e.label, p, census);
    out.sampled_mass += a;
    out.z.lower += a * e.p_z();
    out.x.lower += a * e.p_x();
    vz += a * a * e.se_z() * e.se_z();
    vx += a * a * e.se_x() * e.se_x();
    if (e.shots) {
      double k = a / static_cast<double>(e.shots);
      const auto& t = e.tally_sum;
      m.one_q += k * static_cast<double>(t.one_q);
      m.ms2 += k * static_cast<double>(t.ms2);
      m.ms5 += k * static_cast<double>(t.ms5);
      m.measurements += k * static_cast<double>(t.measurements);
      m.resets += k * static_cast<double>(t.resets);
      m.crossings += k * static_cast<double>(t.crossings);
      m.fixed_seconds += k * t.fixed_seconds;
      m.cross_units += k * static_cast<double>(t.cross_units);
    }
  }
  if (out.sampled_mass > 0) {
    double s = 1.0 / out.sampled_mass;
    for (double* f : {&m.one_q, &m.ms2, &m.ms5, &m.measurements, &m.resets, &m.crossings, &m.fixed_seconds,
                      &m.cross_units})
      *f *= s;
  }
  const double gap = std::max(0.0, 1.0 - out.sampled_mass);
  for (auto [b, v] : {std::pair{&out.z, vz}, std::pair{&out.x, vx}}) {
    b->point = b->lower;
    b->upper = std::min(1.0, b->lower + gap);
    b->se = std::sqrt(v);
  }
  return out;
}

struct SweepPoint {
  ClassProbs p{};
  Combined c;
  double duration_s = 0;
};

inline bool in_hypercube(const ClassProbs& p, const ClassProbs& p_max) {
  for (size_t c = 0; c < kNumClasses; c++)
    if (!(p[c] >= 0 && p[c] <= p_max[c] * (1 + 1e-12))) return false;
  return true;
}

// Analytic re-weighting of stored estimates; no simulation.
inline std::vector<SweepPoint> sweep(const std::vector<ClassProbs>& grid, const std::vector<SubsetEstimate>& est,
                                     const Census& census, const ClassProbs& p_max, double T2) {
  std::vector<SweepPoint> out;
  for (auto& p : grid) {
    if (!in_hypercube(p, p_max)) throw std::out_of_range("sweep: grid point outside the sampled hypercube");
    SweepPoint sp;
    sp.p = p;
    sp.c = combine(est, p, census);
    sp.duration_s = sp.c.resources.duration(t_cross(p[static_cast<size_t>(FaultClass::Cross)], T2));
    out.push_back(sp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traditional sampler

struct TraditionalEstimate {
  uint64_t shots = 0, fail_z = 0, fail_x = 0;
  Census realized{};
  ResourceTally tally_sum;

  void add(const ShotResult& r) {
    shots++;
    fail_z += r.z_fail;
    fail_x += r.x_fail;
    for (size_t c = 0; c < kNumClasses; c++) realized[c] += r.realized[c];
    tally_sum += r.tally;
  }
  void merge(const TraditionalEstimate& o) {
    shots += o.shots;
    fail_z += o.fail_z;
    fail_x += o.fail_x;
    for (size_t c = 0; c < kNumClasses; c++) realized[c] += o.realized[c];
    tally_sum += o.tally_sum;
  }
  double p_z() const { return shots ? static_cast<double>(fail_z) / static_cast<double>(shots) : 0.0; }
  double p_x() const { return shots ? static_cast<double>(fail_x) / static_cast<double>(shots) : 0.0; }
  double se_z() const { return shots ? std::sqrt(p_z() * (1 - p_z()) / static_cast<double>(shots)) : 0.0; }
  double se_x() const { return shots ? std::sqrt(p_x() * (1 - p_x()) / static_cast<double>(shots)) : 0.0; }
};

inline TraditionalEstimate traditional_sampler(const Protocol& pr, const ClassProbs& p, uint64_t shots, uint64_t seed,
                                               unsigned workers = 1) {
  const std::string tag = pr.name + ":traditional";
  return parallel_reduce<TraditionalEstimate>(shots, workers, [&](uint64_t i, TraditionalEstimate& acc) {
    acc.add(bell_pair_experiment(pr, {nullptr, CensusPolicy::Reference, &p}, derive_seed(seed, tag, i)));
  });
}

// ---------------------------------------------------------------------------
// Results file

constexpr int kResultsFormat = 1;

struct SubsetResults {
  std::string protocol;
  CensusPolicy policy = CensusPolicy::Program;
  Census census{};
  ClassProbs p_max{};
  uint64_t seed = 0;
  double T2 = 2.2;
  std::vector<SubsetEstimate> subsets;
};

inline nlohmann::ordered_json tally_json(const ResourceTally& t) {
  return {{"one_q", t.one_q},       {"ms2", t.ms2},     {"ms5", t.ms5},   {"measurements", t.measurements},
          {"resets", t.resets},     {"crossings", t.crossings}, {"reorder", t.reorder}, {"cool", t.cool},
          {"fixed_seconds", t.fixed_seconds}, {"cross_units", t.cross_units}};
}

inline ResourceTally tally_from_json(const nlohmann::json& j) {
  ResourceTally t;
  t.one_q = j.at("one_q");
  t.ms2 = j.at("ms2");
  t.ms5 = j.at("ms5");
  t.measurements = j.at("measurements");
  t.resets = j.at("resets");
  t.crossings = j.at("crossings");
  t.reorder = j.at("reorder");
  t.cool = j.at("cool");
  t.fixed_seconds = j.at("fixed_seconds");
  t.cross_units = j.at("cross_units");
  return t;
}

inline nlohmann::ordered_json to_json(const SubsetResults& r) {
  nlohmann::ordered_json j;
  j["format"] = kResultsFormat;
  j["protocol"] = r.protocol;
  j["census_policy"] = policy_name(r.policy);
  j["census"] = r.census;
  j["p_max"] = r.p_max;
  j["seed"] = r.seed;
  j["T2_s"] = r.T2;
  auto& arr = j["subsets"] = nlohmann::ordered_json::array();
  for (auto& e : r.subsets) {
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (auto& [k, v] : e.realized) h[std::to_string(k)] = v;
    arr.push_back({{"label", e.label},
                   {"shots", e.shots},
                   {"fail_z", e.fail_z},
                   {"fail_x", e.fail_x},
                   {"exhaustive", e.exhaustive},
                   {"tally_sum", tally_json(e.tally_sum)},
                   {"realized_weight", h}});
  }
  return j;
}

inline SubsetResults results_from_json(const nlohmann::json& j) {
  if (j.at("format") != kResultsFormat) throw std::invalid_argument("results file: unsupported format");
  SubsetResults r;
  r.protocol = j.at("protocol");
  r.policy = parse_policy(j.at("census_policy"));
  r.census = j.at("census").get<Census>();
  r.p_max = j.at("p_max").get<ClassProbs>();
  r.seed = j.at("seed");
  r.T2 = j.at("T2_s");
  for (auto& s : j.at("subsets")) {
    SubsetEstimate e;
    e.label = s.at("label").get<SubsetLabel>();
    e.shots = s.at("shots");
    e.fail_z = s.at("fail_z");
    e.fail_x = s.at("fail_x");
    e.exhaustive = s.at("exhaustive");
    e.tally_sum = tally_from_json(s.at("tally_sum"));
    for (auto& [k, v] : s.at("realized_weight").items()) e.realized[static_cast<uint32_t>(std::stoul(k))] = v;
    r.subsets.push_back(std::move(e));
  }
  return r;
}

}  // namespace tiqc
