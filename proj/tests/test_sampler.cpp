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

#include <random>

#include "tiqc/sampler.hpp"

using namespace tiqc;

namespace {

SubsetLabel one(size_t c, uint32_t w) {
  SubsetLabel l{};
  l[c] = w;
  return l;
}

double choose(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; i++) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Sampler, OccurrenceProbMatchesDirectPmf) {
  Census n{100, 0, 0, 0, 0, 0};
  ClassProbs p{0.01, 0, 0, 0, 0, 0};
  EXPECT_NEAR(occurrence_prob(one(0, 2), p, n), 0.18486, 1e-5);
  EXPECT_NEAR(occurrence_prob(one(0, 2), p, n), static_cast<double>(4950.0L * 1e-4L * std::pow(1.0L - 0.01L, 98)), 1e-14);

  Census m{36, 102, 36, 12, 3768, 0};
  ClassProbs q{1e-4, 1e-5, 2e-4, 1e-3, 6.8e-6, 1e-5};
  long double zero = 1;  // extended precision: 1 - q rounds badly in double
  for (size_t c = 0; c < kNumClasses; c++) zero *= std::pow(1.0L - q[c], static_cast<long double>(m[c]));
  EXPECT_NEAR(occurrence_prob({}, q, m), static_cast<double>(zero), 1e-14);
  EXPECT_THROW(occurrence_prob(one(5, 1), q, m), std::invalid_argument);
}

TEST(Sampler, OccurrenceProbIsStableForLargeCensus) {
  Census n{0, 0, 0, 0, 50000, 0};
  ClassProbs p{0, 0, 0, 0, 6.8e-6, 0};
  double a = occurrence_prob(one(4, 3), p, n);
  double lam = 50000 * 6.8e-6;
  EXPECT_NEAR(a, std::exp(-lam) * lam * lam * lam / 6, 1e-6);
}

TEST(Sampler, NormalizationOverRandomCensuses) {
  std::mt19937_64 g(2024);
  for (int t = 0; t < 100; t++) {
    Census n{};
    ClassProbs p{};
    double cells = 1;
    for (size_t c = 0; c < kNumClasses; c++) {
      uint64_t hi = cells < 100 ? 200 : cells < 2000 ? 20 : 3;
      n[c] = g() % (hi + 1);
      cells *= static_cast<double>(n[c] + 1);
      p[c] = std::uniform_real_distribution<double>(1e-4, 0.5)(g);
    }
    uint32_t all = 0;
    for (auto v : n) all += static_cast<uint32_t>(v);
    long double sum = 0;
    for (auto& l : labels_up_to(n, p, all)) sum += occurrence_prob(l, p, n);
    EXPECT_NEAR(static_cast<double>(sum), 1.0, 1e-12) << "census " << t;
  }
}

TEST(Sampler, SelectionTinyCensusTakesEverything) {
  Census n{3, 0, 0, 0, 0, 0};
  ClassProbs p{0.1, 0, 0, 0, 0, 0};
  auto s = select_subsets(p, n, 1e-6);
  ASSERT_EQ(s.labels.size(), 4u);
  for (uint32_t w = 0; w < 4; w++) EXPECT_EQ(s.labels[w], one(0, w));
  EXPECT_NEAR(s.coverage, 1.0, 1e-12);
}

TEST(Sampler, SelectionLargeDeltaIsZeroSubsetOnly) {
  Census n{20, 30, 0, 0, 0, 0};
  ClassProbs p{0.01, 0.02, 0, 0, 0, 0};
  auto s = select_subsets(p, n, 0.999);
  ASSERT_EQ(s.labels.size(), 1u);
  EXPECT_EQ(s.labels[0], SubsetLabel{});
}

TEST(Sampler, SelectionIsDownwardClosedAndCovers) {
  Census n{36, 102, 36, 12, 3768, 448};
  ClassProbs p{1e-4, 1e-5, 2e-4, 1e-3, 6.8e-6, 1e-3};
  for (double delta : {1e-2, 1e-4, 1e-7}) {
    auto s = select_subsets(p, n, delta);
    EXPECT_GE(s.coverage, 1 - delta);
    std::set<SubsetLabel> set(s.labels.begin(), s.labels.end());
    for (auto& l : s.labels)
      for (size_t c = 0; c < kNumClasses; c++)
        if (l[c]) {
          auto d = l;
          d[c]--;
          EXPECT_TRUE(set.count(d)) << label_string(l);
        }
    // Coverage recomputed independently.
    double cov = 0;
    for (auto& l : s.labels) cov += occurrence_prob(l, p, n);
    EXPECT_NEAR(cov, s.coverage, 1e-12);
  }
}

TEST(Sampler, SelectionValidOverHypercube) {
  Census n{36, 102, 36, 12, 3768, 448};
  ClassProbs pmax{1e-4, 1e-5, 2e-4, 1e-3, 6.8e-6, 1e-3};
  auto s = select_subsets(pmax, n, 1e-5);
  std::mt19937_64 g(3);
  for (int t = 0; t < 50; t++) {
    ClassProbs p;
    for (size_t c = 0; c < kNumClasses; c++) p[c] = pmax[c] * std::uniform_real_distribution<double>(0, 1)(g);
    double cov = 0;
    for (auto& l : s.labels) cov += occurrence_prob(l, p, n);
    EXPECT_GE(cov, 1 - 1e-5);
  }
}

TEST(Sampler, InfeasibleToleranceReportsCoverage) {
  Census n{0, 0, 0, 0, 50000, 0};
  ClassProbs p{0, 0, 0, 0, 1e-4, 0};  // mean weight 5
  try {
    select_subsets(p, n, 1e-9, 4);
    FAIL() << "expected InfeasibleTolerance";
  } catch (const InfeasibleTolerance& e) {
    double cov = 0;
    for (uint32_t w = 0; w <= 4; w++) cov += occurrence_prob(one(4, w), p, n);
    EXPECT_NEAR(e.coverage, cov, 1e-12);
  }
}

TEST(Sampler, WeightCapPresetEnumeratesAllLabels) {
  Census n{0, 28, 7, 0, 560, 448};
  ClassProbs p{0, 1e-5, 2e-4, 0, 6.8e-6, 1e-3};
  auto s = weight_cap_subsets(p, n, 7);
  EXPECT_EQ(s.labels.size(), static_cast<size_t>(choose(11, 4)));  // 4 active classes
  for (auto& l : s.labels) EXPECT_LE(total_weight(l), 7u);
}

TEST(Sampler, FloydDrawsDistinctUniformOrdinals) {
  Rng g(9);
  std::vector<uint64_t> hits(10, 0);
  for (int t = 0; t < 20000; t++) {
    auto v = floyd_sample(10, 3, g);
    std::set<uint64_t> s(v.begin(), v.end());
    ASSERT_EQ(s.size(), 3u);
    for (auto x : v) {
      ASSERT_LT(x, 10u);
      hits[x]++;
    }
  }
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h), 6000.0, 300.0);
}

TEST(Sampler, CombineAllSubsetsClosesTheGap) {
  Census n{3, 0, 0, 0, 0, 0};
  ClassProbs p{0.2, 0, 0, 0, 0, 0};
  std::vector<SubsetEstimate> est;
  for (uint32_t w = 0; w <= 3; w++) {
    SubsetEstimate e;
    e.label = one(0, w);
    e.shots = 100;
    e.fail_z = w * 20;
    e.fail_x = w * 10;
    est.push_back(e);
  }
  auto c = combine(est, p, n);
  EXPECT_NEAR(c.z.lower, c.z.upper, 1e-15);
  double want = 0;
  for (uint32_t w = 0; w <= 3; w++) want += choose(3, w) * std::pow(0.2, w) * std::pow(0.8, 3 - w) * 0.2 * w;
  EXPECT_NEAR(c.z.point, want, 1e-14);

  est.pop_back();
  auto d = combine(est, p, n);
  EXPECT_LE(d.z.lower, d.z.upper);
  EXPECT_NEAR(d.z.upper - d.z.lower, std::pow(0.2, 3), 1e-15);
}

TEST(Sampler, ZeroNoisePointIsExactlyZero) {
  const auto pr = make_protocol("transversal-cnot", NoiseParams::anticipated());
  auto n = census_of(pr, CensusPolicy::Program);
  ClassProbs pmax = class_probs(NoiseParams::anticipated());
  auto sel = weight_cap_subsets(pmax, n, 2);
  SamplerOptions o;
  o.shots_by_weight = {0, 0, 200};
  auto est = sample_all(pr, sel, n, o);
  auto c = combine(est, ClassProbs{}, n);
  EXPECT_EQ(c.z.lower, 0.0);
  EXPECT_EQ(c.z.upper, 0.0);
  EXPECT_EQ(c.x.upper, 0.0);
  // Zero subset and weight-1 subsets: exact zero.
  for (auto& e : est)
    if (total_weight(e.label) <= 1) {
      EXPECT_TRUE(e.exhaustive);
      EXPECT_EQ(e.fail_z + e.fail_x, 0u) << label_string(e.label);
    }
  EXPECT_EQ(est[0].shots, 1u);
}

TEST(Sampler, WeightOneIsExhaustive) {
  const auto pr = make_protocol("transversal-cnot", NoiseParams::anticipated());
  auto n = census_of(pr, CensusPolicy::Program);
  auto e = sample_subset(pr, one(2, 1), n, 0, {});
  EXPECT_EQ(e.shots, n[2] * 15);
  EXPECT_EQ(e.realized.at(1), e.shots);
}

TEST(Sampler, SubsetSamplingIsDeterministicAcrossWorkers) {
  const auto pr = make_protocol("flag-qec", NoiseParams::depolarizing(5e-3));
  auto n = census_of(pr, CensusPolicy::Program);
  SubsetLabel l{1, 0, 1, 0, 0, 0};
  SamplerOptions a, b;
  a.seed = b.seed = 42;
  b.workers = 3;
  auto x = sample_subset(pr, l, n, 1500, a);
  auto y = sample_subset(pr, l, n, 1500, b);
  EXPECT_EQ(x.fail_z, y.fail_z);
  EXPECT_EQ(x.fail_x, y.fail_x);
  EXPECT_EQ(x.tally_sum, y.tally_sum);
  EXPECT_EQ(x.realized, y.realized);
  SamplerOptions c = a;
  c.seed = 43;
  auto z = sample_subset(pr, l, n, 1500, c);
  EXPECT_FALSE(z.fail_z == x.fail_z && z.tally_sum == x.tally_sum);
}

TEST(Sampler, SweepReweightsWithoutChangingEstimates) {
  const auto pr = make_protocol("transversal-cnot", NoiseParams::anticipated());
  auto n = census_of(pr, CensusPolicy::Program);
  ClassProbs pmax = class_probs(NoiseParams::anticipated());
  pmax[5] = 1e-3;
  auto sel = weight_cap_subsets(pmax, n, 3);
  SamplerOptions o;
  o.shots_by_weight = {0, 0, 300};
  auto est = sample_all(pr, sel, n, o);
  auto before = to_json({pr.name, o.policy, n, pmax, o.seed, 2.2, est}).dump();
  std::vector<ClassProbs> grid;
  for (double pc : {1e-5, 1e-4, 1e-3}) {
    auto p = pmax;
    p[5] = pc;
    grid.push_back(p);
  }
  auto s1 = sweep(grid, est, n, pmax, 2.2);
  auto s2 = sweep(grid, est, n, pmax, 2.2);
  for (size_t i = 0; i < grid.size(); i++) {
    EXPECT_EQ(s1[i].c.z.lower, s2[i].c.z.lower);
    EXPECT_LE(s1[i].c.z.lower, s1[i].c.z.upper);
    EXPECT_LE(s1[i].c.x.lower, s1[i].c.x.upper);
  }
  EXPECT_LT(s1[0].duration_s, s1[2].duration_s);
  EXPECT_EQ(before, to_json({pr.name, o.policy, n, pmax, o.seed, 2.2, est}).dump());
  auto out = pmax;
  out[5] = 2e-3;
  EXPECT_THROW(sweep({out}, est, n, pmax, 2.2), std::out_of_range);
}

TEST(Sampler, GapShrinksAsSubsetsAreAdded) {
  Census n{36, 102, 36, 12, 0, 0};
  ClassProbs p{5e-3, 5e-3, 5e-3, 5e-3, 0, 0};
  double last = 1;
  for (uint32_t cap = 0; cap <= 6; cap++) {
    auto s = weight_cap_subsets(p, n, cap);
    std::vector<SubsetEstimate> est;
    for (auto& l : s.labels) {
      SubsetEstimate e;
      e.label = l;
      est.push_back(e);
    }
    auto c = combine(est, p, n);
    double gap = c.z.upper - c.z.lower;
    EXPECT_LE(gap, last);
    last = gap;
  }
}

TEST(Sampler, TraditionalRealizedMeanMatchesCensus) {
  const auto pr = make_protocol("transversal-cnot", NoiseParams::anticipated());
  ClassProbs p{0, 0.01, 0.01, 0, 0.001, 0.003};
  auto t = traditional_sampler(pr, p, 4000, 5);
  auto n = reference_run(pr).executed;
  for (size_t c = 0; c < kNumClasses; c++) {
    double mean = static_cast<double>(t.realized[c]) / 4000.0;
    double want = static_cast<double>(n[c]) * p[c];
    EXPECT_NEAR(mean, want, 5 * std::sqrt(want / 4000.0) + 1e-12) << class_name(c);
  }
  auto z = traditional_sampler(pr, ClassProbs{}, 200, 5);
  EXPECT_EQ(z.fail_z + z.fail_x, 0u);
}

TEST(Sampler, ResultsFileRoundTrips) {
  SubsetResults r;
  r.protocol = "flag-qec";
  r.census = {1, 2, 3, 4, 5, 6};
  r.p_max = {1e-4, 0.1, 0.2, 1.0 / 3.0, 0, 1e-5};
  r.seed = 77;
  SubsetEstimate e;
  e.label = {1, 0, 1, 0, 0, 0};
  e.shots = 10;
  e.fail_z = 2;
  e.tally_sum.one_q = 123;
  e.tally_sum.fixed_seconds = 0.1 + 0.2;
  e.realized = {{1, 3}, {2, 7}};
  r.subsets.push_back(e);
  auto s = to_json(r).dump();
  auto back = results_from_json(nlohmann::json::parse(s));
  EXPECT_EQ(to_json(back).dump(), s);
  EXPECT_EQ(back.subsets[0].tally_sum, e.tally_sum);
  EXPECT_EQ(back.p_max, r.p_max);
}

TEST(Sampler, SeedsDependOnAllInputs) {
  auto a = derive_seed(1, "x:1,0", 0);
  EXPECT_EQ(a, derive_seed(1, "x:1,0", 0));
  EXPECT_NE(a, derive_seed(2, "x:1,0", 0));
  EXPECT_NE(a, derive_seed(1, "x:0,1", 0));
  EXPECT_NE(a, derive_seed(1, "x:1,0", 1));
}
