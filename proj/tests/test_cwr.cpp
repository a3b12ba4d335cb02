/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <gtest/gtest.h>

#include "checks.hpp"

namespace {

using namespace edgecl;

void set_row(Tensor& t, std::size_t r, std::vector<float> v) { std::copy(v.begin(), v.end(), t.row(r).begin()); }
std::vector<float> row_of(const Tensor& t, std::size_t r) { return {t.row(r).begin(), t.row(r).end()}; }

// Two-wide rows: one latent value plus the bias column.
TEST(CwrInit, NeverSeenClassStartsAtZero) {
  CwrHead h(4, 1);
  const std::vector<int> cls{2};
  cwr_init(h, cls);
  EXPECT_EQ(row_of(h.tw, 2), (std::vector<float>{0, 0}));
  EXPECT_TRUE(h.tw_active[2]);
}

TEST(CwrInit, CopiesExperienceRows) {
  CwrHead h(4, 1);
  set_row(h.cw, 1, {1, 2});
  const std::vector<int> cls{1};
  cwr_init(h, cls);
  EXPECT_EQ(row_of(h.tw, 1), (std::vector<float>{1, 2}));
}

TEST(CwrInit, OtherRowsZeroedAndFrozen) {
  std::mt19937_64 rng(1);
  CwrHead h(4, 3);
  h.tw = oracle::random_tensor({4, 4}, rng);
  h.cw = oracle::random_tensor({4, 4}, rng);
  const std::vector<int> cls{0, 2};
  cwr_init(h, cls);
  for (std::size_t j : {1u, 3u}) {
    for (float v : h.tw.row(j)) EXPECT_EQ(v, 0.0f);
    EXPECT_FALSE(h.tw_active[j]);
  }
  // A training step with the row mask leaves those rows at zero.
  LayerParams out{LayerKind::dense, Tensor({3, 4}), Tensor({4}), {}};
  load_rows(out, h.tw);
  const Tensor x = oracle::random_tensor({5, 3}, rng);
  const std::vector<int> labels{0, 2, 0, 2, 1};
  auto loss = softmax_xent(dense_forward(out, x), labels);
  auto g = dense_backward(out, x, loss.grad);
  out.weights.zero_grad();
  out.bias.zero_grad();
  std::copy(g.weights.values().begin(), g.weights.values().end(), out.weights.grad().begin());
  std::copy(g.bias.values().begin(), g.bias.values().end(), out.bias.grad().begin());
  mask_class_grads(out, h.tw_active);
  sgd_step(out.weights, grad_of(out.weights), 0.5f);
  sgd_step(out.bias, grad_of(out.bias), 0.5f);
  Tensor rows({4, 4});
  dense_to_rows(out, rows);
  for (std::size_t j : {1u, 3u})
    for (float v : rows.row(j)) EXPECT_EQ(v, 0.0f);
}

TEST(CwrInit, UnknownClass) {
  CwrHead h(4, 1);
  const std::vector<int> bad{4};
  EXPECT_THROW(cwr_init(h, bad), ArgumentError);
}

TEST(CwrConsolidate, NoPastAdoptsCentredRow) {
  std::mt19937_64 rng(2);
  CwrHead h(3, 2);
  const std::vector<int> cls{0, 1};
  cwr_init(h, cls);
  set_row(h.tw, 0, {1, 2, 3});
  set_row(h.tw, 1, {3, 0, -1});
  const std::vector<std::uint64_t> counts{5, 7, 0};
  cwr_consolidate(h, cls, counts);
  EXPECT_EQ(row_of(h.cw, 0), (std::vector<float>{-1, 1, 2}));
  EXPECT_EQ(row_of(h.cw, 1), (std::vector<float>{1, -1, -2}));
  EXPECT_EQ(h.past, (std::vector<std::uint64_t>{5, 7, 0}));
}

TEST(CwrConsolidate, HandEvaluation) {
  // Rows of width 2 are (latent, bias); tw - mean = [2, 0] for class 0.
  CwrHead h(2, 1);
  h.past = {100, 100};
  const std::vector<int> cls{0, 1};
  cwr_init(h, cls);
  set_row(h.tw, 0, {2, 0});
  set_row(h.tw, 1, {-2, 0});
  const std::vector<std::uint64_t> counts{100, 100};
  cwr_consolidate(h, cls, counts);
  EXPECT_EQ(row_of(h.cw, 0), (std::vector<float>{1, 0}));
  EXPECT_EQ(row_of(h.cw, 1), (std::vector<float>{-1, 0}));
  EXPECT_EQ(h.past[0], 200u);
}

TEST(CwrConsolidate, MatchesIndependentFormula) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    CwrHead h(6, 4);
    h.cw = oracle::random_tensor({6, 5}, rng);
    for (auto& p : h.past) p = std::uniform_int_distribution<std::uint64_t>(0, 300)(rng);
    const std::vector<int> cls{1, 3, 4};
    const Tensor cw0 = h.cw;
    const auto past0 = h.past;
    cwr_init(h, cls);
    h.tw = oracle::random_tensor({6, 5}, rng);
    std::vector<std::uint64_t> counts(6, 0);
    for (int c : cls) counts[static_cast<std::size_t>(c)] = std::uniform_int_distribution<std::uint64_t>(1, 50)(rng);
    cwr_consolidate(h, cls, counts);
    for (int c : cls) {
      const auto j = static_cast<std::size_t>(c);
      const double w = std::sqrt(double(past0[j]) / double(counts[j]));
      for (std::size_t k = 0; k < 5; ++k) {
        double mean = 0;
        for (int d : cls) mean += h.tw[static_cast<std::size_t>(d) * 5 + k];
        mean /= 3.0;
        const double want = (cw0[j * 5 + k] * w + (h.tw[j * 5 + k] - mean)) / (w + 1.0);
        EXPECT_NEAR(h.cw[j * 5 + k], want, 1e-5);
      }
      EXPECT_EQ(h.past[j], past0[j] + counts[j]);
    }
  }
}

TEST(CwrConsolidate, OtherRowsBitwiseUnchanged) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    CwrHead h(8, 3);
    h.cw = oracle::random_tensor({8, 4}, rng, -100.0f, 100.0f);
    for (auto& p : h.past) p = std::uniform_int_distribution<std::uint64_t>(0, 50)(rng);
    std::vector<int> cls;
    for (int j = 0; j < 8; ++j)
      if (rng() % 3 == 0) cls.push_back(j);
    const Tensor before = h.cw;
    const auto past_before = h.past;
    cwr_init(h, cls);
    h.tw = oracle::random_tensor({8, 4}, rng);
    std::vector<std::uint64_t> counts(8, 1);
    cwr_consolidate(h, cls, counts);
    for (std::size_t j = 0; j < 8; ++j) {
      if (std::find(cls.begin(), cls.end(), static_cast<int>(j)) != cls.end()) continue;
      EXPECT_EQ(row_of(h.cw, j), row_of(before, j));
      EXPECT_EQ(h.past[j], past_before[j]);
    }
  }
}

TEST(CwrConsolidate, ZeroCountIsArgumentError) {
  CwrHead h(3, 1);
  const std::vector<int> cls{0, 1};
  cwr_init(h, cls);
  const std::vector<std::uint64_t> counts{3, 0, 0};
  EXPECT_THROW(cwr_consolidate(h, cls, counts), ArgumentError);
}

TEST(CwrPredict, IgnoresTw) {
  std::mt19937_64 rng(5);
  CwrHead h(5, 4);
  h.cw = oracle::random_tensor({5, 5}, rng);
  h.past = {1, 1, 1, 0, 1};
  const Tensor feats = oracle::random_tensor({50, 4}, rng);
  const auto before = cwr_predict(h, feats);
  h.tw = oracle::random_tensor({5, 5}, rng, -1e3f, 1e3f);
  std::fill(h.tw_active.begin(), h.tw_active.end(), true);
  EXPECT_EQ(cwr_predict(h, feats), before);
  for (int p : before) EXPECT_NE(p, 3);  // unseen classes are never predicted
}

TEST(CwrLayout, RowsDenseRoundTrip) {
  std::mt19937_64 rng(6);
  const Tensor rows = oracle::random_tensor({4, 7}, rng);
  Tensor back({4, 7});
  dense_to_rows(rows_to_dense(rows), back);
  EXPECT_EQ(back, rows);
  const Tensor x = oracle::random_tensor({3, 6}, rng);
  const Tensor logits = head_logits(rows, x);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t j = 0; j < 4; ++j) {
      double want = rows[j * 7 + 6];
      for (std::size_t k = 0; k < 6; ++k) want += rows[j * 7 + k] * x[b * 6 + k];
      EXPECT_NEAR(logits[b * 4 + j], want, 1e-5);
    }
}

}  // namespace
