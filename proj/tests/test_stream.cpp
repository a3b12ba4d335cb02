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

#include <set>

#include "checks.hpp"

namespace {

using namespace edgecl;

StreamSpec small_spec() {
  StreamSpec s;
  s.frames_per_experience = 6;
  s.image_size = 8;
  return s;
}

double correlation(std::span<const float> a, std::span<const float> b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(Dataset, Deterministic) {
  const auto spec = small_spec();
  const auto a = generate_dataset(spec, 42), b = generate_dataset(spec, 42);
  ASSERT_EQ(a.clips.size(), b.clips.size());
  for (std::size_t i = 0; i < a.clips.size(); ++i) EXPECT_EQ(a.clips[i].frames, b.clips[i].frames);
  const auto c = generate_dataset(spec, 43);
  EXPECT_NE(a.clips[0].frames, c.clips[0].frames);
}

TEST(Dataset, SessionsAreCorrelatedInside) {
  StreamSpec spec;
  const auto ds = generate_dataset(spec, 7);
  double within = 0, between = 0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t c = 0; c < spec.total_classes(); ++c)
    for (std::size_t o = 0; o < spec.objects_per_class; ++o)
      for (std::size_t s = 0; s < spec.sessions_per_object; ++s) {
        const Tensor& f = ds.clip(c, o, s).frames;
        for (std::size_t i = 0; i + 1 < f.dim(0); i += 3) {
          within += correlation(f.row(i), f.row(i + 1));
          ++nw;
        }
        for (std::size_t t = s + 1; t < spec.sessions_per_object; ++t) {
          const Tensor& g = ds.clip(c, o, t).frames;
          for (std::size_t i = 0; i < f.dim(0); i += 3) {
            between += correlation(f.row(i), g.row(i));
            ++nb;
          }
        }
      }
  within /= double(nw);
  between /= double(nb);
  EXPECT_GT(within, between);
  EXPECT_GT(within, 0.5);
}

// Logistic regression on raw pixels, fitted to even frames of one session
// per object and scored on the odd frames.
TEST(Dataset, LinearProbeSeparatesTwoClasses) {
  StreamSpec spec;
  const auto ds = generate_dataset(spec, 11);
  for (std::size_t pair = 0; pair + 1 < spec.total_classes(); pair += 2) {
    std::vector<std::vector<double>> xs_train, xs_test;
    std::vector<int> y_train, y_test;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t o = 0; o < spec.objects_per_class; ++o) {
        const Tensor& f = ds.clip(pair + k, o, 0).frames;
        for (std::size_t i = 0; i < f.dim(0); ++i) {
          std::vector<double> x(f.row(i).begin(), f.row(i).end());
          x.push_back(1.0);
          (i % 2 ? xs_test : xs_train).push_back(x);
          (i % 2 ? y_test : y_train).push_back(static_cast<int>(k));
        }
      }
    std::vector<double> w(xs_train[0].size(), 0.0);
    for (int it = 0; it < 300; ++it) {
      std::vector<double> g(w.size(), 0.0);
      for (std::size_t n = 0; n < xs_train.size(); ++n) {
        const double p = 1.0 / (1.0 + std::exp(-oracle::dot(w, xs_train[n])));
        for (std::size_t d = 0; d < w.size(); ++d) g[d] += (p - y_train[n]) * xs_train[n][d];
      }
      for (std::size_t d = 0; d < w.size(); ++d) w[d] -= 0.05 * g[d] / double(xs_train.size());
    }
    std::size_t correct = 0;
    for (std::size_t n = 0; n < xs_test.size(); ++n) correct += (oracle::dot(w, xs_test[n]) > 0) == (y_test[n] == 1);
    EXPECT_GT(double(correct) / double(xs_test.size()), 0.9) << "classes " << pair << "," << pair + 1;
  }
}

TEST(Dataset, SmallImagesRejected) {
  auto spec = small_spec();
  spec.image_size = 7;
  EXPECT_THROW(generate_dataset(spec, 1), ConfigError);
}

TEST(Spec, Validation) {
  auto s = small_spec();
  s.train_sessions = s.sessions_per_object;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.objects_per_class = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Stream, NoNewClassesGivesEmptyStream) {
  auto s = small_spec();
  s.new_classes = 0;
  const auto ds = generate_dataset(s, 2);
  const auto data = generate_stream(ds, s, 2);
  EXPECT_TRUE(data.stream.empty());
  EXPECT_GT(data.pretrain.size(), 0u);
  ASSERT_GT(data.test.size(), 0u);
  for (int l : data.test.labels) EXPECT_LT(l, static_cast<int>(s.initial_classes));
}

TEST(Spec, JsonRoundTrip) {
  const auto s = StreamSpec::full_scale();
  EXPECT_EQ(nlohmann::json(s).get<StreamSpec>(), s);
}

TEST(Stream, FullScaleCounts) {
  auto spec = StreamSpec::full_scale();
  EXPECT_EQ(spec.stream_length(), 225u);
  const auto plan = plan_stream(spec, 1);
  ASSERT_EQ(plan.size(), 225u);
  std::set<std::tuple<int, int, int>> distinct;
  for (const auto& k : plan) {
    EXPECT_GE(k.class_id, 10);
    EXPECT_LT(k.class_id, 15);
    EXPECT_LT(k.session_id, 9);
    distinct.insert({k.class_id, k.object_id, k.session_id});
  }
  EXPECT_EQ(distinct.size(), 225u);
}

TEST(Stream, DeskExampleTwelveExperiences) {
  StreamSpec spec = small_spec();
  spec.new_classes = 2;
  spec.objects_per_class = 2;
  spec.sessions_per_object = 4;
  spec.train_sessions = 3;
  const auto ds = generate_dataset(spec, 3);
  const auto data = generate_stream(ds, spec, 3);
  ASSERT_EQ(data.stream.size(), 12u);
  for (const auto& e : data.stream) {
    EXPECT_EQ(e.frames.dim(0), spec.frames_per_experience);
    const auto& clip = ds.clip(static_cast<std::size_t>(e.class_id),
                                                       static_cast<std::size_t>(e.object_id),
                                                       static_cast<std::size_t>(e.session_id));
    EXPECT_EQ(e.frames, clip.frames);  // one (class, object, session) per experience
  }
}

TEST(Stream, DeskDefaultEighteenExperiences) {
  const auto spec = small_spec();
  EXPECT_EQ(generate_stream(generate_dataset(spec, 1), spec, 1).stream.size(), 18u);
}

TEST(Stream, FirstAppearancesSpreadOverSegments) {
  for (const auto& base : {StreamSpec::full_scale(), small_spec()}) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto plan = plan_stream(base, seed);
      std::vector<int> order;
      std::vector<std::size_t> first;
      for (std::size_t i = 0; i < plan.size(); ++i)
        if (std::find(order.begin(), order.end(), plan[i].class_id) == order.end()) {
          order.push_back(plan[i].class_id);
          first.push_back(i);
        }
      ASSERT_EQ(order.size(), base.new_classes);
      const std::size_t n = plan.size(), k = base.new_classes;
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_GE(first[j], j * n / k) << "seed " << seed;
        EXPECT_LT(first[j], (j + 1) * n / k) << "seed " << seed;
      }
    }
  }
}

TEST(Stream, SetsAreDisjointAndComplete) {
  const auto spec = small_spec();
  const auto data = generate_stream(generate_dataset(spec, 5), spec, 5);
  std::set<std::uint64_t> test_ids(data.test.frame_ids.begin(), data.test.frame_ids.end());
  EXPECT_EQ(test_ids.size(), data.test.size());
  for (auto id : data.pretrain.frame_ids) EXPECT_FALSE(test_ids.count(id));
  for (const auto& e : data.stream)
    for (auto id : e.frame_ids) EXPECT_FALSE(test_ids.count(id));
  for (int l : data.pretrain.labels) EXPECT_LT(l, 6);
  // One held-out session per object, every class.
  EXPECT_EQ(data.test.size(), spec.total_classes() * spec.objects_per_class * spec.frames_per_experience);
  EXPECT_EQ(data.pretrain.size(), 6 * spec.objects_per_class * spec.train_sessions * spec.frames_per_experience);
}

TEST(Stream, PureFunctionOfSpecAndSeed) {
  const auto spec = small_spec();
  const auto a = generate_stream(generate_dataset(spec, 9), spec, 9);
  const auto b = generate_stream(generate_dataset(spec, 9), spec, 9);
  ASSERT_EQ(a.stream.size(), b.stream.size());
  for (std::size_t i = 0; i < a.stream.size(); ++i) {
    EXPECT_EQ(a.stream[i].frames, b.stream[i].frames);
    EXPECT_EQ(a.stream[i].frame_ids, b.stream[i].frame_ids);
  }
  EXPECT_EQ(a.test.frames, b.test.frames);
}

}  // namespace
