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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "edgecl/ops.hpp"
#include "json.hpp"

namespace edgecl {

// Shape of a synthetic NIC-style benchmark. Classes [0, initial_classes) are
// the pretraining classes, the next new_classes ids are learned from the stream.
struct StreamSpec {
  std::size_t initial_classes = 6;
  std::size_t new_classes = 3;
  std::size_t objects_per_class = 2;
  std::size_t sessions_per_object = 4;
  std::size_t train_sessions = 3;
  std::size_t frames_per_experience = 30;
  std::size_t image_size = 16;
  std::size_t channels = 3;
  std::uint64_t seed = 1;

  // 10 pretraining classes, 5 new classes x 5 objects x 9 training sessions.
  static StreamSpec full_scale() {
    StreamSpec s;
    s.initial_classes = 10;
    s.new_classes = 5;
    s.objects_per_class = 5;
    s.sessions_per_object = 12;
    s.train_sessions = 9;
    s.frames_per_experience = 100;
    return s;
  }

  bool operator==(const StreamSpec&) const = default;

  std::size_t total_classes() const { return initial_classes + new_classes; }
  std::size_t stream_length() const { return new_classes * objects_per_class * train_sessions; }

  void validate() const {
    // new_classes == 0 is an empty stream (pretraining only).
    if (initial_classes < 1 || objects_per_class < 1 || sessions_per_object < 1 || train_sessions < 1 ||
        frames_per_experience < 1 || channels < 1) {
      throw ConfigError("stream spec counts must be >= 1 (new_classes may be 0)");
    }
    if (train_sessions >= sessions_per_object) throw ConfigError("train_sessions must be < sessions_per_object");
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
  }
};

inline void to_json(nlohmann::json& j, const StreamSpec& s) {
  j = nlohmann::json{{"initial_classes", s.initial_classes},
                     {"new_classes", s.new_classes},
                     {"objects_per_class", s.objects_per_class},
                     {"sessions_per_object", s.sessions_per_object},
                     {"train_sessions", s.train_sessions},
                     {"frames_per_experience", s.frames_per_experience},
                     {"image_size", s.image_size},
                     {"channels", s.channels},
                     {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, StreamSpec& s) {
  StreamSpec d;
  s.initial_classes = j.value("initial_classes", d.initial_classes);
  s.new_classes = j.value("new_classes", d.new_classes);
  s.objects_per_class = j.value("objects_per_class", d.objects_per_class);
  s.sessions_per_object = j.value("sessions_per_object", d.sessions_per_object);
  s.train_sessions = j.value("train_sessions", d.train_sessions);
  s.frames_per_experience = j.value("frames_per_experience", d.frames_per_experience);
  s.image_size = j.value("image_size", d.image_size);
  s.channels = j.value("channels", d.channels);
  s.seed = j.value("seed", d.seed);
}

// All frames of one (class, object, session) video.
struct SessionClip {
  int class_id = 0;
  int object_id = 0;
  int session_id = 0;
  Tensor frames;                 // [frames, c, h, w]
  std::uint64_t first_frame_id = 0;
};

struct SyntheticDataset {
  StreamSpec spec;
  std::vector<SessionClip> clips;  // ordered by (class, object, session)

  const SessionClip& clip(std::size_t c, std::size_t o, std::size_t s) const {
    return clips.at((c * spec.objects_per_class + o) * spec.sessions_per_object + s);
  }
};

struct Experience {
  std::size_t index = 0;
  int class_id = 0;
  int object_id = 0;
  int session_id = 0;
  Tensor frames;
  std::vector<std::uint64_t> frame_ids;
};

struct LabeledSet {
  Tensor frames;  // [n, c, h, w]
  std::vector<int> labels;
  std::vector<std::uint64_t> frame_ids;

  std::size_t size() const { return labels.size(); }
};

struct StreamData {
  LabeledSet pretrain;
  std::vector<Experience> stream;
  LabeledSet test;
};

struct ExperienceKey {
  int class_id = 0;
  int object_id = 0;
  int session_id = 0;

  bool operator==(const ExperienceKey&) const = default;
};

namespace detail {

inline Rng keyed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
  return Rng(seq);
}

struct Grating {
  float fx, fy, phase;
};

struct ClassLook {
  Grating g1, g2;
  float mix;
  std::vector<float> color1, color2;
};

struct ObjectLook {
  float angle_offset, freq_scale;
  std::vector<float> tint;
  float blob_x, blob_y, blob_radius, blob_amp;
};

struct SessionLook {
  float shift_x, shift_y, gain, offset, noise, freq_scale;
};

inline Grating make_grating(float angle, float freq, float phase) {
  return {freq * std::cos(angle), freq * std::sin(angle), phase};
}

inline std::vector<float> random_color(Rng& rng, std::size_t channels) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> col(channels);
  float norm = 0.0f;
  for (float& v : col) {
    v = u(rng);
    norm += v * v;
  }
  norm = std::sqrt(std::max(norm, 1e-6f));
  for (float& v : col) v /= norm;
  return col;
}

}  // namespace detail

// Procedural video dataset. Each class is a pair of oriented gratings with its
// own colours; an object perturbs orientation, frequency and tint and adds a
// blob; a session applies one shift / gain / offset / noise level / zoom to all
// its frames; frames add a slow random-walk jitter plus pixel noise.
inline SyntheticDataset generate_dataset(const StreamSpec& spec, std::uint64_t seed) {
  spec.validate();
  using std::numbers::pi_v;
  const float two_pi = 2.0f * pi_v<float>;
  const std::size_t classes = spec.total_classes();
  const std::size_t n = spec.image_size, ch = spec.channels;

  std::vector<detail::ClassLook> looks;
  for (std::size_t c = 0; c < classes; ++c) {
    Rng rng = detail::keyed_rng(seed, 1, c);
    std::uniform_real_distribution<float> u01(0.0f, 1.0f);
    const float base_angle = pi_v<float> * std::fmod(0.61803398875f * static_cast<float>(c) + 0.1f * u01(rng), 1.0f);
    const float f1 = 0.08f + 0.30f * u01(rng);
    const float f2 = 0.08f + 0.30f * u01(rng);
    const float angle2 = base_angle + pi_v<float> * (0.25f + 0.5f * u01(rng));
    looks.push_back({detail::make_grating(base_angle, f1, two_pi * u01(rng)),
                     detail::make_grating(angle2, f2, two_pi * u01(rng)), 0.3f + 0.4f * u01(rng),
                     detail::random_color(rng, ch), detail::random_color(rng, ch)});
  }

  SyntheticDataset ds;
  ds.spec = spec;
  ds.spec.seed = seed;
  std::uint64_t next_id = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t o = 0; o < spec.objects_per_class; ++o) {
      Rng orng = detail::keyed_rng(seed, 2, c, o);
      std::uniform_real_distribution<float> u(-1.0f, 1.0f);
      std::uniform_real_distribution<float> u01(0.0f, 1.0f);
      detail::ObjectLook obj{0.15f * u(orng), 1.0f + 0.1f * u(orng), {}, 0, 0, 0, 0};
      obj.tint.resize(ch);
      for (float& t : obj.tint) t = 0.15f * u(orng);
      obj.blob_x = static_cast<float>(n) * u01(orng);
      obj.blob_y = static_cast<float>(n) * u01(orng);
      obj.blob_radius = 1.5f + 2.0f * u01(orng);
      obj.blob_amp = 0.4f * u(orng);

      for (std::size_t s = 0; s < spec.sessions_per_object; ++s) {
        Rng srng = detail::keyed_rng(seed, 3, (c * spec.objects_per_class + o), s);
        std::uniform_real_distribution<float> su(-1.0f, 1.0f);
        std::uniform_real_distribution<float> s01(0.0f, 1.0f);
        const detail::SessionLook ses{3.0f * su(srng), 3.0f * su(srng), 0.7f + 0.6f * s01(srng),
                                      0.25f * su(srng),  0.04f + 0.16f * s01(srng), 1.0f + 0.12f * su(srng)};
        const auto& look = looks[c];
        const float cos_a = std::cos(obj.angle_offset), sin_a = std::sin(obj.angle_offset);
        auto rotate = [&](const detail::Grating& g) {
          const float scale = obj.freq_scale * ses.freq_scale;
          return detail::Grating{scale * (g.fx * cos_a - g.fy * sin_a), scale * (g.fx * sin_a + g.fy * cos_a),
                                 g.phase};
        };
        const detail::Grating g1 = rotate(look.g1), g2 = rotate(look.g2);

        SessionClip clip{static_cast<int>(c), static_cast<int>(o), static_cast<int>(s),
                         Tensor({spec.frames_per_experience, ch, n, n}), next_id};
        next_id += spec.frames_per_experience;
        std::normal_distribution<float> noise(0.0f, ses.noise);
        std::normal_distribution<float> walk(0.0f, 0.15f);
        float jx = 0.0f, jy = 0.0f;
        for (std::size_t f = 0; f < spec.frames_per_experience; ++f) {
          jx = 0.9f * jx + walk(srng);
          jy = 0.9f * jy + walk(srng);
          const float flicker = 1.0f + 0.03f * su(srng);
          float* out = clip.frames.data().data() + f * ch * n * n;
          for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t x = 0; x < n; ++x) {
              const float px = static_cast<float>(x) + ses.shift_x + jx;
              const float py = static_cast<float>(y) + ses.shift_y + jy;
              const float w1 = std::sin(two_pi * (g1.fx * px + g1.fy * py) + g1.phase);
              const float w2 = std::sin(two_pi * (g2.fx * px + g2.fy * py) + g2.phase);
              const float dx = static_cast<float>(x) - obj.blob_x - jx, dy = static_cast<float>(y) - obj.blob_y - jy;
              const float blob = obj.blob_amp * std::exp(-(dx * dx + dy * dy) / (2.0f * obj.blob_radius * obj.blob_radius));
              for (std::size_t k = 0; k < ch; ++k) {
                const float v = look.mix * w1 * (look.color1[k] + obj.tint[k]) +
                                (1.0f - look.mix) * w2 * (look.color2[k] + obj.tint[k]) + blob;
                out[(k * n + y) * n + x] = flicker * ses.gain * v + ses.offset + noise(srng);
              }
            }
          }
        }
        ds.clips.push_back(std::move(clip));
      }
    }
  }
  return ds;
}

// Order of the stream's (class, object, session) experiences. New classes are
// introduced one per segment: with N new classes the stream splits into N
// equal segments and the k-th introduced class first appears inside segment
// k. Remaining experiences are drawn uniformly from the classes introduced so
// far.
inline std::vector<ExperienceKey> plan_stream(const StreamSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = detail::keyed_rng(seed, 4);
  const std::size_t n_new = spec.new_classes;
  std::vector<int> order(n_new);
  for (std::size_t k = 0; k < n_new; ++k) order[k] = static_cast<int>(spec.initial_classes + k);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<ExperienceKey>> per_class(n_new);
  for (std::size_t k = 0; k < n_new; ++k) {
    for (std::size_t o = 0; o < spec.objects_per_class; ++o)
      for (std::size_t s = 0; s < spec.train_sessions; ++s)
        per_class[k].push_back({order[k], static_cast<int>(o), static_cast<int>(s)});
    std::shuffle(per_class[k].begin(), per_class[k].end(), rng);
  }
  const std::size_t length = spec.stream_length();
  auto segment_start = [&](std::size_t k) { return k * length / n_new; };

  std::vector<std::size_t> first(n_new, 0);
  std::size_t introduced_total = 0;  // experiences owned by classes [0, k)
  for (std::size_t k = 0; k < n_new; ++k) {
    if (k == 0) {
      first[k] = 0;
    } else {
      const std::size_t lo = std::max(segment_start(k), first[k - 1] + 1);
      const std::size_t hi = std::min(segment_start(k + 1) - 1, introduced_total);
      if (lo > hi) throw ConfigError("stream spec admits no valid introduction order");
      first[k] = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
    introduced_total += per_class[k].size();
  }

  std::vector<ExperienceKey> plan;
  plan.reserve(length);
  std::vector<ExperienceKey> pool;
  std::size_t next_class = 0;
  for (std::size_t pos = 0; pos < length; ++pos) {
    if (next_class < n_new && first[next_class] == pos) {
      auto& items = per_class[next_class];
      plan.push_back(items.front());
      pool.insert(pool.end(), items.begin() + 1, items.end());
      ++next_class;
      continue;
    }
    if (pool.empty()) throw ConfigError("stream plan ran out of experiences");
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
    plan.push_back(pool[pick]);
    pool[pick] = pool.back();
    pool.pop_back();
  }
  return plan;
}

inline void append_clip(LabeledSet& set, const SessionClip& clip, std::vector<float>& buffer) {
  buffer.insert(buffer.end(), clip.frames.values().begin(), clip.frames.values().end());
  for (std::size_t f = 0; f < clip.frames.dim(0); ++f) {
    set.labels.push_back(clip.class_id);
    set.frame_ids.push_back(clip.first_frame_id + f);
  }
}

// Pretraining set: training sessions of the initial classes. Stream: one
// experience per (new class, object, training session). Test set: held-out
// sessions of every class.
inline StreamData generate_stream(const SyntheticDataset& ds, const StreamSpec& spec, std::uint64_t seed) {
  StreamData out;
  const Shape frame{spec.channels, spec.image_size, spec.image_size};
  auto finish = [&](LabeledSet& set, std::vector<float>& buf) {
    Shape s{set.labels.size()};
    s.insert(s.end(), frame.begin(), frame.end());
    set.frames = Tensor(std::move(s), std::move(buf));
  };

  std::vector<float> pre, test;
  for (std::size_t c = 0; c < spec.total_classes(); ++c) {
    for (std::size_t o = 0; o < spec.objects_per_class; ++o) {
      for (std::size_t s = 0; s < spec.sessions_per_object; ++s) {
        const SessionClip& clip = ds.clip(c, o, s);
        if (s >= spec.train_sessions) {
          append_clip(out.test, clip, test);
        } else if (c < spec.initial_classes) {
          append_clip(out.pretrain, clip, pre);
        }
      }
    }
  }
  finish(out.pretrain, pre);
  finish(out.test, test);

  const auto plan = plan_stream(spec, seed);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& key = plan[i];
    const SessionClip& clip = ds.clip(static_cast<std::size_t>(key.class_id), static_cast<std::size_t>(key.object_id),
                                      static_cast<std::size_t>(key.session_id));
    Experience e{i, key.class_id, key.object_id, key.session_id, clip.frames, {}};
    for (std::size_t f = 0; f < clip.frames.dim(0); ++f) e.frame_ids.push_back(clip.first_frame_id + f);
    out.stream.push_back(std::move(e));
  }
  return out;
}

// Rows of `set` whose labels satisfy the predicate.
template <typename Pred>
LabeledSet filter_set(const LabeledSet& set, Pred keep) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (keep(set.labels[i])) idx.push_back(i);
  LabeledSet out;
  out.frames = set.frames.gather_rows(idx);
  for (std::size_t i : idx) {
    out.labels.push_back(set.labels[i]);
    out.frame_ids.push_back(set.frame_ids[i]);
  }
  return out;
}

}  // namespace edgecl
