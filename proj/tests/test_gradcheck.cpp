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

void expect_ok(const checks::GradReport& r) {
  EXPECT_GE(r.instances, 100u);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.primitive;
}

TEST(GradCheck, Dense) { expect_ok(checks::grad_dense(120, 1)); }
TEST(GradCheck, Conv2d) { expect_ok(checks::grad_conv(120, 2)); }
TEST(GradCheck, Relu) { expect_ok(checks::grad_relu(120, 3)); }
TEST(GradCheck, GlobalAvgPool) { expect_ok(checks::grad_pool(120, 4)); }
TEST(GradCheck, SoftmaxXent) { expect_ok(checks::grad_xent(120, 5)); }

}  // namespace
