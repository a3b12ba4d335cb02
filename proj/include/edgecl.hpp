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

#include "edgecl/cwr.hpp"
#include "edgecl/errors.hpp"
#include "edgecl/harness.hpp"
#include "edgecl/layer.hpp"
#include "edgecl/network.hpp"
#include "edgecl/ops.hpp"
#include "edgecl/replay_buffer.hpp"
#include "edgecl/strategy.hpp"
#include "edgecl/stream.hpp"
#include "edgecl/synaptic.hpp"
#include "edgecl/tensor.hpp"
#include "edgecl/tensor_io.hpp"
#include "edgecl/timing.hpp"
#include "edgecl/two_phase.hpp"
