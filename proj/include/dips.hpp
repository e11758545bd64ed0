// Copyright 2026 The DIPS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything in one include.

#pragma once

#include "dips/core.hpp"
#include "dips/jump_sampler.hpp"
#include "dips/lookup_table.hpp"
#include "dips/size_reduction.hpp"
#include "dips/dips_index.hpp"
#include "dips/baselines.hpp"
#include "dips/stats_verify.hpp"
#include "dips/bench.hpp"
#include "dips/rrset.hpp"
