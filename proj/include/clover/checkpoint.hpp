// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>

#include "clover/config.hpp"
#include "clover/training.hpp"

namespace clover {

/// A trained model with the run config that produced it.
struct Checkpoint {
  RunConfig config;
  Model model;
};

/// Structured text: a `[config]` section (format_run_config), a
/// `[hierarchy]` section (format_hierarchy_spec), a `[dims]` section, then
/// one `[tensor <name>]` section per parameter with `shape = a,b,c` and
/// `values = ...` in %.17g. The scale vector is stored as tensor `scale`.
std::string format_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace clover
