/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tracelab/model.hpp"
#include "tracelab/sfc.hpp"

namespace tracelab {

using json = nlohmann::json;

/// Parses a network document: {"name", "layers": [{k,c,h,w,r,s,stride,pad,
/// pool,sparsity, tk,tc,th,tw}], "skips": [[src, dst], ...]}. Omitted
/// stride/pad/pool default to a same convolution without pooling; omitted
/// tiling factors default to the full extent.
NetworkSpec network_from_json(const json& j);
json network_to_json(const NetworkSpec& spec);

/// Reads and parses a JSON file; syntax errors carry line/column.
json read_json_file(const std::filesystem::path& path);
NetworkSpec load_network(const std::filesystem::path& path);

json plan_to_json(const ExecutionPlan& plan);
json sfc_to_json(const SfcOrder& order);

/// FNV-1a of the canonical (sorted-key, compact) dump.
std::string config_hash(const json& j);

}  // namespace tracelab
