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

#pragma once

// Flat-key configuration files for the benchmark driver. A config file is a
// JSON object whose keys are dotted paths into BenchmarkConfig, e.g.
//
//   { "corpus.n_records": 10001, "runs_per_setup": 10, "parallelisms": [1, 2] }
//
// Every key also exists as a command-line flag of the same name.

#include <streamlab/harness.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace streamlab::config {

/// Every accepted key, in canonical order.
const std::vector<std::string>& known_keys();

nlohmann::json to_json(const harness::BenchmarkConfig& config);

/// Applies the keys present in `doc` on top of `base`. Unknown keys and
/// ill-typed values raise Config errors naming the key.
harness::BenchmarkConfig from_json(const nlohmann::json& doc, harness::BenchmarkConfig base = {});

harness::BenchmarkConfig load_file(const std::filesystem::path& path, harness::BenchmarkConfig base = {});

/// Converts a flag's text to the JSON type its key expects. List keys take
/// comma-separated values.
nlohmann::json parse_flag_value(std::string_view key, std::string_view text);

/// Hex FNV-1a of the canonical JSON dump.
std::string fingerprint(const harness::BenchmarkConfig& config);

inline constexpr const char* kOutputDirEnv = "STREAMLAB_OUTPUT_DIR";

} // namespace streamlab::config
