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

// The four stateless benchmark queries, each buildable against either
// engine through its native topology API or through the unified pipeline.

#include <streamlab/job.hpp>
#include <streamlab/unified.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace streamlab::queries {

enum class QueryKind { Identity, Sample, Projection, Grep };
enum class ApiKind { Native, Unified };

inline constexpr std::array kAllQueries = {QueryKind::Identity, QueryKind::Sample, QueryKind::Projection,
                                           QueryKind::Grep};
inline constexpr std::array kAllApis = {ApiKind::Native, ApiKind::Unified};

std::string_view to_string(QueryKind kind) noexcept;
std::string_view to_string(ApiKind kind) noexcept;
QueryKind parse_query_kind(std::string_view text);
ApiKind parse_api_kind(std::string_view text);

struct QuerySpec {
    QueryKind kind = QueryKind::Identity;
    double sample_probability = 0.4;
    std::string grep_needle = "test";
    std::uint64_t rng_seed = 7;

    void validate() const;
};

Bytes identity_fn(std::string_view payload);

/// Uniform draw in [0, 1) for element `index`: a counter-based generator,
/// so the value depends on (seed, index) only and not on arrival order.
double sample_draw(std::uint64_t seed, std::uint64_t index) noexcept;

/// Emits the payload iff sample_draw(seed, index) < probability.
std::optional<Bytes> sample_fn(std::string_view payload, std::uint64_t index, std::uint64_t seed,
                               double probability);

/// First tab-separated column. Throws MalformedRecord unless there are five.
Bytes projection_fn(std::string_view payload);

/// Emits the payload iff it contains `needle` as a literal substring.
std::optional<Bytes> grep_fn(std::string_view payload, std::string_view needle);

struct JobIo {
    std::string input_topic;
    minilog::Offset end_offset = 0;
    std::string output_topic;
};

dataflow::Topology native_topology(const QuerySpec& spec, const JobIo& io);
unified::Pipeline unified_pipeline(const QuerySpec& spec, const JobIo& io);

NativeJob build_query(const QuerySpec& spec, ApiKind api, EngineKind engine, std::uint32_t parallelism,
                      const JobIo& io, const microbatch_engine::BatchPolicy& policy = {});

} // namespace streamlab::queries
