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

#include <streamlab/microbatch_engine.hpp>
#include <streamlab/tuple_engine.hpp>

#include <string_view>

namespace streamlab {

enum class EngineKind { Tuple, Microbatch };

std::string_view to_string(EngineKind kind) noexcept;
EngineKind parse_engine_kind(std::string_view text);

/// A topology bound to an engine and a parallelism, ready to run. Each
/// execute() constructs a fresh engine instance.
struct NativeJob {
    EngineKind engine = EngineKind::Tuple;
    dataflow::Topology topology;
    std::uint32_t parallelism = 1;
    microbatch_engine::BatchPolicy batch_policy;

    dataflow::JobReport execute(minilog::Broker& broker) const;
    dataflow::ExecutionPlan plan() const;
};

} // namespace streamlab
