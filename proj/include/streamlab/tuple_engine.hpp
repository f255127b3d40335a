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

// Tuple-at-a-time engine. One reader thread pulls the source range and deals
// elements round-robin to p lanes; each lane runs the whole operator chain
// fused, so an element is processed start to sink without further queueing.

#include <streamlab/dataflow.hpp>

#include <optional>

namespace streamlab::tuple_engine {

/// Starts a topology over [0, end_offset) of `source_topic`. Without an
/// explicit end offset the current high-water mark is captured.
dataflow::TopologyBuilder build(const minilog::Broker& broker, const std::string& source_topic,
                                std::optional<minilog::Offset> end_offset = std::nullopt);

class Engine {
public:
    explicit Engine(minilog::Broker& broker) : broker_(broker) {}

    /// Runs to completion. With parallelism 1 the sink order equals source order.
    dataflow::JobReport execute(const dataflow::Topology& topology, std::uint32_t parallelism);

    dataflow::ExecutionPlan plan(const dataflow::Topology& topology, std::uint32_t parallelism) const;

private:
    minilog::Broker& broker_;
};

} // namespace streamlab::tuple_engine
