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

// Micro-batch engine. A batch former cuts the source into immutable batches
// (closed by size or by delay), deals each batch round-robin into p
// partitions, and p workers process the partitions of one batch concurrently.
// A barrier separates batches, so every output of batch i reaches the sink
// before any output of batch i+1.

#include <streamlab/dataflow.hpp>

#include <optional>

namespace streamlab::microbatch_engine {

struct BatchPolicy {
    std::uint64_t max_batch_size = 1000;
    minilog::TimestampMs max_batch_delay_ms = 100;

    void validate() const;
};

/// One discretized slice of the input; partitions are fixed once formed.
struct Batch {
    std::uint64_t batch_index = 0;
    std::vector<std::vector<dataflow::Element>> partitions;

    std::uint64_t size() const;
};

dataflow::TopologyBuilder build(const minilog::Broker& broker, const std::string& source_topic,
                                std::optional<minilog::Offset> end_offset, const BatchPolicy& policy);

class Engine {
public:
    Engine(minilog::Broker& broker, BatchPolicy policy);

    dataflow::JobReport execute(const dataflow::Topology& topology, std::uint32_t parallelism);

    /// Nodes carry the "microbatch" annotation.
    dataflow::ExecutionPlan plan(const dataflow::Topology& topology, std::uint32_t parallelism) const;

    const BatchPolicy& policy() const noexcept { return policy_; }

private:
    minilog::Broker& broker_;
    BatchPolicy policy_;
};

inline constexpr const char* kPlanAnnotation = "microbatch";

} // namespace streamlab::microbatch_engine
