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

// Operator topology shared by the tuple-at-a-time and micro-batch engines:
// one log source, a linear chain of operators, one log sink.

#include <streamlab/minilog.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace streamlab::dataflow {

/// A record in flight. `origin` is the source offset the record descends
/// from and `timestamp` its source append time; operators never alter either.
struct Element {
    std::uint64_t origin = 0;
    minilog::TimestampMs timestamp = 0;
    Bytes payload;
};

class Collector {
public:
    virtual ~Collector() = default;
    virtual void emit(Element element) = 0;
};

using MapFn = std::function<Bytes(const Element&)>;
using FilterFn = std::function<bool(const Element&)>;
using FlatMapFn = std::function<void(const Element&, Collector&)>;

/// Per-lane instance of a flat-map. `finish` runs once after the lane's
/// input is exhausted and may emit buffered output.
struct FlatMapLane {
    FlatMapFn process;
    std::function<void(Collector&)> finish;
};
using FlatMapFactory = std::function<FlatMapLane()>;

enum class OperatorKind { Map, FlatMap, Filter, SinkWrite };

std::string_view to_string(OperatorKind kind) noexcept;

struct OperatorSpec {
    std::string name;
    OperatorKind kind = OperatorKind::Map;
    MapFn map;
    FilterFn filter;
    FlatMapFactory flat_map;
};

struct SourceSpec {
    std::string name = "source";
    std::string topic;
    minilog::Offset end_offset = 0;
};

struct Topology {
    SourceSpec source;
    std::vector<OperatorSpec> operators; // last one is the SinkWrite
    std::string sink_topic;

    std::size_t node_count() const noexcept { return 1 + operators.size(); }
};

class TopologyBuilder {
public:
    TopologyBuilder(std::string source_topic, minilog::Offset end_offset,
                    std::string source_name = "source");

    TopologyBuilder& map(std::string name, MapFn fn);
    TopologyBuilder& filter(std::string name, FilterFn fn);
    TopologyBuilder& flat_map(std::string name, FlatMapFn fn);
    TopologyBuilder& stateful_flat_map(std::string name, FlatMapFactory factory);
    TopologyBuilder& sink_write(std::string topic, std::string name = "sink");

    /// Throws MissingSink without a sink, InvalidTopology on duplicate node names.
    Topology finalize() const;

private:
    TopologyBuilder& push(OperatorSpec spec);

    Topology topology_;
    bool has_sink_ = false;
};

struct PlanNode {
    std::size_t index = 0;
    std::string name;
    OperatorKind kind = OperatorKind::Map;
    bool is_source = false;
    std::uint32_t parallelism = 1;
    std::string annotation; // engine tag, empty for the tuple engine
};

/// DAG of named nodes in topological order.
struct ExecutionPlan {
    std::vector<PlanNode> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    bool operator==(const ExecutionPlan& other) const;
};

ExecutionPlan make_plan(const Topology& topology, std::uint32_t parallelism,
                        const std::string& annotation = {});

struct JobReport {
    std::uint64_t records_in = 0;
    std::uint64_t records_out = 0;
    std::map<std::string, std::uint64_t> operator_invocations;
    std::uint32_t lanes = 0;
    /// Elements moved between threads. Only the source-to-lane hop counts;
    /// a fused chain never hands an element to another thread.
    std::uint64_t thread_handoffs = 0;
    /// Micro-batch engine only, in batch order.
    std::vector<std::uint64_t> batch_sizes;
    /// Wall-clock span of execute(), for reference next to the broker metric.
    minilog::TimestampMs started_ms = 0;
    minilog::TimestampMs finished_ms = 0;

    std::uint64_t total_invocations() const;
};

/// One worker lane's fused operator chain. Each element runs through every
/// operator as nested calls on the calling thread.
class LaneChain {
public:
    LaneChain(const Topology& topology, minilog::Broker& broker);
    ~LaneChain();
    LaneChain(const LaneChain&) = delete;
    LaneChain& operator=(const LaneChain&) = delete;

    void push(Element element);
    /// Runs every operator's finish hook in chain order.
    void finish();

    const std::vector<std::uint64_t>& invocations() const noexcept { return invocations_; }
    std::uint64_t records_out() const noexcept { return records_out_; }
    std::uint64_t pushed() const noexcept { return pushed_; }

private:
    class StageCollector;

    void run(std::size_t stage, Element element);
    [[noreturn]] void fail(std::size_t stage, const std::exception& ex) const;

    const Topology& topology_;
    minilog::Broker& broker_;
    minilog::TopicHandle sink_;
    std::vector<FlatMapLane> lanes_;
    std::vector<std::unique_ptr<StageCollector>> collectors_;
    std::vector<std::uint64_t> invocations_;
    std::uint64_t records_out_ = 0;
    std::uint64_t pushed_ = 0;
};

/// Checks that the source and sink exist and end_offset is within the source.
void validate_against(const Topology& topology, const minilog::Broker& broker);

/// Sums lane counters into `report`.
void collect_lane(const Topology& topology, const LaneChain& lane, JobReport& report);

} // namespace streamlab::dataflow
