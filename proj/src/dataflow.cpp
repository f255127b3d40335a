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

#include <streamlab/dataflow.hpp>

#include <numeric>
#include <set>

namespace streamlab::dataflow {

std::string_view to_string(OperatorKind kind) noexcept {
    switch (kind) {
    case OperatorKind::Map: return "map";
    case OperatorKind::FlatMap: return "flat_map";
    case OperatorKind::Filter: return "filter";
    case OperatorKind::SinkWrite: return "sink_write";
    }
    return "unknown";
}

TopologyBuilder::TopologyBuilder(std::string source_topic, minilog::Offset end_offset,
                                 std::string source_name) {
    topology_.source.name = std::move(source_name);
    topology_.source.topic = std::move(source_topic);
    topology_.source.end_offset = end_offset;
}

TopologyBuilder& TopologyBuilder::push(OperatorSpec spec) {
    if (has_sink_) {
        throw Error(Errc::InvalidTopology,
                    "operator '" + spec.name + "' added after the sink; the sink must be last");
    }
    topology_.operators.push_back(std::move(spec));
    return *this;
}

TopologyBuilder& TopologyBuilder::map(std::string name, MapFn fn) {
    OperatorSpec spec;
    spec.name = std::move(name);
    spec.kind = OperatorKind::Map;
    spec.map = std::move(fn);
    return push(std::move(spec));
}

TopologyBuilder& TopologyBuilder::filter(std::string name, FilterFn fn) {
    OperatorSpec spec;
    spec.name = std::move(name);
    spec.kind = OperatorKind::Filter;
    spec.filter = std::move(fn);
    return push(std::move(spec));
}

TopologyBuilder& TopologyBuilder::flat_map(std::string name, FlatMapFn fn) {
    return stateful_flat_map(std::move(name), [fn = std::move(fn)] { return FlatMapLane{fn, {}}; });
}

TopologyBuilder& TopologyBuilder::stateful_flat_map(std::string name, FlatMapFactory factory) {
    OperatorSpec spec;
    spec.name = std::move(name);
    spec.kind = OperatorKind::FlatMap;
    spec.flat_map = std::move(factory);
    return push(std::move(spec));
}

TopologyBuilder& TopologyBuilder::sink_write(std::string topic, std::string name) {
    OperatorSpec spec;
    spec.name = std::move(name);
    spec.kind = OperatorKind::SinkWrite;
    push(std::move(spec));
    topology_.sink_topic = std::move(topic);
    has_sink_ = true;
    return *this;
}

Topology TopologyBuilder::finalize() const {
    if (!has_sink_) {
        throw Error(Errc::MissingSink, "topology reading '" + topology_.source.topic + "' has no sink");
    }
    std::set<std::string> names{topology_.source.name};
    for (const auto& op : topology_.operators) {
        if (op.name.empty() || op.name.find_first_of(" \t\n") != std::string::npos) {
            throw Error(Errc::InvalidTopology, "node name '" + op.name + "' must be a non-empty token");
        }
        if (!names.insert(op.name).second) {
            throw Error(Errc::InvalidTopology, "duplicate node name '" + op.name + "'");
        }
    }
    return topology_;
}

bool ExecutionPlan::operator==(const ExecutionPlan& other) const {
    if (nodes.size() != other.nodes.size() || edges != other.edges) {
        return false;
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& a = nodes[i];
        const auto& b = other.nodes[i];
        if (a.index != b.index || a.name != b.name || a.kind != b.kind || a.is_source != b.is_source ||
            a.parallelism != b.parallelism || a.annotation != b.annotation) {
            return false;
        }
    }
    return true;
}

ExecutionPlan make_plan(const Topology& topology, std::uint32_t parallelism, const std::string& annotation) {
    ExecutionPlan plan;
    PlanNode source;
    source.index = 0;
    source.name = topology.source.name;
    source.is_source = true;
    source.parallelism = parallelism;
    source.annotation = annotation;
    plan.nodes.push_back(std::move(source));
    for (const auto& op : topology.operators) {
        PlanNode node;
        node.index = plan.nodes.size();
        node.name = op.name;
        node.kind = op.kind;
        node.parallelism = parallelism;
        node.annotation = annotation;
        plan.edges.emplace_back(node.index - 1, node.index);
        plan.nodes.push_back(std::move(node));
    }
    return plan;
}

std::uint64_t JobReport::total_invocations() const {
    std::uint64_t total = 0;
    for (const auto& [name, count] : operator_invocations) {
        total += count;
    }
    return total;
}

class LaneChain::StageCollector final : public Collector {
public:
    StageCollector(LaneChain& chain, std::size_t next) : chain_(chain), next_(next) {}
    void emit(Element element) override { chain_.run(next_, std::move(element)); }

private:
    LaneChain& chain_;
    std::size_t next_;
};

LaneChain::LaneChain(const Topology& topology, minilog::Broker& broker)
    : topology_(topology), broker_(broker), sink_(broker.topic(topology.sink_topic)) {
    const std::size_t n = topology.operators.size();
    lanes_.resize(n);
    invocations_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        collectors_.push_back(std::make_unique<StageCollector>(*this, i + 1));
        const auto& op = topology.operators[i];
        if (op.kind == OperatorKind::FlatMap) {
            lanes_[i] = op.flat_map();
        }
    }
}

LaneChain::~LaneChain() = default;

void LaneChain::fail(std::size_t stage, const std::exception& ex) const {
    if (const auto* err = dynamic_cast<const Error*>(&ex); err && err->code() == Errc::JobFailed) {
        throw *err;
    }
    throw Error(Errc::JobFailed, "operator '" + topology_.operators[stage].name + "' failed: " + ex.what());
}

void LaneChain::push(Element element) {
    ++pushed_;
    run(0, std::move(element));
}

void LaneChain::run(std::size_t stage, Element element) {
    const OperatorSpec& op = topology_.operators[stage];
    ++invocations_[stage];
    try {
        switch (op.kind) {
        case OperatorKind::Map:
            element.payload = op.map(element);
            break;
        case OperatorKind::Filter:
            if (!op.filter(element)) {
                return;
            }
            break;
        case OperatorKind::FlatMap:
            lanes_[stage].process(element, *collectors_[stage]);
            return;
        case OperatorKind::SinkWrite:
            broker_.append(sink_, 0, std::move(element.payload), minilog::AckMode::Confirmed);
            ++records_out_;
            return;
        }
    } catch (const std::exception& ex) {
        fail(stage, ex);
    }
    run(stage + 1, std::move(element));
}

void LaneChain::finish() {
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        if (lanes_[i].finish) {
            try {
                lanes_[i].finish(*collectors_[i]);
            } catch (const std::exception& ex) {
                fail(i, ex);
            }
        }
    }
}

void validate_against(const Topology& topology, const minilog::Broker& broker) {
    const auto source = broker.topic(topology.source.topic);
    const auto hwm = broker.high_water_mark(source, 0);
    if (topology.source.end_offset > hwm) {
        throw Error(Errc::InvalidTopology, "end offset " + std::to_string(topology.source.end_offset) +
                                               " is beyond the high-water mark " + std::to_string(hwm) +
                                               " of '" + topology.source.topic + "'");
    }
    broker.topic(topology.sink_topic);
}

void collect_lane(const Topology& topology, const LaneChain& lane, JobReport& report) {
    for (std::size_t i = 0; i < topology.operators.size(); ++i) {
        report.operator_invocations[topology.operators[i].name] += lane.invocations()[i];
    }
    report.records_out += lane.records_out();
}

} // namespace streamlab::dataflow
