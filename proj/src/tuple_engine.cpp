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

#include <streamlab/tuple_engine.hpp>

#include "blocking_queue.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace streamlab::tuple_engine {

namespace {

constexpr std::uint64_t kReadChunk = 512;
constexpr std::size_t kLaneBuffer = 64;
constexpr std::size_t kLaneQueueDepth = 32;

using ElementBuffer = std::vector<dataflow::Element>;

class FirstError {
public:
    void capture() {
        std::lock_guard lock(mu_);
        if (!error_) {
            error_ = std::current_exception();
        }
        failed_.store(true, std::memory_order_release);
    }
    bool failed() const noexcept { return failed_.load(std::memory_order_acquire); }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mu_;
    std::exception_ptr error_;
    std::atomic<bool> failed_{false};
};

} // namespace

dataflow::TopologyBuilder build(const minilog::Broker& broker, const std::string& source_topic,
                                std::optional<minilog::Offset> end_offset) {
    const auto topic = broker.topic(source_topic);
    const auto hwm = broker.high_water_mark(topic, 0);
    const auto end = end_offset.value_or(hwm);
    if (end > hwm) {
        throw Error(Errc::InvalidTopology, "end offset " + std::to_string(end) +
                                               " is beyond the high-water mark " + std::to_string(hwm));
    }
    return dataflow::TopologyBuilder(source_topic, end);
}

dataflow::ExecutionPlan Engine::plan(const dataflow::Topology& topology, std::uint32_t parallelism) const {
    return dataflow::make_plan(topology, parallelism);
}

dataflow::JobReport Engine::execute(const dataflow::Topology& topology, std::uint32_t parallelism) {
    if (parallelism == 0) {
        throw Error(Errc::InvalidTopology, "parallelism must be at least 1");
    }
    dataflow::validate_against(topology, broker_);
    const auto source = broker_.topic(topology.source.topic);
    const minilog::Offset end = topology.source.end_offset;

    dataflow::JobReport report;
    report.lanes = parallelism;
    report.started_ms = minilog::now_ms();

    std::vector<std::unique_ptr<dataflow::LaneChain>> chains;
    std::vector<std::unique_ptr<detail::BlockingQueue<ElementBuffer>>> queues;
    for (std::uint32_t i = 0; i < parallelism; ++i) {
        chains.push_back(std::make_unique<dataflow::LaneChain>(topology, broker_));
        queues.push_back(std::make_unique<detail::BlockingQueue<ElementBuffer>>(kLaneQueueDepth));
    }

    FirstError error;
    std::vector<std::jthread> lanes;
    for (std::uint32_t i = 0; i < parallelism; ++i) {
        lanes.emplace_back([&, i] {
            try {
                while (auto buffer = queues[i]->pop()) {
                    if (error.failed()) continue;
                    for (auto& element : *buffer) {
                        chains[i]->push(std::move(element));
                    }
                }
                if (!error.failed()) {
                    chains[i]->finish();
                }
            } catch (...) {
                error.capture();
                // Unblock the reader if it is waiting on this lane.
                queues[i]->close();
            }
        });
    }

    std::uint64_t handoffs = 0;
    std::jthread reader([&] {
        try {
            std::vector<ElementBuffer> pending(parallelism);
            std::uint64_t next_lane = 0;
            minilog::Offset offset = 0;
            while (offset < end && !error.failed()) {
                for (auto& entry : broker_.read(source, 0, offset, std::min(kReadChunk, end - offset))) {
                    const auto lane = next_lane++ % parallelism;
                    pending[lane].push_back({entry.offset, entry.append_ts, std::move(entry.payload)});
                    if (pending[lane].size() == kLaneBuffer) {
                        handoffs += pending[lane].size();
                        queues[lane]->push(std::exchange(pending[lane], {}));
                    }
                    ++offset;
                }
            }
            for (std::uint32_t lane = 0; lane < parallelism; ++lane) {
                if (!pending[lane].empty()) {
                    handoffs += pending[lane].size();
                    queues[lane]->push(std::move(pending[lane]));
                }
            }
        } catch (...) {
            error.capture();
        }
        for (auto& q : queues) {
            q->close();
        }
    });

    reader.join();
    for (auto& lane : lanes) {
        lane.join();
    }
    error.rethrow();

    for (const auto& chain : chains) {
        report.records_in += chain->pushed();
        dataflow::collect_lane(topology, *chain, report);
    }
    report.thread_handoffs = handoffs;
    report.finished_ms = minilog::now_ms();
    return report;
}

} // namespace streamlab::tuple_engine
