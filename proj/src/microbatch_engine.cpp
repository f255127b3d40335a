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

#include <streamlab/microbatch_engine.hpp>

#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

namespace streamlab::microbatch_engine {

namespace {

constexpr std::uint64_t kReadChunk = 512;

// Hands one batch at a time to the worker pool and waits for all of them.
class BatchDispatcher {
public:
    explicit BatchDispatcher(std::uint32_t workers) : workers_(workers) {}

    void run_batch(const Batch* batch) { dispatch(batch, false); }
    void run_finish() { dispatch(nullptr, true); }

    void stop() {
        std::lock_guard lock(mu_);
        stopped_ = true;
        work_cv_.notify_all();
    }

    template <typename OnBatch, typename OnFinish>
    void worker_loop(OnBatch&& on_batch, OnFinish&& on_finish) {
        std::uint64_t seen = 0;
        for (;;) {
            std::unique_lock lock(mu_);
            work_cv_.wait(lock, [&] { return generation_ != seen || stopped_; });
            if (generation_ == seen) {
                return;
            }
            seen = generation_;
            const Batch* batch = current_;
            const bool finishing = finishing_;
            lock.unlock();

            try {
                if (finishing) {
                    on_finish();
                } else {
                    on_batch(*batch);
                }
            } catch (...) {
                std::lock_guard guard(mu_);
                if (!error_) error_ = std::current_exception();
                failed_.store(true, std::memory_order_release);
            }

            lock.lock();
            if (--remaining_ == 0) {
                done_cv_.notify_all();
            }
        }
    }

    bool failed() const noexcept { return failed_.load(std::memory_order_acquire); }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    void dispatch(const Batch* batch, bool finishing) {
        std::unique_lock lock(mu_);
        current_ = batch;
        finishing_ = finishing;
        remaining_ = workers_;
        ++generation_;
        work_cv_.notify_all();
        done_cv_.wait(lock, [this] { return remaining_ == 0; });
    }

    std::uint32_t workers_;
    std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::uint64_t generation_ = 0;
    std::uint32_t remaining_ = 0;
    const Batch* current_ = nullptr;
    bool finishing_ = false;
    bool stopped_ = false;
    std::exception_ptr error_;
    std::atomic<bool> failed_{false};
};

} // namespace

void BatchPolicy::validate() const {
    if (max_batch_size == 0) {
        throw Error(Errc::InvalidPolicy, "max_batch_size must be positive");
    }
    if (max_batch_delay_ms < 0) {
        throw Error(Errc::InvalidPolicy, "max_batch_delay must not be negative");
    }
}

std::uint64_t Batch::size() const {
    std::uint64_t n = 0;
    for (const auto& p : partitions) n += p.size();
    return n;
}

dataflow::TopologyBuilder build(const minilog::Broker& broker, const std::string& source_topic,
                                std::optional<minilog::Offset> end_offset, const BatchPolicy& policy) {
    policy.validate();
    const auto topic = broker.topic(source_topic);
    const auto hwm = broker.high_water_mark(topic, 0);
    const auto end = end_offset.value_or(hwm);
    if (end > hwm) {
        throw Error(Errc::InvalidTopology, "end offset " + std::to_string(end) +
                                               " is beyond the high-water mark " + std::to_string(hwm));
    }
    return dataflow::TopologyBuilder(source_topic, end);
}

Engine::Engine(minilog::Broker& broker, BatchPolicy policy) : broker_(broker), policy_(policy) {
    policy_.validate();
}

dataflow::ExecutionPlan Engine::plan(const dataflow::Topology& topology, std::uint32_t parallelism) const {
    return dataflow::make_plan(topology, parallelism, kPlanAnnotation);
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
    for (std::uint32_t i = 0; i < parallelism; ++i) {
        chains.push_back(std::make_unique<dataflow::LaneChain>(topology, broker_));
    }

    BatchDispatcher dispatcher(parallelism);
    std::vector<std::jthread> workers;
    for (std::uint32_t i = 0; i < parallelism; ++i) {
        workers.emplace_back([&, i] {
            dispatcher.worker_loop(
                [&](const Batch& batch) {
                    for (const auto& element : batch.partitions[i]) {
                        chains[i]->push(element);
                    }
                },
                [&] { chains[i]->finish(); });
        });
    }

    std::exception_ptr former_error;
    std::jthread former([&] {
        try {
            minilog::Offset offset = 0;
            std::uint64_t index = 0;
            while (offset < end && !dispatcher.failed()) {
                Batch batch;
                batch.batch_index = index++;
                batch.partitions.resize(parallelism);
                std::uint64_t size = 0;
                const auto opened = minilog::now_ms();
                while (offset < end && size < policy_.max_batch_size &&
                       (size == 0 || minilog::now_ms() - opened < policy_.max_batch_delay_ms)) {
                    const auto want = std::min({kReadChunk, end - offset, policy_.max_batch_size - size});
                    for (auto& entry : broker_.read(source, 0, offset, want)) {
                        batch.partitions[size % parallelism].push_back(
                            {entry.offset, entry.append_ts, std::move(entry.payload)});
                        ++size;
                        ++offset;
                    }
                }
                report.batch_sizes.push_back(size);
                report.thread_handoffs += size;
                dispatcher.run_batch(&batch);
            }
            if (!dispatcher.failed()) {
                dispatcher.run_finish();
            }
        } catch (...) {
            former_error = std::current_exception();
        }
        dispatcher.stop();
    });

    former.join();
    for (auto& w : workers) {
        w.join();
    }
    dispatcher.rethrow();
    if (former_error) {
        std::rethrow_exception(former_error);
    }

    for (const auto& chain : chains) {
        report.records_in += chain->pushed();
        dataflow::collect_lane(topology, *chain, report);
    }
    report.finished_ms = minilog::now_ms();
    return report;
}

} // namespace streamlab::microbatch_engine
