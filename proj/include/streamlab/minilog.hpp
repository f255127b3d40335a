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

// Embedded append-only log broker.
//
// Topics hold one or more partitions. Each partition is a dense sequence of
// entries whose offsets are 0,1,2,... and whose append timestamps are read
// from one process-wide monotonic clock inside the critical section that
// assigns the offset, so timestamp order never contradicts offset order.
//
// Readers never take the append lock: entries live in fixed-size chunks that
// are never moved, and a reader only touches the prefix below the published
// length.

#include <streamlab/error.hpp>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace streamlab {

using Bytes = std::string;

namespace minilog {

using Offset = std::uint64_t;
using TimestampMs = std::int64_t;

/// Milliseconds since the process-wide clock epoch (first call). Monotonic.
TimestampMs now_ms();

enum class AckMode { FireAndForget, Confirmed };

struct TopicConfig {
    std::string name;
    std::uint32_t partitions = 1;
    AckMode ack_mode = AckMode::Confirmed;
};

struct LogEntry {
    Offset offset = 0;
    TimestampMs append_ts = 0;
    Bytes payload;
};

/// Fire-and-forget appends learn their offset immediately but not their
/// timestamp; the entry becomes readable once the broker drains it.
struct AppendResult {
    Offset offset = 0;
    std::optional<TimestampMs> append_ts;
};

namespace detail {

class Partition {
public:
    Partition();
    ~Partition();
    Partition(const Partition&) = delete;
    Partition& operator=(const Partition&) = delete;

    AppendResult append_confirmed(Bytes payload);
    /// Returns true when this call created the first pending entry.
    std::pair<Offset, bool> enqueue(Bytes payload);
    void drain();
    bool has_pending() const;

    std::uint64_t length() const noexcept { return length_.load(std::memory_order_acquire); }
    std::vector<LogEntry> read(Offset from, std::uint64_t max_count) const;
    const LogEntry& at(Offset offset) const;

private:
    static constexpr std::size_t kChunkShift = 10;
    static constexpr std::size_t kChunkSize = std::size_t{1} << kChunkShift;
    struct Chunk {
        LogEntry entries[kChunkSize];
    };

    struct Directory {
        std::size_t capacity;
        std::unique_ptr<LogEntry*[]> slots;
    };

    void drain_locked();
    void publish_locked(Bytes payload);
    LogEntry& slot_locked(Offset offset);

    mutable std::mutex mu_;
    Offset reserved_ = 0;
    std::deque<Bytes> pending_;
    std::vector<std::unique_ptr<Chunk>> chunks_;
    std::vector<std::unique_ptr<Directory>> directories_;
    std::atomic<Directory*> directory_{nullptr};
    std::atomic<std::uint64_t> length_{0};
};

struct Topic {
    TopicConfig config;
    std::vector<std::unique_ptr<Partition>> partitions;
    std::atomic<bool> deleted{false};
};

} // namespace detail

class TopicHandle {
public:
    TopicHandle() = default;

    const std::string& name() const;
    bool valid() const noexcept { return topic_ != nullptr; }

private:
    friend class Broker;
    explicit TopicHandle(std::shared_ptr<detail::Topic> topic) : topic_(std::move(topic)) {}

    std::shared_ptr<detail::Topic> topic_;
};

class Broker {
public:
    Broker() = default;
    ~Broker();
    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    TopicHandle create_topic(const TopicConfig& config);
    TopicHandle topic(std::string_view name) const;
    bool has_topic(std::string_view name) const;
    void delete_topic(std::string_view name);
    std::vector<std::string> topic_names() const;

    AppendResult append(const TopicHandle& topic, std::uint32_t partition, Bytes payload,
                        AckMode ack = AckMode::Confirmed);
    AppendResult append(std::string_view topic, std::uint32_t partition, Bytes payload,
                        AckMode ack = AckMode::Confirmed);

    /// Entries [from, min(from + max_count, length)). Never blocks on appenders.
    std::vector<LogEntry> read(const TopicHandle& topic, std::uint32_t partition, Offset from,
                               std::uint64_t max_count) const;

    /// (append_ts of offset 0, append_ts of offset length-1).
    std::pair<TimestampMs, TimestampMs> boundary_timestamps(const TopicHandle& topic,
                                                            std::uint32_t partition) const;

    /// Number of readable entries.
    Offset high_water_mark(const TopicHandle& topic, std::uint32_t partition) const;

    /// Blocks until every queued fire-and-forget append is readable.
    void flush();

private:
    detail::Partition& partition(const TopicHandle& topic, std::uint32_t index) const;
    void schedule_drain(std::shared_ptr<detail::Topic> topic, std::uint32_t partition);
    void flusher_loop(std::stop_token stop);

    mutable std::shared_mutex topics_mu_;
    std::map<std::string, std::shared_ptr<detail::Topic>, std::less<>> topics_;

    std::mutex flush_mu_;
    std::condition_variable_any flush_cv_;
    std::vector<std::pair<std::shared_ptr<detail::Topic>, std::uint32_t>> dirty_;
    std::jthread flusher_;
};

} // namespace minilog
} // namespace streamlab
