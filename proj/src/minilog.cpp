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

#include <streamlab/minilog.hpp>

#include <algorithm>
#include <chrono>

namespace streamlab::minilog {

TimestampMs now_ms() {
    using Clock = std::chrono::steady_clock;
    static const Clock::time_point epoch = Clock::now();
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch).count();
}

namespace detail {

Partition::Partition() {
    auto dir = std::make_unique<Directory>();
    dir->capacity = 16;
    dir->slots = std::make_unique<LogEntry*[]>(dir->capacity);
    directory_.store(dir.get(), std::memory_order_release);
    directories_.push_back(std::move(dir));
}

Partition::~Partition() = default;

LogEntry& Partition::slot_locked(Offset offset) {
    const std::size_t chunk = offset >> kChunkShift;
    if (chunk == chunks_.size()) {
        Directory* dir = directory_.load(std::memory_order_relaxed);
        if (chunk == dir->capacity) {
            // Old directories stay alive: a reader may still hold one.
            auto grown = std::make_unique<Directory>();
            grown->capacity = dir->capacity * 2;
            grown->slots = std::make_unique<LogEntry*[]>(grown->capacity);
            std::copy_n(dir->slots.get(), dir->capacity, grown->slots.get());
            dir = grown.get();
            directories_.push_back(std::move(grown));
            directory_.store(dir, std::memory_order_release);
        }
        chunks_.push_back(std::make_unique<Chunk>());
        dir->slots[chunk] = chunks_.back()->entries;
    }
    return chunks_[chunk]->entries[offset & (kChunkSize - 1)];
}

void Partition::publish_locked(Bytes payload) {
    const Offset offset = length_.load(std::memory_order_relaxed);
    LogEntry& entry = slot_locked(offset);
    entry.offset = offset;
    entry.append_ts = now_ms();
    entry.payload = std::move(payload);
    length_.store(offset + 1, std::memory_order_release);
}

void Partition::drain_locked() {
    while (!pending_.empty()) {
        publish_locked(std::move(pending_.front()));
        pending_.pop_front();
    }
}

AppendResult Partition::append_confirmed(Bytes payload) {
    std::lock_guard lock(mu_);
    // Earlier fire-and-forget entries hold lower offsets; publish them first.
    drain_locked();
    const Offset offset = reserved_++;
    publish_locked(std::move(payload));
    return {offset, chunks_[offset >> kChunkShift]->entries[offset & (kChunkSize - 1)].append_ts};
}

std::pair<Offset, bool> Partition::enqueue(Bytes payload) {
    std::lock_guard lock(mu_);
    const Offset offset = reserved_++;
    const bool first = pending_.empty();
    pending_.push_back(std::move(payload));
    return {offset, first};
}

void Partition::drain() {
    std::lock_guard lock(mu_);
    drain_locked();
}

bool Partition::has_pending() const {
    std::lock_guard lock(mu_);
    return !pending_.empty();
}

const LogEntry& Partition::at(Offset offset) const {
    const Directory* dir = directory_.load(std::memory_order_acquire);
    return dir->slots[offset >> kChunkShift][offset & (kChunkSize - 1)];
}

std::vector<LogEntry> Partition::read(Offset from, std::uint64_t max_count) const {
    const std::uint64_t end = length();
    if (from >= end) {
        return {};
    }
    const std::uint64_t to = from + std::min(max_count, end - from);
    std::vector<LogEntry> out;
    out.reserve(to - from);
    for (Offset o = from; o < to; ++o) {
        out.push_back(at(o));
    }
    return out;
}

} // namespace detail

const std::string& TopicHandle::name() const {
    if (!topic_) {
        throw Error(Errc::UnknownTopic, "invalid topic handle");
    }
    return topic_->config.name;
}

Broker::~Broker() {
    flush();
    if (flusher_.joinable()) {
        flusher_.request_stop();
        flush_cv_.notify_all();
        flusher_.join();
    }
}

TopicHandle Broker::create_topic(const TopicConfig& config) {
    if (config.name.empty()) {
        throw Error(Errc::InvalidSpec, "topic name must not be empty");
    }
    if (config.partitions == 0) {
        throw Error(Errc::InvalidSpec, "topic '" + config.name + "' needs at least one partition");
    }
    std::unique_lock lock(topics_mu_);
    if (topics_.contains(config.name)) {
        throw Error(Errc::DuplicateTopic, "topic '" + config.name + "' already exists");
    }
    auto topic = std::make_shared<detail::Topic>();
    topic->config = config;
    for (std::uint32_t i = 0; i < config.partitions; ++i) {
        topic->partitions.push_back(std::make_unique<detail::Partition>());
    }
    topics_.emplace(config.name, topic);
    return TopicHandle(std::move(topic));
}

TopicHandle Broker::topic(std::string_view name) const {
    std::shared_lock lock(topics_mu_);
    auto it = topics_.find(name);
    if (it == topics_.end()) {
        throw Error(Errc::UnknownTopic, "no topic named '" + std::string(name) + "'");
    }
    return TopicHandle(it->second);
}

bool Broker::has_topic(std::string_view name) const {
    std::shared_lock lock(topics_mu_);
    return topics_.find(name) != topics_.end();
}

void Broker::delete_topic(std::string_view name) {
    std::unique_lock lock(topics_mu_);
    auto it = topics_.find(name);
    if (it == topics_.end()) {
        throw Error(Errc::UnknownTopic, "no topic named '" + std::string(name) + "'");
    }
    it->second->deleted.store(true, std::memory_order_release);
    topics_.erase(it);
}

std::vector<std::string> Broker::topic_names() const {
    std::shared_lock lock(topics_mu_);
    std::vector<std::string> names;
    names.reserve(topics_.size());
    for (const auto& [name, topic] : topics_) {
        names.push_back(name);
    }
    return names;
}

detail::Partition& Broker::partition(const TopicHandle& topic, std::uint32_t index) const {
    if (!topic.topic_ || topic.topic_->deleted.load(std::memory_order_acquire)) {
        throw Error(Errc::UnknownTopic,
                    topic.topic_ ? "topic '" + topic.topic_->config.name + "' was deleted"
                                 : "invalid topic handle");
    }
    if (index >= topic.topic_->partitions.size()) {
        throw Error(Errc::InvalidPartition, "topic '" + topic.topic_->config.name +
                                                "' has no partition " + std::to_string(index));
    }
    return *topic.topic_->partitions[index];
}

AppendResult Broker::append(const TopicHandle& topic, std::uint32_t partition_index, Bytes payload,
                            AckMode ack) {
    detail::Partition& p = partition(topic, partition_index);
    if (ack == AckMode::Confirmed) {
        return p.append_confirmed(std::move(payload));
    }
    auto [offset, first] = p.enqueue(std::move(payload));
    if (first) {
        schedule_drain(topic.topic_, partition_index);
    }
    return {offset, std::nullopt};
}

AppendResult Broker::append(std::string_view name, std::uint32_t partition_index, Bytes payload,
                            AckMode ack) {
    return append(topic(name), partition_index, std::move(payload), ack);
}

std::vector<LogEntry> Broker::read(const TopicHandle& topic, std::uint32_t partition_index,
                                   Offset from, std::uint64_t max_count) const {
    return partition(topic, partition_index).read(from, max_count);
}

std::pair<TimestampMs, TimestampMs> Broker::boundary_timestamps(const TopicHandle& topic,
                                                                std::uint32_t partition_index) const {
    const detail::Partition& p = partition(topic, partition_index);
    const std::uint64_t n = p.length();
    if (n == 0) {
        throw Error(Errc::EmptyPartition, "partition " + std::to_string(partition_index) +
                                              " of topic '" + topic.name() + "' is empty");
    }
    return {p.at(0).append_ts, p.at(n - 1).append_ts};
}

Offset Broker::high_water_mark(const TopicHandle& topic, std::uint32_t partition_index) const {
    return partition(topic, partition_index).length();
}

void Broker::schedule_drain(std::shared_ptr<detail::Topic> topic, std::uint32_t partition_index) {
    std::lock_guard lock(flush_mu_);
    dirty_.emplace_back(std::move(topic), partition_index);
    if (!flusher_.joinable()) {
        flusher_ = std::jthread([this](std::stop_token stop) { flusher_loop(stop); });
    }
    flush_cv_.notify_one();
}

void Broker::flusher_loop(std::stop_token stop) {
    std::unique_lock lock(flush_mu_);
    while (!stop.stop_requested()) {
        flush_cv_.wait(lock, stop, [this] { return !dirty_.empty(); });
        auto work = std::move(dirty_);
        dirty_.clear();
        lock.unlock();
        for (auto& [topic, index] : work) {
            topic->partitions[index]->drain();
        }
        lock.lock();
    }
}

void Broker::flush() {
    std::vector<std::shared_ptr<detail::Topic>> all;
    {
        std::shared_lock lock(topics_mu_);
        for (const auto& [name, topic] : topics_) {
            all.push_back(topic);
        }
    }
    for (auto& topic : all) {
        for (auto& p : topic->partitions) {
            p->drain();
        }
    }
}

} // namespace streamlab::minilog
