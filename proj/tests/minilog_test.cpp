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

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <thread>

namespace streamlab::minilog {
namespace {

void expect_well_ordered(const std::vector<LogEntry>& entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ASSERT_EQ(entries[i].offset, i);
        if (i > 0) {
            ASSERT_LE(entries[i - 1].append_ts, entries[i].append_ts) << "at offset " << i;
        }
    }
}

TEST(BrokerTest, CreateTopicStartsEmpty) {
    Broker broker;
    auto t = broker.create_topic({"input", 1});
    EXPECT_EQ(broker.high_water_mark(t, 0), 0u);
    EXPECT_TRUE(broker.read(t, 0, 0, 10).empty());
    EXPECT_TRUE(broker.has_topic("input"));
}

TEST(BrokerTest, DuplicateTopicRejected) {
    Broker broker;
    broker.create_topic({"input", 1});
    try {
        broker.create_topic({"input", 1});
        FAIL() << "expected duplicate-name error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateTopic);
    }
}

TEST(BrokerTest, InvalidTopicConfig) {
    Broker broker;
    EXPECT_THROW(broker.create_topic({"", 1}), Error);
    EXPECT_THROW(broker.create_topic({"x", 0}), Error);
}

TEST(BrokerTest, DenseOffsetsForSequentialAppends) {
    Broker broker;
    auto t = broker.create_topic({"out-run-3", 1});
    for (Offset i = 0; i < 5; ++i) {
        EXPECT_EQ(broker.append(t, 0, "p" + std::to_string(i)).offset, i);
    }
    const auto entries = broker.read(t, 0, 0, 100);
    ASSERT_EQ(entries.size(), 5u);
    expect_well_ordered(entries);
}

TEST(BrokerTest, ConfirmedAppendReportsTimestamp) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    auto a = broker.append(t, 0, "a");
    auto b = broker.append(t, 0, "b");
    ASSERT_TRUE(a.append_ts && b.append_ts);
    EXPECT_EQ(a.offset, 0u);
    EXPECT_EQ(b.offset, 1u);
    EXPECT_LE(*a.append_ts, *b.append_ts);
}

TEST(BrokerTest, UnknownTopicAndPartition) {
    Broker broker;
    try {
        broker.append("missing", 0, "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownTopic);
    }
    auto t = broker.create_topic({"t", 2});
    try {
        broker.append(t, 2, "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidPartition);
    }
    EXPECT_THROW(broker.topic("missing"), Error);
}

TEST(BrokerTest, DeletedTopicHandleIsRejected) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    broker.append(t, 0, "x");
    broker.delete_topic("t");
    EXPECT_FALSE(broker.has_topic("t"));
    EXPECT_THROW(broker.read(t, 0, 0, 1), Error);
    EXPECT_NO_THROW(broker.create_topic({"t", 1}));
}

TEST(BrokerTest, ReadWindowAndEndOfLog) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    for (const char* p : {"a", "b", "c"}) broker.append(t, 0, p);
    auto all = broker.read(t, 0, 0, 10);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].payload, "a");
    EXPECT_EQ(all[2].payload, "c");
    EXPECT_TRUE(broker.read(t, 0, 3, 10).empty());
    auto middle = broker.read(t, 0, 1, 1);
    ASSERT_EQ(middle.size(), 1u);
    EXPECT_EQ(middle[0].payload, "b");
}

TEST(BrokerTest, PayloadRoundTripIsByteExact) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    std::string binary("\0\x01\xff\t\n", 5);
    broker.append(t, 0, binary);
    EXPECT_EQ(broker.read(t, 0, 0, 1).at(0).payload, binary);
}

TEST(BrokerTest, BoundaryTimestamps) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    try {
        broker.boundary_timestamps(t, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyPartition);
    }
    broker.append(t, 0, "only");
    auto [first, last] = broker.boundary_timestamps(t, 0);
    EXPECT_EQ(first, last);

    for (int i = 0; i < 2000; ++i) broker.append(t, 0, "x");
    const auto entries = broker.read(t, 0, 0, 1u << 20);
    auto [f, l] = broker.boundary_timestamps(t, 0);
    EXPECT_EQ(f, entries.front().append_ts);
    EXPECT_EQ(l, entries.back().append_ts);
}

TEST(BrokerTest, HighWaterMarkTracksAppends) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    for (int i = 1; i <= 3000; ++i) {
        broker.append(t, 0, "x");
        ASSERT_EQ(broker.high_water_mark(t, 0), static_cast<Offset>(i));
    }
}

TEST(BrokerTest, FireAndForgetPreservesProducerOrder) {
    Broker broker;
    auto t = broker.create_topic({"t", 1, AckMode::FireAndForget});
    for (int i = 0; i < 5000; ++i) {
        auto r = broker.append(t, 0, std::to_string(i), AckMode::FireAndForget);
        ASSERT_EQ(r.offset, static_cast<Offset>(i));
        ASSERT_FALSE(r.append_ts.has_value());
    }
    broker.flush();
    const auto entries = broker.read(t, 0, 0, 10000);
    ASSERT_EQ(entries.size(), 5000u);
    expect_well_ordered(entries);
    for (int i = 0; i < 5000; ++i) ASSERT_EQ(entries[i].payload, std::to_string(i));
}

TEST(BrokerTest, MixedAckModesKeepOffsetOrder) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    broker.append(t, 0, "0", AckMode::FireAndForget);
    broker.append(t, 0, "1", AckMode::FireAndForget);
    auto r = broker.append(t, 0, "2", AckMode::Confirmed);
    EXPECT_EQ(r.offset, 2u);
    const auto entries = broker.read(t, 0, 0, 10);
    ASSERT_EQ(entries.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(entries[i].payload, std::to_string(i));
}

TEST(BrokerStressTest, ConcurrentProducersYieldDenseOffsets) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    constexpr int kProducers = 4;
    constexpr int kPerProducer = 2500;
    std::vector<std::vector<Offset>> got(kProducers);
    {
        std::vector<std::jthread> producers;
        for (int p = 0; p < kProducers; ++p) {
            producers.emplace_back([&, p] {
                for (int i = 0; i < kPerProducer; ++i) {
                    got[p].push_back(broker.append(t, 0, std::to_string(p) + ":" + std::to_string(i)).offset);
                }
            });
        }
    }
    std::set<Offset> offsets;
    for (const auto& g : got) {
        // Each producer sees its own appends in increasing offset order.
        EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
        offsets.insert(g.begin(), g.end());
    }
    ASSERT_EQ(offsets.size(), 10000u);
    EXPECT_EQ(*offsets.begin(), 0u);
    EXPECT_EQ(*offsets.rbegin(), 9999u);

    const auto entries = broker.read(t, 0, 0, 20000);
    ASSERT_EQ(entries.size(), 10000u);
    expect_well_ordered(entries);
}

TEST(BrokerStressTest, ReadersRunAlongsideAppenders) {
    Broker broker;
    auto t = broker.create_topic({"t", 1});
    constexpr Offset kTotal = 20000;
    std::atomic<bool> ok{true};
    {
        std::jthread writer([&] {
            for (Offset i = 0; i < kTotal; ++i) broker.append(t, 0, std::to_string(i));
        });
        std::vector<std::jthread> readers;
        for (int r = 0; r < 3; ++r) {
            readers.emplace_back([&] {
                Offset cursor = 0;
                Offset last_hwm = 0;
                while (cursor < kTotal) {
                    const Offset hwm = broker.high_water_mark(t, 0);
                    if (hwm < last_hwm) ok = false;
                    last_hwm = hwm;
                    for (const auto& e : broker.read(t, 0, cursor, 97)) {
                        if (e.offset != cursor || e.payload != std::to_string(cursor)) ok = false;
                        ++cursor;
                    }
                }
            });
        }
    }
    EXPECT_TRUE(ok.load());
}

// Randomized interleaving of appends and reads against a plain vector model:
// every cursor must see every entry exactly once, in order.
TEST(BrokerPropertyTest, RandomInterleavingMatchesModel) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        Broker broker;
        auto t = broker.create_topic({"t", 1});
        std::vector<std::string> model;
        std::vector<Offset> cursors(3, 0);
        std::vector<std::vector<std::string>> seen(3);
        for (int step = 0; step < 3000; ++step) {
            const auto action = rng() % 4;
            if (action < 2) {
                std::string payload = "s" + std::to_string(rng() % 1000);
                const auto ack = rng() % 2 ? AckMode::Confirmed : AckMode::FireAndForget;
                const auto r = broker.append(t, 0, payload, ack);
                ASSERT_EQ(r.offset, model.size());
                model.push_back(payload);
            } else {
                const auto c = rng() % cursors.size();
                for (const auto& e : broker.read(t, 0, cursors[c], 1 + rng() % 50)) {
                    ASSERT_EQ(e.offset, cursors[c]);
                    seen[c].push_back(e.payload);
                    ++cursors[c];
                }
            }
        }
        broker.flush();
        for (std::size_t c = 0; c < cursors.size(); ++c) {
            for (const auto& e : broker.read(t, 0, cursors[c], model.size())) seen[c].push_back(e.payload);
            EXPECT_EQ(seen[c], model) << "seed " << seed << " cursor " << c;
        }
        expect_well_ordered(broker.read(t, 0, 0, model.size()));
    }
}

} // namespace
} // namespace streamlab::minilog
