/*
 * Copyright 2026 The adhoc-cloud Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "adhoc/errors.hpp"
#include "adhoc/ids.hpp"
#include "adhoc/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace adhoc {

/// Name of the state machine an event or log record belongs to ("node/n3", "cloudlet/c0", ...).
using ComponentId = std::string;

struct LogEntry {
    VirtualTime at = 0;
    ComponentId component;
    std::string kind;
    nlohmann::json fields = nlohmann::json::object();
};

/// Append-only record of what the state machines did. Entry times never decrease.
class EventLog {
public:
    void append(LogEntry entry);

    const std::vector<LogEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// One JSON object per line, keys sorted; byte-stable for identical logs.
    void write_ndjson(std::ostream& out) const;
    std::string to_ndjson() const;

    static std::string canonical_line(const LogEntry& entry);

private:
    std::vector<LogEntry> entries_;
};

struct EventHandle {
    std::uint64_t seq = 0;
};

/// The run was aborted because an event body threw. Identifies the event.
class RunAborted : public InvariantBreach {
public:
    RunAborted(VirtualTime at, std::uint64_t seq, ComponentId target, const std::string& what);

    VirtualTime at() const noexcept { return at_; }
    std::uint64_t seq() const noexcept { return seq_; }
    const ComponentId& target() const noexcept { return target_; }

private:
    VirtualTime at_;
    std::uint64_t seq_;
    ComponentId target_;
};

/// Single-threaded discrete-event engine. Events fire in (fire_at, seq) order;
/// seq is the insertion counter, so same-tick events fire in scheduling order.
class Kernel {
public:
    using Body = std::function<void()>;

    explicit Kernel(std::uint64_t seed);

    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    VirtualTime now() const noexcept { return now_; }
    std::uint64_t seed() const noexcept { return seed_; }

    EventHandle schedule(ComponentId target, Body body, VirtualTime delay);
    EventHandle schedule_at(ComponentId target, Body body, VirtualTime fire_at);

    /// Returns false when the event already fired or was cancelled.
    bool cancel(EventHandle handle);

    /// Processes every event with fire_at <= t_end, then sets the clock to t_end.
    const EventLog& run_until(VirtualTime t_end);

    void log(ComponentId component, std::string kind, nlohmann::json fields = nlohmann::json::object());

    const EventLog& event_log() const noexcept { return log_; }

    /// Named stream, created on first use from the kernel seed.
    RngStream& stream(const std::string& stream_id);

    std::size_t pending() const noexcept { return queue_.size(); }
    std::uint64_t processed() const noexcept { return processed_; }

private:
    struct Pending {
        ComponentId target;
        Body body;
    };

    std::uint64_t seed_;
    VirtualTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
    std::map<std::pair<VirtualTime, std::uint64_t>, Pending> queue_;
    std::map<std::uint64_t, VirtualTime> fire_time_by_seq_;
    std::map<std::string, std::unique_ptr<RngStream>> streams_;
    EventLog log_;
};

} // namespace adhoc
