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

#include "adhoc/kernel.hpp"

#include <limits>
#include <sstream>

namespace adhoc {

void EventLog::append(LogEntry entry)
{
    if (!entries_.empty() && entry.at < entries_.back().at)
        throw InvariantBreach("event log time went backwards at " + std::to_string(entry.at));
    entries_.push_back(std::move(entry));
}

std::string EventLog::canonical_line(const LogEntry& entry)
{
    nlohmann::json j = {
        {"at", entry.at},
        {"component", entry.component},
        {"kind", entry.kind},
        {"fields", entry.fields},
    };
    return j.dump();
}

void EventLog::write_ndjson(std::ostream& out) const
{
    for (const auto& e : entries_)
        out << canonical_line(e) << '\n';
}

std::string EventLog::to_ndjson() const
{
    std::ostringstream out;
    write_ndjson(out);
    return out.str();
}

RunAborted::RunAborted(VirtualTime at, std::uint64_t seq, ComponentId target, const std::string& what)
    : InvariantBreach("event " + std::to_string(seq) + " for " + target + " at t=" + std::to_string(at) +
                      ": " + what),
      at_(at), seq_(seq), target_(std::move(target))
{
}

Kernel::Kernel(std::uint64_t seed) : seed_(seed) {}

EventHandle Kernel::schedule(ComponentId target, Body body, VirtualTime delay)
{
    if (delay < 0)
        throw Error(ErrorCode::InvalidArgument, "negative delay " + std::to_string(delay));
    if (delay > std::numeric_limits<VirtualTime>::max() - now_)
        throw InvariantBreach("virtual time overflow: delay " + std::to_string(delay) + " at t=" + std::to_string(now_));
    return schedule_at(std::move(target), std::move(body), now_ + delay);
}

EventHandle Kernel::schedule_at(ComponentId target, Body body, VirtualTime fire_at)
{
    if (fire_at < now_)
        throw Error(ErrorCode::InvalidArgument, "event scheduled in the past at " + std::to_string(fire_at));
    const std::uint64_t seq = next_seq_++;
    queue_.emplace(std::pair{fire_at, seq}, Pending{std::move(target), std::move(body)});
    fire_time_by_seq_.emplace(seq, fire_at);
    return EventHandle{seq};
}

bool Kernel::cancel(EventHandle handle)
{
    auto it = fire_time_by_seq_.find(handle.seq);
    if (it == fire_time_by_seq_.end())
        return false;
    queue_.erase(std::pair{it->second, handle.seq});
    fire_time_by_seq_.erase(it);
    return true;
}

const EventLog& Kernel::run_until(VirtualTime t_end)
{
    if (t_end < now_)
        throw Error(ErrorCode::InvalidArgument,
                    "run_until(" + std::to_string(t_end) + ") before now=" + std::to_string(now_));
    while (!queue_.empty()) {
        auto it = queue_.begin();
        const auto [fire_at, seq] = it->first;
        if (fire_at > t_end)
            break;
        Pending ev = std::move(it->second);
        queue_.erase(it);
        fire_time_by_seq_.erase(seq);
        now_ = fire_at;
        ++processed_;
        try {
            ev.body();
        } catch (const RunAborted&) {
            throw;
        } catch (const std::exception& ex) {
            throw RunAborted(fire_at, seq, ev.target, ex.what());
        }
    }
    now_ = t_end;
    return log_;
}

void Kernel::log(ComponentId component, std::string kind, nlohmann::json fields)
{
    log_.append(LogEntry{now_, std::move(component), std::move(kind), std::move(fields)});
}

RngStream& Kernel::stream(const std::string& stream_id)
{
    auto it = streams_.find(stream_id);
    if (it == streams_.end())
        it = streams_.emplace(stream_id, std::make_unique<RngStream>(seed_, stream_id)).first;
    return *it->second;
}

} // namespace adhoc
