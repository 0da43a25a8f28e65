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

#include "adhoc/kernel.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>

namespace adhoc {

struct GoalSpec {
    VirtualTime from = 0;
    /// Defaults to the time of the run_end record.
    std::optional<VirtualTime> to;
};

struct LatencySummary {
    std::uint64_t count = 0;
    VirtualTime p50 = 0;
    VirtualTime p95 = 0;
    VirtualTime p99 = 0;

    bool operator==(const LatencySummary&) const = default;
};

struct KvSummary {
    std::uint64_t puts_acked = 0;
    std::uint64_t puts_failed = 0;
    std::uint64_t gets_ok = 0;
    std::uint64_t gets_failed = 0;
    std::uint64_t stale_reads = 0;

    bool operator==(const KvSummary&) const = default;
};

struct GoalReport {
    VirtualTime from = 0;
    VirtualTime to = 0;
    /// Fraction of the window with at least one serving element.
    std::map<std::uint32_t, double> cloudlet_availability;
    /// Fraction of the agreement window (clipped to the report window) with a reserved element serving.
    std::map<std::uint32_t, double> agreement_satisfaction;
    std::map<std::uint32_t, double> node_availability;
    /// Time-weighted headroom violation fraction.
    std::map<std::uint32_t, double> node_violation_fraction;
    LatencySummary task_latency;
    std::uint64_t tasks_lost = 0;
    KvSummary kv;
    std::map<std::string, std::uint64_t> adaptation_actions;
    std::uint64_t adaptation_downgraded = 0;
    std::uint64_t enforcement_actions = 0;

    bool operator==(const GoalReport&) const = default;
};

void to_json(nlohmann::json& j, const GoalReport& r);

/// Nearest-rank percentile of an ascending sequence; 0 when empty.
VirtualTime nearest_rank(const std::vector<VirtualTime>& sorted, double percent);

/// Throws Error(IncompleteLog) when the log has no run_end record covering the window.
GoalReport aggregate_metrics(const EventLog& log, const GoalSpec& goal = {});

} // namespace adhoc
