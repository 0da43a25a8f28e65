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

#include "adhoc/intrusiveness.hpp"
#include "adhoc/kernel.hpp"
#include "adhoc/metrics.hpp"
#include "adhoc/qos.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

/// Fewest evictions, then fewest throttles, over every subset choice.
struct EnforcementCost {
    std::size_t evictions = 0;
    std::size_t throttles = 0;
    bool operator==(const EnforcementCost&) const = default;
};

std::optional<EnforcementCost> minimal_enforcement(const adhoc::ResourceVector& headroom,
                                                   std::span<const adhoc::EnforcementCandidate> candidates,
                                                   double floor);

/// Brute-force admission control. Keeps its own per-node calendar and checks
/// every millisecond of a window.
class BruteForceBroker {
public:
    struct Decision {
        bool feasible_nodes_enough = false;
        /// Best availability over all calendar-feasible placements, -1 when none.
        double best = -1.0;
    };

    Decision decide(const adhoc::ReservationRequest& r, const adhoc::CapacityForecast& f) const;
    /// Whether `nodes` is a calendar-feasible placement for `r`.
    bool placement_feasible(const adhoc::ReservationRequest& r, const adhoc::CapacityForecast& f,
                            const std::vector<adhoc::NodeId>& nodes) const;
    void commit(const adhoc::ReservationRequest& r, const std::vector<adhoc::NodeId>& nodes);

private:
    bool node_fits(const adhoc::ReservationRequest& r, const adhoc::NodeForecast& nf) const;
    std::map<adhoc::NodeId, std::vector<std::pair<adhoc::TimeWindow, adhoc::ResourceVector>>> booked_;
};

/// Second implementation of aggregate_metrics: interval lists instead of running integrators.
adhoc::GoalReport aggregate_by_intervals(const adhoc::EventLog& log, adhoc::VirtualTime from,
                                         adhoc::VirtualTime to);

} // namespace oracle
