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

#include "adhoc/ids.hpp"
#include "adhoc/resources.hpp"

#include <json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace adhoc {

struct IntrusivenessPolicy {
    bool enabled = true;
    /// How long a violation may persist before the node manager acts.
    VirtualTime grace_ms = 1000;
    bool throttle_first = true;
    /// Target bound on the time-weighted violation fraction; reported, not enforced directly.
    double max_violation_fraction = 0.01;
    /// Lowest throttle factor before eviction is preferred.
    double throttle_floor = 0.5;

    std::vector<std::string> validate() const;
};

struct ControlAction {
    enum class Kind { Throttle, Restore, Evict };

    Kind kind = Kind::Throttle;
    ElementId element;
    /// New throttle factor for Throttle/Restore.
    double throttle_factor = 1.0;

    bool operator==(const ControlAction&) const = default;
};

std::string_view to_string(ControlAction::Kind k) noexcept;

/// What the planner needs to know about one non-evicting element.
struct EnforcementCandidate {
    ElementId element;
    ResourceVector allocation;
    double throttle_factor = 1.0;
    /// Deploying elements hold their allocation but cannot be throttled.
    bool throttleable = true;
};

/// Victim order: allocation cpu descending, element id ascending.
bool enforcement_order(const EnforcementCandidate& a, const EnforcementCandidate& b) noexcept;

/// Control actions that bring the candidates' total usage within `headroom`:
/// fewest evictions, then fewest throttles (memory/storage/network cannot be
/// throttled). Ties prefer victims earliest in enforcement_order. Empty when
/// already within.
std::vector<ControlAction> plan_enforcement(const ResourceVector& headroom,
                                            std::span<const EnforcementCandidate> candidates,
                                            const IntrusivenessPolicy& policy);

/// Raises throttled elements back toward factor 1 while the total cpu stays within headroom.
std::vector<ControlAction> plan_relaxation(const ResourceVector& headroom,
                                           std::span<const EnforcementCandidate> candidates);

/// Snapshot published by a node's modeller/manager.
struct NodeReport {
    NodeId node;
    VirtualTime at = 0;
    ResourceVector headroom;
    ResourceVector user_demand;
    std::map<ElementId, ResourceVector> element_usage;
    std::map<ElementId, double> throttle_factors;
    bool violation = false;

    ResourceVector total_usage() const;
    /// Headroom left for new elements.
    ResourceVector free_headroom() const;
};

void to_json(nlohmann::json& j, const NodeReport& r);

} // namespace adhoc
