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

#include "adhoc/cloudlet.hpp"
#include "adhoc/element.hpp"
#include "adhoc/resources.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace adhoc {

struct UtilityWeights {
    double w_avail = 1000.0;
    double w_perf = 10.0;
    double w_intr = 1.0;
    double w_cost = 0.01;

    double sum() const noexcept { return w_avail + w_perf + w_intr + w_cost; }
    UtilityWeights scaled(double c) const noexcept { return {w_avail * c, w_perf * c, w_intr * c, w_cost * c}; }
    std::vector<std::string> validate() const;
};

struct AdaptationPolicy {
    bool enabled = true;
    VirtualTime epoch_ms = 30'000;
    std::size_t max_actions_per_epoch = 3;
    /// Most under-replicated keys considered per cloudlet per epoch.
    std::size_t rereplicate_cap = 16;
    /// AddElement candidates per triggered cloudlet (best nodes by free headroom).
    std::size_t add_candidates = 3;
    /// Minimum gain over NoOp, relative to the sum of the weights.
    double epsilon = 1e-6;
    /// Planning never treats a machine as more available than this.
    double availability_ceiling = 0.99;
    double deploy_cost = 1.0;
    double destroy_cost = 0.2;
    double rereplicate_cost_per_mb = 1.0;

    std::vector<std::string> validate() const;
};

struct NoOp {
    bool operator==(const NoOp&) const = default;
};
struct AddElement {
    NodeId node;
    CloudletId cloudlet;
    ResourceVector allocation;
    /// Under-replicated keys the new element is meant to receive in a later epoch.
    std::vector<std::string> for_keys;
    bool operator==(const AddElement&) const = default;
};
struct RemoveElement {
    CloudletId cloudlet;
    ElementId element;
    bool operator==(const RemoveElement&) const = default;
};
struct Rereplicate {
    CloudletId cloudlet;
    std::string key;
    ElementId source;
    ElementId target;
    bool operator==(const Rereplicate&) const = default;
};

using PlanAction = std::variant<NoOp, AddElement, RemoveElement, Rereplicate>;

std::string describe(const PlanAction& action);

struct Plan {
    std::vector<PlanAction> actions;
    double predicted_utility = 0.0;

    /// Actions other than NoOp.
    std::size_t effective_actions() const;
    bool is_noop() const { return effective_actions() == 0; }
    bool operator==(const Plan& o) const { return actions == o.actions; }
};

struct NodeSnapshot {
    NodeId node;
    /// A recent report exists; the node is believed up.
    bool available = true;
    /// Forecast fraction of time up.
    double availability = 1.0;
    /// capacity - user demand - margin.
    ResourceVector headroom;
    /// Usage of the elements hosted there.
    ResourceVector usage;

    ResourceVector free_headroom() const { return clamp_non_negative(headroom - usage); }
};

struct MemberSnapshot {
    ElementId element;
    NodeId node;
    ElementState state = ElementState::Running;
    ResourceVector allocation;
    double throttle_factor = 1.0;
    bool reserved = false;
    bool metadata_holder = false;
};

struct KeySnapshot {
    std::string key;
    /// Replicas still in the membership view.
    std::vector<ElementId> replicas;
    std::uint64_t version = 0;
    double bytes = 0.0;
};

struct CloudletSnapshot {
    CloudletId id;
    EngineKind engine = EngineKind::Compute;
    CloudletPolicy policy;
    ResourceVector element_allocation;
    std::vector<MemberSnapshot> members;
    std::vector<KeySnapshot> keys;
    /// Busy fraction of the members over the last epoch (compute cloudlets).
    double utilization = 0.0;
    /// Task arrivals per millisecond over the last epoch.
    double arrival_rate = 0.0;
    /// Mean task size in cpu-milliseconds.
    double mean_work_cpu_ms = 0.0;
    std::size_t queue_length = 0;

    const MemberSnapshot* member(ElementId e) const;
};

struct AgreementSnapshot {
    AgreementId id;
    CloudletId cloudlet;
    std::vector<ElementId> reserved;
};

/// Everything the controller knows at one tick.
struct CloudStateSnapshot {
    VirtualTime at = 0;
    std::vector<NodeSnapshot> nodes;
    std::vector<CloudletSnapshot> cloudlets;
    std::vector<AgreementSnapshot> agreements;

    const NodeSnapshot* node(NodeId id) const;
    const CloudletSnapshot* cloudlet(CloudletId id) const;
};

/// Candidate plans in deterministic order; the first is always NoOp.
std::vector<Plan> generate_plans(const CloudStateSnapshot& snapshot, const AdaptationPolicy& policy);

/// Predicted utility after the plan:
///   U = w_avail*A' + w_perf*P' - w_intr*I' - w_cost*C
/// Throws Error(InconsistentPlan) when the plan does not fit the snapshot.
double evaluate_plan(const Plan& plan, const CloudStateSnapshot& snapshot, const UtilityWeights& weights,
                     const AdaptationPolicy& policy);

/// Index of the plan to execute: highest utility (ties: fewer actions, then earlier),
/// or 0 (NoOp) unless it beats NoOp by epsilon. Plans must already carry their utilities.
std::size_t select_plan(const std::vector<Plan>& evaluated, const UtilityWeights& weights,
                        const AdaptationPolicy& policy);

/// Carries out plan actions against the live system.
class PlanExecutor {
public:
    virtual ~PlanExecutor() = default;
    /// False when a hard constraint failed at execution time; the action is then skipped.
    virtual bool execute(const PlanAction& action) = 0;
};

struct AdaptationOutcome {
    Plan selected;
    /// `selected` with downgraded actions replaced by NoOp.
    Plan executed;
    std::size_t candidates = 0;
};

/// One controller epoch: generate, evaluate, select, execute.
AdaptationOutcome adapt_step(const CloudStateSnapshot& snapshot, const AdaptationPolicy& policy,
                             const UtilityWeights& weights, PlanExecutor& executor);

} // namespace adhoc
