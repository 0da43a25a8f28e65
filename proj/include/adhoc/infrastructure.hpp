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

#include "adhoc/element.hpp"
#include "adhoc/intrusiveness.hpp"
#include "adhoc/kernel.hpp"
#include "adhoc/node.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace adhoc {

struct InfrastructureConfig {
    VirtualTime deploy_latency_ms = 2000;
    VirtualTime shutdown_latency_ms = 500;
    VirtualTime report_interval_ms = 10'000;
    IntrusivenessPolicy intrusiveness;
};

/// Receives lifecycle notifications from the per-node infrastructure.
class InfrastructureObserver {
public:
    virtual ~InfrastructureObserver() = default;

    virtual void element_running(const CloudElement&) {}
    /// Orderly shutdown began (destroy or eviction).
    virtual void element_stopping(const CloudElement&) {}
    /// The hosting node crashed. Nobody else learns of this except through timeouts.
    virtual void element_crashed(const CloudElement&) {}
    virtual void element_dead(const CloudElement&) {}
    virtual void element_throttle_changed(const CloudElement&) {}
    virtual void node_liveness_changed(const Node&) {}
    virtual void node_report(const NodeReport&) {}
};

/// Element manager plus node modeller/manager for every node of the fleet.
class Infrastructure {
public:
    Infrastructure(Kernel& kernel, InfrastructureConfig config);

    void set_observer(InfrastructureObserver* observer) noexcept { observer_ = observer; }

    NodeId add_node(std::string name, ResourceVector capacity, ResourceVector reserve_margin,
                    std::optional<ChurnModel> churn, UserLoadModel user_load);

    /// Starts churn, user-load and reporting processes for every node.
    void start();

    const InfrastructureConfig& config() const noexcept { return config_; }
    Kernel& kernel() noexcept { return kernel_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    const CloudElement& element(ElementId id) const;
    const CloudElement* find_element(ElementId id) const;
    const std::map<ElementId, CloudElement>& elements() const noexcept { return elements_; }

    /// Hands out an id for an element that will be created later.
    ElementId reserve_element_id();

    ElementId create_element(NodeId node, CloudletId cloudlet, EngineKind engine, const ResourceVector& allocation,
                             bool persistent = true, std::optional<ElementId> preassigned = std::nullopt);

    void destroy_element(NodeId node, ElementId element);

    std::vector<ControlAction> enforce_intrusiveness(NodeId node, VirtualTime t);

    NodeReport publish_node_report(NodeId node, VirtualTime t);

    /// Sum of usage of non-dead elements hosted on the node.
    ResourceVector usage(NodeId node) const;
    /// headroom minus usage, clamped at zero; zero for a down node.
    ResourceVector free_headroom(NodeId node) const;
    bool violating(NodeId node) const;

    /// Scripted crash; recovers after `down_for` when given. Suspends the churn process meanwhile.
    void crash_node(NodeId node, std::optional<VirtualTime> down_for = std::nullopt);
    void recover_node(NodeId node);

    const std::vector<std::pair<VirtualTime, Liveness>>& liveness_history(NodeId node) const;

private:
    struct NodeRuntime {
        bool violating = false;
        VirtualTime violation_since = 0;
        std::optional<EventHandle> enforcement_check;
        std::optional<EventHandle> churn_event;
        std::optional<EventHandle> load_event;
        std::optional<EventHandle> report_event;
        std::vector<std::pair<VirtualTime, Liveness>> history;
    };

    CloudElement& mutable_element(ElementId id);
    ComponentId node_component(NodeId id) const;
    void set_state(CloudElement& e, ElementState next);
    void schedule_running(CloudElement& e);
    void begin_shutdown(CloudElement& e);
    void schedule_churn(NodeId id);
    void apply_churn(NodeId id, Liveness next);
    void go_down(NodeId id);
    void go_up(NodeId id);
    void schedule_user_load(NodeId id);
    void schedule_report(NodeId id);
    void reassess(NodeId id);
    std::vector<EnforcementCandidate> candidates(NodeId id) const;

    Kernel& kernel_;
    InfrastructureConfig config_;
    InfrastructureObserver* observer_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<NodeRuntime> runtime_;
    std::map<ElementId, CloudElement> elements_;
    std::map<ElementId, std::uint64_t> incarnation_;
    std::uint32_t next_element_id_ = 1;
    bool started_ = false;
};

} // namespace adhoc
