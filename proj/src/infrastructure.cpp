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

#include "adhoc/infrastructure.hpp"

#include <algorithm>

namespace adhoc {
namespace {

nlohmann::json element_fields(const CloudElement& e)
{
    return {{"element", e.id.value},
            {"node", e.node.value},
            {"cloudlet", e.cloudlet.value},
            {"engine", to_string(e.engine)},
            {"state", to_string(e.state)},
            {"throttle_factor", e.throttle_factor}};
}

} // namespace

Infrastructure::Infrastructure(Kernel& kernel, InfrastructureConfig config)
    : kernel_(kernel), config_(std::move(config))
{
}

NodeId Infrastructure::add_node(std::string name, ResourceVector capacity, ResourceVector reserve_margin,
                                std::optional<ChurnModel> churn, UserLoadModel user_load)
{
    const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.emplace_back(id, std::move(name), capacity, reserve_margin, std::move(churn), std::move(user_load));
    runtime_.emplace_back();
    runtime_.back().history.emplace_back(kernel_.now(), Liveness::Up);
    return id;
}

Node& Infrastructure::node(NodeId id)
{
    if (id.value >= nodes_.size())
        throw Error(ErrorCode::InvalidArgument, "unknown node " + to_string(id));
    return nodes_[id.value];
}

const Node& Infrastructure::node(NodeId id) const
{
    return const_cast<Infrastructure*>(this)->node(id);
}

const CloudElement* Infrastructure::find_element(ElementId id) const
{
    auto it = elements_.find(id);
    return it == elements_.end() ? nullptr : &it->second;
}

const CloudElement& Infrastructure::element(ElementId id) const
{
    if (const auto* e = find_element(id))
        return *e;
    throw Error(ErrorCode::UnknownElement, to_string(id));
}

CloudElement& Infrastructure::mutable_element(ElementId id)
{
    auto it = elements_.find(id);
    if (it == elements_.end())
        throw Error(ErrorCode::UnknownElement, to_string(id));
    return it->second;
}

ComponentId Infrastructure::node_component(NodeId id) const
{
    return "node/" + to_string(id);
}

const std::vector<std::pair<VirtualTime, Liveness>>& Infrastructure::liveness_history(NodeId id) const
{
    node(id);
    return runtime_[id.value].history;
}

void Infrastructure::start()
{
    if (started_)
        return;
    started_ = true;
    for (const auto& n : nodes_) {
        kernel_.log(node_component(n.id()), "node_up", {{"node", n.id().value}});
        schedule_churn(n.id());
        schedule_user_load(n.id());
        schedule_report(n.id());
    }
}

ElementId Infrastructure::reserve_element_id()
{
    return ElementId{next_element_id_++};
}

ResourceVector Infrastructure::usage(NodeId id) const
{
    ResourceVector total;
    for (ElementId e : node(id).hosted())
        total += element(e).usage();
    return total;
}

ResourceVector Infrastructure::free_headroom(NodeId id) const
{
    const Node& n = node(id);
    if (!n.up())
        return {};
    return clamp_non_negative(n.headroom() - usage(id));
}

bool Infrastructure::violating(NodeId id) const
{
    node(id);
    return runtime_[id.value].violating;
}

void Infrastructure::set_state(CloudElement& e, ElementState next)
{
    if (!transition_allowed(e.state, next))
        throw InvariantBreach("illegal element transition " + std::string(to_string(e.state)) + " -> " +
                              std::string(to_string(next)) + " for " + to_string(e.id));
    e.state = next;
    if (next == ElementState::Running)
        e.throttle_factor = 1.0;
    kernel_.log("element/" + to_string(e.id), "element_state", element_fields(e));
}

ElementId Infrastructure::create_element(NodeId node_id, CloudletId cloudlet, EngineKind engine,
                                         const ResourceVector& allocation, bool persistent,
                                         std::optional<ElementId> preassigned)
{
    Node& n = node(node_id);
    if (!n.up())
        throw Error(ErrorCode::NodeDown, "cannot create element on " + to_string(node_id));
    if (!allocation.non_negative() || !allocation.any_positive())
        throw Error(ErrorCode::InvalidArgument, "allocation must be non-negative and non-zero");
    if (!fits_within(allocation, free_headroom(node_id)))
        throw Error(ErrorCode::InsufficientHeadroom, "allocation exceeds headroom of " + to_string(node_id));
    const ElementId id = preassigned ? *preassigned : reserve_element_id();
    if (elements_.count(id))
        throw Error(ErrorCode::InvalidArgument, "element id already in use: " + to_string(id));
    CloudElement e;
    e.id = id;
    e.node = node_id;
    e.cloudlet = cloudlet;
    e.engine = engine;
    e.allocation = allocation;
    e.state = ElementState::Deploying;
    e.persistent = persistent;
    auto& stored = elements_.emplace(id, e).first->second;
    n.hosted().insert(id);
    kernel_.log("element/" + to_string(id), "element_state", element_fields(stored));
    schedule_running(stored);
    reassess(node_id);
    return id;
}

void Infrastructure::schedule_running(CloudElement& e)
{
    const ElementId id = e.id;
    const std::uint64_t inc = ++incarnation_[id];
    kernel_.schedule(
        "element/" + to_string(id),
        [this, id, inc] {
            if (incarnation_[id] != inc)
                return;
            CloudElement& el = mutable_element(id);
            if (el.state != ElementState::Deploying)
                return;
            set_state(el, ElementState::Running);
            if (observer_)
                observer_->element_running(el);
        },
        config_.deploy_latency_ms);
}

void Infrastructure::destroy_element(NodeId node_id, ElementId id)
{
    auto it = elements_.find(id);
    if (it == elements_.end() || it->second.node != node_id || it->second.state == ElementState::Dead)
        throw Error(ErrorCode::UnknownElement, to_string(id) + " on " + to_string(node_id));
    if (it->second.state == ElementState::Evicting)
        return;
    begin_shutdown(it->second);
}

void Infrastructure::begin_shutdown(CloudElement& e)
{
    set_state(e, ElementState::Evicting);
    if (observer_)
        observer_->element_stopping(e);
    const ElementId id = e.id;
    const std::uint64_t inc = ++incarnation_[id];
    kernel_.schedule(
        "element/" + to_string(id),
        [this, id, inc] {
            if (incarnation_[id] != inc)
                return;
            CloudElement& el = mutable_element(id);
            if (el.state != ElementState::Evicting)
                return;
            set_state(el, ElementState::Dead);
            el.crashed = false;
            node(el.node).hosted().erase(id);
            if (observer_)
                observer_->element_dead(el);
            reassess(el.node);
        },
        config_.shutdown_latency_ms);
}

std::vector<EnforcementCandidate> Infrastructure::candidates(NodeId id) const
{
    std::vector<EnforcementCandidate> out;
    for (ElementId eid : node(id).hosted()) {
        const CloudElement& e = element(eid);
        if (!e.alive() || e.state == ElementState::Evicting)
            continue;
        out.push_back({e.id, e.allocation, e.throttle_factor, e.serving()});
    }
    return out;
}

std::vector<ControlAction> Infrastructure::enforce_intrusiveness(NodeId id, VirtualTime t)
{
    Node& n = node(id);
    if (!n.up())
        throw Error(ErrorCode::NodeDown, "enforce on " + to_string(id));
    NodeRuntime& rt = runtime_[id.value];
    if (!rt.violating || t - rt.violation_since <= config_.intrusiveness.grace_ms)
        return {};
    const auto cands = candidates(id);
    auto actions = plan_enforcement(n.headroom(), cands, config_.intrusiveness);
    for (const auto& a : actions) {
        CloudElement& e = mutable_element(a.element);
        kernel_.log(node_component(id), "enforcement",
                    {{"node", id.value},
                     {"action", to_string(a.kind)},
                     {"element", a.element.value},
                     {"throttle_factor", a.throttle_factor}});
        if (a.kind == ControlAction::Kind::Evict) {
            begin_shutdown(e);
        } else {
            e.throttle_factor = a.throttle_factor;
            if (e.state == ElementState::Running)
                set_state(e, ElementState::Throttled);
            if (observer_)
                observer_->element_throttle_changed(e);
        }
    }
    reassess(id);
    return actions;
}

NodeReport Infrastructure::publish_node_report(NodeId id, VirtualTime t)
{
    const Node& n = node(id);
    if (!n.up())
        throw Error(ErrorCode::NodeDown, "no report from " + to_string(id));
    NodeReport r;
    r.node = id;
    r.at = t;
    r.headroom = n.headroom();
    r.user_demand = n.user_demand();
    for (ElementId eid : n.hosted()) {
        const CloudElement& e = element(eid);
        if (!e.alive())
            continue;
        r.element_usage[eid] = e.usage();
        r.throttle_factors[eid] = e.throttle_factor;
    }
    r.violation = runtime_[id.value].violating;
    if (observer_)
        observer_->node_report(r);
    return r;
}

void Infrastructure::schedule_report(NodeId id)
{
    if (config_.report_interval_ms <= 0)
        return;
    runtime_[id.value].report_event = kernel_.schedule(
        node_component(id),
        [this, id] {
            if (node(id).up())
                publish_node_report(id, kernel_.now());
            schedule_report(id);
        },
        config_.report_interval_ms);
}

void Infrastructure::schedule_churn(NodeId id)
{
    Node& n = node(id);
    auto next = n.next_churn_transition(kernel_.stream("churn/" + to_string(id)), kernel_.now());
    if (!next)
        return;
    const Liveness target = next->next;
    runtime_[id.value].churn_event =
        kernel_.schedule_at(node_component(id), [this, id, target] { apply_churn(id, target); }, next->at);
}

void Infrastructure::apply_churn(NodeId id, Liveness next)
{
    runtime_[id.value].churn_event.reset();
    if (next == Liveness::Down)
        go_down(id);
    else
        go_up(id);
    schedule_churn(id);
}

void Infrastructure::crash_node(NodeId id, std::optional<VirtualTime> down_for)
{
    NodeRuntime& rt = runtime_[id.value];
    if (rt.churn_event) {
        kernel_.cancel(*rt.churn_event);
        rt.churn_event.reset();
    }
    if (!node(id).up())
        return;
    go_down(id);
    if (down_for) {
        kernel_.schedule(node_component(id), [this, id] { recover_node(id); }, *down_for);
    }
}

void Infrastructure::recover_node(NodeId id)
{
    if (node(id).up())
        return;
    go_up(id);
    NodeRuntime& rt = runtime_[id.value];
    if (!rt.churn_event)
        schedule_churn(id);
}

void Infrastructure::go_down(NodeId id)
{
    Node& n = node(id);
    if (!n.up())
        return;
    n.set_liveness(Liveness::Down);
    NodeRuntime& rt = runtime_[id.value];
    rt.history.emplace_back(kernel_.now(), Liveness::Down);
    kernel_.log(node_component(id), "node_down", {{"node", id.value}});
    std::vector<ElementId> hosted(n.hosted().begin(), n.hosted().end());
    for (ElementId eid : hosted) {
        CloudElement& e = mutable_element(eid);
        if (!e.alive())
            continue;
        const bool restartable = e.persistent && e.state != ElementState::Evicting;
        ++incarnation_[eid];
        set_state(e, ElementState::Dead);
        e.crashed = restartable;
        if (!restartable)
            n.hosted().erase(eid);
        if (observer_)
            observer_->element_crashed(e);
    }
    if (rt.violating) {
        rt.violating = false;
        kernel_.log(node_component(id), "violation_end", {{"node", id.value}});
    }
    if (rt.enforcement_check) {
        kernel_.cancel(*rt.enforcement_check);
        rt.enforcement_check.reset();
    }
    if (observer_)
        observer_->node_liveness_changed(n);
}

void Infrastructure::go_up(NodeId id)
{
    Node& n = node(id);
    if (n.up())
        return;
    n.set_liveness(Liveness::Up);
    runtime_[id.value].history.emplace_back(kernel_.now(), Liveness::Up);
    kernel_.log(node_component(id), "node_up", {{"node", id.value}});
    n.advance_user_load(kernel_.now(), kernel_.stream("load/" + to_string(id)));
    std::vector<ElementId> hosted(n.hosted().begin(), n.hosted().end());
    for (ElementId eid : hosted) {
        CloudElement& e = mutable_element(eid);
        if (e.alive() || !e.crashed)
            continue;
        e.crashed = false;
        if (!fits_within(e.allocation, free_headroom(id))) {
            n.hosted().erase(eid);
            kernel_.log("element/" + to_string(eid), "restart_skipped", element_fields(e));
            continue;
        }
        e.throttle_factor = 1.0;
        set_state(e, ElementState::Deploying);
        schedule_running(e);
    }
    if (observer_)
        observer_->node_liveness_changed(n);
    reassess(id);
}

void Infrastructure::schedule_user_load(NodeId id)
{
    Node& n = node(id);
    auto& stream = kernel_.stream("load/" + to_string(id));
    const ResourceVector before = n.user_demand();
    const ResourceVector demand = n.advance_user_load(kernel_.now(), stream);
    if (!(demand == before) || kernel_.now() == 0)
        kernel_.log(node_component(id), "user_demand", {{"node", id.value}, {"demand", demand}});
    if (n.up())
        reassess(id);
    auto next = n.next_user_load_change();
    if (!next || *next <= kernel_.now())
        return;
    runtime_[id.value].load_event =
        kernel_.schedule_at(node_component(id), [this, id] { schedule_user_load(id); }, *next);
}

void Infrastructure::reassess(NodeId id)
{
    Node& n = node(id);
    NodeRuntime& rt = runtime_[id.value];
    if (!n.up())
        return;
    const ResourceVector headroom = n.headroom();
    const bool over = !fits_within(usage(id), headroom);
    if (over && !rt.violating) {
        rt.violating = true;
        rt.violation_since = kernel_.now();
        kernel_.log(node_component(id), "violation_start", {{"node", id.value}});
        if (config_.intrusiveness.enabled) {
            rt.enforcement_check = kernel_.schedule(
                node_component(id),
                [this, id] {
                    runtime_[id.value].enforcement_check.reset();
                    if (node(id).up())
                        enforce_intrusiveness(id, kernel_.now());
                },
                config_.intrusiveness.grace_ms + 1);
        }
    } else if (over && config_.intrusiveness.enabled && !rt.enforcement_check &&
               kernel_.now() - rt.violation_since > config_.intrusiveness.grace_ms) {
        // Grace already spent on this violation; demand grew again, act now.
        const auto cands = candidates(id);
        if (!plan_enforcement(headroom, cands, config_.intrusiveness).empty())
            enforce_intrusiveness(id, kernel_.now());
    } else if (!over && rt.violating) {
        rt.violating = false;
        kernel_.log(node_component(id), "violation_end", {{"node", id.value}});
        if (rt.enforcement_check) {
            kernel_.cancel(*rt.enforcement_check);
            rt.enforcement_check.reset();
        }
    }
    if (!over) {
        const auto cands = candidates(id);
        for (const auto& a : plan_relaxation(headroom, cands)) {
            CloudElement& e = mutable_element(a.element);
            e.throttle_factor = a.throttle_factor;
            kernel_.log(node_component(id), "enforcement",
                        {{"node", id.value},
                         {"action", to_string(a.kind)},
                         {"element", a.element.value},
                         {"throttle_factor", a.throttle_factor}});
            if (a.throttle_factor >= 1.0 && e.state == ElementState::Throttled)
                set_state(e, ElementState::Running);
            if (observer_)
                observer_->element_throttle_changed(e);
        }
    }
}

} // namespace adhoc
