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

#include "adhoc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace adhoc {
namespace {

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

VirtualTime to_ms(double x)
{
    return static_cast<VirtualTime>(std::llround(std::max(0.0, x)));
}

nlohmann::json ids_json(const std::vector<ElementId>& ids)
{
    nlohmann::json out = nlohmann::json::array();
    for (ElementId e : ids)
        out.push_back(e.value);
    return out;
}

InfrastructureConfig infra_config(const Settings& s)
{
    InfrastructureConfig c;
    c.deploy_latency_ms = s.deploy_latency_ms;
    c.shutdown_latency_ms = s.shutdown_latency_ms;
    c.report_interval_ms = s.report_interval_ms;
    c.intrusiveness = s.intrusiveness;
    return c;
}

std::string_view action_kind(const PlanAction& a)
{
    switch (a.index()) {
    case 1: return "add_element";
    case 2: return "remove_element";
    case 3: return "rereplicate";
    default: return "noop";
    }
}

} // namespace

struct Simulation::CloudletRuntime {
    CloudletRuntime(CloudletId id, const CloudletSpec& s)
        : spec(s), cloudlet(id, s.id, s.engine, s.policy)
    {
    }

    CloudletSpec spec;
    Cloudlet cloudlet;
    std::map<std::string, std::uint64_t> acked;
    std::map<std::string, double> bytes;
    std::set<std::string> deficient;
    std::map<std::string, ElementId> copying;
    std::set<VirtualTime> detection_checks;
    std::uint64_t arrivals_this_epoch = 0;
    std::map<ElementId, VirtualTime> busy_at_epoch;
    VirtualTime epoch_started = 0;
    double work_rate_sum = 0.0;
    double work_weighted_sum = 0.0;
};

class Simulation::Executor : public PlanExecutor {
public:
    explicit Executor(Simulation& sim) : sim_(sim) {}

    bool execute(const PlanAction& action) override
    {
        return std::visit([this](const auto& a) { return run(a); }, action);
    }

private:
    bool run(const NoOp&) { return true; }

    bool run(const AddElement& a)
    {
        auto& rt = sim_.runtime(a.cloudlet);
        try {
            sim_.infra_.create_element(a.node, a.cloudlet, rt.spec.engine, a.allocation, rt.spec.persistent);
        } catch (const Error&) {
            return false;
        }
        if (!fits_within(sim_.infra_.usage(a.node), sim_.infra_.node(a.node).headroom()))
            throw InvariantBreach("allocation exceeds headroom on " + to_string(a.node) + " after deploy");
        return true;
    }

    bool run(const RemoveElement& a)
    {
        const CloudElement* e = sim_.infra_.find_element(a.element);
        if (e == nullptr || !e->alive() || e->state == ElementState::Evicting)
            return false;
        try {
            sim_.infra_.destroy_element(e->node, a.element);
        } catch (const Error&) {
            return false;
        }
        return true;
    }

    bool run(const Rereplicate& r)
    {
        auto& rt = sim_.runtime(r.cloudlet);
        if (!rt.cloudlet.replica_map().count(r.key) || rt.copying.count(r.key))
            return false;
        if (!sim_.reachable(r.target) || !rt.cloudlet.view().contains(r.target))
            return false;
        sim_.start_copy(r);
        return true;
    }

    Simulation& sim_;
};

Simulation::Simulation(Scenario scenario, std::optional<std::uint64_t> seed)
    : scenario_(std::move(scenario)),
      kernel_(seed.value_or(scenario_.run.seed)),
      infra_(kernel_, infra_config(scenario_.settings)),
      broker_(BrokerConfig{scenario_.settings.exhaustive_threshold})
{
    if (auto problems = validate_scenario(scenario_); !problems.empty())
        throw ValidationError(std::move(problems));
    if (seed)
        scenario_.run.seed = *seed;
    build();
}

Simulation::~Simulation() = default;

void Simulation::build()
{
    ComputeEngine::Hooks hooks;
    hooks.effective_cpu = [this](ElementId e) {
        const CloudElement* el = infra_.find_element(e);
        return el ? el->effective_cpu() : 0.0;
    };
    hooks.completed = [this](const Task& t, const TaskCompletion& c) {
        kernel_.log("compute", "task_completed",
                    {{"task", t.id},
                     {"element", c.element.value},
                     {"cloudlet", infra_.element(c.element).cloudlet.value},
                     {"latency", c.finish - t.arrival}});
    };
    hooks.lost = [this](const Task& t, ElementId failed) {
        kernel_.log("compute", "task_lost", {{"task", t.id}, {"element", failed.value}});
    };
    hooks.reroute = [this](const Task&, ElementId failed) -> std::optional<ElementId> {
        try {
            return route(infra_.element(failed).cloudlet, std::nullopt, failed);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    hooks.retried = [this](const Task& t, ElementId from, ElementId to) {
        kernel_.log("compute", "task_retried", {{"task", t.id}, {"from", from.value}, {"to", to.value}});
    };
    compute_ = std::make_unique<ComputeEngine>(kernel_, std::move(hooks));

    infra_.set_observer(this);
    for (const auto& n : scenario_.fleet) {
        const ResourceVector margin = n.margin.value_or(n.capacity * scenario_.settings.margin_fraction);
        infra_.add_node(n.id, n.capacity, margin, n.churn, n.user_load);
    }
    for (std::size_t i = 0; i < scenario_.cloudlets.size(); ++i) {
        const CloudletId id{static_cast<std::uint32_t>(i)};
        cloudlets_.push_back(std::make_unique<CloudletRuntime>(id, scenario_.cloudlets[i]));
    }
    for (const auto& w : scenario_.task_workloads) {
        auto& rt = runtime(cloudlet_id(w.cloudlet));
        rt.work_rate_sum += w.rate_per_s;
        rt.work_weighted_sum += w.rate_per_s * mean_of(w.work_units) * 1000.0;
    }

    kernel_.log("sim", "run_start", {{"seed", kernel_.seed()}, {"until", scenario_.run.until}});
    for (const auto& rt : cloudlets_)
        kernel_.log("cloudlet/" + rt->spec.id, "cloudlet_created",
                    {{"cloudlet", rt->cloudlet.id().value},
                     {"name", rt->spec.id},
                     {"engine", to_string(rt->spec.engine)}});
    infra_.start();
    kernel_.schedule_at("sim", [this] { place_initial_elements(); }, 0);
    schedule_workloads();
    schedule_reservations();
    schedule_faults();
    schedule_epochs();
}

Simulation::CloudletRuntime& Simulation::runtime(CloudletId c)
{
    if (c.value >= cloudlets_.size())
        throw Error(ErrorCode::UnknownCloudlet, to_string(c));
    return *cloudlets_[c.value];
}

const Simulation::CloudletRuntime& Simulation::runtime(CloudletId c) const
{
    if (c.value >= cloudlets_.size())
        throw Error(ErrorCode::UnknownCloudlet, to_string(c));
    return *cloudlets_[c.value];
}

NodeId Simulation::node_id(const std::string& name) const
{
    auto idx = scenario_.node_index(name);
    if (!idx)
        throw Error(ErrorCode::InvalidArgument, "unknown node " + name);
    return NodeId{static_cast<std::uint32_t>(*idx)};
}

CloudletId Simulation::cloudlet_id(const std::string& name) const
{
    auto idx = scenario_.cloudlet_index(name);
    if (!idx)
        throw Error(ErrorCode::UnknownCloudlet, name);
    return CloudletId{static_cast<std::uint32_t>(*idx)};
}

Cloudlet& Simulation::cloudlet(CloudletId id)
{
    return runtime(id).cloudlet;
}

const Cloudlet& Simulation::cloudlet(CloudletId id) const
{
    return runtime(id).cloudlet;
}

std::vector<CloudletId> Simulation::cloudlet_ids() const
{
    std::vector<CloudletId> out;
    for (const auto& rt : cloudlets_)
        out.push_back(rt->cloudlet.id());
    return out;
}

bool Simulation::reachable(ElementId e) const
{
    const CloudElement* el = infra_.find_element(e);
    return el != nullptr && el->serving();
}

Reachable Simulation::reachable_fn() const
{
    return [this](ElementId e) { return reachable(e); };
}

const std::map<std::string, std::uint64_t>& Simulation::acked_versions(CloudletId c) const
{
    return runtime(c).acked;
}

std::optional<AgreementId> Simulation::agreement_for(const std::string& reservation_id) const
{
    auto it = agreements_by_request_.find(reservation_id);
    if (it == agreements_by_request_.end())
        return std::nullopt;
    return it->second;
}

VirtualTime Simulation::network_delay()
{
    return to_ms(kernel_.stream("net").draw(scenario_.settings.network_latency));
}

void Simulation::advance_to(VirtualTime t)
{
    if (finished_)
        throw Error(ErrorCode::InvalidArgument, "simulation already finished");
    kernel_.run_until(t);
}

void Simulation::run(std::optional<VirtualTime> until)
{
    const VirtualTime end = until.value_or(scenario_.run.until);
    advance_to(end);
    if (compute_->submitted() != compute_->completed() + compute_->lost() + compute_->in_flight())
        throw InvariantBreach("task conservation broken at t=" + std::to_string(end));
    kernel_.log("sim", "run_end", {{"until", end}});
    finished_ = true;
}

GoalReport Simulation::report() const
{
    return aggregate_metrics(log());
}

// ---- placement and scheduling ----

void Simulation::place_initial_elements()
{
    for (auto& rt : cloudlets_) {
        const CloudletId c = rt->cloudlet.id();
        std::vector<NodeId> targets;
        if (!rt->spec.placement.empty()) {
            for (const auto& name : rt->spec.placement)
                targets.push_back(node_id(name));
        } else {
            std::set<NodeId> used;
            for (const auto& [id, e] : infra_.elements())
                if (e.cloudlet == c && e.alive())
                    used.insert(e.node);
            std::vector<NodeId> order;
            for (const auto& n : infra_.nodes())
                if (n.up() && !used.count(n.id()) && fits_within(rt->spec.element_allocation, infra_.free_headroom(n.id())))
                    order.push_back(n.id());
            std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
                const double ha = infra_.free_headroom(a).cpu;
                const double hb = infra_.free_headroom(b).cpu;
                return ha != hb ? ha > hb : a < b;
            });
            order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(rt->spec.initial_elements)));
            targets = order;
        }
        for (NodeId n : targets) {
            try {
                infra_.create_element(n, c, rt->spec.engine, rt->spec.element_allocation, rt->spec.persistent);
            } catch (const Error& e) {
                kernel_.log("cloudlet/" + rt->spec.id, "placement_failed",
                            {{"cloudlet", c.value}, {"node", n.value}, {"error", to_string(e.code())}});
            }
        }
        if (targets.size() < static_cast<std::size_t>(rt->spec.initial_elements))
            kernel_.log("cloudlet/" + rt->spec.id, "placement_short",
                        {{"cloudlet", c.value},
                         {"wanted", rt->spec.initial_elements},
                         {"placed", targets.size()}});
    }
    for (const auto& n : infra_.nodes())
        if (n.up())
            infra_.publish_node_report(n.id(), kernel_.now());
}

void Simulation::schedule_workloads()
{
    for (std::size_t i = 0; i < scenario_.task_workloads.size(); ++i) {
        const auto& w = scenario_.task_workloads[i];
        const double mean = 1000.0 / w.rate_per_s;
        const VirtualTime first =
            w.arrivals == TaskWorkload::Arrivals::Poisson
                ? to_ms(kernel_.stream("workload/tasks/" + std::to_string(i)).draw(Exponential{mean}))
                : to_ms(mean);
        kernel_.schedule_at("workload/tasks/" + std::to_string(i), [this, i] { next_task_arrival(i); },
                            w.start + first);
    }
    for (std::size_t i = 0; i < scenario_.kv_workloads.size(); ++i) {
        const auto& w = scenario_.kv_workloads[i];
        const VirtualTime first =
            to_ms(kernel_.stream("workload/kv/" + std::to_string(i)).draw(Exponential{1000.0 / w.rate_per_s}));
        kernel_.schedule_at("workload/kv/" + std::to_string(i), [this, i] { next_kv_op(i); }, w.start + first);
    }
}

void Simulation::schedule_reservations()
{
    for (std::size_t i = 0; i < scenario_.reservations.size(); ++i)
        kernel_.schedule_at("broker", [this, i] { negotiate(i); }, scenario_.reservations[i].submit_at);
}

void Simulation::schedule_faults()
{
    for (const auto& f : scenario_.faults) {
        const NodeId n = node_id(f.node);
        const auto down_for = f.down_for;
        kernel_.schedule_at(
            "faults",
            [this, n, down_for] {
                kernel_.log("faults", "fault_injected",
                            {{"node", n.value}, {"down_for", down_for ? nlohmann::json(*down_for) : nlohmann::json()}});
                infra_.crash_node(n, down_for);
            },
            f.at);
    }
}

void Simulation::schedule_epochs()
{
    const auto& policy = scenario_.settings.adaptation;
    if (!policy.enabled)
        return;
    kernel_.schedule_at("controller", [this] { epoch(); }, policy.epoch_ms);
}

// ---- membership ----

void Simulation::send_heartbeat(ElementId e, std::uint64_t generation)
{
    if (elements_[e].heartbeat_generation != generation || !reachable(e))
        return;
    const CloudElement& el = infra_.element(e);
    const VirtualTime sent = kernel_.now();
    kernel_.schedule("element/" + to_string(e), [this, e, sent] { deliver_heartbeat(e, sent); }, network_delay());
    const VirtualTime h = runtime(el.cloudlet).spec.policy.heartbeat_interval_ms;
    kernel_.schedule("element/" + to_string(e), [this, e, generation] { send_heartbeat(e, generation); }, h);
}

void Simulation::deliver_heartbeat(ElementId e, VirtualTime sent_at)
{
    const CloudElement& el = infra_.element(e);
    auto& rt = runtime(el.cloudlet);
    Cloudlet& cl = rt.cloudlet;
    if (!cl.view().contains(e)) {
        if (!reachable(e))
            return;
        cl.join(el, kernel_.now());
        kernel_.log("cloudlet/" + rt.spec.id, "member_joined",
                    {{"cloudlet", cl.id().value}, {"element", e.value}, {"view", cl.view().version}});
        membership_changed(cl.id());
    }
    cl.record_heartbeat(e, sent_at);
    schedule_detection(cl.id(), sent_at + rt.spec.policy.failure_timeout_ms() + 1);
}

void Simulation::schedule_detection(CloudletId c, VirtualTime at)
{
    auto& rt = runtime(c);
    if (!rt.detection_checks.insert(at).second)
        return;
    kernel_.schedule_at(
        "cloudlet/" + rt.spec.id,
        [this, c, at] {
            runtime(c).detection_checks.erase(at);
            detect(c);
        },
        std::max(at, kernel_.now()));
}

void Simulation::detect(CloudletId c)
{
    auto& rt = runtime(c);
    const auto suspected = rt.cloudlet.detect_failures(kernel_.now());
    if (suspected.empty())
        return;
    for (ElementId e : suspected)
        kernel_.log("cloudlet/" + rt.spec.id, "member_suspected",
                    {{"cloudlet", c.value}, {"element", e.value}, {"view", rt.cloudlet.view().version}});
    membership_changed(c);
}

void Simulation::membership_changed(CloudletId c)
{
    auto& rt = runtime(c);
    rt.cloudlet.refresh_metadata_holders(reachable_fn());
    check_replicas(c);
}

void Simulation::check_replicas(CloudletId c)
{
    auto& rt = runtime(c);
    if (rt.spec.engine != EngineKind::KvStore)
        return;
    const auto k = static_cast<std::size_t>(rt.spec.policy.target_replication);
    const auto reach = reachable_fn();
    for (const auto& [key, entry] : rt.cloudlet.replica_map()) {
        std::size_t live = 0;
        for (ElementId r : kv_.live_replicas(rt.cloudlet, key, reach))
            if (rt.cloudlet.view().contains(r))
                ++live;
        const bool short_now = live < k;
        const bool was_short = rt.deficient.count(key) != 0;
        if (short_now && !was_short) {
            rt.deficient.insert(key);
            kernel_.log("cloudlet/" + rt.spec.id, "replica_deficit",
                        {{"cloudlet", c.value}, {"key", key}, {"live", live}});
        } else if (!short_now && was_short) {
            rt.deficient.erase(key);
            kernel_.log("cloudlet/" + rt.spec.id, "replica_restored",
                        {{"cloudlet", c.value}, {"key", key}, {"live", live}});
        }
    }
}

// ---- infrastructure callbacks ----

void Simulation::element_running(const CloudElement& e)
{
    auto& rt = runtime(e.cloudlet);
    const std::uint64_t gen = ++elements_[e.id].heartbeat_generation;
    if (e.engine == EngineKind::KvStore) {
        if (const auto* s = kv_.find_store(e.id); s && !s->synced)
            kv_.resync(rt.cloudlet, e.id, reachable_fn());
    }
    if (rt.cloudlet.view().contains(e.id)) {
        rt.cloudlet.update_member_state(e.id, e.state);
    } else {
        rt.cloudlet.join(e, kernel_.now());
        kernel_.log("cloudlet/" + rt.spec.id, "member_joined",
                    {{"cloudlet", e.cloudlet.value}, {"element", e.id.value}, {"view", rt.cloudlet.view().version}});
        schedule_detection(e.cloudlet, kernel_.now() + rt.spec.policy.failure_timeout_ms() + 1);
    }
    membership_changed(e.cloudlet);
    send_heartbeat(e.id, gen);
}

void Simulation::element_stopping(const CloudElement& e)
{
    ++elements_[e.id].heartbeat_generation;
    auto& rt = runtime(e.cloudlet);
    if (rt.cloudlet.leave(e.id)) {
        kernel_.log("cloudlet/" + rt.spec.id, "member_left",
                    {{"cloudlet", e.cloudlet.value}, {"element", e.id.value}, {"view", rt.cloudlet.view().version}});
        membership_changed(e.cloudlet);
    }
    if (e.engine == EngineKind::Compute)
        compute_->element_failed(e.id);
}

void Simulation::element_crashed(const CloudElement& e)
{
    ++elements_[e.id].heartbeat_generation;
    if (e.engine == EngineKind::KvStore) {
        if (e.crashed)
            kv_.store(e.id).synced = false;
        else
            kv_.drop_store(e.id);
        check_replicas(e.cloudlet);
    } else {
        compute_->element_failed(e.id);
    }
}

void Simulation::element_dead(const CloudElement& e)
{
    if (e.engine == EngineKind::KvStore)
        kv_.drop_store(e.id);
    for (const auto& [aid, elems] : agreement_elements_) {
        const auto* ag = broker_.find(aid);
        if (ag == nullptr || ag->state != AgreementState::Active)
            continue;
        for (std::size_t slot = 0; slot < elems.size(); ++slot) {
            if (elems[slot] != e.id)
                continue;
            const AgreementId id = aid;
            kernel_.schedule("broker", [this, id, slot] { deploy_reserved(id, slot); },
                             scenario_.settings.report_interval_ms);
        }
    }
}

void Simulation::element_throttle_changed(const CloudElement& e)
{
    runtime(e.cloudlet).cloudlet.update_member_state(e.id, e.state);
    if (e.engine == EngineKind::Compute)
        compute_->rate_changed(e.id);
}

void Simulation::node_report(const NodeReport& r)
{
    kernel_.schedule("controller", [this, r] { reports_[r.node] = r; }, network_delay());
}

// ---- reservations ----

void Simulation::negotiate(std::size_t index)
{
    const auto& spec = scenario_.reservations[index];
    ReservationRequest req;
    req.request_id = spec.id;
    req.cloudlet = cloudlet_id(spec.cloudlet);
    req.demand = spec.demand;
    req.element_count = spec.element_count;
    req.window = spec.window;
    req.availability_target = spec.availability_target;

    std::vector<ForecastInputs> inputs;
    for (const auto& n : infra_.nodes())
        inputs.push_back({&n, infra_.liveness_history(n.id())});
    const auto forecast = forecast_capacity(inputs, spec.window, scenario_.settings.forecast_mode, kernel_.now(),
                                            scenario_.settings.history_window_ms);
    const auto result = broker_.negotiate(req, forecast);
    if (const auto* rej = std::get_if<Rejection>(&result)) {
        kernel_.log("broker", "agreement_rejected",
                    {{"request", spec.id},
                     {"reason", to_string(rej->reason)},
                     {"best_availability", rej->best_availability}});
        return;
    }
    const Agreement& ag = std::get<Agreement>(result);
    std::vector<ElementId> elems;
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t slot = 0; slot < ag.reserved.size(); ++slot) {
        const ElementId e = infra_.reserve_element_id();
        broker_.assign_element(ag.id, slot, e);
        elems.push_back(e);
        nodes.push_back(ag.reserved[slot].node.value);
    }
    agreements_by_request_[spec.id] = ag.id;
    agreement_elements_[ag.id] = elems;
    kernel_.log("broker", "agreement_admitted",
                {{"agreement", ag.id.value},
                 {"request", spec.id},
                 {"cloudlet", req.cloudlet.value},
                 {"start", spec.window.start},
                 {"end", spec.window.end},
                 {"elements", ids_json(elems)},
                 {"nodes", nodes},
                 {"predicted_availability", ag.predicted_availability}});
    const VirtualTime deploy_at =
        std::max(kernel_.now(), spec.window.start - scenario_.settings.deploy_latency_ms);
    const AgreementId id = ag.id;
    for (std::size_t slot = 0; slot < elems.size(); ++slot)
        kernel_.schedule_at("broker", [this, id, slot] { deploy_reserved(id, slot); }, deploy_at);
    kernel_.schedule_at("broker", [this, id] { close_agreement(id); }, spec.window.end);
}

void Simulation::deploy_reserved(AgreementId id, std::size_t slot)
{
    const Agreement* ag = broker_.find(id);
    if (ag == nullptr || ag->state != AgreementState::Active || kernel_.now() >= ag->request.window.end)
        return;
    ElementId e = agreement_elements_[id][slot];
    if (const CloudElement* el = infra_.find_element(e)) {
        if (el->alive())
            return;
        e = infra_.reserve_element_id();
        broker_.assign_element(id, slot, e);
        agreement_elements_[id][slot] = e;
        kernel_.log("broker", "agreement_element", {{"agreement", id.value}, {"element", e.value}});
    }
    const NodeId node = ag->reserved[slot].node;
    const auto& spec = runtime(ag->request.cloudlet).spec;
    try {
        infra_.create_element(node, ag->request.cloudlet, spec.engine, ag->request.demand, spec.persistent, e);
    } catch (const Error& err) {
        kernel_.log("broker", "agreement_deploy_failed",
                    {{"agreement", id.value}, {"node", node.value}, {"error", to_string(err.code())}});
        kernel_.schedule("broker", [this, id, slot] { deploy_reserved(id, slot); },
                         scenario_.settings.report_interval_ms);
    }
}

void Simulation::close_agreement(AgreementId id)
{
    const Agreement* ag = broker_.find(id);
    if (ag == nullptr || ag->state != AgreementState::Active)
        return;
    broker_.expire(id);
    kernel_.log("broker", "agreement_expired", {{"agreement", id.value}});
    for (ElementId e : agreement_elements_[id]) {
        const CloudElement* el = infra_.find_element(e);
        if (el && el->alive() && el->state != ElementState::Evicting)
            infra_.destroy_element(el->node, e);
    }
}

// ---- client operations ----

ElementId Simulation::route(CloudletId c, const std::optional<AgreementId>& agreement, std::optional<ElementId> exclude)
{
    const auto& rt = runtime(c);
    std::vector<RouteCandidate> live;
    for (const auto& [id, m] : rt.cloudlet.view().members) {
        if ((exclude && id == *exclude) || !reachable(id))
            continue;
        live.push_back({id, infra_.free_headroom(m.node).cpu});
    }
    if (live.empty())
        throw Error(ErrorCode::NoLiveElement, "no live element in " + rt.spec.id);
    const auto decision = dispatch(ServiceRequest{c, agreement}, broker_, live);
    if (decision.unknown_agreement)
        kernel_.log("dispatcher", "dispatch_fallback",
                    {{"cloudlet", c.value}, {"agreement", agreement ? agreement->value : 0}});
    return decision.element;
}

ElementId Simulation::submit_task(CloudletId c, double work_units, std::optional<AgreementId> agreement)
{
    auto& rt = runtime(c);
    if (rt.spec.engine != EngineKind::Compute)
        throw Error(ErrorCode::EngineMismatch, "task submitted to kv cloudlet " + rt.spec.id);
    ++rt.arrivals_this_epoch;
    const ElementId e = route(c, agreement, std::nullopt);
    Task t;
    t.id = next_task_++;
    t.work_units = work_units;
    t.arrival = kernel_.now();
    compute_->submit(e, t);
    return e;
}

std::uint64_t Simulation::put(CloudletId c, const std::string& key, std::string value, double bytes)
{
    auto& rt = runtime(c);
    const bool existed = rt.cloudlet.replica_map().count(key) != 0;
    auto placement = [this, &rt](const std::string& k, int count) {
        std::vector<ElementId> members;
        for (const auto& [id, m] : rt.cloudlet.view().members)
            if (reachable(id))
                members.push_back(id);
        std::vector<ElementId> out;
        if (members.empty())
            return out;
        const std::size_t start = fnv1a(k) % members.size();
        for (std::size_t i = 0; i < members.size() && out.size() < static_cast<std::size_t>(count); ++i)
            out.push_back(members[(start + i) % members.size()]);
        return out;
    };
    const std::uint64_t v = kv_.put(rt.cloudlet, key, std::move(value), reachable_fn(), placement);
    rt.acked[key] = std::max(rt.acked[key], v);
    rt.bytes[key] = bytes;
    if (!existed)
        check_replicas(c);
    return v;
}

VersionedValue Simulation::get(CloudletId c, const std::string& key)
{
    auto& rt = runtime(c);
    return kv_.get(rt.cloudlet, key, reachable_fn());
}

Binding Simulation::bind(CloudletId c, const std::string& client, const std::optional<std::string>& key)
{
    return runtime(c).cloudlet.bind(client, key);
}

// ---- workloads ----

void Simulation::next_task_arrival(std::size_t i)
{
    const auto& w = scenario_.task_workloads[i];
    if (w.stop && kernel_.now() >= *w.stop)
        return;
    auto& stream = kernel_.stream("workload/tasks/" + std::to_string(i));
    const double work = std::max(1e-3, stream.draw(w.work_units));
    const CloudletId c = cloudlet_id(w.cloudlet);
    std::optional<AgreementId> agreement;
    if (w.reservation) {
        agreement = agreement_for(*w.reservation);
        if (!agreement)
            agreement = AgreementId{0};
    }
    try {
        submit_task(c, work, agreement);
    } catch (const Error& e) {
        kernel_.log("compute", "task_rejected", {{"cloudlet", c.value}, {"error", to_string(e.code())}});
    }
    const double mean = 1000.0 / w.rate_per_s;
    const VirtualTime gap = w.arrivals == TaskWorkload::Arrivals::Poisson ? to_ms(stream.draw(Exponential{mean}))
                                                                          : std::max<VirtualTime>(1, to_ms(mean));
    kernel_.schedule("workload/tasks/" + std::to_string(i), [this, i] { next_task_arrival(i); }, gap);
}

void Simulation::next_kv_op(std::size_t i)
{
    const auto& w = scenario_.kv_workloads[i];
    if (w.stop && kernel_.now() >= *w.stop)
        return;
    auto& stream = kernel_.stream("workload/kv/" + std::to_string(i));
    const bool is_put = stream.uniform01() < w.put_ratio;
    const std::string key = "k" + std::to_string(stream.below(static_cast<std::uint64_t>(w.key_space)));
    const CloudletId c = cloudlet_id(w.cloudlet);
    const std::string component = "workload/kv/" + std::to_string(i);
    if (is_put) {
        try {
            const auto v = put(c, key, "v" + std::to_string(++kv_values_), w.value_bytes);
            kernel_.log(component, "kv_put", {{"cloudlet", c.value}, {"key", key}, {"version", v}, {"acked", true}});
        } catch (const Error& e) {
            kernel_.log(component, "kv_put",
                        {{"cloudlet", c.value}, {"key", key}, {"acked", false}, {"error", to_string(e.code())}});
        }
    } else {
        try {
            const auto v = get(c, key);
            const auto& acked = runtime(c).acked;
            auto it = acked.find(key);
            const bool stale = it != acked.end() && v.version < it->second;
            kernel_.log(component, "kv_get",
                        {{"cloudlet", c.value}, {"key", key}, {"version", v.version}, {"ok", true}, {"stale", stale}});
        } catch (const Error& e) {
            kernel_.log(component, "kv_get",
                        {{"cloudlet", c.value}, {"key", key}, {"ok", false}, {"error", to_string(e.code())}});
        }
    }
    kernel_.schedule(component, [this, i] { next_kv_op(i); },
                     to_ms(stream.draw(Exponential{1000.0 / w.rate_per_s})));
}

// ---- adaptation ----

CloudStateSnapshot Simulation::snapshot() const
{
    CloudStateSnapshot snap;
    snap.at = kernel_.now();
    const auto& settings = scenario_.settings;
    std::map<NodeId, ResourceVector> pending;
    for (const auto& [id, e] : infra_.elements()) {
        if (e.state != ElementState::Deploying)
            continue;
        auto r = reports_.find(e.node);
        if (r == reports_.end() || !r->second.element_usage.count(id))
            pending[e.node] += e.usage();
    }
    for (const auto& n : infra_.nodes()) {
        NodeSnapshot ns;
        ns.node = n.id();
        auto r = reports_.find(n.id());
        ns.available = r != reports_.end() && snap.at - r->second.at <= 2 * settings.report_interval_ms;
        if (r != reports_.end()) {
            ns.headroom = r->second.headroom;
            ns.usage = r->second.total_usage() + pending[n.id()];
        }
        if (settings.forecast_mode == ForecastMode::Oracle) {
            ns.availability = n.churn() ? n.churn()->stationary_availability() : 1.0;
        } else {
            const VirtualTime from =
                settings.history_window_ms > 0 ? std::max<VirtualTime>(0, snap.at - settings.history_window_ms) : 0;
            ns.availability = uptime_fraction(infra_.liveness_history(n.id()), from, snap.at);
        }
        snap.nodes.push_back(ns);
    }

    std::set<ElementId> reserved;
    for (const auto& [id, ag] : broker_.agreements()) {
        if (ag.state != AgreementState::Active)
            continue;
        AgreementSnapshot as{id, ag.request.cloudlet, {}};
        for (const auto& slot : ag.reserved) {
            as.reserved.push_back(slot.element);
            reserved.insert(slot.element);
        }
        if (snap.at >= ag.request.window.start)
            snap.agreements.push_back(as);
    }

    for (const auto& rtp : cloudlets_) {
        const auto& rt = *rtp;
        const Cloudlet& cl = rt.cloudlet;
        CloudletSnapshot cs;
        cs.id = cl.id();
        cs.engine = cl.engine();
        cs.policy = cl.policy();
        cs.element_allocation = rt.spec.element_allocation;
        const auto& holders = cl.metadata_holders();
        auto add_member = [&](ElementId id, NodeId node, ElementState state) {
            const CloudElement& e = infra_.element(id);
            MemberSnapshot m;
            m.element = id;
            m.node = node;
            m.state = state;
            m.allocation = e.allocation;
            m.throttle_factor = e.throttle_factor;
            m.reserved = reserved.count(id) != 0;
            m.metadata_holder = std::find(holders.begin(), holders.end(), id) != holders.end();
            cs.members.push_back(m);
        };
        for (const auto& [id, m] : cl.view().members)
            add_member(id, m.node, m.state);
        for (const auto& [id, e] : infra_.elements())
            if (e.cloudlet == cl.id() && e.state == ElementState::Deploying && !cl.view().contains(id))
                add_member(id, e.node, e.state);
        for (const auto& [key, entry] : cl.replica_map()) {
            KeySnapshot ks;
            ks.key = key;
            ks.version = entry.version;
            for (ElementId r : entry.replicas)
                if (cl.view().contains(r))
                    ks.replicas.push_back(r);
            if (auto c = rt.copying.find(key); c != rt.copying.end())
                ks.replicas.push_back(c->second);
            auto b = rt.bytes.find(key);
            ks.bytes = b == rt.bytes.end() ? 0.0 : b->second;
            cs.keys.push_back(ks);
        }
        if (cl.engine() == EngineKind::Compute) {
            const VirtualTime span = snap.at - rt.epoch_started;
            VirtualTime busy = 0;
            std::size_t serving = 0;
            for (const auto& [id, m] : cl.view().members) {
                auto prev = rt.busy_at_epoch.find(id);
                busy += compute_->busy_ms(id) - (prev == rt.busy_at_epoch.end() ? 0 : prev->second);
                cs.queue_length += compute_->queue_length(id);
                ++serving;
            }
            if (span > 0 && serving > 0)
                cs.utilization = std::clamp(
                    static_cast<double>(busy) / (static_cast<double>(span) * static_cast<double>(serving)), 0.0, 1.0);
            if (span > 0)
                cs.arrival_rate = static_cast<double>(rt.arrivals_this_epoch) / static_cast<double>(span);
            if (rt.work_rate_sum > 0.0)
                cs.mean_work_cpu_ms = rt.work_weighted_sum / rt.work_rate_sum;
        }
        snap.cloudlets.push_back(std::move(cs));
    }
    return snap;
}

void Simulation::epoch()
{
    const auto& policy = scenario_.settings.adaptation;
    Executor executor(*this);
    const auto snap = snapshot();
    const auto outcome = adapt_step(snap, policy, scenario_.weights, executor);
    for (std::size_t i = 0; i < outcome.selected.actions.size(); ++i) {
        const auto& a = outcome.selected.actions[i];
        if (std::holds_alternative<NoOp>(a))
            continue;
        const bool executed = !std::holds_alternative<NoOp>(outcome.executed.actions[i]);
        kernel_.log("controller", "adaptation_action",
                    {{"action", action_kind(a)}, {"detail", describe(a)}, {"executed", executed}});
    }
    for (auto& rtp : cloudlets_) {
        rtp->arrivals_this_epoch = 0;
        rtp->epoch_started = kernel_.now();
        rtp->busy_at_epoch.clear();
        for (const auto& [id, m] : rtp->cloudlet.view().members)
            rtp->busy_at_epoch[id] = compute_->busy_ms(id);
    }
    kernel_.schedule("controller", [this] { epoch(); }, policy.epoch_ms);
}

void Simulation::start_copy(const Rereplicate& r)
{
    auto& rt = runtime(r.cloudlet);
    rt.copying[r.key] = r.target;
    const double bytes = rt.bytes.count(r.key) ? rt.bytes.at(r.key) : 0.0;
    const VirtualTime copy =
        static_cast<VirtualTime>(std::ceil(bytes / scenario_.settings.copy_bytes_per_ms)) + network_delay();
    const CloudletId c = r.cloudlet;
    const std::string key = r.key;
    const ElementId target = r.target;
    kernel_.schedule(
        "cloudlet/" + rt.spec.id,
        [this, c, key, target] {
            auto& rt2 = runtime(c);
            rt2.copying.erase(key);
            try {
                kv_.repair_replicas(rt2.cloudlet, key, target, reachable_fn());
                kernel_.log("cloudlet/" + rt2.spec.id, "rereplicated",
                            {{"cloudlet", c.value}, {"key", key}, {"target", target.value}});
            } catch (const Error& e) {
                kernel_.log("cloudlet/" + rt2.spec.id, "rereplicate_failed",
                            {{"cloudlet", c.value}, {"key", key}, {"target", target.value}, {"error", to_string(e.code())}});
            }
            check_replicas(c);
        },
        copy);
}

} // namespace adhoc
