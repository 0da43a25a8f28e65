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

#include "adhoc/adaptation.hpp"

#include "adhoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace adhoc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool counts_as_member(ElementState s)
{
    return s == ElementState::Deploying || s == ElementState::Running || s == ElementState::Throttled;
}

bool serving(ElementState s)
{
    return s == ElementState::Running || s == ElementState::Throttled;
}

std::vector<std::string> finite_non_negative(std::initializer_list<std::pair<const char*, double>> fields)
{
    std::vector<std::string> out;
    for (const auto& [name, v] : fields)
        if (!(v >= 0.0) || !std::isfinite(v))
            out.push_back(std::string(name) + " must be a finite non-negative number");
    return out;
}

/// Nodes that could host a new element of `cl`, best first.
std::vector<NodeId> add_targets(const CloudStateSnapshot& snap, const CloudletSnapshot& cl, std::size_t limit,
                                const std::set<NodeId>& excluded)
{
    std::set<NodeId> hosting;
    for (const auto& m : cl.members)
        if (counts_as_member(m.state))
            hosting.insert(m.node);
    std::vector<const NodeSnapshot*> feasible;
    for (const auto& n : snap.nodes) {
        if (!n.available || hosting.count(n.node) || excluded.count(n.node))
            continue;
        if (!fits_within(cl.element_allocation, n.free_headroom()))
            continue;
        feasible.push_back(&n);
    }
    std::stable_sort(feasible.begin(), feasible.end(), [](auto* a, auto* b) {
        const double ha = a->free_headroom().cpu;
        const double hb = b->free_headroom().cpu;
        if (ha != hb)
            return ha > hb;
        return a->node < b->node;
    });
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < feasible.size() && i < limit; ++i)
        out.push_back(feasible[i]->node);
    return out;
}

std::size_t member_count(const CloudletSnapshot& cl)
{
    return static_cast<std::size_t>(std::count_if(cl.members.begin(), cl.members.end(),
                                                  [](const auto& m) { return counts_as_member(m.state); }));
}

} // namespace

std::vector<std::string> UtilityWeights::validate() const
{
    auto out = finite_non_negative({{"w_avail", w_avail}, {"w_perf", w_perf}, {"w_intr", w_intr}, {"w_cost", w_cost}});
    if (out.empty() && sum() <= 0.0)
        out.push_back("utility weights must not all be zero");
    return out;
}

std::vector<std::string> AdaptationPolicy::validate() const
{
    auto out = finite_non_negative({{"epsilon", epsilon},
                                    {"deploy_cost", deploy_cost},
                                    {"destroy_cost", destroy_cost},
                                    {"rereplicate_cost_per_mb", rereplicate_cost_per_mb}});
    if (epoch_ms <= 0)
        out.push_back("epoch_ms must be > 0");
    if (max_actions_per_epoch < 1)
        out.push_back("max_actions_per_epoch must be >= 1");
    if (!(availability_ceiling > 0.0 && availability_ceiling <= 1.0))
        out.push_back("availability_ceiling must lie in (0, 1]");
    return out;
}

std::string describe(const PlanAction& action)
{
    return std::visit(overloaded{
                          [](const NoOp&) { return std::string("noop"); },
                          [](const AddElement& a) {
                              return "add " + to_string(a.cloudlet) + "@" + to_string(a.node);
                          },
                          [](const RemoveElement& a) { return "remove " + to_string(a.element); },
                          [](const Rereplicate& a) {
                              return "rereplicate " + a.key + " " + to_string(a.source) + "->" + to_string(a.target);
                          },
                      },
                      action);
}

std::size_t Plan::effective_actions() const
{
    return static_cast<std::size_t>(std::count_if(actions.begin(), actions.end(), [](const PlanAction& a) {
        return !std::holds_alternative<NoOp>(a);
    }));
}

const MemberSnapshot* CloudletSnapshot::member(ElementId e) const
{
    for (const auto& m : members)
        if (m.element == e)
            return &m;
    return nullptr;
}

const NodeSnapshot* CloudStateSnapshot::node(NodeId id) const
{
    for (const auto& n : nodes)
        if (n.node == id)
            return &n;
    return nullptr;
}

const CloudletSnapshot* CloudStateSnapshot::cloudlet(CloudletId id) const
{
    for (const auto& c : cloudlets)
        if (c.id == id)
            return &c;
    return nullptr;
}

std::vector<Plan> generate_plans(const CloudStateSnapshot& snap, const AdaptationPolicy& policy)
{
    std::vector<Plan> plans;
    plans.push_back(Plan{{NoOp{}}, 0.0});

    for (const auto& cl : snap.cloudlets) {
        const std::size_t members = member_count(cl);
        const bool room = members < static_cast<std::size_t>(cl.policy.max_members);

        if (cl.engine == EngineKind::KvStore) {
            const auto k = static_cast<std::size_t>(cl.policy.target_replication);
            std::vector<Rereplicate> batch;
            std::vector<std::string> without_target;
            std::set<NodeId> deficit_nodes;
            std::size_t considered = 0;
            for (const auto& key : cl.keys) {
                if (key.replicas.size() >= k || key.replicas.empty())
                    continue;
                if (considered++ >= policy.rereplicate_cap)
                    break;
                std::set<NodeId> holding;
                for (ElementId r : key.replicas)
                    if (const auto* m = cl.member(r))
                        holding.insert(m->node);
                const MemberSnapshot* target = nullptr;
                double target_free = 0.0;
                for (const auto& m : cl.members) {
                    if (!serving(m.state) || holding.count(m.node) ||
                        std::find(key.replicas.begin(), key.replicas.end(), m.element) != key.replicas.end())
                        continue;
                    const auto* n = snap.node(m.node);
                    if (n == nullptr || !n->available)
                        continue;
                    const double free = n->free_headroom().cpu;
                    if (target == nullptr || free > target_free ||
                        (free == target_free && m.element < target->element)) {
                        target = &m;
                        target_free = free;
                    }
                }
                if (target == nullptr) {
                    without_target.push_back(key.key);
                    deficit_nodes.insert(holding.begin(), holding.end());
                    continue;
                }
                Rereplicate r{cl.id, key.key, key.replicas.front(), target->element};
                plans.push_back(Plan{{r}, 0.0});
                batch.push_back(r);
            }
            if (batch.size() > 1) {
                Plan combined;
                for (std::size_t i = 0; i < batch.size() && i < policy.max_actions_per_epoch; ++i)
                    combined.actions.push_back(batch[i]);
                plans.push_back(std::move(combined));
            }
            if (!without_target.empty() && room) {
                for (NodeId node : add_targets(snap, cl, policy.add_candidates, deficit_nodes))
                    plans.push_back(Plan{{AddElement{node, cl.id, cl.element_allocation, without_target}}, 0.0});
            }
        }

        const bool compute = cl.engine == EngineKind::Compute;
        if (((compute && cl.utilization > cl.policy.high_watermark) ||
             members < static_cast<std::size_t>(cl.policy.min_members)) &&
            room) {
            for (NodeId node : add_targets(snap, cl, policy.add_candidates, {}))
                plans.push_back(Plan{{AddElement{node, cl.id, cl.element_allocation, {}}}, 0.0});
        }

        if (compute && cl.utilization < cl.policy.low_watermark &&
            members > static_cast<std::size_t>(cl.policy.min_members)) {
            std::set<ElementId> holds_data;
            for (const auto& key : cl.keys)
                holds_data.insert(key.replicas.begin(), key.replicas.end());
            const MemberSnapshot* victim = nullptr;
            double victim_free = 0.0;
            for (const auto& m : cl.members) {
                if (!serving(m.state) || m.reserved || m.metadata_holder || holds_data.count(m.element))
                    continue;
                const auto* n = snap.node(m.node);
                const double free = n ? n->free_headroom().cpu : 0.0;
                if (victim == nullptr || free < victim_free || (free == victim_free && m.element < victim->element)) {
                    victim = &m;
                    victim_free = free;
                }
            }
            if (victim != nullptr)
                plans.push_back(Plan{{RemoveElement{cl.id, victim->element}}, 0.0});
        }
    }
    return plans;
}

double evaluate_plan(const Plan& plan, const CloudStateSnapshot& snap, const UtilityWeights& weights,
                     const AdaptationPolicy& policy)
{
    struct CloudletState {
        std::map<ElementId, NodeId> members;
        double service_cpu = 0.0;
    };
    std::map<CloudletId, CloudletState> cloudlets;
    std::map<std::pair<CloudletId, std::string>, std::vector<NodeId>> key_nodes;
    std::map<NodeId, ResourceVector> usage;
    std::map<AgreementId, std::vector<ElementId>> agreements;

    for (const auto& n : snap.nodes)
        usage[n.node] = n.usage;
    for (const auto& cl : snap.cloudlets) {
        auto& st = cloudlets[cl.id];
        for (const auto& m : cl.members) {
            if (!counts_as_member(m.state))
                continue;
            st.members[m.element] = m.node;
            st.service_cpu += m.allocation.cpu * m.throttle_factor;
        }
        for (const auto& key : cl.keys) {
            auto& nodes = key_nodes[{cl.id, key.key}];
            for (ElementId r : key.replicas)
                if (const auto* m = cl.member(r))
                    nodes.push_back(m->node);
        }
    }
    for (const auto& ag : snap.agreements)
        agreements[ag.id] = ag.reserved;

    auto inconsistent = [](const std::string& why) { return Error(ErrorCode::InconsistentPlan, why); };
    std::set<ElementId> removed;
    std::set<ElementId> replicated_to;
    double cost = 0.0;

    for (const auto& action : plan.actions) {
        std::visit(overloaded{
                       [](const NoOp&) {},
                       [&](const AddElement& a) {
                           const auto* cl = snap.cloudlet(a.cloudlet);
                           const auto* n = snap.node(a.node);
                           if (cl == nullptr || n == nullptr)
                               throw inconsistent(describe(a) + ": unknown cloudlet or node");
                           if (!n->available || !fits_within(a.allocation, clamp_non_negative(n->headroom - usage[a.node])))
                               throw inconsistent(describe(a) + ": allocation exceeds headroom");
                           usage[a.node] += a.allocation;
                           auto& st = cloudlets[a.cloudlet];
                           st.members[ElementId{0xffffffffu - static_cast<std::uint32_t>(st.members.size())}] = a.node;
                           st.service_cpu += a.allocation.cpu;
                           for (const auto& key : a.for_keys) {
                               auto it = key_nodes.find({a.cloudlet, key});
                               if (it == key_nodes.end())
                                   throw inconsistent(describe(a) + ": unknown key " + key);
                               it->second.push_back(a.node);
                           }
                           cost += policy.deploy_cost;
                       },
                       [&](const RemoveElement& a) {
                           const auto* cl = snap.cloudlet(a.cloudlet);
                           const MemberSnapshot* m = cl ? cl->member(a.element) : nullptr;
                           if (m == nullptr || !removed.insert(a.element).second || replicated_to.count(a.element))
                               throw inconsistent(describe(a) + ": not a removable member");
                           auto& st = cloudlets[a.cloudlet];
                           st.members.erase(a.element);
                           st.service_cpu -= m->allocation.cpu * m->throttle_factor;
                           usage[m->node] -= m->allocation * 1.0;
                           usage[m->node].cpu += m->allocation.cpu * (1.0 - m->throttle_factor);
                           for (const auto& key : cl->keys) {
                               if (std::find(key.replicas.begin(), key.replicas.end(), a.element) == key.replicas.end())
                                   continue;
                               auto& nodes = key_nodes[{cl->id, key.key}];
                               auto pos = std::find(nodes.begin(), nodes.end(), m->node);
                               if (pos != nodes.end())
                                   nodes.erase(pos);
                           }
                           for (auto& [id, reserved] : agreements)
                               std::erase(reserved, a.element);
                           cost += policy.destroy_cost;
                       },
                       [&](const Rereplicate& a) {
                           const auto* cl = snap.cloudlet(a.cloudlet);
                           const MemberSnapshot* target = cl ? cl->member(a.target) : nullptr;
                           auto it = key_nodes.find({a.cloudlet, a.key});
                           if (target == nullptr || it == key_nodes.end() || removed.count(a.target) ||
                               removed.count(a.source))
                               throw inconsistent(describe(a) + ": unknown key or target");
                           const KeySnapshot* key = nullptr;
                           for (const auto& k : cl->keys)
                               if (k.key == a.key)
                                   key = &k;
                           if (std::find(key->replicas.begin(), key->replicas.end(), a.source) == key->replicas.end())
                               throw inconsistent(describe(a) + ": source is not a live replica");
                           replicated_to.insert(a.target);
                           it->second.push_back(target->node);
                           cost += key->bytes / 1e6 * policy.rereplicate_cost_per_mb;
                       },
                   },
                   action);
    }

    auto node_p = [&](NodeId id) {
        const auto* n = snap.node(id);
        if (n == nullptr || !n->available)
            return 0.0;
        return std::min(n->availability, policy.availability_ceiling);
    };
    auto availability_over = [&](const std::set<NodeId>& nodes) {
        double all_down = 1.0;
        for (NodeId n : nodes)
            all_down *= 1.0 - node_p(n);
        return 1.0 - all_down;
    };

    double a_sum = 0.0;
    std::size_t a_items = 0;
    for (const auto& [id, nodes] : key_nodes) {
        a_sum += availability_over(std::set<NodeId>(nodes.begin(), nodes.end()));
        ++a_items;
    }
    for (const auto& ag : snap.agreements) {
        const auto* cl = snap.cloudlet(ag.cloudlet);
        std::set<NodeId> nodes;
        for (ElementId e : agreements[ag.id])
            if (const auto* m = cl ? cl->member(e) : nullptr; m && counts_as_member(m->state))
                nodes.insert(m->node);
        a_sum += availability_over(nodes);
        ++a_items;
    }
    for (const auto& [id, st] : cloudlets) {
        std::set<NodeId> nodes;
        for (const auto& [e, n] : st.members)
            nodes.insert(n);
        a_sum += availability_over(nodes);
        ++a_items;
    }
    const double a_prime = a_items ? a_sum / static_cast<double>(a_items) : 1.0;

    double p_sum = 0.0;
    std::size_t p_items = 0;
    for (const auto& cl : snap.cloudlets) {
        if (cl.engine != EngineKind::Compute || cl.arrival_rate <= 0.0 || cl.mean_work_cpu_ms <= 0.0)
            continue;
        const double service_rate = std::max(0.0, cloudlets[cl.id].service_cpu) / cl.mean_work_cpu_ms;
        p_sum += std::min(1.0, cl.policy.high_watermark * service_rate / cl.arrival_rate);
        ++p_items;
    }
    const double p_prime = p_items ? p_sum / static_cast<double>(p_items) : 1.0;

    double i_sum = 0.0;
    std::size_t i_items = 0;
    for (const auto& n : snap.nodes) {
        if (!n.available)
            continue;
        const ResourceVector& u = usage[n.node];
        double ratio = 0.0;
        for (auto dim : {&ResourceVector::cpu, &ResourceVector::memory, &ResourceVector::storage,
                         &ResourceVector::network}) {
            const double use = std::max(0.0, u.*dim);
            if (n.headroom.*dim > 0.0)
                ratio = std::max(ratio, use / n.headroom.*dim);
            else if (use > kResourceEpsilon)
                ratio = 1.0;
        }
        i_sum += std::clamp(ratio, 0.0, 1.0);
        ++i_items;
    }
    const double i_prime = i_items ? i_sum / static_cast<double>(i_items) : 0.0;

    return weights.w_avail * a_prime + weights.w_perf * p_prime - weights.w_intr * i_prime - weights.w_cost * cost;
}

std::size_t select_plan(const std::vector<Plan>& plans, const UtilityWeights& weights, const AdaptationPolicy& policy)
{
    if (plans.empty())
        return 0;
    // Compare on the weight-normalized scale so selection is invariant to scaling all weights.
    const double scale = weights.sum() > 0.0 ? weights.sum() : 1.0;
    constexpr double tie = 1e-12;
    std::size_t best = 0;
    for (std::size_t i = 1; i < plans.size(); ++i) {
        const double ui = plans[i].predicted_utility / scale;
        const double ub = plans[best].predicted_utility / scale;
        if (ui > ub + tie)
            best = i;
        else if (std::abs(ui - ub) <= tie && plans[i].effective_actions() < plans[best].effective_actions())
            best = i;
    }
    const double gain = (plans[best].predicted_utility - plans[0].predicted_utility) / scale;
    if (plans[best].is_noop() || gain <= policy.epsilon)
        return 0;
    return best;
}

AdaptationOutcome adapt_step(const CloudStateSnapshot& snapshot, const AdaptationPolicy& policy,
                             const UtilityWeights& weights, PlanExecutor& executor)
{
    auto plans = generate_plans(snapshot, policy);
    for (auto& p : plans)
        p.predicted_utility = evaluate_plan(p, snapshot, weights, policy);
    const std::size_t chosen = select_plan(plans, weights, policy);
    AdaptationOutcome out;
    out.candidates = plans.size();
    out.selected = plans[chosen];
    out.executed = plans[chosen];
    for (auto& action : out.executed.actions) {
        if (std::holds_alternative<NoOp>(action))
            continue;
        if (!executor.execute(action))
            action = NoOp{};
    }
    return out;
}

} // namespace adhoc
