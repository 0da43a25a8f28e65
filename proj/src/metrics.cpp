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

#include "adhoc/metrics.hpp"

#include "adhoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace adhoc {
namespace {

nlohmann::json keyed(const std::map<std::uint32_t, double>& m, const char* prefix)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : m)
        j[prefix + std::to_string(id)] = v;
    return j;
}

/// Accumulates how long a boolean condition held inside [from, to).
struct Integrator {
    bool on = false;
    VirtualTime since = 0;
    VirtualTime total = 0;

    void set(bool value, VirtualTime t, VirtualTime from, VirtualTime to)
    {
        if (value == on)
            return;
        if (on)
            total += std::max<VirtualTime>(0, std::min(t, to) - std::max(since, from));
        on = value;
        since = t;
    }

    VirtualTime close(VirtualTime from, VirtualTime to) const
    {
        return total + (on ? std::max<VirtualTime>(0, to - std::max(since, from)) : 0);
    }
};

bool serving_state(const std::string& s) { return s == "running" || s == "throttled"; }

struct AgreementTrack {
    VirtualTime start = 0;
    VirtualTime end = 0;
    std::set<std::uint32_t> elements;
    Integrator satisfied;
};

} // namespace

VirtualTime nearest_rank(const std::vector<VirtualTime>& sorted, double percent)
{
    if (sorted.empty())
        return 0;
    auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

void to_json(nlohmann::json& j, const GoalReport& r)
{
    j = nlohmann::json{
        {"window", {{"from", r.from}, {"to", r.to}}},
        {"cloudlet_availability", keyed(r.cloudlet_availability, "c")},
        {"agreement_satisfaction", keyed(r.agreement_satisfaction, "a")},
        {"node_availability", keyed(r.node_availability, "n")},
        {"node_violation_fraction", keyed(r.node_violation_fraction, "n")},
        {"task_latency_ms",
         {{"count", r.task_latency.count},
          {"p50", r.task_latency.p50},
          {"p95", r.task_latency.p95},
          {"p99", r.task_latency.p99}}},
        {"tasks_lost", r.tasks_lost},
        {"kv",
         {{"puts_acked", r.kv.puts_acked},
          {"puts_failed", r.kv.puts_failed},
          {"gets_ok", r.kv.gets_ok},
          {"gets_failed", r.kv.gets_failed},
          {"stale_reads", r.kv.stale_reads}}},
        {"adaptation_actions", r.adaptation_actions},
        {"adaptation_downgraded", r.adaptation_downgraded},
        {"enforcement_actions", r.enforcement_actions},
    };
}

GoalReport aggregate_metrics(const EventLog& log, const GoalSpec& goal)
{
    std::optional<VirtualTime> run_end;
    for (const auto& e : log.entries())
        if (e.kind == "run_end")
            run_end = std::max(run_end.value_or(e.at), e.at);
    const VirtualTime to = goal.to.value_or(run_end.value_or(goal.from));
    if (!run_end || *run_end < to)
        throw Error(ErrorCode::IncompleteLog, "no run_end record at or after t=" + std::to_string(to));
    const VirtualTime from = goal.from;
    if (to < from)
        throw Error(ErrorCode::InvalidArgument, "report window ends before it starts");

    std::map<std::uint32_t, Integrator> cloudlet_up, node_up, node_violating;
    std::map<std::uint32_t, int> serving_count;
    std::map<std::uint32_t, std::pair<std::uint32_t, bool>> element; // id -> (cloudlet, serving)
    std::map<std::uint32_t, AgreementTrack> agreements;
    std::vector<VirtualTime> latencies;
    GoalReport r;
    r.from = from;
    r.to = to;

    auto refresh_agreements = [&](VirtualTime t) {
        for (auto& [id, a] : agreements) {
            bool any = false;
            for (std::uint32_t e : a.elements)
                if (auto it = element.find(e); it != element.end() && it->second.second)
                    any = true;
            a.satisfied.set(any, t, std::max(from, a.start), std::min(to, a.end));
        }
    };

    for (const auto& e : log.entries()) {
        if (e.at > to)
            break;
        const auto& f = e.fields;
        const bool inside = e.at >= from;
        if (e.kind == "cloudlet_created") {
            const auto c = f.at("cloudlet").get<std::uint32_t>();
            cloudlet_up.try_emplace(c);
            serving_count.try_emplace(c, 0);
        } else if (e.kind == "node_up" || e.kind == "node_down") {
            const auto n = f.at("node").get<std::uint32_t>();
            node_up[n].set(e.kind == "node_up", e.at, from, to);
            node_violating.try_emplace(n);
        } else if (e.kind == "violation_start" || e.kind == "violation_end") {
            node_violating[f.at("node").get<std::uint32_t>()].set(e.kind == "violation_start", e.at, from, to);
        } else if (e.kind == "element_state") {
            const auto id = f.at("element").get<std::uint32_t>();
            const auto c = f.at("cloudlet").get<std::uint32_t>();
            const bool now_serving = serving_state(f.at("state").get<std::string>());
            auto [it, fresh] = element.try_emplace(id, c, false);
            if (it->second.second != now_serving) {
                serving_count[c] += now_serving ? 1 : -1;
                it->second.second = now_serving;
                cloudlet_up[c].set(serving_count[c] > 0, e.at, from, to);
                refresh_agreements(e.at);
            }
        } else if (e.kind == "agreement_admitted") {
            auto& a = agreements[f.at("agreement").get<std::uint32_t>()];
            a.start = f.at("start").get<VirtualTime>();
            a.end = f.at("end").get<VirtualTime>();
            for (const auto& x : f.at("elements"))
                a.elements.insert(x.get<std::uint32_t>());
            refresh_agreements(e.at);
        } else if (e.kind == "agreement_element") {
            agreements[f.at("agreement").get<std::uint32_t>()].elements.insert(f.at("element").get<std::uint32_t>());
            refresh_agreements(e.at);
        } else if (!inside) {
            continue;
        } else if (e.kind == "task_completed") {
            latencies.push_back(f.at("latency").get<VirtualTime>());
        } else if (e.kind == "task_lost") {
            ++r.tasks_lost;
        } else if (e.kind == "kv_put") {
            ++(f.at("acked").get<bool>() ? r.kv.puts_acked : r.kv.puts_failed);
        } else if (e.kind == "kv_get") {
            ++(f.at("ok").get<bool>() ? r.kv.gets_ok : r.kv.gets_failed);
            if (f.value("stale", false))
                ++r.kv.stale_reads;
        } else if (e.kind == "adaptation_action") {
            if (f.at("executed").get<bool>())
                ++r.adaptation_actions[f.at("action").get<std::string>()];
            else
                ++r.adaptation_downgraded;
        } else if (e.kind == "enforcement") {
            ++r.enforcement_actions;
        }
    }

    const double span = static_cast<double>(to - from);
    auto fraction = [&](VirtualTime ms, double over) { return over > 0.0 ? static_cast<double>(ms) / over : 0.0; };
    for (const auto& [c, integ] : cloudlet_up)
        r.cloudlet_availability[c] = fraction(integ.close(from, to), span);
    for (const auto& [n, integ] : node_up)
        r.node_availability[n] = fraction(integ.close(from, to), span);
    for (const auto& [n, integ] : node_violating)
        r.node_violation_fraction[n] = fraction(integ.close(from, to), span);
    for (const auto& [id, a] : agreements) {
        const VirtualTime lo = std::max(from, a.start);
        const VirtualTime hi = std::min(to, a.end);
        if (hi <= lo)
            continue;
        r.agreement_satisfaction[id] = fraction(a.satisfied.close(lo, hi), static_cast<double>(hi - lo));
    }
    std::sort(latencies.begin(), latencies.end());
    r.task_latency = {latencies.size(), nearest_rank(latencies, 50), nearest_rank(latencies, 95),
                      nearest_rank(latencies, 99)};
    return r;
}

} // namespace adhoc
