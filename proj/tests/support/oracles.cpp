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

#include "support/oracles.hpp"

#include <algorithm>
#include <set>
#include <string>

using namespace adhoc;

namespace oracle {

std::optional<EnforcementCost> minimal_enforcement(const ResourceVector& headroom,
                                                   std::span<const EnforcementCandidate> c, double floor)
{
    const std::size_t n = c.size();
    std::optional<EnforcementCost> best;
    for (unsigned evict = 0; evict < (1u << n); ++evict) {
        for (unsigned thr = 0; thr < (1u << n); ++thr) {
            if (thr & evict)
                continue;
            ResourceVector total;
            bool ok = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (evict & (1u << i))
                    continue;
                ResourceVector u = c[i].allocation;
                u.cpu *= c[i].throttle_factor;
                if (thr & (1u << i)) {
                    if (!c[i].throttleable || c[i].throttle_factor <= floor) {
                        ok = false;
                        break;
                    }
                    u.cpu = c[i].allocation.cpu * floor;
                }
                total += u;
            }
            if (!ok || !fits_within(total, headroom))
                continue;
            EnforcementCost cost{static_cast<std::size_t>(__builtin_popcount(evict)),
                                 static_cast<std::size_t>(__builtin_popcount(thr))};
            if (!best || cost.evictions < best->evictions ||
                (cost.evictions == best->evictions && cost.throttles < best->throttles))
                best = cost;
        }
    }
    return best;
}

bool BruteForceBroker::node_fits(const ReservationRequest& r, const NodeForecast& nf) const
{
    auto it = booked_.find(nf.node);
    for (VirtualTime t = r.window.start; t < r.window.end; ++t) {
        ResourceVector sum = r.demand;
        if (it != booked_.end())
            for (const auto& [w, d] : it->second)
                if (w.start <= t && t < w.end)
                    sum += d;
        if (!fits_within(sum, nf.expected_headroom))
            return false;
    }
    return true;
}

BruteForceBroker::Decision BruteForceBroker::decide(const ReservationRequest& r, const CapacityForecast& f) const
{
    Decision d;
    std::vector<const NodeForecast*> ok;
    for (const auto& nf : f.nodes)
        if (node_fits(r, nf))
            ok.push_back(&nf);
    const auto k = static_cast<std::size_t>(r.element_count);
    d.feasible_nodes_enough = ok.size() >= k;
    for (unsigned mask = 0; mask < (1u << ok.size()); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k)
            continue;
        // Availability of at least one up, folded in node-id order.
        std::vector<std::pair<NodeId, double>> chosen;
        for (std::size_t i = 0; i < ok.size(); ++i)
            if (mask & (1u << i))
                chosen.emplace_back(ok[i]->node, ok[i]->availability);
        std::sort(chosen.begin(), chosen.end());
        double none = 1.0;
        for (const auto& [id, p] : chosen)
            none *= 1.0 - p;
        d.best = std::max(d.best, 1.0 - none);
    }
    return d;
}

bool BruteForceBroker::placement_feasible(const ReservationRequest& r, const CapacityForecast& f,
                                          const std::vector<NodeId>& nodes) const
{
    std::set<NodeId> distinct(nodes.begin(), nodes.end());
    if (distinct.size() != nodes.size() || nodes.size() != static_cast<std::size_t>(r.element_count))
        return false;
    for (NodeId id : nodes) {
        const NodeForecast* nf = f.find(id);
        if (nf == nullptr || !node_fits(r, *nf))
            return false;
    }
    return true;
}

void BruteForceBroker::commit(const ReservationRequest& r, const std::vector<NodeId>& nodes)
{
    for (NodeId id : nodes)
        booked_[id].emplace_back(r.window, r.demand);
}

namespace {

/// Intervals during which something held, as (start, end) pairs; end may be open.
struct Timeline {
    std::vector<std::pair<VirtualTime, bool>> changes;

    void push(VirtualTime t, bool on) { changes.emplace_back(t, on); }

    bool at(VirtualTime t) const
    {
        bool v = false;
        for (const auto& [when, on] : changes)
            if (when <= t)
                v = on;
        return v;
    }

    std::vector<std::pair<VirtualTime, VirtualTime>> intervals(VirtualTime horizon) const
    {
        std::vector<std::pair<VirtualTime, VirtualTime>> out;
        bool on = false;
        VirtualTime since = 0;
        for (const auto& [t, v] : changes) {
            if (v == on)
                continue;
            if (on)
                out.emplace_back(since, t);
            on = v;
            since = t;
        }
        if (on)
            out.emplace_back(since, horizon);
        return out;
    }
};

VirtualTime measure(const std::vector<std::pair<VirtualTime, VirtualTime>>& iv, VirtualTime lo, VirtualTime hi)
{
    VirtualTime sum = 0;
    for (const auto& [a, b] : iv)
        sum += std::max<VirtualTime>(0, std::min(b, hi) - std::max(a, lo));
    return sum;
}

} // namespace

GoalReport aggregate_by_intervals(const EventLog& log, VirtualTime from, VirtualTime to)
{
    GoalReport r;
    r.from = from;
    r.to = to;
    std::map<std::uint32_t, Timeline> node_up, violating, element_serving;
    std::map<std::uint32_t, std::uint32_t> element_cloudlet;
    std::set<std::uint32_t> cloudlets, vnodes;
    struct Ag {
        VirtualTime start = 0, end = 0;
        std::vector<std::pair<VirtualTime, std::uint32_t>> members;
    };
    std::map<std::uint32_t, Ag> ags;
    std::vector<VirtualTime> lat;
    std::set<VirtualTime> instants;

    for (const auto& e : log.entries()) {
        if (e.at > to)
            continue;
        const auto& f = e.fields;
        if (e.kind == "cloudlet_created") {
            cloudlets.insert(f["cloudlet"].get<std::uint32_t>());
        } else if (e.kind == "node_up" || e.kind == "node_down") {
            const auto n = f["node"].get<std::uint32_t>();
            node_up[n].push(e.at, e.kind == "node_up");
            vnodes.insert(n);
        } else if (e.kind == "violation_start" || e.kind == "violation_end") {
            const auto n = f["node"].get<std::uint32_t>();
            violating[n].push(e.at, e.kind == "violation_start");
            vnodes.insert(n);
        } else if (e.kind == "element_state") {
            const auto id = f["element"].get<std::uint32_t>();
            const auto s = f["state"].get<std::string>();
            element_cloudlet[id] = f["cloudlet"].get<std::uint32_t>();
            const bool serving = s == "running" || s == "throttled";
            auto& tl = element_serving[id];
            const bool before = !tl.changes.empty() && tl.changes.back().second;
            if (serving != before)
                cloudlets.insert(element_cloudlet[id]);
            tl.push(e.at, serving);
            instants.insert(e.at);
        } else if (e.kind == "agreement_admitted") {
            auto& a = ags[f["agreement"].get<std::uint32_t>()];
            a.start = f["start"].get<VirtualTime>();
            a.end = f["end"].get<VirtualTime>();
            for (const auto& x : f["elements"])
                a.members.emplace_back(e.at, x.get<std::uint32_t>());
            instants.insert(e.at);
        } else if (e.kind == "agreement_element") {
            ags[f["agreement"].get<std::uint32_t>()].members.emplace_back(e.at, f["element"].get<std::uint32_t>());
            instants.insert(e.at);
        }
        if (e.at < from)
            continue;
        if (e.kind == "task_completed")
            lat.push_back(f["latency"].get<VirtualTime>());
        else if (e.kind == "task_lost")
            r.tasks_lost += 1;
        else if (e.kind == "kv_put")
            (f["acked"].get<bool>() ? r.kv.puts_acked : r.kv.puts_failed) += 1;
        else if (e.kind == "kv_get") {
            (f["ok"].get<bool>() ? r.kv.gets_ok : r.kv.gets_failed) += 1;
            if (f.contains("stale") && f["stale"].get<bool>())
                r.kv.stale_reads += 1;
        } else if (e.kind == "adaptation_action") {
            if (f["executed"].get<bool>())
                r.adaptation_actions[f["action"].get<std::string>()] += 1;
            else
                r.adaptation_downgraded += 1;
        } else if (e.kind == "enforcement")
            r.enforcement_actions += 1;
    }

    const double span = static_cast<double>(to - from);
    auto frac = [](VirtualTime x, double over) { return over > 0 ? static_cast<double>(x) / over : 0.0; };

    for (const auto& [n, tl] : node_up)
        r.node_availability[n] = frac(measure(tl.intervals(to), from, to), span);
    for (std::uint32_t n : vnodes)
        r.node_violation_fraction[n] = frac(measure(violating[n].intervals(to), from, to), span);

    // Cloudlet availability: union of member serving intervals.
    for (std::uint32_t c : cloudlets) {
        std::vector<std::pair<VirtualTime, VirtualTime>> all;
        for (const auto& [id, tl] : element_serving)
            if (element_cloudlet[id] == c)
                for (const auto& iv : tl.intervals(to))
                    all.push_back(iv);
        std::sort(all.begin(), all.end());
        std::vector<std::pair<VirtualTime, VirtualTime>> merged;
        for (const auto& iv : all) {
            if (!merged.empty() && iv.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, iv.second);
            else
                merged.push_back(iv);
        }
        r.cloudlet_availability[c] = frac(measure(merged, from, to), span);
    }

    // Agreement satisfaction: evaluate at every instant where anything relevant changed.
    for (const auto& [id, a] : ags) {
        const VirtualTime lo = std::max(from, a.start), hi = std::min(to, a.end);
        if (hi <= lo)
            continue;
        std::vector<VirtualTime> points(instants.begin(), instants.end());
        VirtualTime held = 0;
        auto satisfied = [&](VirtualTime t) {
            for (const auto& [since, el] : a.members)
                if (since <= t && element_serving.count(el) && element_serving.at(el).at(t))
                    return true;
            return false;
        };
        VirtualTime cursor = lo;
        bool state = satisfied(lo);
        for (VirtualTime p : points) {
            if (p <= lo)
                continue;
            if (p >= hi)
                break;
            if (state)
                held += p - cursor;
            cursor = p;
            state = satisfied(p);
        }
        if (state)
            held += hi - cursor;
        r.agreement_satisfaction[id] = frac(held, static_cast<double>(hi - lo));
    }

    std::sort(lat.begin(), lat.end());
    auto rank = [&](double pct) -> VirtualTime {
        if (lat.empty())
            return 0;
        std::size_t k = 1;
        while (static_cast<double>(k) < pct / 100.0 * static_cast<double>(lat.size()))
            ++k;
        return lat[std::min(k, lat.size()) - 1];
    };
    r.task_latency = {lat.size(), rank(50), rank(95), rank(99)};
    return r;
}

} // namespace oracle
