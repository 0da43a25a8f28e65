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

#include "adhoc/intrusiveness.hpp"

#include <algorithm>

namespace adhoc {

std::vector<std::string> IntrusivenessPolicy::validate() const
{
    std::vector<std::string> out;
    if (grace_ms < 0)
        out.push_back("grace_ms must be >= 0");
    if (!(max_violation_fraction >= 0.0 && max_violation_fraction <= 1.0))
        out.push_back("max_violation_fraction must lie in [0, 1]");
    if (!(throttle_floor > 0.0 && throttle_floor <= 1.0))
        out.push_back("throttle_floor must lie in (0, 1]");
    return out;
}

std::string_view to_string(ControlAction::Kind k) noexcept
{
    switch (k) {
    case ControlAction::Kind::Throttle: return "throttle";
    case ControlAction::Kind::Restore: return "restore";
    case ControlAction::Kind::Evict: return "evict";
    }
    return "?";
}

bool enforcement_order(const EnforcementCandidate& a, const EnforcementCandidate& b) noexcept
{
    if (a.allocation.cpu != b.allocation.cpu)
        return a.allocation.cpu > b.allocation.cpu;
    return a.element < b.element;
}

namespace {

double ResourceVector::*const kUnthrottleable[] = {&ResourceVector::memory, &ResourceVector::storage,
                                                  &ResourceVector::network};

} // namespace

namespace {

double cpu_usage(const EnforcementCandidate& c)
{
    return c.allocation.cpu * c.throttle_factor;
}

double lowest_cpu(const EnforcementCandidate& c, double floor)
{
    return c.throttleable ? c.allocation.cpu * std::min(c.throttle_factor, floor) : cpu_usage(c);
}

/// Throttles for the survivors: largest possible reduction first, each down to what is still needed.
std::vector<ControlAction> throttle_survivors(const std::vector<EnforcementCandidate>& order,
                                              const std::vector<bool>& evicted, double headroom_cpu, double floor)
{
    std::vector<std::size_t> idx;
    double excess = -headroom_cpu;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (evicted[i])
            continue;
        excess += cpu_usage(order[i]);
        idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return cpu_usage(order[a]) - lowest_cpu(order[a], floor) > cpu_usage(order[b]) - lowest_cpu(order[b], floor);
    });
    std::vector<ControlAction> out;
    for (std::size_t i : idx) {
        if (excess <= kResourceEpsilon)
            break;
        const auto& c = order[i];
        const double cur = cpu_usage(c);
        const double reduce = std::min(cur - lowest_cpu(c, floor), excess);
        if (c.allocation.cpu <= 0.0 || reduce <= 0.0)
            continue;
        excess -= reduce;
        out.push_back({ControlAction::Kind::Throttle, c.element, (cur - reduce) / c.allocation.cpu});
    }
    return out;
}

bool survivors_fit(const std::vector<EnforcementCandidate>& order, const std::vector<bool>& evicted,
                   const ResourceVector& headroom, double floor)
{
    ResourceVector total;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (evicted[i])
            continue;
        ResourceVector u = order[i].allocation;
        u.cpu = lowest_cpu(order[i], floor);
        total += u;
    }
    return fits_within(total, headroom);
}

std::vector<bool> greedy_evictions(const std::vector<EnforcementCandidate>& order, const ResourceVector& headroom,
                                   double floor)
{
    std::vector<bool> evicted(order.size(), false);
    for (auto dim : kUnthrottleable) {
        auto total = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < order.size(); ++i)
                if (!evicted[i])
                    s += order[i].allocation.*dim;
            return s;
        };
        for (std::size_t i = 0; i < order.size() && total() > headroom.*dim + kResourceEpsilon; ++i)
            if (order[i].allocation.*dim > 0.0)
                evicted[i] = true;
    }
    auto total_lowest = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (!evicted[i])
                s += lowest_cpu(order[i], floor);
        return s;
    };
    for (std::size_t i = 0; i < order.size() && total_lowest() > headroom.cpu + kResourceEpsilon; ++i)
        if (order[i].allocation.cpu > 0.0)
            evicted[i] = true;
    return evicted;
}

constexpr std::size_t kExactSearchLimit = 16;

} // namespace

std::vector<ControlAction> plan_enforcement(const ResourceVector& headroom,
                                            std::span<const EnforcementCandidate> candidates,
                                            const IntrusivenessPolicy& policy)
{
    std::vector<EnforcementCandidate> order(candidates.begin(), candidates.end());
    std::sort(order.begin(), order.end(), enforcement_order);
    const double floor = policy.throttle_first ? policy.throttle_floor : 1.0;
    const std::size_t n = order.size();

    std::vector<bool> evicted;
    if (n <= kExactSearchLimit) {
        // Fewest evictions, then fewest throttles; ties go to the earliest victims in order.
        std::size_t best_e = n + 1, best_t = n + 1;
        std::vector<bool> best;
        for (std::size_t size = 0; size <= n && best.empty(); ++size) {
            std::vector<bool> pick(n, false);
            std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
            do {
                if (!survivors_fit(order, pick, headroom, floor))
                    continue;
                const std::size_t t = throttle_survivors(order, pick, headroom.cpu, floor).size();
                if (size < best_e || t < best_t) {
                    best_e = size;
                    best_t = t;
                    best = pick;
                }
            } while (std::prev_permutation(pick.begin(), pick.end()));
        }
        evicted = best.empty() ? std::vector<bool>(n, true) : best;
    } else {
        evicted = greedy_evictions(order, headroom, floor);
    }

    std::vector<ControlAction> actions;
    for (std::size_t i = 0; i < n; ++i)
        if (evicted[i])
            actions.push_back({ControlAction::Kind::Evict, order[i].element, 0.0});
    for (auto& a : throttle_survivors(order, evicted, headroom.cpu, floor))
        actions.push_back(a);
    return actions;
}

std::vector<ControlAction> plan_relaxation(const ResourceVector& headroom,
                                           std::span<const EnforcementCandidate> candidates)
{
    std::vector<EnforcementCandidate> order(candidates.begin(), candidates.end());
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.element < b.element; });
    double slack = headroom.cpu;
    for (const auto& c : order)
        slack -= c.allocation.cpu * c.throttle_factor;
    std::vector<ControlAction> actions;
    for (const auto& c : order) {
        if (!c.throttleable || c.throttle_factor >= 1.0 || slack <= kResourceEpsilon)
            continue;
        const double raise = std::min(slack, c.allocation.cpu * (1.0 - c.throttle_factor));
        if (raise <= kResourceEpsilon)
            continue;
        slack -= raise;
        double factor = c.throttle_factor + raise / c.allocation.cpu;
        if (factor > 1.0 - 1e-12)
            factor = 1.0;
        actions.push_back({ControlAction::Kind::Restore, c.element, factor});
    }
    return actions;
}

ResourceVector NodeReport::total_usage() const
{
    ResourceVector total;
    for (const auto& [id, u] : element_usage)
        total += u;
    return total;
}

ResourceVector NodeReport::free_headroom() const
{
    return clamp_non_negative(headroom - total_usage());
}

void to_json(nlohmann::json& j, const NodeReport& r)
{
    nlohmann::json usage = nlohmann::json::object();
    for (const auto& [id, u] : r.element_usage)
        usage[to_string(id)] = u;
    nlohmann::json factors = nlohmann::json::object();
    for (const auto& [id, f] : r.throttle_factors)
        factors[to_string(id)] = f;
    j = nlohmann::json{{"node", r.node.value},       {"at", r.at},
                       {"headroom", r.headroom},     {"user_demand", r.user_demand},
                       {"element_usage", usage},     {"throttle_factors", factors},
                       {"violation", r.violation}};
}

} // namespace adhoc
