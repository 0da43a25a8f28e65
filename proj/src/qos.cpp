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

#include "adhoc/qos.hpp"

#include <algorithm>
#include <numeric>

namespace adhoc {
namespace {

// Admission compares computed availabilities against targets given in decimal.
constexpr double kAvailabilityTolerance = 1e-12;

} // namespace

std::vector<std::string> ReservationRequest::validate() const
{
    std::vector<std::string> out;
    if (!(window.start < window.end))
        out.push_back("window start must be before end");
    if (element_count < 1)
        out.push_back("element_count must be >= 1");
    if (!demand.non_negative() || !demand.any_positive())
        out.push_back("demand must be non-negative and positive in at least one component");
    if (!(availability_target > 0.0 && availability_target <= 1.0))
        out.push_back("availability_target must lie in (0, 1]");
    return out;
}

std::string_view to_string(AgreementState s) noexcept
{
    switch (s) {
    case AgreementState::Active: return "active";
    case AgreementState::Expired: return "expired";
    case AgreementState::Released: return "released";
    }
    return "?";
}

std::string_view to_string(Rejection::Reason r) noexcept
{
    return r == Rejection::Reason::AvailabilityUnreachable ? "AvailabilityUnreachable" : "CapacityExhausted";
}

std::string_view to_string(ForecastMode m) noexcept
{
    return m == ForecastMode::Oracle ? "oracle" : "estimator";
}

std::optional<ForecastMode> parse_forecast_mode(std::string_view s) noexcept
{
    if (s == "oracle")
        return ForecastMode::Oracle;
    if (s == "estimator")
        return ForecastMode::Estimator;
    return std::nullopt;
}

double at_least_one_available(std::span<const double> availabilities)
{
    double all_down = 1.0;
    for (double p : availabilities)
        all_down *= (1.0 - p);
    return 1.0 - all_down;
}

const NodeForecast* CapacityForecast::find(NodeId id) const
{
    for (const auto& n : nodes)
        if (n.node == id)
            return &n;
    return nullptr;
}

double uptime_fraction(std::span<const std::pair<VirtualTime, Liveness>> history, VirtualTime from, VirtualTime to)
{
    if (to <= from || history.empty())
        return 1.0;
    VirtualTime up = 0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].second != Liveness::Up)
            continue;
        const VirtualTime a = std::max(history[i].first, from);
        const VirtualTime b = std::min(i + 1 < history.size() ? history[i + 1].first : to, to);
        if (b > a)
            up += b - a;
    }
    return static_cast<double>(up) / static_cast<double>(to - from);
}

CapacityForecast forecast_capacity(std::span<const ForecastInputs> nodes, TimeWindow window, ForecastMode mode,
                                   VirtualTime now, VirtualTime history_window_ms)
{
    CapacityForecast f;
    f.window = window;
    for (const auto& in : nodes) {
        const Node& n = *in.node;
        NodeForecast nf;
        nf.node = n.id();
        if (mode == ForecastMode::Oracle) {
            nf.availability = n.churn() ? n.churn()->stationary_availability() : 1.0;
        } else {
            const VirtualTime from = history_window_ms > 0 ? std::max<VirtualTime>(0, now - history_window_ms) : 0;
            nf.availability = uptime_fraction(in.history, from, now);
        }
        const ResourceVector mean_user = n.user_load_model().mean_demand(window.start, window.end);
        nf.expected_headroom = compute_headroom(n.capacity(), mean_user, n.reserve_margin());
        f.nodes.push_back(nf);
    }
    return f;
}

void ReservationCalendar::add(NodeId node, CalendarEntry entry)
{
    by_node_[node].push_back(std::move(entry));
}

void ReservationCalendar::remove(AgreementId agreement)
{
    for (auto& [node, entries] : by_node_)
        std::erase_if(entries, [&](const CalendarEntry& e) { return e.agreement == agreement; });
}

const std::vector<CalendarEntry>& ReservationCalendar::entries(NodeId node) const
{
    static const std::vector<CalendarEntry> none;
    auto it = by_node_.find(node);
    return it == by_node_.end() ? none : it->second;
}

ResourceVector ReservationCalendar::reserved_at(NodeId node, VirtualTime t) const
{
    ResourceVector sum;
    for (const auto& e : entries(node))
        if (e.window.contains(t))
            sum += e.reserved;
    return sum;
}

ResourceVector ReservationCalendar::peak_reserved(NodeId node, const TimeWindow& window) const
{
    // The reserved sum is piecewise constant; it can only rise where an entry starts.
    std::vector<VirtualTime> points{window.start};
    for (const auto& e : entries(node))
        if (e.window.start > window.start && e.window.start < window.end)
            points.push_back(e.window.start);
    ResourceVector peak;
    for (VirtualTime t : points) {
        const ResourceVector r = reserved_at(node, t);
        peak.cpu = std::max(peak.cpu, r.cpu);
        peak.memory = std::max(peak.memory, r.memory);
        peak.storage = std::max(peak.storage, r.storage);
        peak.network = std::max(peak.network, r.network);
    }
    return peak;
}

bool ReservationCalendar::feasible(NodeId node, const ResourceVector& demand, const TimeWindow& window,
                                   const ResourceVector& usable) const
{
    std::vector<VirtualTime> points{window.start};
    for (const auto& e : entries(node))
        if (e.window.start > window.start && e.window.start < window.end)
            points.push_back(e.window.start);
    for (VirtualTime t : points)
        if (!fits_within(reserved_at(node, t) + demand, usable))
            return false;
    return true;
}

Broker::Broker(BrokerConfig config) : config_(config) {}

NegotiationResult Broker::negotiate(const ReservationRequest& request, const CapacityForecast& forecast)
{
    if (auto problems = request.validate(); !problems.empty())
        throw Error(ErrorCode::InvalidArgument, request.request_id + ": " + problems.front());

    std::vector<const NodeForecast*> feasible;
    for (const auto& nf : forecast.nodes)
        if (calendar_.feasible(nf.node, request.demand, request.window, nf.expected_headroom))
            feasible.push_back(&nf);
    std::sort(feasible.begin(), feasible.end(), [](auto* a, auto* b) { return a->node < b->node; });

    const auto count = static_cast<std::size_t>(request.element_count);
    if (feasible.size() < count)
        return Rejection{Rejection::Reason::CapacityExhausted, 0.0};

    auto availability_of = [](std::vector<const NodeForecast*> chosen) {
        std::sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->node < b->node; });
        std::vector<double> p;
        for (auto* c : chosen)
            p.push_back(c->availability);
        return at_least_one_available(p);
    };

    std::vector<const NodeForecast*> best;
    double best_a = -1.0;
    if (forecast.nodes.size() <= config_.exhaustive_threshold) {
        // Lexicographic k-combinations of the feasible nodes; first maximum wins.
        std::vector<std::size_t> idx(count);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            std::vector<const NodeForecast*> combo;
            for (std::size_t i : idx)
                combo.push_back(feasible[i]);
            const double a = availability_of(combo);
            if (a > best_a) {
                best_a = a;
                best = combo;
            }
            std::size_t pos = count;
            while (pos > 0 && idx[pos - 1] == feasible.size() - count + (pos - 1))
                --pos;
            if (pos == 0)
                break;
            ++idx[pos - 1];
            for (std::size_t j = pos; j < count; ++j)
                idx[j] = idx[j - 1] + 1;
        }
    } else {
        auto ranked = feasible;
        std::stable_sort(ranked.begin(), ranked.end(), [&](auto* a, auto* b) {
            if (a->availability != b->availability)
                return a->availability > b->availability;
            const double ha = a->expected_headroom.cpu - calendar_.peak_reserved(a->node, request.window).cpu;
            const double hb = b->expected_headroom.cpu - calendar_.peak_reserved(b->node, request.window).cpu;
            if (ha != hb)
                return ha > hb;
            return a->node < b->node;
        });
        best.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count));
        best_a = availability_of(best);
    }

    if (best_a + kAvailabilityTolerance < request.availability_target)
        return Rejection{Rejection::Reason::AvailabilityUnreachable, best_a};

    Agreement ag;
    ag.id = AgreementId{next_id_++};
    ag.request = request;
    ag.predicted_availability = best_a;
    std::sort(best.begin(), best.end(), [](auto* a, auto* b) { return a->node < b->node; });
    for (auto* nf : best) {
        ag.reserved.push_back(ReservedSlot{nf->node, ElementId{}});
        calendar_.add(nf->node, CalendarEntry{ag.id, request.window, request.demand});
    }
    agreements_.emplace(ag.id, ag);
    return ag;
}

void Broker::assign_element(AgreementId id, std::size_t slot, ElementId element)
{
    auto it = agreements_.find(id);
    if (it == agreements_.end() || slot >= it->second.reserved.size())
        throw Error(ErrorCode::UnknownAgreement, to_string(id));
    it->second.reserved[slot].element = element;
}

const Agreement* Broker::find(AgreementId id) const
{
    auto it = agreements_.find(id);
    return it == agreements_.end() ? nullptr : &it->second;
}

void Broker::close(AgreementId id, AgreementState state)
{
    auto it = agreements_.find(id);
    if (it == agreements_.end() || it->second.state != AgreementState::Active)
        throw Error(ErrorCode::UnknownAgreement, to_string(id));
    it->second.state = state;
    calendar_.remove(id);
}

void Broker::release(AgreementId id)
{
    close(id, AgreementState::Released);
}

void Broker::expire(AgreementId id)
{
    close(id, AgreementState::Expired);
}

RoutingDecision dispatch(const ServiceRequest& request, const Broker& broker, std::span<const RouteCandidate> live)
{
    if (live.empty())
        throw Error(ErrorCode::NoLiveElement, "no live element in " + to_string(request.cloudlet));
    auto better = [](const RouteCandidate& a, const RouteCandidate& b) {
        if (a.cpu_headroom != b.cpu_headroom)
            return a.cpu_headroom > b.cpu_headroom;
        return a.element < b.element;
    };
    RoutingDecision d;
    if (request.agreement) {
        const Agreement* ag = broker.find(*request.agreement);
        if (ag == nullptr || ag->state != AgreementState::Active || ag->request.cloudlet != request.cloudlet) {
            d.unknown_agreement = true;
        } else {
            const RouteCandidate* pick = nullptr;
            for (const auto& c : live) {
                const bool reserved = std::any_of(ag->reserved.begin(), ag->reserved.end(),
                                                  [&](const ReservedSlot& s) { return s.element == c.element; });
                if (reserved && (pick == nullptr || better(c, *pick)))
                    pick = &c;
            }
            if (pick != nullptr) {
                d.element = pick->element;
                d.reserved = true;
                return d;
            }
        }
    }
    const RouteCandidate* pick = &live.front();
    for (const auto& c : live)
        if (better(c, *pick))
            pick = &c;
    d.element = pick->element;
    return d;
}

} // namespace adhoc
