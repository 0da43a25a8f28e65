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

#include "adhoc/node.hpp"

#include "adhoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adhoc {
namespace {

VirtualTime to_ticks(double ms)
{
    return static_cast<VirtualTime>(std::llround(std::max(0.0, ms)));
}

VirtualTime after(VirtualTime now, double ms)
{
    const double limit = static_cast<double>(std::numeric_limits<VirtualTime>::max() - now);
    if (!(ms < limit))
        throw InvariantBreach("virtual time overflow: duration " + std::to_string(ms) + " at t=" + std::to_string(now));
    return now + to_ticks(ms);
}

std::string describe(const ResourceVector& r)
{
    return "(cpu " + std::to_string(r.cpu) + ", memory " + std::to_string(r.memory) + ", storage " +
           std::to_string(r.storage) + ", network " + std::to_string(r.network) + ")";
}

} // namespace

std::string_view to_string(Liveness l) noexcept
{
    return l == Liveness::Up ? "up" : "down";
}

double ChurnModel::stationary_availability() const
{
    const double up = mean_of(up_duration);
    const double down = mean_of(down_duration);
    if (up + down <= 0.0)
        return 1.0;
    return up / (up + down);
}

ResourceVector UserLoadModel::mean_demand(VirtualTime from, VirtualTime to) const
{
    if (kind == Kind::Markov2) {
        const double total = markov.mean_idle_ms + markov.mean_active_ms;
        return markov.idle_demand * (markov.mean_idle_ms / total) +
               markov.active_demand * (markov.mean_active_ms / total);
    }
    if (trace.empty())
        return {};
    if (to <= from) {
        // Degenerate window: the demand in force at `from`.
        ResourceVector at;
        for (const auto& bp : trace)
            if (bp.at <= from)
                at = bp.demand;
        return at;
    }
    ResourceVector acc;
    ResourceVector current;
    VirtualTime cursor = from;
    for (const auto& bp : trace) {
        if (bp.at <= from) {
            current = bp.demand;
            continue;
        }
        if (bp.at >= to)
            break;
        acc += current * static_cast<double>(bp.at - cursor);
        cursor = bp.at;
        current = bp.demand;
    }
    acc += current * static_cast<double>(to - cursor);
    return acc * (1.0 / static_cast<double>(to - from));
}

std::vector<std::string> UserLoadModel::validate(const ResourceVector& capacity) const
{
    std::vector<std::string> out;
    if (kind == Kind::Trace) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const auto& bp = trace[i];
            if (bp.at < 0)
                out.push_back("trace[" + std::to_string(i) + "].at must be >= 0");
            if (i > 0 && bp.at <= trace[i - 1].at)
                out.push_back("trace[" + std::to_string(i) + "].at must be strictly increasing");
            if (!bp.demand.non_negative())
                out.push_back("trace[" + std::to_string(i) + "].demand must be non-negative");
            if (!fits_within(bp.demand, capacity, 0.0))
                out.push_back("trace[" + std::to_string(i) + "].demand " + describe(bp.demand) +
                              " exceeds capacity");
        }
    } else {
        if (!(markov.mean_idle_ms > 0.0))
            out.push_back("markov2.mean_idle_ms must be > 0");
        if (!(markov.mean_active_ms > 0.0))
            out.push_back("markov2.mean_active_ms must be > 0");
        for (const auto* d : {&markov.idle_demand, &markov.active_demand}) {
            const char* which = d == &markov.idle_demand ? "idle_demand" : "active_demand";
            if (!d->non_negative())
                out.push_back(std::string("markov2.") + which + " must be non-negative");
            if (!fits_within(*d, capacity, 0.0))
                out.push_back(std::string("markov2.") + which + " exceeds capacity");
        }
    }
    return out;
}

ResourceVector compute_headroom(const ResourceVector& capacity, const ResourceVector& user_demand,
                                const ResourceVector& margin)
{
    return clamp_non_negative(capacity - user_demand - margin);
}

Node::Node(NodeId id, std::string name, ResourceVector capacity, ResourceVector reserve_margin,
           std::optional<ChurnModel> churn, UserLoadModel user_load)
    : id_(id), name_(std::move(name)), capacity_(capacity), reserve_margin_(reserve_margin),
      churn_(std::move(churn)), user_load_(std::move(user_load))
{
}

ResourceVector Node::headroom() const
{
    if (!up())
        throw Error(ErrorCode::NodeDown, "headroom of down node " + to_string(id_));
    return compute_headroom(capacity_, user_demand_, reserve_margin_);
}

std::optional<ChurnTransition> Node::next_churn_transition(RngStream& stream, VirtualTime now) const
{
    if (!churn_)
        return std::nullopt;
    if (up())
        return ChurnTransition{Liveness::Down, after(now, stream.draw(churn_->up_duration))};
    return ChurnTransition{Liveness::Up, after(now, stream.draw(churn_->down_duration))};
}

ResourceVector Node::advance_user_load(VirtualTime t, RngStream& stream)
{
    if (t < load_time_)
        throw Error(ErrorCode::InvalidArgument, "user load advanced backwards on " + to_string(id_));
    load_time_ = t;
    if (user_load_.kind == UserLoadModel::Kind::Trace) {
        ResourceVector demand;
        for (const auto& bp : user_load_.trace) {
            if (bp.at > t)
                break;
            demand = bp.demand;
        }
        user_demand_ = demand;
        return user_demand_;
    }
    const auto& m = user_load_.markov;
    if (!markov_started_) {
        markov_started_ = true;
        markov_active_ = false;
        markov_next_switch_ = after(t, stream.draw(Exponential{m.mean_idle_ms}));
    }
    while (markov_next_switch_ <= t) {
        markov_active_ = !markov_active_;
        const double mean = markov_active_ ? m.mean_active_ms : m.mean_idle_ms;
        markov_next_switch_ = after(markov_next_switch_, stream.draw(Exponential{mean}));
    }
    user_demand_ = markov_active_ ? m.active_demand : m.idle_demand;
    return user_demand_;
}

std::optional<VirtualTime> Node::next_user_load_change() const
{
    if (user_load_.kind == UserLoadModel::Kind::Markov2) {
        if (!markov_started_)
            return load_time_;
        return markov_next_switch_;
    }
    for (const auto& bp : user_load_.trace)
        if (bp.at > load_time_)
            return bp.at;
    return std::nullopt;
}

} // namespace adhoc
