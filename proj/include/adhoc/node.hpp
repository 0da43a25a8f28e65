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

#include "adhoc/ids.hpp"
#include "adhoc/random.hpp"
#include "adhoc/resources.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adhoc {

enum class Liveness { Up, Down };

std::string_view to_string(Liveness l) noexcept;

/// Alternating up/down renewal process.
struct ChurnModel {
    Distribution up_duration = Exponential{3'600'000.0};
    Distribution down_duration = Exponential{400'000.0};

    /// E_up / (E_up + E_down).
    double stationary_availability() const;
};

struct TraceBreakpoint {
    VirtualTime at = 0;
    ResourceVector demand;
};

/// Two-state (idle/active) Markov modulated demand with exponential sojourns.
struct Markov2Load {
    ResourceVector idle_demand;
    ResourceVector active_demand;
    double mean_idle_ms = 1.0;
    double mean_active_ms = 1.0;
};

/// The primary user's demand as a step function of time.
struct UserLoadModel {
    enum class Kind { Trace, Markov2 };

    Kind kind = Kind::Trace;
    /// Demand before the first breakpoint is zero. Empty trace: always zero.
    std::vector<TraceBreakpoint> trace;
    Markov2Load markov;

    /// Time-weighted mean demand over [from, to). Markov2 uses its stationary mean.
    ResourceVector mean_demand(VirtualTime from, VirtualTime to) const;

    std::vector<std::string> validate(const ResourceVector& capacity) const;
};

struct ChurnTransition {
    Liveness next = Liveness::Down;
    VirtualTime at = 0;
};

/// Headroom formula shared by the node and forecasting code:
/// componentwise max(0, capacity - user_demand - margin).
ResourceVector compute_headroom(const ResourceVector& capacity, const ResourceVector& user_demand,
                                const ResourceVector& margin);

/// A physical machine contributing spare capacity.
class Node {
public:
    Node(NodeId id, std::string name, ResourceVector capacity, ResourceVector reserve_margin,
         std::optional<ChurnModel> churn, UserLoadModel user_load);

    NodeId id() const noexcept { return id_; }
    const std::string& name() const noexcept { return name_; }
    const ResourceVector& capacity() const noexcept { return capacity_; }
    const ResourceVector& reserve_margin() const noexcept { return reserve_margin_; }
    const std::optional<ChurnModel>& churn() const noexcept { return churn_; }
    const UserLoadModel& user_load_model() const noexcept { return user_load_; }

    Liveness liveness() const noexcept { return liveness_; }
    bool up() const noexcept { return liveness_ == Liveness::Up; }
    void set_liveness(Liveness l) noexcept { liveness_ = l; }

    const ResourceVector& user_demand() const noexcept { return user_demand_; }

    /// Throws Error(NodeDown) when the node is down.
    ResourceVector headroom() const;

    /// The opposite liveness and when it takes effect, drawing the duration of
    /// the current state from `stream`. Nodes without a churn model never go down.
    std::optional<ChurnTransition> next_churn_transition(RngStream& stream, VirtualTime now) const;

    /// Installs and returns the user demand in force at `t` (t must not go backwards).
    ResourceVector advance_user_load(VirtualTime t, RngStream& stream);

    /// Next time the user demand may change after the last advance, if any.
    std::optional<VirtualTime> next_user_load_change() const;

    std::set<ElementId>& hosted() noexcept { return hosted_; }
    const std::set<ElementId>& hosted() const noexcept { return hosted_; }

private:
    NodeId id_;
    std::string name_;
    ResourceVector capacity_;
    ResourceVector reserve_margin_;
    std::optional<ChurnModel> churn_;
    UserLoadModel user_load_;

    Liveness liveness_ = Liveness::Up;
    ResourceVector user_demand_;
    VirtualTime load_time_ = 0;
    bool markov_started_ = false;
    bool markov_active_ = false;
    VirtualTime markov_next_switch_ = 0;
    std::set<ElementId> hosted_;
};

} // namespace adhoc
