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

#include "adhoc/errors.hpp"
#include "adhoc/ids.hpp"
#include "adhoc/node.hpp"
#include "adhoc/resources.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace adhoc {

/// Half-open interval [start, end).
struct TimeWindow {
    VirtualTime start = 0;
    VirtualTime end = 0;

    bool overlaps(const TimeWindow& o) const noexcept { return start < o.end && o.start < end; }
    bool contains(VirtualTime t) const noexcept { return start <= t && t < end; }
    bool operator==(const TimeWindow&) const = default;
};

struct ReservationRequest {
    std::string request_id;
    CloudletId cloudlet;
    /// Per element.
    ResourceVector demand;
    int element_count = 1;
    TimeWindow window;
    double availability_target = 0.9;

    std::vector<std::string> validate() const;
};

enum class AgreementState { Active, Expired, Released };

std::string_view to_string(AgreementState s) noexcept;

struct ReservedSlot {
    NodeId node;
    ElementId element;
};

struct Agreement {
    AgreementId id;
    ReservationRequest request;
    std::vector<ReservedSlot> reserved;
    double predicted_availability = 0.0;
    AgreementState state = AgreementState::Active;
};

struct Rejection {
    enum class Reason { AvailabilityUnreachable, CapacityExhausted };

    Reason reason = Reason::CapacityExhausted;
    /// Best availability any feasible placement reached (0 when none was feasible).
    double best_availability = 0.0;
};

std::string_view to_string(Rejection::Reason r) noexcept;

using NegotiationResult = std::variant<Agreement, Rejection>;

/// 1 - prod(1 - p_i): probability that at least one of independent holders is up.
double at_least_one_available(std::span<const double> availabilities);

struct NodeForecast {
    NodeId node;
    /// Predicted fraction of time up.
    double availability = 1.0;
    /// capacity - mean user demand - margin, clamped at zero.
    ResourceVector expected_headroom;
};

struct CapacityForecast {
    TimeWindow window;
    std::vector<NodeForecast> nodes;

    const NodeForecast* find(NodeId id) const;
};

enum class ForecastMode { Oracle, Estimator };

std::string_view to_string(ForecastMode m) noexcept;
std::optional<ForecastMode> parse_forecast_mode(std::string_view s) noexcept;

/// Fraction of [from, to) spent up, given liveness transitions in time order.
double uptime_fraction(std::span<const std::pair<VirtualTime, Liveness>> history, VirtualTime from, VirtualTime to);

struct ForecastInputs {
    const Node* node = nullptr;
    std::span<const std::pair<VirtualTime, Liveness>> history;
};

/// Oracle mode uses the churn model's stationary availability; estimator mode the
/// observed uptime over the trailing `history_window_ms` before `now` (0: all history).
CapacityForecast forecast_capacity(std::span<const ForecastInputs> nodes, TimeWindow window, ForecastMode mode,
                                   VirtualTime now, VirtualTime history_window_ms);

struct CalendarEntry {
    AgreementId agreement;
    TimeWindow window;
    ResourceVector reserved;
};

/// Per-node commitments made by the broker.
class ReservationCalendar {
public:
    void add(NodeId node, CalendarEntry entry);
    void remove(AgreementId agreement);

    /// Sum of reservations in force at `t`.
    ResourceVector reserved_at(NodeId node, VirtualTime t) const;

    /// Componentwise peak of the reserved sum over `window`.
    ResourceVector peak_reserved(NodeId node, const TimeWindow& window) const;

    /// Whether `demand` can be added over `window` without exceeding `usable`.
    bool feasible(NodeId node, const ResourceVector& demand, const TimeWindow& window,
                  const ResourceVector& usable) const;

    const std::vector<CalendarEntry>& entries(NodeId node) const;

private:
    std::map<NodeId, std::vector<CalendarEntry>> by_node_;
};

struct BrokerConfig {
    /// Fleets up to this size are searched exhaustively.
    std::size_t exhaustive_threshold = 10;
};

/// Admission control against forecast capacity and existing commitments.
class Broker {
public:
    explicit Broker(BrokerConfig config = {});

    /// Admits iff element_count distinct calendar-feasible nodes reach the availability target.
    /// On admission the calendar is updated; element ids in `reserved` are left for the caller.
    NegotiationResult negotiate(const ReservationRequest& request, const CapacityForecast& forecast);

    void assign_element(AgreementId id, std::size_t slot, ElementId element);

    /// Frees the calendar entries of an Active agreement. Throws UnknownAgreement otherwise.
    void release(AgreementId id);
    /// Window ended: same bookkeeping as release, state Expired.
    void expire(AgreementId id);

    const Agreement* find(AgreementId id) const;
    const std::map<AgreementId, Agreement>& agreements() const noexcept { return agreements_; }
    const ReservationCalendar& calendar() const noexcept { return calendar_; }
    const BrokerConfig& config() const noexcept { return config_; }

private:
    void close(AgreementId id, AgreementState state);

    BrokerConfig config_;
    ReservationCalendar calendar_;
    std::map<AgreementId, Agreement> agreements_;
    std::uint32_t next_id_ = 1;
};

/// A request arriving at the dispatcher.
struct ServiceRequest {
    CloudletId cloudlet;
    std::optional<AgreementId> agreement;
};

/// A live element the dispatcher may route to.
struct RouteCandidate {
    ElementId element;
    /// Free cpu headroom on the element's node.
    double cpu_headroom = 0.0;
};

struct RoutingDecision {
    ElementId element;
    bool reserved = false;
    /// The request named an agreement the broker does not hold as Active.
    bool unknown_agreement = false;
};

/// Reserved-first routing: a live reserved element of the request's agreement if
/// any, otherwise the live element with most cpu headroom (element id breaks ties).
/// Throws NoLiveElement when `live` is empty.
RoutingDecision dispatch(const ServiceRequest& request, const Broker& broker, std::span<const RouteCandidate> live);

} // namespace adhoc
