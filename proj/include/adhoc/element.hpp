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
#include "adhoc/resources.hpp"

#include <optional>
#include <string_view>

namespace adhoc {

/// Workload class an engine executes; fixed per cloudlet.
enum class EngineKind { Compute, KvStore };

enum class ElementState { Deploying, Running, Throttled, Evicting, Dead };

std::string_view to_string(EngineKind k) noexcept;
std::string_view to_string(ElementState s) noexcept;
std::optional<EngineKind> parse_engine_kind(std::string_view s) noexcept;

/// Deploying->Running, Running<->Throttled, any->Evicting->Dead, any->Dead.
/// Dead->Deploying is the restart of a persistent element after its node recovers.
bool transition_allowed(ElementState from, ElementState to) noexcept;

/// One cloudlet's software on one node.
struct CloudElement {
    ElementId id;
    NodeId node;
    CloudletId cloudlet;
    EngineKind engine = EngineKind::Compute;
    ResourceVector allocation;
    ElementState state = ElementState::Deploying;
    /// Applied to cpu while throttled, in (0, 1].
    double throttle_factor = 1.0;
    bool persistent = true;
    /// Dead because its node crashed (eligible for restart), not because it was evicted.
    bool crashed = false;

    bool serving() const noexcept { return state == ElementState::Running || state == ElementState::Throttled; }
    bool alive() const noexcept { return state != ElementState::Dead; }

    double effective_cpu() const noexcept { return serving() ? allocation.cpu * throttle_factor : 0.0; }

    /// Resources held on the node: allocation with throttled cpu, zero once dead.
    ResourceVector usage() const noexcept
    {
        if (!alive())
            return {};
        ResourceVector u = allocation;
        u.cpu *= throttle_factor;
        return u;
    }
};

} // namespace adhoc
