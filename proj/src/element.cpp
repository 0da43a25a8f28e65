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

#include "adhoc/element.hpp"

namespace adhoc {

std::string_view to_string(EngineKind k) noexcept
{
    return k == EngineKind::Compute ? "compute" : "kv_store";
}

std::string_view to_string(ElementState s) noexcept
{
    switch (s) {
    case ElementState::Deploying: return "deploying";
    case ElementState::Running: return "running";
    case ElementState::Throttled: return "throttled";
    case ElementState::Evicting: return "evicting";
    case ElementState::Dead: return "dead";
    }
    return "?";
}

std::optional<EngineKind> parse_engine_kind(std::string_view s) noexcept
{
    if (s == "compute")
        return EngineKind::Compute;
    if (s == "kv_store")
        return EngineKind::KvStore;
    return std::nullopt;
}

bool transition_allowed(ElementState from, ElementState to) noexcept
{
    using S = ElementState;
    if (to == S::Dead)
        return from != S::Dead;
    if (to == S::Evicting)
        return from != S::Dead && from != S::Evicting;
    switch (from) {
    case S::Deploying: return to == S::Running;
    case S::Running: return to == S::Throttled;
    case S::Throttled: return to == S::Running;
    case S::Evicting: return false;
    case S::Dead: return to == S::Deploying;
    }
    return false;
}

} // namespace adhoc
