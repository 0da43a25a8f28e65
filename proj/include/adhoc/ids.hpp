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

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace adhoc {

/// Simulated time in integer milliseconds since simulation start.
using VirtualTime = std::int64_t;

/// Strongly typed integral identifier. Tag distinguishes id spaces.
template <typename Tag>
struct Id {
    std::uint32_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) : value(v) {}

    constexpr auto operator<=>(const Id&) const = default;
};

struct NodeTag {};
struct ElementTag {};
struct CloudletTag {};
struct AgreementTag {};

using NodeId = Id<NodeTag>;
using ElementId = Id<ElementTag>;
using CloudletId = Id<CloudletTag>;
using AgreementId = Id<AgreementTag>;

inline std::string to_string(NodeId id) { return "n" + std::to_string(id.value); }
inline std::string to_string(ElementId id) { return "e" + std::to_string(id.value); }
inline std::string to_string(CloudletId id) { return "c" + std::to_string(id.value); }
inline std::string to_string(AgreementId id) { return "a" + std::to_string(id.value); }

} // namespace adhoc

template <typename Tag>
struct std::hash<adhoc::Id<Tag>> {
    std::size_t operator()(const adhoc::Id<Tag>& id) const noexcept
    {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
