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

#include "adhoc/errors.hpp"

namespace adhoc {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NodeDown: return "NodeDown";
    case ErrorCode::InsufficientHeadroom: return "InsufficientHeadroom";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::UnknownCloudlet: return "UnknownCloudlet";
    case ErrorCode::EngineMismatch: return "EngineMismatch";
    case ErrorCode::NoLiveElement: return "NoLiveElement";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MetadataQuorumUnavailable: return "MetadataQuorumUnavailable";
    case ErrorCode::QuorumUnavailable: return "QuorumUnavailable";
    case ErrorCode::NoSourceReplica: return "NoSourceReplica";
    case ErrorCode::TaskLost: return "TaskLost";
    case ErrorCode::UnknownAgreement: return "UnknownAgreement";
    case ErrorCode::InconsistentPlan: return "InconsistentPlan";
    case ErrorCode::IncompleteLog: return "IncompleteLog";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace adhoc
