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

#include "adhoc/element.hpp"
#include "adhoc/errors.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace adhoc {

struct CloudletPolicy {
    int target_replication = 3;
    VirtualTime heartbeat_interval_ms = 10'000;
    int timeout_multiplier = 3;
    int min_members = 1;
    int max_members = 16;
    /// Utilization fractions that trigger scale-out / contraction.
    double high_watermark = 0.8;
    double low_watermark = 0.2;

    VirtualTime failure_timeout_ms() const noexcept { return heartbeat_interval_ms * timeout_multiplier; }

    std::vector<std::string> validate() const;
};

/// floor(k/2) + 1.
constexpr int majority(int k) noexcept { return k / 2 + 1; }

struct Member {
    ElementId element;
    NodeId node;
    ElementState state = ElementState::Running;
};

struct MembershipView {
    std::uint64_t version = 0;
    std::map<ElementId, Member> members;
    std::map<ElementId, VirtualTime> last_heartbeat;

    bool contains(ElementId e) const { return members.count(e) != 0; }
};

struct KeyReplicas {
    /// Ordered replica set; size <= target replication.
    std::vector<ElementId> replicas;
    /// Latest version assigned to a write of this key.
    std::uint64_t version = 0;
};

using ReplicaMap = std::map<std::string, KeyReplicas>;

/// Metadata changes ordered through the metadata quorum.
struct CreateKey {
    std::string key;
    std::vector<ElementId> replicas;
};
struct SetReplicas {
    std::string key;
    std::vector<ElementId> replicas;
};
struct BumpKeyVersion {
    std::string key;
};
using MetadataMutation = std::variant<CreateKey, SetReplicas, BumpKeyVersion>;

/// Applies a mutation to a replica map. Returns the affected key's version afterwards.
std::uint64_t apply_mutation(ReplicaMap& map, const MetadataMutation& mutation);

/// The client's view of where to send requests; carries the view version it was made from.
struct Binding {
    CloudletId cloudlet;
    std::string client;
    std::optional<std::string> key;
    std::vector<ElementId> elements;
    std::uint64_t view_version = 0;
};

/// Reachability of an element as seen by message delivery (messages to down nodes are lost).
using Reachable = std::function<bool(ElementId)>;

/// Per-cloudlet coordination state: membership, failure detection, metadata.
class Cloudlet {
public:
    Cloudlet(CloudletId id, std::string name, EngineKind engine, CloudletPolicy policy);

    CloudletId id() const noexcept { return id_; }
    const std::string& name() const noexcept { return name_; }
    EngineKind engine() const noexcept { return engine_; }
    const CloudletPolicy& policy() const noexcept { return policy_; }
    const MembershipView& view() const noexcept { return view_; }

    /// Adds a serving element to the view. Re-joining a current member is a no-op.
    const MembershipView& join(const CloudElement& element, VirtualTime now);

    /// Removes an element (orderly leave or detected failure). False when absent.
    bool leave(ElementId element);

    void update_member_state(ElementId element, ElementState state);

    /// Records a heartbeat sent at `sent_at`; older heartbeats never move the timestamp back.
    void record_heartbeat(ElementId element, VirtualTime sent_at);

    /// Members whose last heartbeat is more than m*h old at `t`; they are removed from the view.
    std::set<ElementId> detect_failures(VirtualTime t);

    /// Live replica set for `key` (kv) or the live members (compute), as of the current view.
    Binding bind(const std::string& client, const std::optional<std::string>& key) const;

    /// True when every element of the binding is still a member, or no membership change happened since.
    bool binding_fresh(const Binding& binding) const;

    const ReplicaMap& replica_map() const noexcept { return replicas_; }
    std::uint64_t metadata_version() const noexcept { return metadata_version_; }
    const std::vector<ElementId>& metadata_holders() const noexcept { return holders_; }
    /// Metadata version held by a holder; 0 for non-holders.
    std::uint64_t holder_version(ElementId holder) const;

    /// Applies `mutation` at a majority of metadata holders. Throws MetadataQuorumUnavailable.
    std::uint64_t metadata_quorum_update(const MetadataMutation& mutation, const Reachable& reachable);

    /// Replaces departed holders with current members, copying state from a live up-to-date holder.
    void refresh_metadata_holders(const Reachable& reachable);

private:
    CloudletId id_;
    std::string name_;
    EngineKind engine_;
    CloudletPolicy policy_;
    MembershipView view_;
    ReplicaMap replicas_;
    std::uint64_t metadata_version_ = 0;
    std::vector<ElementId> holders_;
    std::map<ElementId, std::uint64_t> holder_versions_;
};

} // namespace adhoc
