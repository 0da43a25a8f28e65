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

#include "adhoc/cloudlet.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adhoc {

struct VersionedValue {
    std::string key;
    std::string value;
    std::uint64_t version = 0;

    bool operator==(const VersionedValue&) const = default;
};

/// The data one kv element holds for its cloudlet.
class ReplicaStore {
public:
    /// Stores `v` when it is newer than what is held. Returns whether it was stored.
    bool apply(const VersionedValue& v);
    std::optional<VersionedValue> read(const std::string& key) const;

    const std::map<std::string, VersionedValue>& data() const noexcept { return data_; }
    void clear() noexcept { data_.clear(); }

    /// False after a restart until the element has been brought up to date.
    bool synced = true;

private:
    std::map<std::string, VersionedValue> data_;
};

/// Coordinator side of a quorum write: collects acks from distinct replicas.
class PutRound {
public:
    PutRound(VersionedValue value, std::vector<ElementId> replicas, int quorum);

    const VersionedValue& value() const noexcept { return value_; }
    const std::vector<ElementId>& targets() const noexcept { return targets_; }

    void on_ack(ElementId from);
    int acks() const noexcept { return static_cast<int>(acked_.size()); }
    bool acked() const noexcept { return acks() >= quorum_; }

private:
    VersionedValue value_;
    std::vector<ElementId> targets_;
    int quorum_;
    std::set<ElementId> acked_;
};

/// Coordinator side of a quorum read: highest version among a majority of replies wins.
class GetRound {
public:
    GetRound(std::string key, std::vector<ElementId> replicas, int quorum);

    const std::string& key() const noexcept { return key_; }
    const std::vector<ElementId>& targets() const noexcept { return targets_; }

    void on_reply(ElementId from, std::optional<VersionedValue> value);
    int replies() const noexcept { return static_cast<int>(replies_.size()); }
    bool complete() const noexcept { return replies() >= quorum_; }

    /// Highest-version reply, if any responder held the key.
    std::optional<VersionedValue> result() const;
    /// Responders holding an older version than result() (or nothing).
    std::vector<ElementId> stale_responders() const;

private:
    std::string key_;
    std::vector<ElementId> targets_;
    int quorum_;
    std::map<ElementId, std::optional<VersionedValue>> replies_;
};

/// Chooses up to k replica elements for a new key.
using ReplicaPlacement = std::function<std::vector<ElementId>(const std::string& key, int k)>;

/// Replicated key-value engine: one ReplicaStore per element, majority quorums over
/// each key's replica set, versions ordered by the cloudlet metadata quorum.
class KvEngine {
public:
    ReplicaStore& store(ElementId element);
    const ReplicaStore* find_store(ElementId element) const;
    void drop_store(ElementId element);

    /// Writes to the key's replica set; acknowledged once a majority stored it.
    std::uint64_t put(Cloudlet& cloudlet, const std::string& key, std::string value, const Reachable& reachable,
                      const ReplicaPlacement& placement);

    /// Reads a majority and returns the highest version, repairing stale responders.
    VersionedValue get(Cloudlet& cloudlet, const std::string& key, const Reachable& reachable);

    /// Copies the freshest live version of `key` to `target` and records it in the replica set.
    void repair_replicas(Cloudlet& cloudlet, const std::string& key, ElementId target, const Reachable& reachable);

    /// Brings a restarted element's keys up to date from live peers and marks it synced.
    void resync(const Cloudlet& cloudlet, ElementId element, const Reachable& reachable);

    /// Replicas of `key` that are reachable and synced.
    std::vector<ElementId> live_replicas(const Cloudlet& cloudlet, const std::string& key,
                                         const Reachable& reachable) const;

private:
    bool responsive(ElementId e, const Reachable& reachable) const;

    std::map<ElementId, ReplicaStore> stores_;
};

} // namespace adhoc
