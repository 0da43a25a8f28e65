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

#include "adhoc/kv_store.hpp"

#include <algorithm>

namespace adhoc {

bool ReplicaStore::apply(const VersionedValue& v)
{
    auto it = data_.find(v.key);
    if (it != data_.end() && it->second.version >= v.version)
        return false;
    data_[v.key] = v;
    return true;
}

std::optional<VersionedValue> ReplicaStore::read(const std::string& key) const
{
    auto it = data_.find(key);
    if (it == data_.end())
        return std::nullopt;
    return it->second;
}

PutRound::PutRound(VersionedValue value, std::vector<ElementId> replicas, int quorum)
    : value_(std::move(value)), targets_(std::move(replicas)), quorum_(quorum)
{
}

void PutRound::on_ack(ElementId from)
{
    if (std::find(targets_.begin(), targets_.end(), from) != targets_.end())
        acked_.insert(from);
}

GetRound::GetRound(std::string key, std::vector<ElementId> replicas, int quorum)
    : key_(std::move(key)), targets_(std::move(replicas)), quorum_(quorum)
{
}

void GetRound::on_reply(ElementId from, std::optional<VersionedValue> value)
{
    if (std::find(targets_.begin(), targets_.end(), from) != targets_.end())
        replies_.emplace(from, std::move(value));
}

std::optional<VersionedValue> GetRound::result() const
{
    std::optional<VersionedValue> best;
    for (const auto& [from, v] : replies_)
        if (v && (!best || v->version > best->version))
            best = v;
    return best;
}

std::vector<ElementId> GetRound::stale_responders() const
{
    const auto best = result();
    std::vector<ElementId> out;
    if (!best)
        return out;
    for (const auto& [from, v] : replies_)
        if (!v || v->version < best->version)
            out.push_back(from);
    return out;
}

ReplicaStore& KvEngine::store(ElementId element)
{
    return stores_[element];
}

const ReplicaStore* KvEngine::find_store(ElementId element) const
{
    auto it = stores_.find(element);
    return it == stores_.end() ? nullptr : &it->second;
}

void KvEngine::drop_store(ElementId element)
{
    stores_.erase(element);
}

bool KvEngine::responsive(ElementId e, const Reachable& reachable) const
{
    if (!reachable(e))
        return false;
    const auto* s = find_store(e);
    return s == nullptr || s->synced;
}

std::vector<ElementId> KvEngine::live_replicas(const Cloudlet& cloudlet, const std::string& key,
                                               const Reachable& reachable) const
{
    std::vector<ElementId> out;
    auto it = cloudlet.replica_map().find(key);
    if (it == cloudlet.replica_map().end())
        return out;
    for (ElementId e : it->second.replicas)
        if (responsive(e, reachable))
            out.push_back(e);
    return out;
}

std::uint64_t KvEngine::put(Cloudlet& cloudlet, const std::string& key, std::string value,
                            const Reachable& reachable, const ReplicaPlacement& placement)
{
    if (cloudlet.engine() != EngineKind::KvStore)
        throw Error(ErrorCode::EngineMismatch, "put on non-kv cloudlet " + cloudlet.name());
    const int k = cloudlet.policy().target_replication;
    try {
        if (!cloudlet.replica_map().count(key)) {
            auto replicas = placement(key, k);
            if (replicas.empty())
                throw Error(ErrorCode::QuorumUnavailable, "no element can hold " + key);
            cloudlet.metadata_quorum_update(CreateKey{key, std::move(replicas)}, reachable);
        }
        cloudlet.metadata_quorum_update(BumpKeyVersion{key}, reachable);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MetadataQuorumUnavailable)
            throw Error(ErrorCode::QuorumUnavailable, e.what());
        throw;
    }
    const auto& entry = cloudlet.replica_map().at(key);
    PutRound round(VersionedValue{key, std::move(value), entry.version}, entry.replicas, majority(k));
    for (ElementId r : round.targets()) {
        if (!reachable(r))
            continue;
        store(r).apply(round.value());
        round.on_ack(r);
    }
    if (!round.acked())
        throw Error(ErrorCode::QuorumUnavailable, std::to_string(round.acks()) + " acks for " + key + " v" +
                                                      std::to_string(round.value().version));
    return round.value().version;
}

VersionedValue KvEngine::get(Cloudlet& cloudlet, const std::string& key, const Reachable& reachable)
{
    if (cloudlet.engine() != EngineKind::KvStore)
        throw Error(ErrorCode::EngineMismatch, "get on non-kv cloudlet " + cloudlet.name());
    auto it = cloudlet.replica_map().find(key);
    if (it == cloudlet.replica_map().end())
        throw Error(ErrorCode::UnknownKey, key);
    GetRound round(key, it->second.replicas, majority(cloudlet.policy().target_replication));
    for (ElementId r : round.targets())
        if (responsive(r, reachable))
            round.on_reply(r, store(r).read(key));
    if (!round.complete())
        throw Error(ErrorCode::QuorumUnavailable,
                    std::to_string(round.replies()) + " replies for " + key);
    auto best = round.result();
    if (!best)
        throw Error(ErrorCode::UnknownKey, key + " has no stored value");
    for (ElementId stale : round.stale_responders())
        store(stale).apply(*best);
    return *best;
}

void KvEngine::repair_replicas(Cloudlet& cloudlet, const std::string& key, ElementId target,
                               const Reachable& reachable)
{
    auto it = cloudlet.replica_map().find(key);
    if (it == cloudlet.replica_map().end())
        throw Error(ErrorCode::UnknownKey, key);
    if (!reachable(target) || !cloudlet.view().contains(target))
        throw Error(ErrorCode::InvalidArgument, "repair target " + to_string(target) + " is not a running member");
    const auto& replicas = it->second.replicas;
    std::optional<VersionedValue> best;
    bool any_source = false;
    for (ElementId r : replicas) {
        if (r == target || !responsive(r, reachable))
            continue;
        any_source = true;
        auto v = store(r).read(key);
        if (v && (!best || v->version > best->version))
            best = v;
    }
    const bool target_is_replica = std::find(replicas.begin(), replicas.end(), target) != replicas.end();
    if (!any_source && !(target_is_replica && responsive(target, reachable)))
        throw Error(ErrorCode::NoSourceReplica, "every replica of " + key + " is lost");
    if (best)
        store(target).apply(*best);
    if (target_is_replica)
        return;

    std::vector<ElementId> next;
    for (ElementId r : replicas)
        if (cloudlet.view().contains(r))
            next.push_back(r);
    const auto k = static_cast<std::size_t>(cloudlet.policy().target_replication);
    if (next.size() >= k)
        std::erase_if(next, [&](ElementId r) { return !responsive(r, reachable); });
    if (next.size() >= k)
        throw Error(ErrorCode::InvalidArgument, key + " is not under-replicated");
    next.push_back(target);
    cloudlet.metadata_quorum_update(SetReplicas{key, std::move(next)}, reachable);
}

void KvEngine::resync(const Cloudlet& cloudlet, ElementId element, const Reachable& reachable)
{
    ReplicaStore& mine = store(element);
    for (const auto& [key, entry] : cloudlet.replica_map()) {
        if (std::find(entry.replicas.begin(), entry.replicas.end(), element) == entry.replicas.end())
            continue;
        for (ElementId r : entry.replicas) {
            if (r == element || !responsive(r, reachable))
                continue;
            if (auto v = store(r).read(key))
                mine.apply(*v);
        }
    }
    mine.synced = true;
}

} // namespace adhoc
