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

#include "adhoc/cloudlet.hpp"

#include <algorithm>

namespace adhoc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

std::vector<std::string> CloudletPolicy::validate() const
{
    std::vector<std::string> out;
    if (target_replication < 1)
        out.push_back("target_replication must be >= 1");
    if (heartbeat_interval_ms <= 0)
        out.push_back("heartbeat_interval_ms must be > 0");
    if (timeout_multiplier < 2)
        out.push_back("timeout_multiplier must be >= 2");
    if (min_members < 0)
        out.push_back("min_members must be >= 0");
    if (min_members > max_members)
        out.push_back("min_members must be <= max_members");
    if (!(low_watermark >= 0.0 && low_watermark <= high_watermark && high_watermark <= 1.0))
        out.push_back("watermarks must satisfy 0 <= low <= high <= 1");
    return out;
}

std::uint64_t apply_mutation(ReplicaMap& map, const MetadataMutation& mutation)
{
    return std::visit(overloaded{
                          [&](const CreateKey& m) {
                              auto& entry = map[m.key];
                              if (entry.replicas.empty())
                                  entry.replicas = m.replicas;
                              return entry.version;
                          },
                          [&](const SetReplicas& m) {
                              auto it = map.find(m.key);
                              if (it == map.end())
                                  throw Error(ErrorCode::UnknownKey, m.key);
                              it->second.replicas = m.replicas;
                              return it->second.version;
                          },
                          [&](const BumpKeyVersion& m) {
                              auto it = map.find(m.key);
                              if (it == map.end())
                                  throw Error(ErrorCode::UnknownKey, m.key);
                              return ++it->second.version;
                          },
                      },
                      mutation);
}

Cloudlet::Cloudlet(CloudletId id, std::string name, EngineKind engine, CloudletPolicy policy)
    : id_(id), name_(std::move(name)), engine_(engine), policy_(policy)
{
}

const MembershipView& Cloudlet::join(const CloudElement& element, VirtualTime now)
{
    if (element.engine != engine_)
        throw Error(ErrorCode::EngineMismatch,
                    to_string(element.id) + " runs " + std::string(to_string(element.engine)) + ", cloudlet " +
                        name_ + " needs " + std::string(to_string(engine_)));
    if (element.cloudlet != id_)
        throw Error(ErrorCode::InvalidArgument, to_string(element.id) + " belongs to another cloudlet");
    if (!element.serving())
        throw Error(ErrorCode::InvalidArgument, to_string(element.id) + " is not running");
    if (view_.contains(element.id))
        return view_;
    view_.members.emplace(element.id, Member{element.id, element.node, element.state});
    view_.last_heartbeat[element.id] = now;
    ++view_.version;
    return view_;
}

bool Cloudlet::leave(ElementId element)
{
    if (view_.members.erase(element) == 0)
        return false;
    view_.last_heartbeat.erase(element);
    ++view_.version;
    return true;
}

void Cloudlet::update_member_state(ElementId element, ElementState state)
{
    auto it = view_.members.find(element);
    if (it != view_.members.end())
        it->second.state = state;
}

void Cloudlet::record_heartbeat(ElementId element, VirtualTime sent_at)
{
    auto it = view_.last_heartbeat.find(element);
    if (it == view_.last_heartbeat.end())
        return;
    it->second = std::max(it->second, sent_at);
}

std::set<ElementId> Cloudlet::detect_failures(VirtualTime t)
{
    std::set<ElementId> suspected;
    for (const auto& [id, last] : view_.last_heartbeat)
        if (t - last > policy_.failure_timeout_ms())
            suspected.insert(id);
    for (ElementId id : suspected)
        leave(id);
    return suspected;
}

Binding Cloudlet::bind(const std::string& client, const std::optional<std::string>& key) const
{
    if (view_.members.empty())
        throw Error(ErrorCode::NoLiveElement, "cloudlet " + name_ + " has no members");
    Binding b;
    b.cloudlet = id_;
    b.client = client;
    b.key = key;
    b.view_version = view_.version;
    if (key) {
        auto it = replicas_.find(*key);
        if (it == replicas_.end())
            throw Error(ErrorCode::UnknownKey, *key);
        for (ElementId e : it->second.replicas)
            if (view_.contains(e))
                b.elements.push_back(e);
    } else {
        for (const auto& [id, m] : view_.members)
            b.elements.push_back(id);
    }
    if (b.elements.empty())
        throw Error(ErrorCode::NoLiveElement, "no live replica in cloudlet " + name_);
    return b;
}

bool Cloudlet::binding_fresh(const Binding& binding) const
{
    if (binding.view_version == view_.version)
        return true;
    return std::all_of(binding.elements.begin(), binding.elements.end(),
                       [&](ElementId e) { return view_.contains(e); });
}

std::uint64_t Cloudlet::holder_version(ElementId holder) const
{
    auto it = holder_versions_.find(holder);
    return it == holder_versions_.end() ? 0 : it->second;
}

std::uint64_t Cloudlet::metadata_quorum_update(const MetadataMutation& mutation, const Reachable& reachable)
{
    std::vector<ElementId> live;
    bool has_latest = false;
    for (ElementId h : holders_) {
        if (!reachable(h))
            continue;
        live.push_back(h);
        has_latest = has_latest || holder_version(h) == metadata_version_;
    }
    if (holders_.empty() || static_cast<int>(live.size()) < majority(static_cast<int>(holders_.size())) ||
        !has_latest)
        throw Error(ErrorCode::MetadataQuorumUnavailable,
                    std::to_string(live.size()) + " of " + std::to_string(holders_.size()) +
                        " metadata holders reachable in " + name_);
    apply_mutation(replicas_, mutation);
    ++metadata_version_;
    for (ElementId h : live)
        holder_versions_[h] = metadata_version_;
    return metadata_version_;
}

void Cloudlet::refresh_metadata_holders(const Reachable& reachable)
{
    std::erase_if(holders_, [&](ElementId h) {
        if (view_.contains(h))
            return false;
        holder_versions_.erase(h);
        return true;
    });
    const std::size_t target =
        std::min<std::size_t>(static_cast<std::size_t>(policy_.target_replication), view_.members.size());
    bool source = metadata_version_ == 0;
    for (ElementId h : holders_)
        source = source || (reachable(h) && holder_version(h) == metadata_version_);
    if (!source)
        return;
    for (const auto& [id, m] : view_.members) {
        if (holders_.size() >= target)
            break;
        if (std::find(holders_.begin(), holders_.end(), id) != holders_.end() || !reachable(id))
            continue;
        holders_.push_back(id);
        holder_versions_[id] = metadata_version_;
    }
}

} // namespace adhoc
