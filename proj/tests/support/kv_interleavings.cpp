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

#include "support/kv_interleavings.hpp"

#include "adhoc/cloudlet.hpp"
#include "adhoc/kv_store.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace adhoc;

namespace oracle {
namespace {

constexpr int kReplicas = 3;
const std::string kKey = "x";

struct World {
    Cloudlet cloudlet{CloudletId{0}, "kv", EngineKind::KvStore, {}};
    KvEngine kv;
    std::set<std::uint32_t> down;
    std::uint64_t acked = 0;
    std::map<std::uint64_t, std::string> written;
    int data_ops = 0;
    int crashes = 0;
    bool detected = false;
    std::vector<std::string> trace;

    Reachable reachable() const
    {
        auto d = down;
        return [d](ElementId e) { return d.count(e.value) == 0; };
    }
};

CloudElement member(std::uint32_t id)
{
    CloudElement e;
    e.id = ElementId{id};
    e.node = NodeId{id};
    e.cloudlet = CloudletId{0};
    e.engine = EngineKind::KvStore;
    e.state = ElementState::Running;
    return e;
}

World initial()
{
    World w;
    for (std::uint32_t id = 1; id <= 4; ++id)
        w.cloudlet.join(member(id), 0);
    w.cloudlet.refresh_metadata_holders(w.reachable());
    return w;
}

int live_synced(const World& w)
{
    return static_cast<int>(w.kv.live_replicas(w.cloudlet, kKey, w.reachable()).size());
}

void explore(World& w, int max_data, int max_crash, InterleavingReport& rep)
{
    ++rep.schedules;
    auto fail = [&](const std::string& what) {
        if (rep.first_failures.size() < 5) {
            std::string t;
            for (const auto& s : w.trace)
                t += s + " ";
            rep.first_failures.push_back(what + ": " + t);
        }
    };

    auto step = [&](const std::string& label, auto&& body) {
        World next = w;
        next.trace.push_back(label);
        body(next);
        explore(next, max_data, max_crash, rep);
    };

    if (w.data_ops < max_data) {
        step("put", [&](World& n) {
            ++n.data_ops;
            const std::string value = "value-" + std::to_string(n.data_ops);
            auto placement = [](const std::string&, int k) {
                std::vector<ElementId> r;
                for (int i = 1; i <= k; ++i)
                    r.push_back(ElementId{static_cast<std::uint32_t>(i)});
                return r;
            };
            // The version is assigned before the write round; remember what it will carry.
            const auto before = n.cloudlet.replica_map().count(kKey) ? n.cloudlet.replica_map().at(kKey).version : 0;
            n.written[before + 1] = value;
            try {
                const auto v = n.kv.put(n.cloudlet, kKey, value, n.reachable(), placement);
                n.acked = std::max(n.acked, v);
            } catch (const Error&) {
            }
        });
        step("get", [&](World& n) {
            ++n.data_ops;
            if (!n.cloudlet.replica_map().count(kKey))
                return;
            const bool majority_live = live_synced(n) >= majority(kReplicas);
            rep.majority_gets += majority_live;
            try {
                const auto v = n.kv.get(n.cloudlet, kKey, n.reachable());
                if (majority_live && v.version < n.acked) {
                    ++rep.stale_reads;
                    fail("stale read v" + std::to_string(v.version) + " < acked v" + std::to_string(n.acked));
                }
                auto it = n.written.find(v.version);
                if (it == n.written.end() || it->second != v.value)
                    ++rep.wrong_values;
            } catch (const Error& e) {
                if (majority_live && n.acked > 0) {
                    ++rep.unavailable_with_majority;
                    fail(std::string("get failed with majority live: ") + e.what());
                }
            }
        });
    }
    if (w.crashes < max_crash) {
        for (std::uint32_t id = 1; id <= 4; ++id) {
            if (w.down.count(id))
                continue;
            step("crash(e" + std::to_string(id) + ")", [&](World& n) {
                ++n.crashes;
                n.down.insert(id);
                n.kv.store(ElementId{id}).synced = false;
            });
        }
    }
    for (std::uint32_t id : w.down) {
        step("recover(e" + std::to_string(id) + ")", [&](World& n) {
            n.down.erase(id);
            if (!n.cloudlet.view().contains(ElementId{id})) {
                n.cloudlet.join(member(id), 0);
                n.cloudlet.refresh_metadata_holders(n.reachable());
            }
            n.kv.resync(n.cloudlet, ElementId{id}, n.reachable());
        });
    }
    if (!w.detected && !w.down.empty()) {
        step("detect", [&](World& n) {
            n.detected = true;
            for (std::uint32_t id : n.down)
                n.cloudlet.leave(ElementId{id});
            n.cloudlet.refresh_metadata_holders(n.reachable());
            if (!n.cloudlet.replica_map().count(kKey))
                return;
            const auto& reps = n.cloudlet.replica_map().at(kKey).replicas;
            for (const auto& [id, m] : n.cloudlet.view().members) {
                if (std::find(reps.begin(), reps.end(), id) != reps.end() || n.down.count(id.value))
                    continue;
                try {
                    n.kv.repair_replicas(n.cloudlet, kKey, id, n.reachable());
                } catch (const Error&) {
                }
                break;
            }
        });
    }
}

} // namespace

InterleavingReport explore_kv_interleavings(int max_data_ops, int max_crashes)
{
    InterleavingReport rep;
    World w = initial();
    explore(w, max_data_ops, max_crashes, rep);
    return rep;
}

} // namespace oracle
