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
#include "adhoc/scenario.hpp"
#include "adhoc/simulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace adhoc;

namespace {

CloudElement element(std::uint32_t id, std::uint32_t node, EngineKind engine = EngineKind::KvStore)
{
    CloudElement e;
    e.id = ElementId{id};
    e.node = NodeId{node};
    e.cloudlet = CloudletId{0};
    e.engine = engine;
    e.state = ElementState::Running;
    return e;
}

Cloudlet kv_with(std::initializer_list<std::uint32_t> ids)
{
    Cloudlet c(CloudletId{0}, "kv", EngineKind::KvStore, {});
    for (auto id : ids)
        c.join(element(id, id), 0);
    return c;
}

Reachable only(std::set<std::uint32_t> live)
{
    return [live](ElementId e) { return live.count(e.value) != 0; };
}

std::vector<ElementId> ids(std::initializer_list<std::uint32_t> v)
{
    std::vector<ElementId> out;
    for (auto x : v)
        out.push_back(ElementId{x});
    return out;
}

} // namespace

TEST_SUITE("cloudlet")
{
    TEST_CASE("first join creates version 1")
    {
        Cloudlet c(CloudletId{0}, "kv", EngineKind::KvStore, {});
        const auto& v = c.join(element(1, 1), 0);
        CHECK(v.version == 1);
        CHECK(v.members.size() == 1);
        CHECK(v.contains(ElementId{1}));
    }

    TEST_CASE("re-join is idempotent")
    {
        auto c = kv_with({1});
        const auto before = c.view().version;
        c.join(element(1, 1), 50);
        CHECK(c.view().version == before);
        CHECK(c.view().members.size() == 1);
    }

    TEST_CASE("engine mismatch")
    {
        Cloudlet c(CloudletId{0}, "kv", EngineKind::KvStore, {});
        try {
            c.join(element(1, 1, EngineKind::Compute), 0);
            FAIL("expected EngineMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EngineMismatch);
        }
        CHECK(c.view().version == 0);
    }

    TEST_CASE("suspicion threshold is strict")
    {
        CloudletPolicy p;
        p.heartbeat_interval_ms = 10'000;
        p.timeout_multiplier = 3;
        Cloudlet c(CloudletId{0}, "kv", EngineKind::KvStore, p);
        c.join(element(1, 1), 0);
        c.record_heartbeat(ElementId{1}, 100'000);
        CHECK(c.detect_failures(130'000).empty());
        CHECK(c.detect_failures(131'000) == std::set<ElementId>{ElementId{1}});
        CHECK_FALSE(c.view().contains(ElementId{1}));
    }

    TEST_CASE("older heartbeats never move the timestamp back")
    {
        auto c = kv_with({1});
        c.record_heartbeat(ElementId{1}, 500);
        c.record_heartbeat(ElementId{1}, 200);
        CHECK(c.view().last_heartbeat.at(ElementId{1}) == 500);
    }

    TEST_CASE("view version strictly increases on every change")
    {
        auto c = kv_with({});
        std::uint64_t last = c.view().version;
        for (std::uint32_t i = 1; i <= 5; ++i) {
            c.join(element(i, i), 0);
            CHECK(c.view().version > last);
            last = c.view().version;
        }
        for (std::uint32_t i : {3u, 1u}) {
            CHECK(c.leave(ElementId{i}));
            CHECK(c.view().version > last);
            last = c.view().version;
        }
        CHECK_FALSE(c.leave(ElementId{3}));
        CHECK(c.view().version == last);
    }

    TEST_CASE("binding returns the live replicas of a key")
    {
        auto c = kv_with({1, 2, 3});
        c.refresh_metadata_holders(only({1, 2, 3}));
        c.metadata_quorum_update(CreateKey{"x", ids({1, 2, 3})}, only({1, 2, 3}));
        auto b = c.bind("client", std::string("x"));
        CHECK(b.elements == ids({1, 2, 3}));
        CHECK(c.binding_fresh(b));

        c.leave(ElementId{1});
        auto b2 = c.bind("client", std::string("x"));
        CHECK(b2.elements == ids({2, 3}));
        CHECK(b2.view_version > b.view_version);
        CHECK_FALSE(c.binding_fresh(b));
        CHECK(c.binding_fresh(b2));
    }

    TEST_CASE("binding an empty view fails")
    {
        Cloudlet c(CloudletId{0}, "kv", EngineKind::KvStore, {});
        try {
            c.bind("client", std::nullopt);
            FAIL("expected NoLiveElement");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NoLiveElement);
        }
    }

    TEST_CASE("metadata quorum of three")
    {
        auto c = kv_with({1, 2, 3});
        c.refresh_metadata_holders(only({1, 2, 3}));
        REQUIRE(c.metadata_holders().size() == 3);
        CHECK(c.metadata_quorum_update(CreateKey{"x", ids({1, 2, 3})}, only({1, 2})) == 1);
        try {
            c.metadata_quorum_update(BumpKeyVersion{"x"}, only({1}));
            FAIL("expected MetadataQuorumUnavailable");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MetadataQuorumUnavailable);
        }
        CHECK(c.metadata_version() == 1);
    }

    TEST_CASE("a majority of stale holders cannot update")
    {
        auto c = kv_with({1, 2, 3});
        c.refresh_metadata_holders(only({1, 2, 3}));
        c.metadata_quorum_update(CreateKey{"x", ids({1, 2, 3})}, only({1, 2}));
        c.metadata_quorum_update(BumpKeyVersion{"x"}, only({1, 2}));
        CHECK(c.holder_version(ElementId{3}) == 0);
        CHECK_THROWS_AS(c.metadata_quorum_update(BumpKeyVersion{"x"}, only({3})), Error);
    }

    // Two mutations against three holders: every order and every reachable subset per update.
    TEST_CASE("concurrent metadata mutations are totally ordered")
    {
        const MetadataMutation muts[2] = {SetReplicas{"x", ids({4, 5, 6})}, BumpKeyVersion{"x"}};
        int both_applied = 0;
        for (int first = 0; first < 2; ++first) {
            for (unsigned r1 = 0; r1 < 8; ++r1) {
                for (unsigned r2 = 0; r2 < 8; ++r2) {
                    auto c = kv_with({1, 2, 3});
                    c.refresh_metadata_holders(only({1, 2, 3}));
                    c.metadata_quorum_update(CreateKey{"x", ids({1, 2, 3})}, only({1, 2, 3}));
                    auto reach = [](unsigned mask) {
                        std::set<std::uint32_t> s;
                        for (std::uint32_t i = 0; i < 3; ++i)
                            if (mask & (1u << i))
                                s.insert(i + 1);
                        return s;
                    };
                    std::vector<std::pair<int, std::uint64_t>> applied;
                    const unsigned masks[2] = {r1, r2};
                    for (int step = 0; step < 2; ++step) {
                        const int which = step == 0 ? first : 1 - first;
                        const auto live = reach(masks[step]);
                        bool has_latest = false;
                        for (auto h : live)
                            has_latest = has_latest || c.holder_version(ElementId{h}) == c.metadata_version();
                        const bool expect_ok = live.size() >= 2 && has_latest;
                        try {
                            const auto v = c.metadata_quorum_update(muts[which], only(live));
                            CHECK(expect_ok);
                            applied.emplace_back(which, v);
                        } catch (const Error& e) {
                            CHECK(e.code() == ErrorCode::MetadataQuorumUnavailable);
                            CHECK_FALSE(expect_ok);
                        }
                    }
                    for (std::size_t i = 1; i < applied.size(); ++i)
                        CHECK(applied[i].second > applied[i - 1].second);

                    // Replay the successful mutations in version order on a plain map.
                    ReplicaMap expected;
                    apply_mutation(expected, CreateKey{"x", ids({1, 2, 3})});
                    for (const auto& [which, v] : applied)
                        apply_mutation(expected, muts[which]);
                    const auto& got = c.replica_map().at("x");
                    CHECK(got.replicas == expected.at("x").replicas);
                    CHECK(got.version == expected.at("x").version);
                    if (applied.size() == 2) {
                        ++both_applied;
                        CHECK(got.replicas == ids({4, 5, 6}));
                        CHECK(got.version == 1);
                    }
                    // Any two successful quorums intersect, so some holder saw both.
                    if (applied.size() == 2) {
                        int latest = 0;
                        for (auto h : c.metadata_holders())
                            latest += c.holder_version(h) == c.metadata_version();
                        CHECK(latest >= 2);
                    }
                }
            }
        }
        CHECK(both_applied > 0);
    }

    TEST_CASE("holders are replaced from the view")
    {
        auto c = kv_with({1, 2, 3, 4});
        c.refresh_metadata_holders(only({1, 2, 3, 4}));
        CHECK(c.metadata_holders() == ids({1, 2, 3}));
        c.metadata_quorum_update(CreateKey{"x", ids({1, 2, 3})}, only({1, 2, 3}));
        c.leave(ElementId{2});
        c.refresh_metadata_holders(only({1, 3, 4}));
        CHECK(c.metadata_holders() == ids({1, 3, 4}));
        CHECK(c.holder_version(ElementId{4}) == c.metadata_version());
    }

    TEST_CASE("policy validation")
    {
        CloudletPolicy p;
        CHECK(p.validate().empty());
        p.target_replication = 0;
        p.timeout_multiplier = 1;
        p.min_members = 5;
        p.max_members = 2;
        CHECK(p.validate().size() == 3);
    }

    TEST_CASE("majority")
    {
        CHECK(majority(1) == 1);
        CHECK(majority(2) == 2);
        CHECK(majority(3) == 2);
        CHECK(majority(4) == 3);
        CHECK(majority(5) == 3);
    }

    // Detection bound t_d + m*h + L_max over randomized crash times and latencies.
    TEST_CASE("crashed members leave the view within the detection bound")
    {
        constexpr VirtualTime h = 2000, lmax = 300;
        constexpr int m = 3;
        RngStream rng(2024, "crash-times");
        int checked = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const VirtualTime crash_at = 5000 + static_cast<VirtualTime>(rng.below(60'000));
            nlohmann::json j = {
                {"schema_version", 1},
                {"run", {{"until", crash_at + 30'000}, {"seed", 1 + trial}}},
                {"settings",
                 {{"network_latency", {{"kind", "uniform"}, {"a", 1}, {"b", lmax}}},
                  {"adaptation", {{"enabled", false}}}}},
                {"fleet", nlohmann::json::array()},
                {"cloudlets",
                 {{{"id", "kv"},
                   {"policy", {{"heartbeat_interval_ms", h}, {"timeout_multiplier", m}}},
                   {"initial_elements", 3}}}},
                {"faults", {{{"node", "n1"}, {"at", crash_at}}}},
            };
            for (const char* id : {"n0", "n1", "n2"})
                j["fleet"].push_back(
                    {{"id", id}, {"capacity", {{"cpu", 4}, {"memory", 4096}, {"storage", 10000}, {"network", 100}}}});
            Simulation sim(scenario_from_json(j));
            sim.run();

            std::optional<std::uint32_t> victim;
            std::optional<VirtualTime> removed;
            for (const auto& e : sim.log().entries()) {
                if (e.kind == "element_state" && e.fields["node"] == 1)
                    victim = e.fields["element"].get<std::uint32_t>();
                if (e.kind == "member_suspected") {
                    CHECK(e.at >= crash_at);
                    if (victim && e.fields["element"] == *victim && !removed)
                        removed = e.at;
                }
            }
            REQUIRE(victim);
            REQUIRE(removed);
            CHECK(*removed <= crash_at + m * h + lmax);
            ++checked;
        }
        CHECK(checked == 100);
    }
}
