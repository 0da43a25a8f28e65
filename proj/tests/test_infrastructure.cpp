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

#include "adhoc/infrastructure.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace adhoc;

namespace {

struct Recorder : InfrastructureObserver {
    std::vector<std::string> events;
    std::vector<NodeReport> reports;
    void element_running(const CloudElement& e) override { events.push_back("running " + to_string(e.id)); }
    void element_stopping(const CloudElement& e) override { events.push_back("stopping " + to_string(e.id)); }
    void element_crashed(const CloudElement& e) override { events.push_back("crashed " + to_string(e.id)); }
    void element_dead(const CloudElement& e) override { events.push_back("dead " + to_string(e.id)); }
    void node_report(const NodeReport& r) override { reports.push_back(r); }
};

UserLoadModel spike(VirtualTime at, double cpu)
{
    UserLoadModel m;
    m.trace = {{0, {}}, {at, {cpu, 0, 0, 0}}};
    return m;
}

struct Fixture {
    Kernel kernel{1};
    InfrastructureConfig cfg;
    std::unique_ptr<Infrastructure> infra;
    Recorder rec;

    explicit Fixture(InfrastructureConfig c = {}) : cfg(c)
    {
        infra = std::make_unique<Infrastructure>(kernel, cfg);
        infra->set_observer(&rec);
    }
};

InfrastructureConfig no_reports()
{
    InfrastructureConfig c;
    c.report_interval_ms = 0;
    return c;
}

} // namespace

TEST_SUITE("infrastructure")
{
    TEST_CASE("element runs after the deploy latency")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        CHECK(f.infra->element(e).state == ElementState::Deploying);
        f.kernel.run_until(1999);
        CHECK(f.infra->element(e).state == ElementState::Deploying);
        f.kernel.run_until(2000);
        CHECK(f.infra->element(e).state == ElementState::Running);
        CHECK(f.rec.events == std::vector<std::string>{"running e1"});
    }

    TEST_CASE("allocation above headroom is refused")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        try {
            f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {2.5, 0, 0, 0});
            FAIL("expected InsufficientHeadroom");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientHeadroom);
        }
        CHECK(f.infra->elements().empty());
    }

    TEST_CASE("deploying elements count against headroom")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1.5, 0, 0, 0});
        CHECK_THROWS_AS(f.infra->create_element(n, CloudletId{1}, EngineKind::Compute, {1, 0, 0, 0}), Error);
    }

    TEST_CASE("elements of different cloudlets share a node")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId a = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        const ElementId b = f.infra->create_element(n, CloudletId{1}, EngineKind::KvStore, {1, 0, 0, 0});
        f.kernel.run_until(5000);
        CHECK(f.infra->element(a).serving());
        CHECK(f.infra->element(b).serving());
        CHECK(f.infra->node(n).hosted().size() == 2);
    }

    TEST_CASE("destroy returns the allocation after the shutdown latency")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(3000);
        CHECK(f.infra->free_headroom(n).cpu == doctest::Approx(1.0));
        f.infra->destroy_element(n, e);
        CHECK(f.infra->element(e).state == ElementState::Evicting);
        f.kernel.run_until(3499);
        CHECK(f.infra->element(e).state == ElementState::Evicting);
        f.kernel.run_until(3500);
        CHECK(f.infra->element(e).state == ElementState::Dead);
        CHECK(f.infra->free_headroom(n).cpu == doctest::Approx(2.0));
        try {
            f.infra->destroy_element(n, e);
            FAIL("expected UnknownElement");
        } catch (const Error& ex) {
            CHECK(ex.code() == ErrorCode::UnknownElement);
        }
    }

    TEST_CASE("a crash during eviction kills the element at once")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(3000);
        f.infra->destroy_element(n, e);
        f.kernel.run_until(3100);
        f.infra->crash_node(n);
        CHECK(f.infra->element(e).state == ElementState::Dead);
        CHECK_FALSE(f.infra->element(e).crashed);
        f.infra->recover_node(n);
        f.kernel.run_until(10'000);
        CHECK(f.infra->element(e).state == ElementState::Dead);
    }

    TEST_CASE("persistent elements restart when their node recovers")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {2, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId p = f.infra->create_element(n, CloudletId{0}, EngineKind::KvStore, {0.5, 0, 0, 0}, true);
        const ElementId t = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {0.5, 0, 0, 0}, false);
        f.kernel.run_until(3000);
        f.infra->crash_node(n, 1000);
        CHECK(f.infra->element(p).state == ElementState::Dead);
        CHECK(f.infra->element(t).state == ElementState::Dead);
        f.kernel.run_until(4000);
        CHECK(f.infra->element(p).state == ElementState::Deploying);
        f.kernel.run_until(6000);
        CHECK(f.infra->element(p).state == ElementState::Running);
        CHECK(f.infra->element(t).state == ElementState::Dead);
    }

    TEST_CASE("element transitions follow the lifecycle")
    {
        using S = ElementState;
        CHECK(transition_allowed(S::Deploying, S::Running));
        CHECK(transition_allowed(S::Running, S::Throttled));
        CHECK(transition_allowed(S::Throttled, S::Running));
        CHECK(transition_allowed(S::Throttled, S::Evicting));
        CHECK(transition_allowed(S::Evicting, S::Dead));
        CHECK(transition_allowed(S::Deploying, S::Dead));
        CHECK_FALSE(transition_allowed(S::Dead, S::Running));
        CHECK_FALSE(transition_allowed(S::Evicting, S::Running));
        CHECK_FALSE(transition_allowed(S::Deploying, S::Throttled));
    }

    TEST_CASE("user spike with a low floor throttles to what fits")
    {
        InfrastructureConfig cfg = no_reports();
        cfg.intrusiveness.throttle_floor = 0.1;
        Fixture f(cfg);
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, spike(10'000, 3.8));
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(10'000);
        CHECK(f.infra->violating(n));
        f.kernel.run_until(11'000);
        CHECK(f.infra->element(e).state == ElementState::Running);
        f.kernel.run_until(11'001);
        CHECK(f.infra->element(e).state == ElementState::Throttled);
        CHECK(f.infra->element(e).throttle_factor == doctest::Approx(0.2));
        CHECK_FALSE(f.infra->violating(n));
    }

    TEST_CASE("user spike below the floor evicts")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, spike(10'000, 3.8));
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(11'001);
        CHECK(f.infra->element(e).state == ElementState::Evicting);
        f.kernel.run_until(12'000);
        CHECK(f.infra->element(e).state == ElementState::Dead);
        int evictions = 0;
        for (const auto& le : f.kernel.event_log().entries())
            if (le.kind == "enforcement")
                evictions += le.fields["action"] == "evict";
        CHECK(evictions == 1);
    }

    TEST_CASE("throttled elements are restored when the user leaves")
    {
        InfrastructureConfig cfg = no_reports();
        cfg.intrusiveness.throttle_floor = 0.1;
        Fixture f(cfg);
        UserLoadModel m;
        m.trace = {{0, {}}, {10'000, {3.8, 0, 0, 0}}, {20'000, {0, 0, 0, 0}}};
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, m);
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(15'000);
        CHECK(f.infra->element(e).state == ElementState::Throttled);
        f.kernel.run_until(20'000);
        CHECK(f.infra->element(e).state == ElementState::Running);
        CHECK(f.infra->element(e).throttle_factor == 1.0);
    }

    TEST_CASE("no violation, no actions")
    {
        IntrusivenessPolicy p;
        std::vector<EnforcementCandidate> c{{ElementId{1}, {1, 0, 0, 0}, 1.0, true}};
        CHECK(plan_enforcement({2, 0, 0, 0}, c, p).empty());
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        CHECK(f.infra->enforce_intrusiveness(n, 100'000).empty());
    }

    TEST_CASE("two equal elements over a 1.5 core headroom")
    {
        IntrusivenessPolicy p;
        std::vector<EnforcementCandidate> c{{ElementId{2}, {1, 0, 0, 0}, 1.0, true},
                                            {ElementId{1}, {1, 0, 0, 0}, 1.0, true}};
        const auto actions = plan_enforcement({1.5, 0, 0, 0}, c, p);
        REQUIRE(actions.size() == 1);
        CHECK(actions[0].kind == ControlAction::Kind::Throttle);
        CHECK(actions[0].element == ElementId{1});
        CHECK(actions[0].throttle_factor == doctest::Approx(0.5));
        const auto best = oracle::minimal_enforcement({1.5, 0, 0, 0}, c, p.throttle_floor);
        REQUIRE(best);
        CHECK(*best == oracle::EnforcementCost{0, 1});
    }

    TEST_CASE("enforcement plans are feasible and minimal on small node loads")
    {
        RngStream rng(99, "enforcement");
        for (int trial = 0; trial < 3000; ++trial) {
            IntrusivenessPolicy p;
            p.throttle_floor = 0.1 + 0.1 * static_cast<double>(rng.below(9));
            p.throttle_first = rng.below(4) != 0;
            const std::size_t count = 1 + rng.below(3);
            std::vector<EnforcementCandidate> c;
            for (std::size_t i = 0; i < count; ++i) {
                ResourceVector a{0.25 * static_cast<double>(1 + rng.below(8)),
                                 128.0 * static_cast<double>(rng.below(5)), 0, 0};
                c.push_back({ElementId{static_cast<std::uint32_t>(i + 1)}, a, 1.0, true});
            }
            const ResourceVector headroom{0.25 * static_cast<double>(rng.below(12)),
                                          128.0 * static_cast<double>(rng.below(10)), 0, 0};
            const auto actions = plan_enforcement(headroom, c, p);

            ResourceVector after;
            oracle::EnforcementCost cost;
            for (const auto& e : c) {
                auto it = std::find_if(actions.begin(), actions.end(),
                                       [&](const ControlAction& a) { return a.element == e.element; });
                ResourceVector u = e.allocation;
                if (it != actions.end() && it->kind == ControlAction::Kind::Evict) {
                    ++cost.evictions;
                    continue;
                }
                if (it != actions.end()) {
                    ++cost.throttles;
                    CHECK(it->throttle_factor >= p.throttle_floor - 1e-12);
                    u.cpu *= it->throttle_factor;
                }
                after += u;
            }
            CHECK(fits_within(after, headroom));
            const double floor = p.throttle_first ? p.throttle_floor : 1.0;
            const auto best = oracle::minimal_enforcement(headroom, c, floor);
            REQUIRE(best);
            CHECK(cost == *best);
        }
    }

    TEST_CASE("relaxation never exceeds headroom")
    {
        RngStream rng(5, "relax");
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<EnforcementCandidate> c;
            for (std::uint32_t i = 1; i <= 3; ++i)
                c.push_back({ElementId{i}, {0.5 * (1 + rng.below(4)), 0, 0, 0}, 0.25 * (1 + rng.below(4)), true});
            const ResourceVector headroom{0.5 * rng.below(12), 0, 0, 0};
            double before = 0;
            for (const auto& e : c)
                before += e.allocation.cpu * e.throttle_factor;
            double after = before;
            for (const auto& a : plan_relaxation(headroom, c)) {
                const auto& e = *std::find_if(c.begin(), c.end(), [&](auto& x) { return x.element == a.element; });
                CHECK(a.throttle_factor > e.throttle_factor);
                CHECK(a.throttle_factor <= 1.0);
                after += e.allocation.cpu * (a.throttle_factor - e.throttle_factor);
            }
            CHECK(after <= std::max(before, headroom.cpu) + 1e-9);
        }
    }

    TEST_CASE("report of an idle node")
    {
        Fixture f(no_reports());
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        const ElementId e = f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(3000);
        const NodeReport r = f.infra->publish_node_report(n, 3000);
        CHECK(r.element_usage.at(e) == ResourceVector{1, 0, 0, 0});
        CHECK_FALSE(r.violation);
        CHECK(r.free_headroom().cpu == doctest::Approx(3.0));
    }

    TEST_CASE("down nodes emit no reports")
    {
        Fixture f;
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, {});
        f.infra->start();
        f.kernel.run_until(25'000);
        CHECK(f.rec.reports.size() == 2);
        f.infra->crash_node(n);
        f.kernel.run_until(100'000);
        CHECK(f.rec.reports.size() == 2);
        CHECK_THROWS_AS(f.infra->publish_node_report(n, 100'000), Error);
    }

    TEST_CASE("violation flag matches usage against headroom")
    {
        InfrastructureConfig cfg;
        cfg.report_interval_ms = 500;
        cfg.intrusiveness.enabled = false;
        Fixture f(cfg);
        UserLoadModel m;
        m.kind = UserLoadModel::Kind::Markov2;
        m.markov = {{0.5, 0, 0, 0}, {3.5, 0, 0, 0}, 3000.0, 2000.0};
        const NodeId n = f.infra->add_node("n", {4, 1024, 0, 0}, {}, std::nullopt, m);
        f.infra->start();
        f.infra->create_element(n, CloudletId{0}, EngineKind::Compute, {1, 0, 0, 0});
        f.kernel.run_until(200'000);
        REQUIRE(f.rec.reports.size() > 100);
        int violating = 0;
        for (const auto& r : f.rec.reports) {
            CHECK(r.violation == !fits_within(r.total_usage(), r.headroom));
            violating += r.violation;
        }
        CHECK(violating > 0);
    }
}
