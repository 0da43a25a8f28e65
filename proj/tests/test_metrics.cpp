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
#include "adhoc/metrics.hpp"
#include "adhoc/scenario.hpp"
#include "adhoc/simulation.hpp"

#include "support/oracles.hpp"
#include "support/random_scenarios.hpp"

#include <doctest.h>

using namespace adhoc;
using nlohmann::json;

namespace {

void add(EventLog& log, VirtualTime at, std::string kind, json fields)
{
    log.append({at, "test", std::move(kind), std::move(fields)});
}

void element(EventLog& log, VirtualTime at, std::uint32_t id, const char* state)
{
    add(log, at, "element_state", {{"element", id}, {"cloudlet", 0}, {"state", state}});
}

} // namespace

TEST_SUITE("metrics")
{
    TEST_CASE("cloudlet up for six of ten seconds has availability 0.6")
    {
        EventLog log;
        add(log, 0, "cloudlet_created", {{"cloudlet", 0}});
        element(log, 1000, 1, "running");
        element(log, 4000, 2, "running");
        element(log, 5000, 1, "dead");
        element(log, 7000, 2, "throttled");
        element(log, 7000, 2, "dead");
        add(log, 10000, "run_end", json::object());
        const auto r = aggregate_metrics(log);
        CHECK(r.cloudlet_availability.at(0) == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(r == oracle::aggregate_by_intervals(log, 0, 10000));

        const auto late = aggregate_metrics(log, {5000, 10000});
        CHECK(late.cloudlet_availability.at(0) == doctest::Approx(0.4).epsilon(1e-15));
    }

    TEST_CASE("node availability, violations and counters")
    {
        EventLog log;
        add(log, 0, "node_up", {{"node", 3}});
        add(log, 2000, "violation_start", {{"node", 3}});
        add(log, 3000, "violation_end", {{"node", 3}});
        add(log, 4000, "node_down", {{"node", 3}});
        add(log, 4000, "enforcement", {{"node", 3}});
        add(log, 4500, "kv_put", {{"acked", true}});
        add(log, 4600, "kv_get", {{"ok", true}, {"stale", false}});
        add(log, 4700, "kv_get", {{"ok", false}});
        add(log, 4800, "task_lost", json::object());
        add(log, 4900, "adaptation_action", {{"executed", true}, {"action", "add"}});
        add(log, 4900, "adaptation_action", {{"executed", false}, {"action", "add"}});
        add(log, 9000, "node_up", {{"node", 3}});
        add(log, 10000, "run_end", json::object());
        const auto r = aggregate_metrics(log);
        CHECK(r.node_availability.at(3) == doctest::Approx(0.5));
        CHECK(r.node_violation_fraction.at(3) == doctest::Approx(0.1));
        CHECK(r.enforcement_actions == 1);
        CHECK(r.kv == KvSummary{1, 0, 1, 1, 0});
        CHECK(r.tasks_lost == 1);
        CHECK(r.adaptation_actions.at("add") == 1);
        CHECK(r.adaptation_downgraded == 1);
        CHECK(r == oracle::aggregate_by_intervals(log, 0, 10000));
    }

    TEST_CASE("agreement satisfaction is clipped to its window")
    {
        EventLog log;
        add(log, 0, "cloudlet_created", {{"cloudlet", 0}});
        add(log, 0, "agreement_admitted", {{"agreement", 1}, {"start", 2000}, {"end", 6000}, {"elements", {7}}});
        element(log, 3000, 7, "running");
        element(log, 5000, 7, "dead");
        add(log, 10000, "run_end", json::object());
        const auto r = aggregate_metrics(log);
        CHECK(r.agreement_satisfaction.at(1) == doctest::Approx(0.5));
        CHECK(r == oracle::aggregate_by_intervals(log, 0, 10000));
    }

    TEST_CASE("missing run_end is an incomplete log")
    {
        EventLog log;
        add(log, 0, "cloudlet_created", {{"cloudlet", 0}});
        try {
            (void)aggregate_metrics(log);
            FAIL("expected IncompleteLog");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IncompleteLog);
        }
        add(log, 500, "run_end", json::object());
        CHECK_THROWS(aggregate_metrics(log, {0, 1000}));
        CHECK_NOTHROW(aggregate_metrics(log, {0, 500}));
    }

    TEST_CASE("nearest-rank percentiles")
    {
        const std::vector<VirtualTime> v{15, 20, 35, 40, 50};
        CHECK(nearest_rank(v, 5) == 15);
        CHECK(nearest_rank(v, 30) == 20);
        CHECK(nearest_rank(v, 40) == 20);
        CHECK(nearest_rank(v, 50) == 35);
        CHECK(nearest_rank(v, 100) == 50);
        CHECK(nearest_rank({}, 50) == 0);
        std::vector<VirtualTime> hundred;
        for (VirtualTime i = 1; i <= 100; ++i)
            hundred.push_back(i);
        CHECK(nearest_rank(hundred, 95) == 95);
        CHECK(nearest_rank(hundred, 99) == 99);
    }

    TEST_CASE("aggregation matches the interval implementation on random simulations")
    {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            CAPTURE(seed);
            Simulation sim(scenario_from_json(oracle::random_scenario(seed)));
            sim.run();
            const auto& log = sim.log();
            const VirtualTime end = log.entries().back().at;
            CHECK(aggregate_metrics(log) == oracle::aggregate_by_intervals(log, 0, end));
            CHECK(aggregate_metrics(log, {end / 3, end / 2}) == oracle::aggregate_by_intervals(log, end / 3, end / 2));
        }
    }
}
