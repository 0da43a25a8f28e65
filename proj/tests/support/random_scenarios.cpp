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

#include "support/random_scenarios.hpp"

#include "adhoc/random.hpp"

#include <string>

using nlohmann::json;

namespace oracle {

json random_scenario(std::uint64_t seed)
{
    adhoc::RngStream rng(seed, "scenario");
    auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng.below(hi - lo + 1); };

    json fleet = json::array();
    const auto nodes = pick(3, 6);
    for (std::uint64_t i = 0; i < nodes; ++i) {
        const auto cpu = pick(2, 8);
        json n = {{"id", "n" + std::to_string(i)},
                  {"capacity", {{"cpu", cpu}, {"memory", 8192}, {"storage", 100000}, {"network", 100}}}};
        if (rng.below(4) != 0)
            n["churn"] = {{"mean_up_ms", pick(60, 300) * 1000}, {"mean_down_ms", pick(5, 60) * 1000}};
        if (rng.below(3) == 0)
            n["user_load"] = {{"kind", "markov2"},
                              {"idle_demand", {{"cpu", 0.5}}},
                              {"active_demand", {{"cpu", pick(1, cpu)}, {"memory", 2048}}},
                              {"mean_idle_ms", pick(10, 60) * 1000},
                              {"mean_active_ms", pick(5, 30) * 1000}};
        fleet.push_back(n);
    }

    json cloudlets = json::array();
    cloudlets.push_back({{"id", "store"},
                         {"engine", "kv_store"},
                         {"policy", {{"target_replication", pick(1, 3)}, {"heartbeat_interval_ms", pick(1, 5) * 1000}}},
                         {"initial_elements", pick(1, nodes)}});
    cloudlets.push_back({{"id", "jobs"},
                         {"engine", "compute"},
                         {"policy", {{"min_members", 1}, {"heartbeat_interval_ms", pick(1, 5) * 1000}}},
                         {"initial_elements", pick(1, 2)},
                         {"persistent", rng.below(2) == 0}});

    json s = {{"schema_version", 1},
              {"run", {{"until", 600000}, {"seed", seed}}},
              {"settings",
               {{"network_latency", {{"kind", "uniform"}, {"a", 1}, {"b", pick(2, 50)}}},
                {"report_interval_ms", pick(2, 10) * 1000},
                {"series_interval_ms", 0},
                {"intrusiveness", {{"throttle_first", rng.below(2) == 0}}},
                {"adaptation", {{"enabled", rng.below(3) != 0}, {"epoch_ms", pick(10, 60) * 1000}}}}},
              {"fleet", fleet},
              {"cloudlets", cloudlets},
              {"workloads",
               {{"kv", json::array({{{"cloudlet", "store"},
                                     {"rate_per_s", pick(1, 5)},
                                     {"put_ratio", 0.4},
                                     {"key_space", pick(1, 8)},
                                     {"value_bytes", 4096}}})},
                {"tasks", json::array({{{"cloudlet", "jobs"},
                                        {"rate_per_s", pick(1, 4)},
                                        {"work_units", {{"kind", "exponential"}, {"mean", 0.5}}}}})}}}};

    if (rng.below(2) == 0) {
        const auto start = pick(60, 300) * 1000;
        s["reservations"] = json::array({{{"id", "r1"},
                                          {"cloudlet", "jobs"},
                                          {"submit_at", 1000},
                                          {"demand", {{"cpu", 1}, {"memory", 256}}},
                                          {"element_count", pick(1, 2)},
                                          {"window", {{"start", start}, {"end", start + pick(60, 240) * 1000}}},
                                          {"availability_target", 0.5}}});
    }
    if (rng.below(2) == 0)
        s["faults"] = json::array(
            {{{"node", "n" + std::to_string(rng.below(nodes))}, {"at", pick(30, 500) * 1000}, {"down_for", 20000}}});
    return s;
}

} // namespace oracle
