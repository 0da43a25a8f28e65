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

#include "adhoc/adaptation.hpp"
#include "adhoc/cloudlet.hpp"
#include "adhoc/intrusiveness.hpp"
#include "adhoc/node.hpp"
#include "adhoc/qos.hpp"
#include "adhoc/random.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adhoc {

inline constexpr int kScenarioSchemaVersion = 1;

struct RunSpec {
    VirtualTime until = 3'600'000;
    std::uint64_t seed = 1;
    bool operator==(const RunSpec&) const = default;
};

struct Settings {
    VirtualTime deploy_latency_ms = 2000;
    VirtualTime shutdown_latency_ms = 500;
    Distribution network_latency = Constant{5.0};
    VirtualTime report_interval_ms = 10'000;
    /// Spacing of rows in series.csv; 0 disables the series.
    VirtualTime series_interval_ms = 60'000;
    /// Replica copy throughput.
    double copy_bytes_per_ms = 10'000.0;
    /// Default reserve margin as a fraction of capacity.
    double margin_fraction = 0.1;
    IntrusivenessPolicy intrusiveness;
    AdaptationPolicy adaptation;
    ForecastMode forecast_mode = ForecastMode::Oracle;
    /// Trailing window for the estimator; 0 uses all history.
    VirtualTime history_window_ms = 0;
    std::size_t exhaustive_threshold = 10;
};

struct NodeSpec {
    std::string id;
    ResourceVector capacity;
    /// Unset means margin_fraction * capacity.
    std::optional<ResourceVector> margin;
    std::optional<ChurnModel> churn;
    UserLoadModel user_load;
};

struct CloudletSpec {
    std::string id;
    EngineKind engine = EngineKind::KvStore;
    CloudletPolicy policy;
    ResourceVector element_allocation{1.0, 256.0, 1024.0, 10.0};
    /// Node ids; empty means automatic placement of `initial_elements`.
    std::vector<std::string> placement;
    int initial_elements = 3;
    bool persistent = true;
};

struct TaskWorkload {
    std::string cloudlet;
    enum class Arrivals { Poisson, ConstantInterval } arrivals = Arrivals::Poisson;
    double rate_per_s = 1.0;
    /// Task size in cpu-seconds.
    Distribution work_units = Exponential{1.0};
    VirtualTime start = 0;
    std::optional<VirtualTime> stop;
    /// Reservation id whose agreement the requests are routed under.
    std::optional<std::string> reservation;
};

struct KvWorkload {
    std::string cloudlet;
    double rate_per_s = 1.0;
    double put_ratio = 0.5;
    int key_space = 16;
    double value_bytes = 1024.0;
    VirtualTime start = 0;
    std::optional<VirtualTime> stop;
};

struct ReservationSpec {
    std::string id;
    std::string cloudlet;
    VirtualTime submit_at = 0;
    ResourceVector demand;
    int element_count = 1;
    TimeWindow window;
    double availability_target = 0.9;
};

struct FaultSpec {
    std::string node;
    VirtualTime at = 0;
    std::optional<VirtualTime> down_for;
};

struct Scenario {
    int schema_version = kScenarioSchemaVersion;
    RunSpec run;
    Settings settings;
    std::vector<NodeSpec> fleet;
    std::vector<CloudletSpec> cloudlets;
    std::vector<TaskWorkload> task_workloads;
    std::vector<KvWorkload> kv_workloads;
    std::vector<ReservationSpec> reservations;
    std::vector<FaultSpec> faults;
    UtilityWeights weights;

    std::optional<std::size_t> node_index(const std::string& id) const;
    std::optional<std::size_t> cloudlet_index(const std::string& id) const;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every problem found, each prefixed with the offending field path.
std::vector<std::string> validate_scenario(const Scenario& s);

/// Structural problems are reported as ValidationError too; malformed JSON is a ParseError.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// The defaults table, as echoed into summaries.
nlohmann::json defaults_json();

nlohmann::json distribution_to_json(const Distribution& d);

} // namespace adhoc
