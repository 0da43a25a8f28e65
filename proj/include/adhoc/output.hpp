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

#include "adhoc/metrics.hpp"
#include "adhoc/scenario.hpp"
#include "adhoc/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace adhoc {

inline constexpr int kSummarySchemaVersion = 1;

struct OutputSelection {
    bool summary = true;
    bool series = true;
    bool events = false;
};

struct RunOutputs {
    nlohmann::json summary;
    std::string series_csv;
    std::string events_ndjson;
};

nlohmann::json summary_json(const Simulation& sim, const GoalReport& report);

/// One row per `interval` from 0 to `until`, state as of the end of each sample instant.
std::string series_csv(const EventLog& log, VirtualTime until, VirtualTime interval);

std::string csv_field(const std::string& s);

RunOutputs run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt,
                        std::optional<VirtualTime> until = std::nullopt, bool keep_events = true);

/// Writes summary.json / series.csv / events.ndjson under `dir`, creating it.
void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir, const OutputSelection& which);

} // namespace adhoc
