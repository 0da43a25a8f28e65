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

#include "adhoc/output.hpp"

#include <fstream>
#include <sstream>

namespace adhoc {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

nlohmann::json summary_json(const Simulation& sim, const GoalReport& report)
{
    const Scenario& s = sim.scenario();
    nlohmann::json nodes = nlohmann::json::object();
    for (std::size_t i = 0; i < s.fleet.size(); ++i)
        nodes["n" + std::to_string(i)] = s.fleet[i].id;
    nlohmann::json cloudlets = nlohmann::json::object();
    for (std::size_t i = 0; i < s.cloudlets.size(); ++i)
        cloudlets["c" + std::to_string(i)] = s.cloudlets[i].id;
    return {
        {"schema_version", kSummarySchemaVersion},
        {"seed", sim.seed()},
        {"until", report.to},
        {"names", {{"nodes", nodes}, {"cloudlets", cloudlets}}},
        {"metrics", report},
        {"event_count", sim.log().size()},
        {"scenario", to_json(s)},
        {"defaults", defaults_json()},
    };
}

std::string series_csv(const EventLog& log, VirtualTime until, VirtualTime interval)
{
    static const char* const columns[] = {"t_ms",          "nodes_up",      "elements_serving", "nodes_violating",
                                          "tasks_completed", "tasks_lost",  "kv_puts_acked",    "kv_gets_ok",
                                          "kv_gets_failed",  "adaptation_actions"};
    std::ostringstream out;
    for (std::size_t i = 0; i < std::size(columns); ++i)
        out << (i ? "," : "") << csv_field(columns[i]);
    out << "\r\n";
    if (interval <= 0)
        return out.str();

    std::map<std::uint32_t, bool> up, violating, serving;
    std::uint64_t completed = 0, lost = 0, puts = 0, gets_ok = 0, gets_failed = 0, actions = 0;
    auto count = [](const std::map<std::uint32_t, bool>& m) {
        return std::count_if(m.begin(), m.end(), [](const auto& kv) { return kv.second; });
    };
    const auto& entries = log.entries();
    std::size_t next = 0;
    for (VirtualTime t = 0; t <= until; t += interval) {
        for (; next < entries.size() && entries[next].at <= t; ++next) {
            const auto& e = entries[next];
            const auto& f = e.fields;
            if (e.kind == "node_up" || e.kind == "node_down")
                up[f.at("node").get<std::uint32_t>()] = e.kind == "node_up";
            else if (e.kind == "violation_start" || e.kind == "violation_end")
                violating[f.at("node").get<std::uint32_t>()] = e.kind == "violation_start";
            else if (e.kind == "element_state") {
                const auto st = f.at("state").get<std::string>();
                serving[f.at("element").get<std::uint32_t>()] = st == "running" || st == "throttled";
            } else if (e.kind == "task_completed")
                ++completed;
            else if (e.kind == "task_lost")
                ++lost;
            else if (e.kind == "kv_put" && f.at("acked").get<bool>())
                ++puts;
            else if (e.kind == "kv_get")
                ++(f.at("ok").get<bool>() ? gets_ok : gets_failed);
            else if (e.kind == "adaptation_action" && f.at("executed").get<bool>())
                ++actions;
        }
        out << t << ',' << count(up) << ',' << count(serving) << ',' << count(violating) << ',' << completed << ','
            << lost << ',' << puts << ',' << gets_ok << ',' << gets_failed << ',' << actions << "\r\n";
    }
    return out.str();
}

RunOutputs run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed, std::optional<VirtualTime> until,
                        bool keep_events)
{
    Scenario s = scenario;
    if (until)
        s.run.until = *until;
    Simulation sim(std::move(s), seed);
    sim.run();
    RunOutputs out;
    out.summary = summary_json(sim, sim.report());
    out.series_csv = series_csv(sim.log(), sim.scenario().run.until, sim.scenario().settings.series_interval_ms);
    if (keep_events)
        out.events_ndjson = sim.log().to_ndjson();
    return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot write " + p.string());
    f << content;
    if (!f)
        throw IoError("failed writing " + p.string());
}

} // namespace

void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir, const OutputSelection& which)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    if (which.summary)
        write_file(dir / "summary.json", outputs.summary.dump(2) + "\n");
    if (which.series)
        write_file(dir / "series.csv", outputs.series_csv);
    if (which.events)
        write_file(dir / "events.ndjson", outputs.events_ndjson);
}

} // namespace adhoc
