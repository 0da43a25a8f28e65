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

// adhoc-sim: run, validate and batch-run ad hoc cloud scenarios.
//
// Exit status: 0 success, 1 validation / parse / I/O failure, 2 runtime invariant breach.

#include "adhoc/output.hpp"
#include "adhoc/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <future>
#include <iostream>
#include <regex>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kRuntimeError = 2;

void configure_logging()
{
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("ADHOC_SIM_LOG_LEVEL"))
        spdlog::set_level(spdlog::level::from_str(level));
}

adhoc::OutputSelection selection(const std::string& format, bool events)
{
    adhoc::OutputSelection s;
    s.summary = format != "csv";
    s.series = format != "json";
    s.events = events;
    return s;
}

void print_problems(const adhoc::ValidationError& e)
{
    for (const auto& p : e.problems())
        std::cerr << "error: " << p << "\n";
}

/// Runs one (scenario, seed) pair and writes its outputs. Returns an exit status.
int run_one(const std::filesystem::path& scenario_path, std::optional<std::uint64_t> seed,
            std::optional<adhoc::VirtualTime> until, const std::filesystem::path& out,
            const adhoc::OutputSelection& which)
{
    adhoc::Scenario scenario;
    try {
        scenario = adhoc::load_scenario(scenario_path);
    } catch (const adhoc::ValidationError& e) {
        std::cerr << scenario_path.string() << ": invalid scenario\n";
        print_problems(e);
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << scenario_path.string() << ": " << e.what() << "\n";
        return kInputError;
    }
    if (until && *until <= 0) {
        std::cerr << "error: --until must be > 0\n";
        return kInputError;
    }
    adhoc::RunOutputs outputs;
    try {
        spdlog::info("running {} seed={}", scenario_path.string(), seed ? *seed : scenario.run.seed);
        outputs = adhoc::run_scenario(scenario, seed, until, which.events);
    } catch (const adhoc::RunAborted& e) {
        std::cerr << scenario_path.string() << ": invariant breach at t=" << e.at() << " (event " << e.seq()
                  << ", " << e.target() << "): " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << scenario_path.string() << ": invariant breach: " << e.what() << "\n";
        return kRuntimeError;
    }
    try {
        adhoc::write_outputs(outputs, out, which);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    spdlog::info("wrote {}", out.string());
    return kOk;
}

int cmd_validate(const std::string& path)
{
    try {
        adhoc::load_scenario(path);
    } catch (const adhoc::ValidationError& e) {
        print_problems(e);
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    std::cout << "OK\n";
    return kOk;
}

int cmd_batch(const std::filesystem::path& dir, const std::string& seeds, const std::filesystem::path& out,
              const adhoc::OutputSelection& which, unsigned jobs)
{
    static const std::regex range(R"((\d+)\.\.(\d+))");
    std::smatch m;
    if (!std::regex_match(seeds, m, range)) {
        std::cerr << "error: --seeds must look like a..b\n";
        return kInputError;
    }
    const std::uint64_t lo = std::stoull(m[1]);
    const std::uint64_t hi = std::stoull(m[2]);
    if (hi < lo) {
        std::cerr << "error: --seeds range is empty\n";
        return kInputError;
    }
    std::vector<std::filesystem::path> scenarios;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            scenarios.push_back(entry.path());
    if (ec) {
        std::cerr << "error: cannot list " << dir.string() << ": " << ec.message() << "\n";
        return kInputError;
    }
    std::sort(scenarios.begin(), scenarios.end());
    if (scenarios.empty()) {
        std::cerr << "error: no .json scenarios in " << dir.string() << "\n";
        return kInputError;
    }

    struct Job {
        std::filesystem::path scenario;
        std::uint64_t seed;
    };
    std::vector<Job> todo;
    for (const auto& s : scenarios)
        for (std::uint64_t seed = lo; seed <= hi; ++seed)
            todo.push_back({s, seed});

    int status = kOk;
    jobs = std::max(1u, jobs);
    for (std::size_t i = 0; i < todo.size(); i += jobs) {
        std::vector<std::future<int>> running;
        for (std::size_t j = i; j < std::min(todo.size(), i + jobs); ++j) {
            const Job job = todo[j];
            const auto target = out / job.scenario.stem() / ("seed-" + std::to_string(job.seed));
            running.push_back(std::async(std::launch::async, [job, target, which] {
                return run_one(job.scenario, job.seed, std::nullopt, target, which);
            }));
        }
        for (auto& f : running) {
            const int r = f.get();
            if (r == kRuntimeError || (r == kInputError && status == kOk))
                status = r;
        }
    }
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();
    CLI::App app{"Deterministic simulator for ad hoc clouds"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, format = "both", seeds, scenarios_dir;
    std::optional<std::uint64_t> seed;
    std::optional<adhoc::VirtualTime> until;
    bool events = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("--scenario", scenario_path, "Scenario file")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--until", until, "Override run.until (ms)");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--format", format, "Outputs to write")->check(CLI::IsMember({"json", "csv", "both"}));
    run->add_flag("--events", events, "Also write events.ndjson");

    auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
    validate->add_option("--scenario", scenario_path, "Scenario file")->required();

    auto* batch = app.add_subcommand("batch", "Run every scenario in a directory over a seed range");
    batch->add_option("--scenarios", scenarios_dir, "Directory of scenario files")->required();
    batch->add_option("--seeds", seeds, "Seed range a..b")->required();
    batch->add_option("--out", out_dir, "Output directory")->required();
    batch->add_option("--format", format, "Outputs to write")->check(CLI::IsMember({"json", "csv", "both"}));
    batch->add_option("--jobs", jobs, "Simulations run concurrently");
    batch->add_flag("--events", events, "Also write events.ndjson");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputError;
    }

    if (*run)
        return run_one(scenario_path, seed, until, out_dir, selection(format, events));
    if (*validate)
        return cmd_validate(scenario_path);
    return cmd_batch(scenarios_dir, seeds, out_dir, selection(format, events), jobs);
}
