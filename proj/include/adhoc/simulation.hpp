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
#include "adhoc/compute.hpp"
#include "adhoc/infrastructure.hpp"
#include "adhoc/kernel.hpp"
#include "adhoc/kv_store.hpp"
#include "adhoc/metrics.hpp"
#include "adhoc/qos.hpp"
#include "adhoc/scenario.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adhoc {

/// One simulated ad hoc cloud built from a scenario: infrastructure, cloudlets,
/// engines, broker and the adaptation controller, all driven by one kernel.
class Simulation : private InfrastructureObserver {
public:
    explicit Simulation(Scenario scenario, std::optional<std::uint64_t> seed = std::nullopt);
    ~Simulation() override;

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    const Scenario& scenario() const noexcept { return scenario_; }
    std::uint64_t seed() const noexcept { return kernel_.seed(); }

    /// Runs to `until` (default run.until) and appends the run_end record.
    void run(std::optional<VirtualTime> until = std::nullopt);
    /// Advances without closing the log; usable repeatedly before run().
    void advance_to(VirtualTime t);
    bool finished() const noexcept { return finished_; }

    Kernel& kernel() noexcept { return kernel_; }
    const EventLog& log() const noexcept { return kernel_.event_log(); }
    Infrastructure& infrastructure() noexcept { return infra_; }
    const Infrastructure& infrastructure() const noexcept { return infra_; }
    Broker& broker() noexcept { return broker_; }
    KvEngine& kv() noexcept { return kv_; }
    ComputeEngine& compute() noexcept { return *compute_; }

    NodeId node_id(const std::string& name) const;
    CloudletId cloudlet_id(const std::string& name) const;
    Cloudlet& cloudlet(CloudletId id);
    const Cloudlet& cloudlet(CloudletId id) const;
    std::vector<CloudletId> cloudlet_ids() const;

    bool reachable(ElementId e) const;

    std::uint64_t put(CloudletId cloudlet, const std::string& key, std::string value, double bytes = 0.0);
    VersionedValue get(CloudletId cloudlet, const std::string& key);
    Binding bind(CloudletId cloudlet, const std::string& client, const std::optional<std::string>& key);
    /// Routes and enqueues a task; returns the element chosen.
    ElementId submit_task(CloudletId cloudlet, double work_units, std::optional<AgreementId> agreement = std::nullopt);

    /// The controller's current picture of the cloud.
    CloudStateSnapshot snapshot() const;

    /// Highest acknowledged version per key, for read checks.
    const std::map<std::string, std::uint64_t>& acked_versions(CloudletId cloudlet) const;

    std::optional<AgreementId> agreement_for(const std::string& reservation_id) const;

    GoalReport report() const;

private:
    struct CloudletRuntime;
    struct ElementRuntime {
        std::uint64_t heartbeat_generation = 0;
    };
    class Executor;

    // InfrastructureObserver
    void element_running(const CloudElement& e) override;
    void element_stopping(const CloudElement& e) override;
    void element_crashed(const CloudElement& e) override;
    void element_dead(const CloudElement& e) override;
    void element_throttle_changed(const CloudElement& e) override;
    void node_report(const NodeReport& r) override;

    void build();
    void place_initial_elements();
    void schedule_workloads();
    void schedule_reservations();
    void schedule_faults();
    void schedule_epochs();

    VirtualTime network_delay();
    void send_heartbeat(ElementId e, std::uint64_t generation);
    void deliver_heartbeat(ElementId e, VirtualTime sent_at);
    void schedule_detection(CloudletId c, VirtualTime at);
    void detect(CloudletId c);
    void member_departed(CloudletId c, ElementId e);
    void membership_changed(CloudletId c);
    void check_replicas(CloudletId c);

    void negotiate(std::size_t reservation_index);
    void deploy_reserved(AgreementId id, std::size_t slot);
    void close_agreement(AgreementId id);

    void next_task_arrival(std::size_t workload);
    void next_kv_op(std::size_t workload);

    void epoch();
    void start_copy(const Rereplicate& r);
    ElementId route(CloudletId c, const std::optional<AgreementId>& agreement, std::optional<ElementId> exclude);

    CloudletRuntime& runtime(CloudletId c);
    const CloudletRuntime& runtime(CloudletId c) const;
    Reachable reachable_fn() const;

    Scenario scenario_;
    Kernel kernel_;
    Infrastructure infra_;
    Broker broker_;
    KvEngine kv_;
    std::unique_ptr<ComputeEngine> compute_;
    std::vector<std::unique_ptr<CloudletRuntime>> cloudlets_;
    std::map<ElementId, ElementRuntime> elements_;
    std::map<NodeId, NodeReport> reports_;
    std::map<std::string, AgreementId> agreements_by_request_;
    std::map<AgreementId, std::vector<ElementId>> agreement_elements_;
    std::map<std::uint64_t, Task> tasks_;
    std::uint64_t next_task_ = 1;
    std::uint64_t kv_values_ = 0;
    bool finished_ = false;
};

} // namespace adhoc
