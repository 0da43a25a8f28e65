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

#include "adhoc/kernel.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>

namespace adhoc {

struct Task {
    std::uint64_t id = 0;
    /// cpu-seconds at one core.
    double work_units = 1.0;
    VirtualTime arrival = 0;
    std::optional<VirtualTime> deadline;
    /// Restarts after an element failure (at most one).
    int retries = 0;
};

struct TaskCompletion {
    std::uint64_t task = 0;
    ElementId element;
    VirtualTime start = 0;
    VirtualTime finish = 0;
};

/// Batch engine for independent tasks: a FIFO queue per element; the head task
/// progresses at the element's effective cpu (allocation x throttle factor).
class ComputeEngine {
public:
    struct Hooks {
        /// Effective cpu of the element now; 0 when it cannot make progress.
        std::function<double(ElementId)> effective_cpu;
        std::function<void(const Task&, const TaskCompletion&)> completed;
        std::function<void(const Task&, ElementId failed)> lost;
        /// Another live element for a task whose element failed, if any.
        std::function<std::optional<ElementId>(const Task&, ElementId failed)> reroute;
        std::function<void(const Task&, ElementId from, ElementId to)> retried;
    };

    ComputeEngine(Kernel& kernel, Hooks hooks);

    /// Enqueues on `element`. Returns the finish time predicted at the current rates.
    VirtualTime submit(ElementId element, Task task);

    /// The element's effective cpu changed; reschedules the task in service.
    void rate_changed(ElementId element);

    /// The element crashed or is shutting down. Each queued task restarts once elsewhere or is lost.
    void element_failed(ElementId element);

    std::uint64_t submitted() const noexcept { return submitted_; }
    std::uint64_t completed() const noexcept { return completed_; }
    std::uint64_t lost() const noexcept { return lost_; }
    std::uint64_t in_flight() const noexcept;

    std::size_t queue_length(ElementId element) const;
    std::size_t total_queue_length() const;
    /// Milliseconds the element has spent with a task in service.
    VirtualTime busy_ms(ElementId element) const;

private:
    struct InService {
        Task task;
        VirtualTime start = 0;
        /// cpu-milliseconds at one core still to do.
        double remaining = 0.0;
        VirtualTime last_update = 0;
        double rate = 0.0;
        std::optional<EventHandle> finish_event;
    };

    struct Queue {
        std::deque<Task> waiting;
        std::optional<InService> current;
        VirtualTime busy_ms = 0;
    };

    void start_next(ElementId element);
    void schedule_finish(ElementId element);
    void finish(ElementId element);
    void progress(Queue& q);
    void enqueue(ElementId element, Task task);
    VirtualTime predict(ElementId element) const;

    Kernel& kernel_;
    Hooks hooks_;
    std::map<ElementId, Queue> queues_;
    std::uint64_t submitted_ = 0;
    std::uint64_t completed_ = 0;
    std::uint64_t lost_ = 0;
};

} // namespace adhoc
