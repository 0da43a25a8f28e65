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

#include "adhoc/compute.hpp"

#include <algorithm>
#include <cmath>

namespace adhoc {
namespace {

VirtualTime service_ms(double remaining_cpu_ms, double rate)
{
    return static_cast<VirtualTime>(std::ceil(remaining_cpu_ms / rate - 1e-9));
}

} // namespace

ComputeEngine::ComputeEngine(Kernel& kernel, Hooks hooks) : kernel_(kernel), hooks_(std::move(hooks)) {}

std::uint64_t ComputeEngine::in_flight() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& [id, q] : queues_)
        n += q.waiting.size() + (q.current ? 1 : 0);
    return n;
}

std::size_t ComputeEngine::queue_length(ElementId element) const
{
    auto it = queues_.find(element);
    if (it == queues_.end())
        return 0;
    return it->second.waiting.size() + (it->second.current ? 1 : 0);
}

std::size_t ComputeEngine::total_queue_length() const
{
    return static_cast<std::size_t>(in_flight());
}

VirtualTime ComputeEngine::busy_ms(ElementId element) const
{
    auto it = queues_.find(element);
    if (it == queues_.end())
        return 0;
    VirtualTime busy = it->second.busy_ms;
    if (it->second.current)
        busy += kernel_.now() - it->second.current->last_update;
    return busy;
}

VirtualTime ComputeEngine::submit(ElementId element, Task task)
{
    if (!(task.work_units > 0.0))
        throw Error(ErrorCode::InvalidArgument, "task work_units must be > 0");
    ++submitted_;
    enqueue(element, std::move(task));
    return predict(element);
}

void ComputeEngine::enqueue(ElementId element, Task task)
{
    Queue& q = queues_[element];
    q.waiting.push_back(std::move(task));
    if (!q.current)
        start_next(element);
}

VirtualTime ComputeEngine::predict(ElementId element) const
{
    const Queue& q = queues_.at(element);
    const double rate = hooks_.effective_cpu(element);
    if (rate <= 0.0)
        return kernel_.now();
    double pending = 0.0;
    if (q.current)
        pending += q.current->remaining - q.current->rate * static_cast<double>(kernel_.now() - q.current->last_update);
    for (const auto& t : q.waiting)
        pending += t.work_units * 1000.0;
    return kernel_.now() + service_ms(pending, rate);
}

void ComputeEngine::start_next(ElementId element)
{
    Queue& q = queues_[element];
    if (q.current || q.waiting.empty())
        return;
    InService s;
    s.task = std::move(q.waiting.front());
    q.waiting.pop_front();
    s.start = kernel_.now();
    s.remaining = s.task.work_units * 1000.0;
    s.last_update = kernel_.now();
    q.current = std::move(s);
    schedule_finish(element);
}

void ComputeEngine::progress(Queue& q)
{
    auto& s = *q.current;
    const VirtualTime elapsed = kernel_.now() - s.last_update;
    s.remaining = std::max(0.0, s.remaining - s.rate * static_cast<double>(elapsed));
    q.busy_ms += elapsed;
    s.last_update = kernel_.now();
}

void ComputeEngine::schedule_finish(ElementId element)
{
    Queue& q = queues_[element];
    auto& s = *q.current;
    if (s.finish_event) {
        kernel_.cancel(*s.finish_event);
        s.finish_event.reset();
    }
    s.rate = hooks_.effective_cpu(element);
    if (s.rate <= 0.0)
        return;
    s.finish_event = kernel_.schedule(
        "element/" + to_string(element), [this, element] { finish(element); }, service_ms(s.remaining, s.rate));
}

void ComputeEngine::finish(ElementId element)
{
    Queue& q = queues_[element];
    progress(q);
    InService s = std::move(*q.current);
    q.current.reset();
    ++completed_;
    if (hooks_.completed)
        hooks_.completed(s.task, TaskCompletion{s.task.id, element, s.start, kernel_.now()});
    start_next(element);
}

void ComputeEngine::rate_changed(ElementId element)
{
    auto it = queues_.find(element);
    if (it == queues_.end() || !it->second.current)
        return;
    progress(it->second);
    schedule_finish(element);
}

void ComputeEngine::element_failed(ElementId element)
{
    auto it = queues_.find(element);
    if (it == queues_.end())
        return;
    Queue& q = it->second;
    std::deque<Task> orphans;
    if (q.current) {
        progress(q);
        if (q.current->finish_event)
            kernel_.cancel(*q.current->finish_event);
        orphans.push_back(std::move(q.current->task));
        q.current.reset();
    }
    for (auto& t : q.waiting)
        orphans.push_back(std::move(t));
    q.waiting.clear();

    for (auto& t : orphans) {
        std::optional<ElementId> target;
        if (t.retries == 0 && hooks_.reroute)
            target = hooks_.reroute(t, element);
        if (!target) {
            ++lost_;
            if (hooks_.lost)
                hooks_.lost(t, element);
            continue;
        }
        ++t.retries;
        if (hooks_.retried)
            hooks_.retried(t, element, *target);
        enqueue(*target, std::move(t));
    }
}

} // namespace adhoc
