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

#include <json.hpp>

#include <algorithm>
#include <string>

namespace adhoc {

/// Multi-dimensional capacity or demand: cpu in fractional cores, memory and
/// storage in MB, network in Mbps.
struct ResourceVector {
    double cpu = 0.0;
    double memory = 0.0;
    double storage = 0.0;
    double network = 0.0;

    friend ResourceVector operator+(ResourceVector a, const ResourceVector& b)
    {
        a += b;
        return a;
    }
    friend ResourceVector operator-(ResourceVector a, const ResourceVector& b)
    {
        a -= b;
        return a;
    }
    friend ResourceVector operator*(ResourceVector a, double s)
    {
        a.cpu *= s;
        a.memory *= s;
        a.storage *= s;
        a.network *= s;
        return a;
    }
    ResourceVector& operator+=(const ResourceVector& o)
    {
        cpu += o.cpu;
        memory += o.memory;
        storage += o.storage;
        network += o.network;
        return *this;
    }
    ResourceVector& operator-=(const ResourceVector& o)
    {
        cpu -= o.cpu;
        memory -= o.memory;
        storage -= o.storage;
        network -= o.network;
        return *this;
    }

    bool operator==(const ResourceVector&) const = default;

    bool is_zero() const { return cpu == 0.0 && memory == 0.0 && storage == 0.0 && network == 0.0; }
    bool any_positive() const { return cpu > 0.0 || memory > 0.0 || storage > 0.0 || network > 0.0; }
    bool non_negative() const { return cpu >= 0.0 && memory >= 0.0 && storage >= 0.0 && network >= 0.0; }
};

/// Tolerance for componentwise comparisons of accumulated sums.
inline constexpr double kResourceEpsilon = 1e-9;

/// Componentwise a <= b.
inline bool fits_within(const ResourceVector& a, const ResourceVector& b, double eps = kResourceEpsilon)
{
    return a.cpu <= b.cpu + eps && a.memory <= b.memory + eps && a.storage <= b.storage + eps &&
           a.network <= b.network + eps;
}

inline ResourceVector clamp_non_negative(ResourceVector v)
{
    v.cpu = std::max(0.0, v.cpu);
    v.memory = std::max(0.0, v.memory);
    v.storage = std::max(0.0, v.storage);
    v.network = std::max(0.0, v.network);
    return v;
}

inline void to_json(nlohmann::json& j, const ResourceVector& r)
{
    j = nlohmann::json{{"cpu", r.cpu}, {"memory", r.memory}, {"storage", r.storage}, {"network", r.network}};
}

inline void from_json(const nlohmann::json& j, ResourceVector& r)
{
    r.cpu = j.value("cpu", 0.0);
    r.memory = j.value("memory", 0.0);
    r.storage = j.value("storage", 0.0);
    r.network = j.value("network", 0.0);
}

} // namespace adhoc
