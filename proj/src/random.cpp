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

#include "adhoc/random.hpp"

#include <cmath>
#include <string_view>

namespace adhoc {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; std::hash is not stable across standard libraries.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

double mean_of(const Distribution& dist)
{
    return std::visit(overloaded{
                          [](const Exponential& d) { return d.mean; },
                          [](const Uniform& d) { return 0.5 * (d.a + d.b); },
                          [](const Constant& d) { return d.value; },
                          [](const TwoPoint& d) { return d.lo + d.p * (d.hi - d.lo); },
                      },
                      dist);
}

std::vector<std::string> validate(const Distribution& dist)
{
    std::vector<std::string> out;
    std::visit(overloaded{
                   [&](const Exponential& d) {
                       if (!(d.mean > 0.0) || !std::isfinite(d.mean))
                           out.push_back("exponential mean must be > 0");
                   },
                   [&](const Uniform& d) {
                       if (!(d.a <= d.b) || !std::isfinite(d.a) || !std::isfinite(d.b))
                           out.push_back("uniform requires a <= b");
                   },
                   [&](const Constant& d) {
                       if (!std::isfinite(d.value))
                           out.push_back("constant must be finite");
                   },
                   [&](const TwoPoint& d) {
                       if (!(d.p >= 0.0 && d.p <= 1.0))
                           out.push_back("two_point p must lie in [0, 1]");
                       if (!std::isfinite(d.lo) || !std::isfinite(d.hi))
                           out.push_back("two_point values must be finite");
                   },
               },
               dist);
    return out;
}

RngStream::RngStream(std::uint64_t seed, std::string stream_id)
    : seed_(seed), stream_id_(std::move(stream_id)), key_(splitmix64(seed ^ fnv1a(stream_id_)))
{
}

std::uint64_t RngStream::next_u64()
{
    const std::uint64_t n = counter_++;
    return splitmix64(key_ ^ splitmix64(n));
}

double RngStream::uniform01()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n)
{
    if (n == 0)
        return 0;
    return next_u64() % n;
}

double RngStream::draw(const Distribution& dist)
{
    return std::visit(overloaded{
                          [&](const Exponential& d) { return -d.mean * std::log1p(-uniform01()); },
                          [&](const Uniform& d) { return d.a + (d.b - d.a) * uniform01(); },
                          [&](const Constant& d) {
                              ++counter_;
                              return d.value;
                          },
                          [&](const TwoPoint& d) { return uniform01() < d.p ? d.hi : d.lo; },
                      },
                      dist);
}

} // namespace adhoc
