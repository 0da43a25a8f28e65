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

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace adhoc {

struct Exponential {
    double mean = 1.0;
};

struct Uniform {
    double a = 0.0;
    double b = 1.0;
};

struct Constant {
    double value = 0.0;
};

/// `hi` with probability `p`, otherwise `lo`.
struct TwoPoint {
    double p = 0.5;
    double lo = 0.0;
    double hi = 1.0;
};

using Distribution = std::variant<Exponential, Uniform, Constant, TwoPoint>;

double mean_of(const Distribution& dist);

/// Parameter violations, one message per problem; empty when valid.
std::vector<std::string> validate(const Distribution& dist);

/// Counter-based random stream. The n-th draw depends only on
/// (seed, stream_id, n), so streams never perturb each other.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string stream_id);

    const std::string& stream_id() const noexcept { return stream_id_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform01();

    double draw(const Distribution& dist);

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::string stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace adhoc
