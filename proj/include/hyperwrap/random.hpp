// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hyperwrap {

/// splitmix64 finalizer of (seed, stream); used to derive independent
/// per-task seeds from one global seed.
[[nodiscard]] constexpr auto mix_seed(std::uint64_t seed,
                                      std::uint64_t stream) noexcept
    -> std::uint64_t
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_{seed} {}

    auto normal() -> double { return normal_(engine_); }

    void fill_normal(std::span<double> out)
    {
        for (auto& x : out) {
            x = normal_(engine_);
        }
    }

    /// Uniform on [0, 1).
    auto uniform() -> double
    {
        return std::uniform_real_distribution<double> {}(engine_);
    }

    /// Uniform integer in [0, n).
    auto index(std::size_t n) -> std::size_t
    {
        return std::uniform_int_distribution<std::size_t> {0, n - 1}(engine_);
    }

    auto engine() noexcept -> std::mt19937_64& { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

} // namespace hyperwrap
