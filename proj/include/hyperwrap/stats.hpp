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

#include <span>

namespace hyperwrap::stats {

struct KsResult
{
    double statistic;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov test against N(0, sigma^2). The p-value
/// uses the asymptotic Kolmogorov distribution with the usual small-sample
/// correction of the argument.
[[nodiscard]] auto ks_test_normal(std::span<const double> x, double sigma)
    -> KsResult;

/// Survival function of the Kolmogorov distribution.
[[nodiscard]] auto kolmogorov_sf(double t) -> double;

[[nodiscard]] auto pearson(std::span<const double> x,
                           std::span<const double> y) -> double;

[[nodiscard]] auto mean(std::span<const double> x) -> double;
/// Sample standard deviation (n - 1 denominator).
[[nodiscard]] auto stddev(std::span<const double> x) -> double;
[[nodiscard]] auto median(std::span<const double> x) -> double;

} // namespace hyperwrap::stats
