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

#include "hyperwrap/stats.hpp"

#include "hyperwrap/errors.hpp"

#include <cmath>

#include <boost/math/statistics/bivariate_statistics.hpp>
#include <boost/math/statistics/univariate_statistics.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace hyperwrap::stats {

auto kolmogorov_sf(double t) -> double
{
    if (t <= 0.0) {
        return 1.0;
    }
    if (t < 0.2) {
        // the alternating series converges slowly here; use the dual form
        // P(K <= t) = sqrt(2 pi)/t sum exp(-(2k-1)^2 pi^2 / (8 t^2))
        double cdf = 0.0;
        for (int k = 1; k < 50; ++k) {
            const double a = (2.0 * k - 1.0) * std::numbers::pi;
            cdf += std::exp(-a * a / (8.0 * t * t));
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / t;
        return 1.0 - cdf;
    }
    double sf = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sf += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) {
            break;
        }
    }
    return std::clamp(sf, 0.0, 1.0);
}

auto ks_test_normal(std::span<const double> x, double sigma) -> KsResult
{
    if (x.empty()) {
        throw ValidationError {"ks_test_normal: empty sample"};
    }
    if (!(sigma > 0.0)) {
        throw ValidationError {"ks_test_normal: sigma must be positive"};
    }
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-s[i] / (sigma * std::numbers::sqrt2));
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, cdf - lo, hi - cdf});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

auto pearson(std::span<const double> x, std::span<const double> y) -> double
{
    if (x.size() != y.size()) {
        throw DimensionError {"pearson: length mismatch"};
    }
    if (x.size() < 2) {
        throw ValidationError {"pearson: need at least 2 points"};
    }
    const std::vector<double> xs(x.begin(), x.end());
    const std::vector<double> ys(y.begin(), y.end());
    return boost::math::statistics::correlation_coefficient(xs, ys);
}

auto mean(std::span<const double> x) -> double
{
    if (x.empty()) {
        throw ValidationError {"mean: empty input"};
    }
    return boost::math::statistics::mean(x.begin(), x.end());
}

auto stddev(std::span<const double> x) -> double
{
    if (x.size() < 2) {
        return 0.0;
    }
    return std::sqrt(
        boost::math::statistics::sample_variance(x.begin(), x.end()));
}

auto median(std::span<const double> x) -> double
{
    if (x.empty()) {
        throw ValidationError {"median: empty input"};
    }
    std::vector<double> s(x.begin(), x.end());
    return boost::math::statistics::median(s.begin(), s.end());
}

} // namespace hyperwrap::stats
