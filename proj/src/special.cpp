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

#include "hyperwrap/special.hpp"

#include <cmath>
#include <numbers>

namespace hyperwrap {

namespace {

// sinh(r) - r by its Taylor series; used for r < 1 where the direct
// difference cancels.
auto sinh_minus_identity(double r) -> double
{
    const double r2 = r * r;
    double term = r * r2 / 6.0;
    double sum = term;
    for (int k = 2; k < 30; ++k) {
        term *= r2 / static_cast<double>((2 * k) * (2 * k + 1));
        sum += term;
        if (term < 1e-18 * sum) {
            break;
        }
    }
    return sum;
}

} // namespace

auto arccosh(double x) noexcept -> double
{
    if (!(x > 1.0)) {
        return 0.0;
    }
    if (x > 1e8) {
        return std::log(x) + std::numbers::ln2;
    }
    const double t = x - 1.0;
    return std::log1p(t + std::sqrt(t * (t + 2.0)));
}

auto sinhc(double r) noexcept -> double
{
    const double a = std::abs(r);
    if (a < kSeriesRadius) {
        const double r2 = r * r;
        return 1.0 + r2 / 6.0 + r2 * r2 / 120.0;
    }
    return std::sinh(r) / r;
}

auto log_sinhc(double r) noexcept -> double
{
    const double a = std::abs(r);
    if (a < kSeriesRadius) {
        const double r2 = a * a;
        return r2 / 6.0 - r2 * r2 / 180.0;
    }
    if (a < 1.0) {
        return std::log1p(sinh_minus_identity(a) / a);
    }
    if (a > 20.0) {
        return a - std::numbers::ln2 - std::log(a)
               + std::log1p(-std::exp(-2.0 * a));
    }
    return std::log(std::sinh(a) / a);
}

auto d_log_sinhc(double r) noexcept -> double
{
    const double a = std::abs(r);
    const double sign = r < 0.0 ? -1.0 : 1.0;
    if (a < 0.1) {
        const double a2 = a * a;
        return sign * a
               * (1.0 / 3.0
                  + a2 * (-1.0 / 45.0
                          + a2 * (2.0 / 945.0
                                  + a2 * (-1.0 / 4725.0 + a2 * 2.0 / 93555.0))));
    }
    return sign * (1.0 / std::tanh(a) - 1.0 / a);
}

auto log_map_factor(double alpha_minus_one) noexcept -> double
{
    const double d = alpha_minus_one > 0.0 ? alpha_minus_one : 0.0;
    if (d < kSeriesAlpha) {
        return 1.0 - d / 3.0 + 2.0 * d * d / 15.0;
    }
    const double root = std::sqrt(d * (2.0 + d));
    if (d > 1e8) {
        return arccosh(1.0 + d) / root;
    }
    return std::log1p(d + root) / root;
}

auto softplus(double x) noexcept -> double
{
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

auto softplus_inverse(double y) noexcept -> double
{
    if (y > 30.0) {
        return y + std::log(-std::expm1(-y));
    }
    return std::log(std::expm1(y));
}

} // namespace hyperwrap
