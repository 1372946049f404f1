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

// Scalar special functions with the small-argument and large-argument
// branches the hyperboloid formulas need.

namespace hyperwrap {

/// Below this radius sinh(r)/r and friends switch to their Taylor series.
inline constexpr double kSeriesRadius = 1e-6;

/// Below this value of alpha - 1 the inverse exponential map factor
/// arccosh(alpha) / sqrt(alpha^2 - 1) switches to its series in alpha - 1.
inline constexpr double kSeriesAlpha = 1e-5;

/// Floor applied to arccosh arguments when forming the derivative
/// 1 / sqrt(x^2 - 1).
inline constexpr double kEpsAlpha = 1e-12;

/// arccosh(x) for x >= 1, written as log1p(t + sqrt(t (t + 2))) with
/// t = x - 1 so that arguments close to one keep full precision.
/// Arguments below one are clamped to one.
[[nodiscard]] double arccosh(double x) noexcept;

/// sinh(r) / r, continuous through r = 0.
[[nodiscard]] double sinhc(double r) noexcept;

/// log(sinh(r) / r) for r >= 0. Overflow-free for large r.
[[nodiscard]] double log_sinhc(double r) noexcept;

/// d/dr log(sinh(r) / r) = coth(r) - 1/r, with the series r/3 - r^3/45 near
/// zero.
[[nodiscard]] double d_log_sinhc(double r) noexcept;

/// arccosh(1 + d) / sqrt(d (2 + d)) for d >= 0; equals r / sinh(r) where
/// cosh(r) = 1 + d.
[[nodiscard]] double log_map_factor(double alpha_minus_one) noexcept;

/// Numerically stable log(1 + exp(x)).
[[nodiscard]] double softplus(double x) noexcept;

/// Inverse of softplus for y > 0.
[[nodiscard]] double softplus_inverse(double y) noexcept;

} // namespace hyperwrap
