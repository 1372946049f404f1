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

// Hyperboloid formulas written once for any scalar type with the usual math
// functions found by ADL: double for evaluation, ad::Var when a gradient is
// needed. Inputs are ambient coordinates and are NOT validated here; the
// typed API in lorentz.hpp validates and then calls these.
//
// Branches on value(x) pick a series expansion near the removable
// singularities so that both the value and the derivative stay finite.

#include "hyperwrap/autodiff.hpp"
#include "hyperwrap/special.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace hyperwrap {

[[nodiscard]] inline auto dot(std::span<const double> a,
                              std::span<const double> b) -> double
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

[[nodiscard]] inline auto max_const0(double x) noexcept -> double
{
    return x > 0.0 ? x : 0.0;
}

template <class T>
using Coords = std::vector<T>;

namespace kernels {

using std::cosh;
using std::exp;
using std::log;
using std::sinh;
using std::sqrt;
using hyperwrap::arccosh;
using hyperwrap::dot;
using hyperwrap::max_const0;
using hyperwrap::value;

template <class T>
auto tail(const Coords<T>& x) -> std::span<const T>
{
    return std::span<const T> {x}.subspan(1);
}

/// -a0 b0 + sum_{i>=1} ai bi
template <class T>
auto inner(const Coords<T>& a, const Coords<T>& b) -> T
{
    return dot(tail(a), tail(b)) - a[0] * b[0];
}

/// Squared Euclidean norm.
template <class T>
auto norm_sq(std::span<const T> a) -> T
{
    return dot(a, a);
}

/// cosh(sqrt(x)) and sinh(sqrt(x))/sqrt(x) for x >= 0, series below
/// kSeriesRadius^2 so no square root of zero is taken.
template <class T>
auto cosh_sinhc_of_sq(const T& r2, T& c, T& s) -> void
{
    if (value(r2) < kSeriesRadius * kSeriesRadius) {
        c = 1.0 + r2 * (0.5 + r2 * (1.0 / 24.0));
        s = 1.0 + r2 * (1.0 / 6.0 + r2 * (1.0 / 120.0));
        return;
    }
    const T r = sqrt(r2);
    c = cosh(r);
    s = sinh(r) / r;
}

/// log(sinh r / r), r >= 0.
template <class T>
auto log_sinhc(const T& r) -> T
{
    const double rv = value(r);
    if (rv < kSeriesRadius) {
        const T r2 = r * r;
        return r2 * (1.0 / 6.0) - r2 * r2 * (1.0 / 180.0);
    }
    if (rv > 20.0) {
        return r - std::numbers::ln2 - log(r);
    }
    return log(sinh(r) / r);
}

template <>
inline auto log_sinhc<double>(const double& r) -> double
{
    return ::hyperwrap::log_sinhc(r);
}

/// (n - 1) log(sinh r / r) where cosh r = alpha. Near alpha = 1 this uses
/// the series of r^2 in alpha - 1 so the derivative stays bounded.
template <class T>
auto log_det_from_alpha(const T& alpha, std::size_t n) -> T
{
    if (n <= 1) {
        return T {0.0};
    }
    const auto k = static_cast<double>(n - 1);
    const T d = max_const0(alpha - 1.0);
    if (value(d) < kSeriesAlpha) {
        const T r2 = d * (2.0 - d * (1.0 / 3.0 - d * (4.0 / 45.0)));
        return k * (r2 * (1.0 / 6.0 - r2 * (1.0 / 180.0 - r2 * (1.0 / 2835.0))));
    }
    return k * log_sinhc(arccosh(1.0 + d));
}

/// exp_mu(u) = cosh(|u|) mu + sinh(|u|) u / |u|.
template <class T>
auto exp_map(const Coords<T>& mu, const Coords<T>& u) -> Coords<T>
{
    const T r2 = max_const0(inner(u, u));
    T c;
    T s;
    cosh_sinhc_of_sq(r2, c, s);
    Coords<T> z(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        z[i] = c * mu[i] + s * u[i];
    }
    return z;
}

/// arccosh(alpha) / sqrt(alpha^2 - 1), alpha = -<mu, z>.
template <class T>
auto log_factor(const T& alpha) -> T
{
    const T d = max_const0(alpha - 1.0);
    if (value(d) < kSeriesAlpha) {
        return 1.0 - d * (1.0 / 3.0 - d * (2.0 / 15.0));
    }
    return arccosh(1.0 + d) / sqrt(d * (2.0 + d));
}

template <>
inline auto log_factor<double>(const double& alpha) -> double
{
    return log_map_factor(alpha - 1.0);
}

/// Inverse exponential map. Also returns alpha through `alpha_out` so callers
/// can reuse it for the log-determinant.
template <class T>
auto log_map(const Coords<T>& mu, const Coords<T>& z, T* alpha_out = nullptr)
    -> Coords<T>
{
    const T alpha = -inner(mu, z);
    const T f = log_factor(alpha);
    Coords<T> u(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        u[i] = f * (z[i] - alpha * mu[i]);
    }
    if (alpha_out != nullptr) {
        *alpha_out = alpha;
    }
    return u;
}

/// PT_{nu -> mu}(v) = v + <mu - alpha nu, v> / (alpha + 1) (nu + mu).
/// Returns false when alpha + 1 is degenerate.
template <class T>
auto parallel_transport(const Coords<T>& nu, const Coords<T>& mu,
                        const Coords<T>& v, Coords<T>& out) -> bool
{
    const T alpha = -inner(nu, mu);
    if (!(value(alpha) + 1.0 > 1e-12)) {
        return false;
    }
    const T coef = (inner(mu, v) - alpha * inner(nu, v)) / (alpha + 1.0);
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] + coef * (nu[i] + mu[i]);
    }
    return true;
}

/// PT_{origin -> mu}([0, vt]) for vt in R^n.
template <class T>
auto transport_from_origin(const Coords<T>& mu, std::span<const T> vt)
    -> Coords<T>
{
    const T proj = dot(tail(mu), vt);
    const T coef = proj / (mu[0] + 1.0);
    Coords<T> u(mu.size());
    u[0] = proj;
    for (std::size_t i = 0; i < vt.size(); ++i) {
        u[i + 1] = vt[i] + coef * mu[i + 1];
    }
    return u;
}

/// PT_{mu -> origin}(u) for u tangent at mu; returns the full ambient
/// vector (coordinate 0 is zero up to rounding). The general coefficient
/// <origin - alpha mu, u> / (alpha + 1) reduces to -u0 / (mu0 + 1) because
/// <mu, u> = 0; dropping that term keeps its rounding error, amplified by
/// alpha, out of the result.
template <class T>
auto transport_to_origin(const Coords<T>& mu, const Coords<T>& u) -> Coords<T>
{
    const T coef = -u[0] / (mu[0] + 1.0);
    Coords<T> v(u.size());
    v[0] = u[0] + coef * (mu[0] + 1.0);
    for (std::size_t i = 1; i < u.size(); ++i) {
        v[i] = u[i] + coef * mu[i];
    }
    return v;
}

/// exp_origin([0, h]) = [cosh |h|, sinh |h| h / |h|].
template <class T>
auto lift(std::span<const T> h) -> Coords<T>
{
    const T r2 = norm_sq(h);
    T c;
    T s;
    cosh_sinhc_of_sq(r2, c, s);
    Coords<T> z(h.size() + 1);
    z[0] = c;
    for (std::size_t i = 0; i < h.size(); ++i) {
        z[i + 1] = s * h[i];
    }
    return z;
}

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// log N(x | 0, diag(sigma^2)).
template <class T>
auto diag_gaussian_log_density(std::span<const T> x, std::span<const T> sigma)
    -> T
{
    T acc {0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T y = x[i] / sigma[i];
        acc = acc - 0.5 * y * y - log(sigma[i]);
    }
    return acc - static_cast<double>(x.size()) * kHalfLog2Pi;
}

/// log N(x | 0, I).
template <class T>
auto unit_gaussian_log_density(std::span<const T> x) -> T
{
    return -0.5 * norm_sq(x) - static_cast<double>(x.size()) * kHalfLog2Pi;
}

/// log N(x | 0, L L^T) with L lower triangular, row-major n x n.
template <class T>
auto cholesky_gaussian_log_density(std::span<const T> x,
                                   std::span<const T> lower) -> T
{
    const std::size_t n = x.size();
    std::vector<T> y(n);
    T log_diag {0.0};
    for (std::size_t i = 0; i < n; ++i) {
        T acc = x[i];
        for (std::size_t j = 0; j < i; ++j) {
            acc = acc - lower[i * n + j] * y[j];
        }
        y[i] = acc / lower[i * n + i];
        log_diag = log_diag + log(lower[i * n + i]);
    }
    return -0.5 * norm_sq(std::span<const T> {y}) - log_diag
           - static_cast<double>(n) * kHalfLog2Pi;
}

/// KL(N(ms, diag ss^2) || N(mt, diag st^2)) in closed form.
template <class T>
auto diag_gaussian_kl(std::span<const T> ms, std::span<const T> ss,
                      std::span<const T> mt, std::span<const T> st) -> T
{
    T acc {0.0};
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const T ratio = ss[i] / st[i];
        const T diff = (mt[i] - ms[i]) / st[i];
        acc = acc + 0.5 * (ratio * ratio + diff * diff - 1.0) - log(ratio);
    }
    return acc;
}

/// log(1 + exp(x)) without overflow.
template <class T>
auto softplus(const T& x) -> T
{
    if (value(x) > 0.0) {
        return x + log(1.0 + exp(-x));
    }
    return log(1.0 + exp(x));
}

} // namespace kernels
} // namespace hyperwrap
