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

#include "hyperwrap/lorentz.hpp"

#include "hyperwrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hyperwrap {

namespace {

auto all_finite(std::span<const double> x) -> bool
{
    return std::all_of(x.begin(), x.end(),
                       [](double v) { return std::isfinite(v); });
}

auto same_point(const LorentzPoint& a, const LorentzPoint& b) -> bool
{
    if (a.dim() != b.dim()) {
        return false;
    }
    for (std::size_t i = 0; i < a.coords().size(); ++i) {
        const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        if (std::abs(a[i] - b[i]) > 1e-12 * scale) {
            return false;
        }
    }
    return true;
}

void require_base(const TangentVector& v, const LorentzPoint& p,
                  const char* what)
{
    if (!same_point(v.base(), p)) {
        throw ValidationError {std::string {what}
                               + ": tangent vector is based at another point"};
    }
}

} // namespace

// ------------------------------------------------------------ LorentzPoint

LorentzPoint::LorentzPoint(std::vector<double> coords)
  : coords_{std::move(coords)}
{
    if (coords_.size() < 2) {
        throw DimensionError {"LorentzPoint: need at least 2 coordinates"};
    }
    if (!all_finite(coords_)) {
        throw ValidationError {"LorentzPoint: non-finite coordinate"};
    }
    if (!(coords_[0] > 0.0)) {
        throw ValidationError {"LorentzPoint: z0 must be positive"};
    }
    if (!on_manifold(coords_)) {
        throw ValidationError {
          "LorentzPoint: <z,z>_L = "
          + std::to_string(kernels::inner(coords_, coords_))
          + " is not -1 within tolerance"};
    }
}

LorentzPoint::LorentzPoint(std::vector<double> coords, Unchecked)
  : coords_{std::move(coords)}
{}

auto LorentzPoint::origin(std::size_t n) -> LorentzPoint
{
    if (n < 1) {
        throw DimensionError {"LorentzPoint::origin: dimension must be >= 1"};
    }
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    return LorentzPoint {std::move(c), Unchecked {}};
}

// ----------------------------------------------------------- TangentVector

TangentVector::TangentVector(LorentzPoint base, std::vector<double> coords)
  : base_{std::move(base)}, coords_{std::move(coords)}
{
    if (coords_.size() != base_.coords().size()) {
        throw DimensionError {"TangentVector: length does not match base"};
    }
    if (!all_finite(coords_)) {
        throw ValidationError {"TangentVector: non-finite coordinate"};
    }
    if (!is_tangent(base_.coords(), coords_)) {
        throw ValidationError {"TangentVector: <base, v>_L is not 0"};
    }
}

auto TangentVector::at_origin(std::span<const double> vt) -> TangentVector
{
    std::vector<double> c(vt.size() + 1, 0.0);
    std::copy(vt.begin(), vt.end(), c.begin() + 1);
    return TangentVector {LorentzPoint::origin(vt.size()), std::move(c)};
}

auto TangentVector::norm() const -> double
{
    return std::sqrt(std::max(0.0, kernels::inner(coords_, coords_)));
}

// ------------------------------------------------------------- operations

auto lorentz_inner(std::span<const double> a, std::span<const double> b)
    -> double
{
    if (a.size() != b.size()) {
        throw DimensionError {"lorentz_inner: length mismatch ("
                              + std::to_string(a.size()) + " vs "
                              + std::to_string(b.size()) + ")"};
    }
    if (a.size() < 2) {
        throw DimensionError {"lorentz_inner: need at least 2 coordinates"};
    }
    return dot(a.subspan(1), b.subspan(1)) - a[0] * b[0];
}

auto on_manifold(std::span<const double> z, double tol) -> bool
{
    if (z.size() < 2 || !(z[0] > 0.0)) {
        return false;
    }
    const double q = lorentz_inner(z, z);
    return std::abs(q + 1.0) <= tol * std::max(1.0, z[0] * z[0]);
}

auto is_tangent(std::span<const double> base, std::span<const double> v,
                double tol) -> bool
{
    if (base.size() != v.size()) {
        return false;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        scale += std::abs(base[i] * v[i]);
    }
    return std::abs(lorentz_inner(base, v)) <= tol * std::max(1.0, scale);
}

auto distance(const LorentzPoint& a, const LorentzPoint& b) -> double
{
    const double alpha = -lorentz_inner(a.coords(), b.coords());
    return arccosh(std::max(alpha, 1.0));
}

auto exp_map(const LorentzPoint& mu, const TangentVector& u) -> LorentzPoint
{
    require_base(u, mu, "exp_map");
    const auto& c = u.coords();
    double scale = 0.0;
    for (double x : c) {
        scale += x * x;
    }
    if (lorentz_inner(c, c) < -kManifoldTol * std::max(1.0, scale)) {
        throw ValidationError {"exp_map: tangent vector is not spacelike"};
    }
    return LorentzPoint {kernels::exp_map(mu.coords(), c)};
}

auto log_map(const LorentzPoint& mu, const LorentzPoint& z) -> TangentVector
{
    if (mu.dim() != z.dim()) {
        throw DimensionError {"log_map: dimension mismatch"};
    }
    if (mu.coords() == z.coords()) {
        return TangentVector {mu, std::vector<double>(mu.coords().size(), 0.0)};
    }
    return TangentVector {mu, kernels::log_map(mu.coords(), z.coords())};
}

auto parallel_transport(const LorentzPoint& nu, const LorentzPoint& mu,
                        const TangentVector& v) -> TangentVector
{
    if (nu.dim() != mu.dim()) {
        throw DimensionError {"parallel_transport: dimension mismatch"};
    }
    require_base(v, nu, "parallel_transport");
    std::vector<double> out;
    if (!kernels::parallel_transport(nu.coords(), mu.coords(), v.coords(),
                                     out)) {
        throw DegenerateTransportError {
          "parallel_transport: alpha + 1 vanishes"};
    }
    return TangentVector {mu, std::move(out)};
}

auto inverse_parallel_transport(const LorentzPoint& nu, const LorentzPoint& mu,
                                const TangentVector& u) -> TangentVector
{
    return parallel_transport(mu, nu, u);
}

auto to_poincare(const LorentzPoint& z) -> std::vector<double>
{
    const auto& c = z.coords();
    std::vector<double> x(z.dim());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = c[i + 1] / (1.0 + c[0]);
    }
    return x;
}

auto from_poincare(std::span<const double> x) -> LorentzPoint
{
    if (x.empty()) {
        throw DimensionError {"from_poincare: empty input"};
    }
    if (!all_finite(x)) {
        throw ValidationError {"from_poincare: non-finite input"};
    }
    const double s = dot(x, x);
    if (!(s < 1.0)) {
        throw ValidationError {"from_poincare: point outside the unit ball"};
    }
    const double inv = 1.0 / (1.0 - s);
    std::vector<double> z(x.size() + 1);
    z[0] = (1.0 + s) * inv;
    for (std::size_t i = 0; i < x.size(); ++i) {
        z[i + 1] = 2.0 * x[i] * inv;
    }
    return LorentzPoint {std::move(z)};
}

auto lift_to_manifold(std::span<const double> h) -> LorentzPoint
{
    if (h.empty()) {
        throw DimensionError {"lift_to_manifold: empty input"};
    }
    if (!all_finite(h)) {
        throw ValidationError {"lift_to_manifold: non-finite input"};
    }
    return LorentzPoint {kernels::lift(h)};
}

} // namespace hyperwrap
