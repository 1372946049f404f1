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

// The Lorentz (hyperboloid) model H^n = { z in R^{n+1} : <z, z>_L = -1,
// z0 > 0 } with validated point and tangent-vector types.
//
// Membership tolerances are relative to the magnitude of the terms that
// cancel: a point passes when |<z,z>_L + 1| <= kManifoldTol * max(1, z0^2),
// a tangent vector when |<base, v>_L| <= kManifoldTol * max(1, sum |base_i
// v_i|). Near the origin both reduce to the absolute 1e-9 bound.

#include "hyperwrap/kernels.hpp"

#include <span>
#include <vector>

namespace hyperwrap {

inline constexpr double kManifoldTol = 1e-9;

class LorentzPoint
{
public:
    /// Validates the hyperboloid constraint; throws ValidationError.
    explicit LorentzPoint(std::vector<double> coords);

    /// [1, 0, ..., 0] in H^n.
    [[nodiscard]] static auto origin(std::size_t n) -> LorentzPoint;

    [[nodiscard]] auto coords() const noexcept -> const std::vector<double>&
    {
        return coords_;
    }
    [[nodiscard]] auto dim() const noexcept -> std::size_t
    {
        return coords_.size() - 1;
    }
    [[nodiscard]] auto operator[](std::size_t i) const -> double
    {
        return coords_[i];
    }

private:
    struct Unchecked
    {};
    LorentzPoint(std::vector<double> coords, Unchecked);

    std::vector<double> coords_;
};

class TangentVector
{
public:
    /// Validates <base, v>_L = 0; throws ValidationError.
    TangentVector(LorentzPoint base, std::vector<double> coords);

    /// [0, vt] at the origin; exact by construction.
    [[nodiscard]] static auto at_origin(std::span<const double> vt)
        -> TangentVector;

    [[nodiscard]] auto coords() const noexcept -> const std::vector<double>&
    {
        return coords_;
    }
    [[nodiscard]] auto base() const noexcept -> const LorentzPoint&
    {
        return base_;
    }
    [[nodiscard]] auto dim() const noexcept -> std::size_t
    {
        return base_.dim();
    }
    /// sqrt(<v, v>_L), clamped at zero.
    [[nodiscard]] auto norm() const -> double;

private:
    LorentzPoint base_;
    std::vector<double> coords_;
};

/// Throws DimensionError unless both have the same length >= 2.
[[nodiscard]] auto lorentz_inner(std::span<const double> a,
                                 std::span<const double> b) -> double;

/// Distance check helpers used by the typed API; exposed for tests and
/// input validation in the CLI.
[[nodiscard]] auto on_manifold(std::span<const double> z,
                               double tol = kManifoldTol) -> bool;
[[nodiscard]] auto is_tangent(std::span<const double> base,
                              std::span<const double> v,
                              double tol = kManifoldTol) -> bool;

/// arccosh(-<z1, z2>_L) with the argument clamped to [1, inf).
[[nodiscard]] auto distance(const LorentzPoint& a, const LorentzPoint& b)
    -> double;

/// Throws ValidationError if u is based elsewhere or is timelike beyond
/// tolerance.
[[nodiscard]] auto exp_map(const LorentzPoint& mu, const TangentVector& u)
    -> LorentzPoint;

[[nodiscard]] auto log_map(const LorentzPoint& mu, const LorentzPoint& z)
    -> TangentVector;

/// Moves v from T_nu to T_mu along the geodesic.
[[nodiscard]] auto parallel_transport(const LorentzPoint& nu,
                                      const LorentzPoint& mu,
                                      const TangentVector& v) -> TangentVector;

/// Undoes parallel_transport(nu, mu, .): takes u in T_mu back to T_nu.
[[nodiscard]] auto inverse_parallel_transport(const LorentzPoint& nu,
                                              const LorentzPoint& mu,
                                              const TangentVector& u)
    -> TangentVector;

/// Poincare-ball coordinates z_{1:n} / (1 + z0).
[[nodiscard]] auto to_poincare(const LorentzPoint& z) -> std::vector<double>;

/// Inverse of to_poincare for |x| < 1.
[[nodiscard]] auto from_poincare(std::span<const double> x) -> LorentzPoint;

/// exp_origin([0, h]); throws ValidationError on non-finite input.
[[nodiscard]] auto lift_to_manifold(std::span<const double> h)
    -> LorentzPoint;

} // namespace hyperwrap
