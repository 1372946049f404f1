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

// Numerical oracles shared by the selfcheck command and the acceptance
// tests. None of them reuse the closed-form determinant or density code
// they are checking.

#include "hyperwrap/lorentz.hpp"
#include "hyperwrap/random.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hyperwrap::checks {

struct SuiteResult
{
    std::string name;
    std::size_t cases {0};
    std::size_t failures {0};
    double worst {0.0};     // largest observed error
    double tolerance {0.0}; // the bound it was held to
    double seconds {0.0};

    [[nodiscard]] auto passed() const noexcept -> bool
    {
        return cases > 0 && failures == 0;
    }
};

/// Random point at geodesic distance uniform in [0, max_dist] from the
/// origin, direction uniform.
[[nodiscard]] auto random_point(std::size_t n, double max_dist, Rng& rng)
    -> LorentzPoint;
/// Random tangent vector at mu with Lorentz norm uniform in [0, max_norm].
[[nodiscard]] auto random_tangent(const LorentzPoint& mu, double max_norm,
                                  Rng& rng) -> TangentVector;

/// Lorentz-orthonormal basis of the tangent space at z (n vectors of
/// length n + 1), by Gram-Schmidt on projected ambient axes.
[[nodiscard]] auto tangent_basis(const LorentzPoint& z)
    -> std::vector<std::vector<double>>;

/// log|det| of the Jacobian of vt -> exp_mu(PT_{origin->mu}([0, vt])) at
/// vt, by central differences with coordinates taken in an orthonormal
/// basis of the image tangent space.
[[nodiscard]] auto fd_log_det_proj(const LorentzPoint& mu,
                                   std::span<const double> vt,
                                   double step = 1e-5) -> double;

/// Jacobian oracle over n in {2, 3, 5}, r in {0.1, 1, 2, 4}, `pairs`
/// random (mu, direction) pairs each, mu within distance 3 of the origin.
[[nodiscard]] auto jacobian_suite(std::uint64_t seed, std::size_t pairs = 20,
                                  double rel_tol = 1e-4) -> SuiteResult;

/// log(exp), exp(log), inverse transport and transport isometry.
[[nodiscard]] auto round_trip_suites(std::uint64_t seed,
                                     std::size_t cases = 1000)
    -> std::vector<SuiteResult>;

/// Integral of exp(log_prob) over H^2 in geodesic polar coordinates
/// about `center`, radius up to `max_radius`. Gauss-Legendre panels in the
/// radius, trapezoid in the angle.
[[nodiscard]] auto density_integral(const WrappedNormal& d,
                                    const LorentzPoint& center,
                                    double max_radius,
                                    std::size_t radial_panels = 64,
                                    std::size_t angles = 256) -> double;

struct SamplingResult
{
    std::size_t samples {0};
    double worst_recovery {0.0};
    std::vector<double> ks_statistic; // one per base coordinate
    std::vector<double> ks_p_value;
};

/// Draws `samples` points, recovers their base vectors through the inverse
/// maps, and KS-tests each whitened coordinate against N(0, 1).
[[nodiscard]] auto sampling_suite(const WrappedNormal& d, std::size_t samples,
                                  std::uint64_t seed) -> SamplingResult;

} // namespace hyperwrap::checks
