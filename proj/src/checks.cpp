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

#include "hyperwrap/checks.hpp"

#include "hyperwrap/kernels.hpp"
#include "hyperwrap/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <chrono>
#include <cmath>
#include <numbers>

namespace hyperwrap::checks {

namespace {

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point t0) -> double
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

auto unit_direction(std::size_t n, Rng& rng) -> std::vector<double>
{
    std::vector<double> d(n);
    double s = 0.0;
    do {
        rng.fill_normal(d);
        s = dot(d, d);
    } while (s < 1e-12);
    for (auto& x : d) {
        x /= std::sqrt(s);
    }
    return d;
}

auto proj(const std::vector<double>& mu, std::span<const double> vt)
    -> std::vector<double>
{
    const auto u = kernels::transport_from_origin(mu, vt);
    return kernels::exp_map(mu, u);
}

void record(SuiteResult& s, double err, double tol)
{
    ++s.cases;
    s.worst = std::max(s.worst, err);
    if (!(err <= tol)) {
        ++s.failures;
    }
}

} // namespace

auto random_point(std::size_t n, double max_dist, Rng& rng) -> LorentzPoint
{
    auto d = unit_direction(n, rng);
    const double r = max_dist * rng.uniform();
    for (auto& x : d) {
        x *= r;
    }
    return lift_to_manifold(d);
}

auto random_tangent(const LorentzPoint& mu, double max_norm, Rng& rng)
    -> TangentVector
{
    auto d = unit_direction(mu.dim(), rng);
    const double r = max_norm * rng.uniform();
    for (auto& x : d) {
        x *= r;
    }
    return parallel_transport(LorentzPoint::origin(mu.dim()), mu,
                              TangentVector::at_origin(d));
}

auto tangent_basis(const LorentzPoint& z) -> std::vector<std::vector<double>>
{
    const std::size_t n = z.dim();
    const auto& c = z.coords();
    std::vector<std::vector<double>> basis;
    for (std::size_t axis = 1; axis <= n; ++axis) {
        std::vector<double> e(n + 1, 0.0);
        e[axis] = 1.0;
        // two passes of modified Gram-Schmidt against z and earlier vectors
        for (int pass = 0; pass < 2; ++pass) {
            const double pz = lorentz_inner(c, e);
            for (std::size_t i = 0; i <= n; ++i) {
                e[i] += pz * c[i];
            }
            for (const auto& b : basis) {
                const double pb = lorentz_inner(b, e);
                for (std::size_t i = 0; i <= n; ++i) {
                    e[i] -= pb * b[i];
                }
            }
        }
        const double norm = std::sqrt(lorentz_inner(e, e));
        for (auto& x : e) {
            x /= norm;
        }
        basis.push_back(std::move(e));
    }
    return basis;
}

auto fd_log_det_proj(const LorentzPoint& mu, std::span<const double> vt,
                     double step) -> double
{
    const std::size_t n = mu.dim();
    const LorentzPoint z {proj(mu.coords(), vt)};
    const auto basis = tangent_basis(z);
    Eigen::MatrixXd jac(n, n);
    std::vector<double> p(vt.begin(), vt.end());
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = vt[j] + step;
        const auto up = proj(mu.coords(), p);
        p[j] = vt[j] - step;
        const auto down = proj(mu.coords(), p);
        p[j] = vt[j];
        std::vector<double> col(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            col[i] = (up[i] - down[i]) / (2.0 * step);
        }
        for (std::size_t i = 0; i < n; ++i) {
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                lorentz_inner(basis[i], col);
        }
    }
    return std::log(std::abs(jac.partialPivLu().determinant()));
}

auto jacobian_suite(std::uint64_t seed, std::size_t pairs, double rel_tol)
    -> SuiteResult
{
    const auto t0 = Clock::now();
    SuiteResult s {.name = "jacobian", .tolerance = rel_tol};
    Rng rng {seed};
    for (std::size_t n : {2U, 3U, 5U}) {
        for (double r : {0.1, 1.0, 2.0, 4.0}) {
            for (std::size_t i = 0; i < pairs; ++i) {
                const auto mu = random_point(n, 3.0, rng);
                auto vt = unit_direction(n, rng);
                for (auto& x : vt) {
                    x *= r;
                }
                const double oracle = fd_log_det_proj(mu, vt);
                const double closed = log_det_proj(r, n);
                record(s, std::abs(oracle - closed) / std::abs(closed),
                       rel_tol);
            }
        }
    }
    s.seconds = seconds_since(t0);
    return s;
}

auto round_trip_suites(std::uint64_t seed, std::size_t cases)
    -> std::vector<SuiteResult>
{
    std::vector<SuiteResult> out;
    const std::size_t dims[] = {2, 3, 5, 10};

    {
        const auto t0 = Clock::now();
        SuiteResult s {.name = "log_exp", .tolerance = 1e-9};
        Rng rng {mix_seed(seed, 1)};
        for (std::size_t i = 0; i < cases; ++i) {
            const auto mu = random_point(dims[i % 4], 2.0, rng);
            const auto u = random_tangent(mu, 5.0, rng);
            const auto back = log_map(mu, exp_map(mu, u));
            double err = 0.0;
            for (std::size_t k = 0; k < u.coords().size(); ++k) {
                err = std::max(err, std::abs(back.coords()[k] - u.coords()[k]));
            }
            record(s, err, s.tolerance);
        }
        s.seconds = seconds_since(t0);
        out.push_back(s);
    }
    {
        const auto t0 = Clock::now();
        SuiteResult s {.name = "exp_log", .tolerance = 1e-9};
        Rng rng {mix_seed(seed, 2)};
        for (std::size_t i = 0; i < cases; ++i) {
            const auto mu = random_point(dims[i % 4], 2.0, rng);
            // partner at distance <= 5 from mu
            const auto z = exp_map(mu, random_tangent(mu, 5.0, rng));
            const auto again = exp_map(mu, log_map(mu, z));
            double err = 0.0;
            for (std::size_t k = 0; k < z.coords().size(); ++k) {
                err = std::max(err, std::abs(again[k] - z[k]));
            }
            record(s, err, s.tolerance);
        }
        s.seconds = seconds_since(t0);
        out.push_back(s);
    }
    {
        const auto t0 = Clock::now();
        SuiteResult inv {.name = "transport_inverse", .tolerance = 1e-10};
        SuiteResult iso {.name = "transport_isometry", .tolerance = 1e-10};
        Rng rng {mix_seed(seed, 3)};
        for (std::size_t i = 0; i < cases; ++i) {
            const std::size_t n = dims[i % 4];
            const auto nu = random_point(n, 1.5, rng);
            const auto mu = random_point(n, 1.5, rng);
            const auto v = random_tangent(nu, 3.0, rng);
            const auto w = random_tangent(nu, 3.0, rng);
            const auto pv = parallel_transport(nu, mu, v);
            const auto pw = parallel_transport(nu, mu, w);
            const auto back = inverse_parallel_transport(nu, mu, pv);
            double err = 0.0;
            for (std::size_t k = 0; k <= n; ++k) {
                err = std::max(err, std::abs(back.coords()[k] - v.coords()[k]));
            }
            record(inv, err, inv.tolerance);
            record(iso,
                   std::abs(lorentz_inner(pv.coords(), pw.coords())
                            - lorentz_inner(v.coords(), w.coords())),
                   iso.tolerance);
        }
        inv.seconds = iso.seconds = seconds_since(t0);
        out.push_back(inv);
        out.push_back(iso);
    }
    return out;
}

auto density_integral(const WrappedNormal& d, const LorentzPoint& center,
                      double max_radius, std::size_t radial_panels,
                      std::size_t angles) -> double
{
    if (d.dim() != 2 || center.dim() != 2) {
        throw DimensionError {"density_integral: only implemented for n = 2"};
    }
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const auto basis = tangent_basis(center);
    const double width = max_radius / static_cast<double>(radial_panels);
    const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(angles);
    double total = 0.0;
    for (std::size_t a = 0; a < angles; ++a) {
        const double theta = dtheta * static_cast<double>(a);
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        auto radial = [&](double r) {
            std::vector<double> u(3);
            for (std::size_t i = 0; i < 3; ++i) {
                u[i] = r * (ct * basis[0][i] + st * basis[1][i]);
            }
            const LorentzPoint z {kernels::exp_map(center.coords(), u)};
            return std::exp(log_prob(d, z)) * std::sinh(r);
        };
        for (std::size_t p = 0; p < radial_panels; ++p) {
            const double lo = width * static_cast<double>(p);
            total += Rule::integrate(radial, lo, lo + width);
        }
    }
    return total * dtheta;
}

auto sampling_suite(const WrappedNormal& d, std::size_t samples,
                    std::uint64_t seed) -> SamplingResult
{
    const std::size_t n = d.dim();
    SamplingResult out;
    out.samples = samples;
    Rng rng {seed};
    std::vector<std::vector<double>> whitened(n);
    for (std::size_t s = 0; s < samples; ++s) {
        const auto draw = sample(d, rng);
        const auto back = recover_base(d, draw.z);
        for (std::size_t i = 0; i < n; ++i) {
            out.worst_recovery =
                std::max(out.worst_recovery, std::abs(back[i] - draw.base[i]));
        }
        // whiten: solve L y = v for the full factor, divide for diagonal
        std::vector<double> y(back);
        if (d.kind() == CovKind::diagonal) {
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = back[i] / d.scale()[i];
            }
        } else if (d.kind() == CovKind::full) {
            const auto& l = d.scale();
            for (std::size_t i = 0; i < n; ++i) {
                double acc = back[i];
                for (std::size_t j = 0; j < i; ++j) {
                    acc -= l[i * n + j] * y[j];
                }
                y[i] = acc / l[i * n + i];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            whitened[i].push_back(y[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto ks = stats::ks_test_normal(whitened[i], 1.0);
        out.ks_statistic.push_back(ks.statistic);
        out.ks_p_value.push_back(ks.p_value);
    }
    return out;
}

} // namespace hyperwrap::checks
