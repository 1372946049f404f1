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

#include "gradcheck.hpp"

#include "hyperwrap/checks.hpp"
#include "hyperwrap/errors.hpp"
#include "hyperwrap/stats.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace {

using namespace hyperwrap;
using ad::Tape;
using ad::Var;

auto lift(std::vector<double> h) -> LorentzPoint
{
    return lift_to_manifold(h);
}

// ------------------------------------------------------------ construction

TEST(WrappedNormal, ValidatesScale)
{
    const auto mu = LorentzPoint::origin(2);
    EXPECT_THROW((void)WrappedNormal::diagonal(mu, {1.0}), DimensionError);
    EXPECT_THROW((void)WrappedNormal::diagonal(mu, {1.0, 0.0}),
                 ValidationError);
    EXPECT_THROW((void)WrappedNormal::full(mu, {1.0, 0.5, 0.0, 1.0}),
                 ValidationError);
    EXPECT_THROW((void)WrappedNormal::full(mu, {1.0, 0.0, 0.5, -1.0}),
                 ValidationError);
    EXPECT_NO_THROW((void)WrappedNormal::full(mu, {1.0, 0.0, 0.5, 1.0}));
    EXPECT_EQ(parse_cov_kind("diag"), CovKind::diagonal);
    EXPECT_THROW((void)parse_cov_kind("dense"), ValidationError);
}

// ----------------------------------------------------------------- log_prob

// Reference values: tests/oracles/wrapped_normal_oracle.py (mpmath, base
// vector found by Newton iteration on the forward map).
TEST(LogProb, UnitAtOrigin)
{
    const auto d = WrappedNormal::unit(LorentzPoint::origin(2));
    const auto z = lift({1.0, 0.0});
    EXPECT_NEAR(log_prob(d, z), -2.499316427980541117, 1e-14);
    const double closed =
        -0.5 - std::log(2.0 * std::numbers::pi) - std::log(std::sinh(1.0));
    EXPECT_NEAR(log_prob(d, z), closed, 1e-14);
}

TEST(LogProb, DiagonalThreeDims)
{
    const auto d = WrappedNormal::diagonal(lift({0.3, -0.2, 0.5}),
                                           {0.7, 1.3, 0.9});
    const auto z = lift({1.0, 0.4, -0.6});
    EXPECT_NEAR(log_prob(d, z), -4.577691937621175176, 1e-13);
    const auto base = recover_base(d, z);
    EXPECT_NEAR(base[0], 0.46884114714216016406, 1e-14);
    EXPECT_NEAR(base[1], 0.64773226001559213898, 1e-14);
    EXPECT_NEAR(base[2], -1.2592207657475932543, 1e-14);
}

TEST(LogProb, FullCovariance)
{
    const auto d =
        WrappedNormal::full(lift({0.8, -0.3}), {0.9, 0.0, 0.4, 1.2});
    EXPECT_NEAR(log_prob(d, lift({-0.5, 0.7})), -4.321522841446357761, 1e-13);
}

TEST(LogProb, OneDimensionIsBaseGaussian)
{
    const auto d = WrappedNormal::diagonal(lift({0.6}), {0.8});
    const auto z = lift({-0.4});
    EXPECT_NEAR(log_prob(d, z), -1.477044981890462986, 1e-14);
    const double base = -0.5 * (1.0 / 0.64) - std::log(0.8)
                        - 0.5 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(log_prob(d, z), base, 1e-14);
    EXPECT_NEAR(recover_base(d, z)[0], -1.0, 1e-14);
}

TEST(LogProb, FarFromOrigin)
{
    const auto d = WrappedNormal::unit(lift({1.5, 2.0, -1.0, 0.5, 0.1}));
    EXPECT_NEAR(log_prob(d, lift({-2.0, 1.0, 0.3, 0.0, 1.2})),
                -25.9938513012503351979, 1e-11);
}

TEST(LogProb, FiniteAtTheMean)
{
    for (std::size_t n : {1U, 2U, 6U}) {
        const auto mu = lift(std::vector<double>(n, 0.4));
        const auto d = WrappedNormal::unit(mu);
        const double expected =
            -static_cast<double>(n) * 0.5 * std::log(2.0 * std::numbers::pi);
        EXPECT_NEAR(log_prob(d, mu), expected, 1e-12);
    }
}

TEST(LogProb, RejectsDimensionMismatch)
{
    const auto d = WrappedNormal::unit(LorentzPoint::origin(2));
    EXPECT_THROW((void)log_prob(d, LorentzPoint::origin(3)), DimensionError);
}

// ------------------------------------------------------------- log_det_proj

TEST(LogDetProj, Limits)
{
    EXPECT_EQ(log_det_proj(0.0, 5), 0.0);
    EXPECT_EQ(log_det_proj(3.0, 1), 0.0);
    EXPECT_NEAR(log_det_proj(1e-7, 3), 2.0 * 1e-14 / 6.0, 1e-28);
    EXPECT_NEAR(log_det_proj(2.0, 3), 2.0 * 0.59522019205422282064, 1e-14);
    EXPECT_THROW((void)log_det_proj(-1.0, 2), ValidationError);
}

TEST(LogDetProj, MatchesFiniteDifferenceJacobian)
{
    Rng rng {8};
    for (int i = 0; i < 10; ++i) {
        const auto mu = checks::random_point(3, 3.0, rng);
        std::vector<double> v {rng.normal(), rng.normal(), rng.normal()};
        const double s = 2.0 / std::sqrt(dot(v, v));
        for (auto& x : v) {
            x *= s;
        }
        const double fd = checks::fd_log_det_proj(mu, v);
        EXPECT_NEAR(fd / log_det_proj(2.0, 3), 1.0, 1e-5);
    }
}

TEST(LogDetProj, SmallRadiusJacobian)
{
    Rng rng {9};
    const auto mu = checks::random_point(4, 3.0, rng);
    const std::vector<double> v {1e-3, -2e-3, 0.5e-3, 1e-3};
    const double r = std::sqrt(dot(v, v));
    EXPECT_NEAR(checks::fd_log_det_proj(mu, v, 1e-6), log_det_proj(r, 4),
                1e-9);
}

TEST(TangentBasis, IsOrthonormal)
{
    Rng rng {10};
    const auto z = checks::random_point(5, 4.0, rng);
    const auto b = checks::tangent_basis(z);
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_NEAR(lorentz_inner(z.coords(), b[i]), 0.0, 1e-9);
        for (std::size_t j = 0; j < b.size(); ++j) {
            EXPECT_NEAR(lorentz_inner(b[i], b[j]), i == j ? 1.0 : 0.0, 1e-9);
        }
    }
}

// ----------------------------------------------------------------- sampling

TEST(Sample, DegenerateScaleCollapsesOnMean)
{
    Rng rng {1};
    const auto mu = lift({0.7, -1.1, 0.2});
    const auto d = WrappedNormal::diagonal(mu, {1e-12, 1e-12, 1e-12});
    for (int i = 0; i < 20; ++i) {
        const auto draw = sample(d, rng);
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_NEAR(draw.z[k], mu[k], 1e-9);
        }
    }
}

TEST(Sample, AtOriginIsPlainExponential)
{
    Rng rng {2};
    const auto d = WrappedNormal::unit(LorentzPoint::origin(3));
    for (int i = 0; i < 20; ++i) {
        const auto draw = sample(d, rng);
        const auto z = lift_to_manifold(draw.base);
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_NEAR(draw.z[k], z[k], 1e-14 * std::max(1.0, z[0]));
        }
    }
}

TEST(Sample, BaseIsRecovered)
{
    Rng rng {3};
    for (std::size_t n : {1U, 2U, 5U}) {
        for (int i = 0; i < 200; ++i) {
            const auto mu = checks::random_point(n, 2.0, rng);
            std::vector<double> sigma(n);
            for (auto& s : sigma) {
                s = 0.3 + 1.5 * rng.uniform();
            }
            const auto d = WrappedNormal::diagonal(mu, sigma);
            const auto draw = sample(d, rng);
            const auto back = recover_base(d, draw.z);
            for (std::size_t k = 0; k < n; ++k) {
                EXPECT_NEAR(back[k], draw.base[k], 1e-8);
            }
        }
    }
}

TEST(Sample, WithLogProbAgreesWithLogProb)
{
    Rng rng {4};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 5);
        const auto mu = checks::random_point(n, 2.0, rng);
        std::vector<double> sigma(n);
        for (auto& s : sigma) {
            s = 0.3 + 1.5 * rng.uniform();
        }
        const auto d = WrappedNormal::diagonal(mu, sigma);
        const auto draw = sample_with_log_prob(d, rng);
        worst = std::max(worst, std::abs(draw.log_prob - log_prob(d, draw.z)));
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Sample, WithLogProbFullCovariance)
{
    Rng rng {5};
    const auto d =
        WrappedNormal::full(lift({0.8, -0.3}), {0.9, 0.0, 0.4, 1.2});
    for (int i = 0; i < 200; ++i) {
        const auto draw = sample_with_log_prob(d, rng);
        EXPECT_NEAR(draw.log_prob, log_prob(d, draw.z), 1e-9);
    }
}

TEST(Sample, OneDimensionLogProbIsBase)
{
    Rng rng {6};
    const auto d = WrappedNormal::diagonal(lift({-0.3}), {1.7});
    for (int i = 0; i < 50; ++i) {
        Rng copy = rng;
        const auto draw = sample(d, copy);
        const auto withlp = sample_with_log_prob(d, rng);
        const double x = draw.base[0] / 1.7;
        EXPECT_NEAR(withlp.log_prob,
                    -0.5 * x * x - std::log(1.7)
                        - 0.5 * std::log(2.0 * std::numbers::pi),
                    1e-12);
    }
}

TEST(Sample, KolmogorovSmirnovOnRecoveredBase)
{
    const auto mu = lift({0.5, -1.0});
    const auto d = WrappedNormal::diagonal(mu, {0.6, 1.4});
    const auto r = checks::sampling_suite(d, 4000, 77);
    EXPECT_LE(r.worst_recovery, 1e-8);
    for (double p : r.ks_p_value) {
        EXPECT_GT(p, 0.01);
    }
}

// --------------------------------------------------------- density integral

TEST(Density, IntegratesToOneAtOrigin)
{
    const auto d = WrappedNormal::unit(LorentzPoint::origin(2));
    EXPECT_NEAR(checks::density_integral(d, d.mu(), 8.0, 32, 64), 1.0, 1e-6);
}

TEST(Density, IntegratesToOneAboutAnotherCenter)
{
    // geodesic polar coordinates about the origin while the mean sits at
    // distance 1: the integrand no longer factorizes.
    const auto mu = lift({0.6, 0.8});
    const auto d = WrappedNormal::diagonal(mu, {std::sqrt(0.5), std::sqrt(2.0)});
    const double total = checks::density_integral(
        d, LorentzPoint::origin(2), 10.0, 64, 256);
    EXPECT_NEAR(total, 1.0, 1e-4);
}

// --------------------------------------------------------------------- KL

TEST(Kl, SelfDivergenceIsNoise)
{
    Rng rng {12};
    const auto q = WrappedNormal::diagonal(lift({0.4, -0.9, 1.3}),
                                           {0.5, 1.2, 0.8});
    const auto est = kl_monte_carlo(q, q, 512, rng);
    EXPECT_LE(std::abs(est.mean), 3.0 * est.stddev / std::sqrt(512.0) + 1e-12);
}

TEST(Kl, OneDimensionMatchesGaussianKl)
{
    Rng rng {13};
    const auto o = LorentzPoint::origin(1);
    for (auto [sq, sp] : {std::pair {0.5, 1.0}, std::pair {1.3, 0.7},
                          std::pair {2.0, 2.5}}) {
        const auto q = WrappedNormal::diagonal(o, {sq});
        const auto p = WrappedNormal::diagonal(o, {sp});
        const auto est = kl_monte_carlo(q, p, 4096, rng);
        const double closed =
            std::log(sp / sq) + sq * sq / (2.0 * sp * sp) - 0.5;
        EXPECT_NEAR(est.mean, closed, 4.0 * est.stddev / std::sqrt(4096.0));
    }
}

TEST(Kl, NonNegativeUpToNoise)
{
    Rng rng {14};
    for (int i = 0; i < 30; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 4);
        std::vector<double> sq(n);
        std::vector<double> sp(n);
        for (std::size_t k = 0; k < n; ++k) {
            sq[k] = 0.3 + rng.uniform();
            sp[k] = 0.3 + rng.uniform();
        }
        const auto q =
            WrappedNormal::diagonal(checks::random_point(n, 2.0, rng), sq);
        const auto p =
            WrappedNormal::diagonal(checks::random_point(n, 2.0, rng), sp);
        const auto est = kl_monte_carlo(q, p, 256, rng);
        EXPECT_GE(est.mean, -3.0 * est.stddev / std::sqrt(256.0));
    }
}

TEST(Kl, RejectsMismatch)
{
    Rng rng {1};
    const auto q = WrappedNormal::unit(LorentzPoint::origin(2));
    const auto p = WrappedNormal::unit(LorentzPoint::origin(3));
    EXPECT_THROW((void)kl_monte_carlo(q, p, 4, rng), DimensionError);
    EXPECT_THROW((void)kl_monte_carlo(q, q, 0, rng), ValidationError);
}

// --------------------------------------------------------------- gradients

// log_prob as a function of (h, raw scale) with mu = lift(h), for a fixed
// target point.
auto log_prob_fn(CovKind kind, std::size_t n, std::vector<double> z)
    -> checks::ScalarFn
{
    return [=](Tape&, std::span<const Var> x) {
        WrappedParams<Var> p;
        p.kind = kind;
        p.mu = kernels::lift(x.first(n));
        const std::size_t m = kind == CovKind::full ? n * n : n;
        if (kind != CovKind::unit) {
            p.scale.assign(x.begin() + static_cast<std::ptrdiff_t>(n),
                           x.begin() + static_cast<std::ptrdiff_t>(n + m));
        }
        Coords<Var> zv(z.begin(), z.end());
        return kernels::wrapped_log_prob(p, zv);
    };
}

TEST(Gradients, LogProbWrtLocationAndScale)
{
    Rng rng {21};
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 4);
        const auto target = checks::random_point(n, 2.5, rng);
        std::vector<double> x(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = rng.normal();
            x[n + k] = 0.4 + rng.uniform();
        }
        const auto r = checks::check_gradient(
            log_prob_fn(CovKind::diagonal, n, target.coords()), x, 1e-5);
        EXPECT_LE(r.worst_excess, 1.0) << "case " << i;
    }
}

TEST(Gradients, LogProbNearTheMean)
{
    // exercises the series branches of the log map and the determinant
    const std::vector<double> h {0.3, -0.4, 0.2};
    const auto mu = lift(h);
    const auto z = exp_map(mu, parallel_transport(
                                   LorentzPoint::origin(3), mu,
                                   TangentVector::at_origin(
                                       std::vector<double> {1e-4, 0.0, 0.0})));
    auto x = h;
    x.insert(x.end(), {0.8, 1.1, 0.6});
    const auto r = checks::check_gradient(
        log_prob_fn(CovKind::diagonal, 3, z.coords()), x, 1e-5);
    EXPECT_LE(r.worst_excess, 1.0);
}

TEST(Gradients, LogProbFullFactor)
{
    Rng rng {22};
    for (int i = 0; i < 20; ++i) {
        const auto target = checks::random_point(2, 2.0, rng);
        std::vector<double> x {rng.normal(), rng.normal(),
                               0.5 + rng.uniform(), 0.0,
                               0.3 * rng.normal(), 0.5 + rng.uniform()};
        const auto r = checks::check_gradient(
            log_prob_fn(CovKind::full, 2, target.coords()), x, 1e-5);
        EXPECT_LE(r.worst_excess, 1.0) << "case " << i;
    }
}

TEST(Gradients, FusedLogProbMatchesElementaryNodes)
{
    // the taped overload against the generic template, z also on the tape
    Rng rng {24};
    for (int i = 0; i < 60; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 5);
        const auto kind = i % 2 == 0 ? CovKind::diagonal : CovKind::unit;
        std::vector<double> x(3 * n);
        for (std::size_t k = 0; k < 2 * n; ++k) {
            x[k] = (i % 3 == 0 ? 1e-3 : (i % 3 == 1 ? 1.0 : 4.0)) * rng.normal();
        }
        for (std::size_t k = 0; k < n; ++k) {
            x[2 * n + k] = 0.3 + rng.uniform();
        }
        auto run = [&](bool fused, std::vector<double>& grad) {
            Tape tape;
            std::vector<Var> leaves;
            for (double v : x) {
                leaves.push_back(tape.variable(v));
            }
            const std::span<const Var> all {leaves};
            WrappedParams<Var> p;
            p.kind = kind;
            p.mu = kernels::lift(all.first(n));
            if (kind == CovKind::diagonal) {
                p.scale.assign(leaves.begin() + static_cast<std::ptrdiff_t>(2 * n),
                               leaves.end());
            }
            const auto z = kernels::lift(all.subspan(n, n));
            const Var out = fused ? kernels::wrapped_log_prob(p, z)
                                  : kernels::wrapped_log_prob<Var>(p, z);
            const auto g = tape.backward(out);
            grad.clear();
            for (const auto& l : leaves) {
                grad.push_back(g.wrt(l));
            }
            return out.value();
        };
        std::vector<double> g_fused;
        std::vector<double> g_plain;
        const double a = run(true, g_fused);
        const double b = run(false, g_plain);
        EXPECT_NEAR(a, b, 1e-10 * (1.0 + std::abs(b))) << "case " << i;
        for (std::size_t k = 0; k < x.size(); ++k) {
            EXPECT_NEAR(g_fused[k], g_plain[k], 1e-6 * (1.0 + std::abs(g_plain[k])))
                << "case " << i << " coordinate " << k;
        }
    }
}

TEST(Gradients, SampleWithLogProbIsPathwise)
{
    // d/dtheta of the reparametrized log q(z(theta); theta)
    Rng rng {23};
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 4);
        std::vector<double> eps(n);
        rng.fill_normal(eps);
        std::vector<double> x(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = rng.normal();
            x[n + k] = 0.4 + rng.uniform();
        }
        auto f = [n, eps](Tape&, std::span<const Var> v) {
            WrappedParams<Var> p;
            p.kind = CovKind::diagonal;
            p.mu = kernels::lift(v.first(n));
            p.scale.assign(v.begin() + static_cast<std::ptrdiff_t>(n),
                           v.end());
            Var lp;
            const auto z = kernels::wrapped_sample(
                p, std::span<const double> {eps}, &lp);
            return lp + 0.1 * z[0];
        };
        const auto r = checks::check_gradient(f, x, 1e-5);
        EXPECT_LE(r.worst_excess, 1.0) << "case " << i;
    }
}

TEST(Gradients, KlEstimatorBothArguments)
{
    Rng rng {24};
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 3);
        const std::size_t k = 4;
        std::vector<double> eps(k * n);
        rng.fill_normal(eps);
        std::vector<double> x(4 * n);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = rng.normal();
            x[n + j] = 0.4 + rng.uniform();
            x[2 * n + j] = rng.normal();
            x[3 * n + j] = 0.4 + rng.uniform();
        }
        auto f = [n, eps](Tape&, std::span<const Var> v) {
            auto make = [&](std::size_t off) {
                WrappedParams<Var> p;
                p.kind = CovKind::diagonal;
                p.mu = kernels::lift(v.subspan(off, n));
                p.scale.assign(v.begin() + static_cast<std::ptrdiff_t>(off + n),
                               v.begin()
                                   + static_cast<std::ptrdiff_t>(off + 2 * n));
                return p;
            };
            return kernels::wrapped_kl(make(0), make(2 * n),
                                       std::span<const double> {eps});
        };
        const auto r = checks::check_gradient(f, x, 1e-5);
        EXPECT_LE(r.worst_excess, 1.0) << "case " << i;
    }
}

} // namespace
