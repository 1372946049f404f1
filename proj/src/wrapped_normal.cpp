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

#include "hyperwrap/wrapped_normal.hpp"

#include "hyperwrap/errors.hpp"
#include "hyperwrap/stats.hpp"

#include <cmath>

namespace hyperwrap {

auto to_string(CovKind kind) -> std::string
{
    switch (kind) {
    case CovKind::unit:
        return "unit";
    case CovKind::diagonal:
        return "diag";
    case CovKind::full:
        return "full";
    }
    return "unknown";
}

auto parse_cov_kind(std::string_view text) -> CovKind
{
    if (text == "unit") {
        return CovKind::unit;
    }
    if (text == "diag" || text == "diagonal") {
        return CovKind::diagonal;
    }
    if (text == "full") {
        return CovKind::full;
    }
    throw ValidationError {"unknown covariance kind '" + std::string {text}
                           + "' (expected unit, diag or full)"};
}

WrappedNormal::WrappedNormal(LorentzPoint mu, CovKind kind,
                             std::vector<double> scale)
  : mu_{std::move(mu)}, kind_{kind}, scale_{std::move(scale)}
{}

auto WrappedNormal::unit(LorentzPoint mu) -> WrappedNormal
{
    return WrappedNormal {std::move(mu), CovKind::unit, {}};
}

auto WrappedNormal::diagonal(LorentzPoint mu, std::vector<double> sigma)
    -> WrappedNormal
{
    if (sigma.size() != mu.dim()) {
        throw DimensionError {"WrappedNormal: need one sigma per dimension"};
    }
    for (double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ValidationError {"WrappedNormal: sigma must be positive"};
        }
    }
    return WrappedNormal {std::move(mu), CovKind::diagonal, std::move(sigma)};
}

auto WrappedNormal::full(LorentzPoint mu, std::vector<double> lower)
    -> WrappedNormal
{
    const std::size_t n = mu.dim();
    if (lower.size() != n * n) {
        throw DimensionError {"WrappedNormal: factor must be n x n"};
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = lower[i * n + j];
            if (!std::isfinite(x)) {
                throw ValidationError {"WrappedNormal: non-finite factor"};
            }
            if (j > i && x != 0.0) {
                throw ValidationError {
                  "WrappedNormal: factor is not lower triangular"};
            }
        }
        if (!(lower[i * n + i] > 0.0)) {
            throw ValidationError {
              "WrappedNormal: factor diagonal must be positive"};
        }
    }
    return WrappedNormal {std::move(mu), CovKind::full, std::move(lower)};
}

auto WrappedNormal::params() const -> WrappedParams<double>
{
    return {mu_.coords(), kind_, scale_};
}

namespace {

auto draw_noise(std::size_t n, Rng& rng) -> std::vector<double>
{
    std::vector<double> eps(n);
    rng.fill_normal(eps);
    return eps;
}

} // namespace

auto sample(const WrappedNormal& d, Rng& rng) -> Draw
{
    const auto p = d.params();
    const auto eps = draw_noise(d.dim(), rng);
    double unused;
    auto base = kernels::scale_noise(p, std::span<const double> {eps}, unused);
    auto z = kernels::wrapped_sample(p, std::span<const double> {eps});
    return {LorentzPoint {std::move(z)}, std::move(base)};
}

auto sample_with_log_prob(const WrappedNormal& d, Rng& rng) -> DrawWithLogProb
{
    const auto p = d.params();
    const auto eps = draw_noise(d.dim(), rng);
    double lp = 0.0;
    auto z = kernels::wrapped_sample(p, std::span<const double> {eps}, &lp);
    return {LorentzPoint {std::move(z)}, lp};
}

auto recover_base(const WrappedNormal& d, const LorentzPoint& z)
    -> std::vector<double>
{
    if (z.dim() != d.dim()) {
        throw DimensionError {"recover_base: dimension mismatch"};
    }
    const auto u = log_map(d.mu(), z);
    const auto v = kernels::transport_to_origin(d.mu().coords(), u.coords());
    return {v.begin() + 1, v.end()};
}

auto log_prob(const WrappedNormal& d, const LorentzPoint& z) -> double
{
    if (z.dim() != d.dim()) {
        throw DimensionError {"log_prob: dimension mismatch"};
    }
    return kernels::wrapped_log_prob(d.params(), z.coords());
}

auto log_det_proj(double r, std::size_t n) -> double
{
    if (!(r >= 0.0)) {
        throw ValidationError {"log_det_proj: radius must be >= 0"};
    }
    if (n <= 1) {
        return 0.0;
    }
    return static_cast<double>(n - 1) * log_sinhc(r);
}

auto kl_monte_carlo(const WrappedNormal& q, const WrappedNormal& p,
                    std::size_t k, Rng& rng) -> KlEstimate
{
    if (q.dim() != p.dim()) {
        throw DimensionError {"kl_monte_carlo: dimension mismatch"};
    }
    if (k < 1) {
        throw ValidationError {"kl_monte_carlo: need at least one sample"};
    }
    const auto eps = draw_noise(k * q.dim(), rng);
    std::vector<double> terms;
    terms.reserve(k);
    const double m = kernels::wrapped_kl(q.params(), p.params(),
                                         std::span<const double> {eps}, &terms);
    return {m, stats::stddev(terms)};
}

namespace kernels {

auto wrapped_log_prob(const WrappedParams<ad::Var>& d,
                      const Coords<ad::Var>& z) -> ad::Var
{
    if (d.kind == CovKind::full) {
        return wrapped_log_prob<ad::Var>(d, z);
    }
    const std::size_t m = d.mu.size();
    const std::size_t n = m - 1;
    if (z.size() != m) {
        throw DimensionError {"wrapped_log_prob: dimension mismatch"};
    }
    const bool diag = d.kind == CovKind::diagonal;
    thread_local std::vector<ad::Var> args;
    thread_local std::vector<double> partials;
    thread_local std::vector<double> mu;
    thread_local std::vector<double> zv;
    thread_local std::vector<double> v;
    mu.resize(m);
    zv.resize(m);
    v.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        mu[i] = d.mu[i].value();
        zv[i] = z[i].value();
    }

    // alpha = -<mu, z>
    double tail_dot = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
        tail_dot += mu[i] * zv[i];
    }
    args.assign(d.mu.begin(), d.mu.end());
    args.insert(args.end(), z.begin(), z.end());
    partials.resize(2 * m);
    partials[0] = zv[0];
    partials[m] = mu[0];
    for (std::size_t i = 1; i < m; ++i) {
        partials[i] = -zv[i];
        partials[m + i] = -mu[i];
    }
    const ad::Var alpha = ad::custom(-(tail_dot - mu[0] * zv[0]), args, partials);
    const ad::Var f = log_factor(alpha);
    const ad::Var log_det = log_det_from_alpha(alpha, n);
    const double a = alpha.value();
    const double fv = f.value();

    // Log map, then transport back to the origin.
    for (std::size_t i = 0; i < m; ++i) {
        v[i] = fv * (zv[i] - a * mu[i]);
    }
    const double u0 = v[0];
    const double denom = mu[0] + 1.0;
    const double coef = -u0 / denom;
    for (std::size_t i = 1; i < m; ++i) {
        v[i] += coef * mu[i];
    }

    double base = 0.0;
    partials.assign(2 * m + (diag ? n : 0) + 3, 0.0);
    double* g_mu = partials.data();
    double* g_z = g_mu + m;
    double* g_sigma = g_z + m;
    double g_coef = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
        double g_v = -v[i];
        if (diag) {
            const double s = d.scale[i - 1].value();
            const double y = v[i] / s;
            base = base - 0.5 * y * y - std::log(s);
            g_v = -y / s;
            g_sigma[i - 1] = y * y / s - 1.0 / s;
        } else {
            base -= 0.5 * v[i] * v[i];
        }
        g_coef += g_v * mu[i];
        g_mu[i] = g_v * coef;
        // g_u[i] = g_v, stored in g_z for now
        g_z[i] = g_v;
    }
    base -= static_cast<double>(n) * kHalfLog2Pi;
    g_z[0] = -g_coef / denom;
    g_mu[0] = g_coef * u0 / (denom * denom);

    double g_f = 0.0;
    double g_alpha = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double g_u = g_z[i];
        g_f += g_u * (zv[i] - a * mu[i]);
        g_alpha -= g_u * fv * mu[i];
        g_mu[i] -= g_u * fv * a;
        g_z[i] = g_u * fv;
    }
    double* tail_part = partials.data() + 2 * m + (diag ? n : 0);
    tail_part[0] = g_f;
    tail_part[1] = g_alpha;
    tail_part[2] = -1.0;

    args.assign(d.mu.begin(), d.mu.end());
    args.insert(args.end(), z.begin(), z.end());
    if (diag) {
        args.insert(args.end(), d.scale.begin(), d.scale.end());
    }
    args.push_back(f);
    args.push_back(alpha);
    args.push_back(log_det);
    return ad::custom(base - log_det.value(), args, partials);
}

} // namespace kernels

} // namespace hyperwrap

