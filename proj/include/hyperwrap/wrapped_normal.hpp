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

// Wrapped normal on the hyperboloid: a Gaussian N(0, S) on the tangent
// space at the origin, moved to mu by parallel transport and pushed onto
// the manifold by exp_mu. The density has a closed form because the
// Jacobian determinant of the composite map only depends on the radius.

#include "hyperwrap/kernels.hpp"
#include "hyperwrap/lorentz.hpp"
#include "hyperwrap/random.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperwrap {

enum class CovKind
{
    unit,
    diagonal,
    full,
};

[[nodiscard]] auto to_string(CovKind kind) -> std::string;
[[nodiscard]] auto parse_cov_kind(std::string_view text) -> CovKind;

/// Distribution parameters in plain ambient form, for any scalar type.
/// `scale` holds n standard deviations (diagonal), a row-major n x n lower
/// factor (full), or nothing (unit).
template <class T>
struct WrappedParams
{
    Coords<T> mu;
    CovKind kind {CovKind::unit};
    std::vector<T> scale;

    [[nodiscard]] auto dim() const noexcept -> std::size_t
    {
        return mu.size() - 1;
    }
};

namespace kernels {

/// (n - 1) log(sinh r / r) as a function of r^2, safe at r = 0.
template <class T>
auto log_det_from_sq(const T& r2, std::size_t n) -> T
{
    if (n <= 1) {
        return T {0.0};
    }
    const auto k = static_cast<double>(n - 1);
    if (value(r2) < kSeriesRadius * kSeriesRadius) {
        return k * (r2 * (1.0 / 6.0 - r2 * (1.0 / 180.0)));
    }
    return k * log_sinhc(sqrt(r2));
}

/// log N(vt | 0, S).
template <class T>
auto base_log_density(const WrappedParams<T>& d, std::span<const T> vt) -> T
{
    switch (d.kind) {
    case CovKind::unit:
        return unit_gaussian_log_density(vt);
    case CovKind::diagonal:
        return diag_gaussian_log_density(vt, std::span<const T> {d.scale});
    case CovKind::full:
        return cholesky_gaussian_log_density(vt, std::span<const T> {d.scale});
    }
    return T {0.0};
}

/// vt = A eps with A the scale factor; also returns -log|det A|.
template <class T>
auto scale_noise(const WrappedParams<T>& d, std::span<const double> eps,
                 T& neg_log_det) -> std::vector<T>
{
    const std::size_t n = eps.size();
    std::vector<T> vt(n);
    neg_log_det = T {0.0};
    switch (d.kind) {
    case CovKind::unit:
        for (std::size_t i = 0; i < n; ++i) {
            vt[i] = eps[i];
        }
        break;
    case CovKind::diagonal:
        for (std::size_t i = 0; i < n; ++i) {
            vt[i] = d.scale[i] * eps[i];
            neg_log_det = neg_log_det - log(d.scale[i]);
        }
        break;
    case CovKind::full:
        for (std::size_t i = 0; i < n; ++i) {
            T acc {0.0};
            for (std::size_t j = 0; j <= i; ++j) {
                acc = acc + d.scale[i * n + j] * eps[j];
            }
            vt[i] = acc;
            neg_log_det = neg_log_det - log(d.scale[i * n + i]);
        }
        break;
    }
    return vt;
}

/// Log-density at z (log map, transport back to the origin, base density,
/// minus the log-determinant).
template <class T>
auto wrapped_log_prob(const WrappedParams<T>& d, const Coords<T>& z) -> T
{
    T alpha;
    const auto u = log_map(d.mu, z, &alpha);
    const auto v = transport_to_origin(d.mu, u);
    const std::span<const T> vt = tail(v);
    return base_log_density(d, vt) - log_det_from_alpha(alpha, d.dim());
}

/// Taped version of the above with the per-coordinate work folded into a
/// few custom nodes; same value, far fewer tape entries. Full covariance
/// falls back to the generic template.
auto wrapped_log_prob(const WrappedParams<ad::Var>& d,
                      const Coords<ad::Var>& z) -> ad::Var;

/// Reparametrized draw from standard normal noise `eps` (length n). When
/// `log_prob` is given it receives the density of the draw, evaluated on
/// the known base vector instead of through the inverse maps.
template <class T>
auto wrapped_sample(const WrappedParams<T>& d, std::span<const double> eps,
                    T* log_prob = nullptr) -> Coords<T>
{
    T neg_log_det;
    const auto vt = scale_noise(d, eps, neg_log_det);
    const auto u = transport_from_origin(d.mu, std::span<const T> {vt});
    auto z = exp_map(d.mu, u);
    if (log_prob != nullptr) {
        double e2 = 0.0;
        for (double e : eps) {
            e2 += e * e;
        }
        const double base = -0.5 * e2
                            - static_cast<double>(eps.size()) * kHalfLog2Pi;
        *log_prob = base + neg_log_det
                    - log_det_from_sq(norm_sq(std::span<const T> {vt}),
                                      d.dim());
    }
    return z;
}

/// Monte-Carlo KL(q || p) from k noise vectors stored back to back in
/// `eps` (k * n values). Per-sample terms go to `terms` when given.
template <class T>
auto wrapped_kl(const WrappedParams<T>& q, const WrappedParams<T>& p,
                std::span<const double> eps, std::vector<double>* terms = nullptr)
    -> T
{
    const std::size_t n = q.dim();
    const std::size_t k = eps.size() / n;
    T acc {0.0};
    for (std::size_t j = 0; j < k; ++j) {
        T lq;
        const auto z = wrapped_sample(q, eps.subspan(j * n, n), &lq);
        const T term = lq - wrapped_log_prob(p, z);
        if (terms != nullptr) {
            terms->push_back(value(term));
        }
        acc = acc + term;
    }
    return acc / static_cast<double>(k);
}

} // namespace kernels

class WrappedNormal
{
public:
    [[nodiscard]] static auto unit(LorentzPoint mu) -> WrappedNormal;
    /// sigma: n positive standard deviations.
    [[nodiscard]] static auto diagonal(LorentzPoint mu,
                                       std::vector<double> sigma)
        -> WrappedNormal;
    /// lower: row-major n x n lower-triangular factor with positive
    /// diagonal; entries above the diagonal must be zero.
    [[nodiscard]] static auto full(LorentzPoint mu, std::vector<double> lower)
        -> WrappedNormal;

    [[nodiscard]] auto mu() const noexcept -> const LorentzPoint&
    {
        return mu_;
    }
    [[nodiscard]] auto kind() const noexcept -> CovKind { return kind_; }
    [[nodiscard]] auto scale() const noexcept -> const std::vector<double>&
    {
        return scale_;
    }
    [[nodiscard]] auto dim() const noexcept -> std::size_t
    {
        return mu_.dim();
    }
    [[nodiscard]] auto params() const -> WrappedParams<double>;

private:
    WrappedNormal(LorentzPoint mu, CovKind kind, std::vector<double> scale);

    LorentzPoint mu_;
    CovKind kind_;
    std::vector<double> scale_;
};

struct Draw
{
    LorentzPoint z;
    std::vector<double> base; // the tangent draw at the origin, length n
};

struct DrawWithLogProb
{
    LorentzPoint z;
    double log_prob;
};

[[nodiscard]] auto sample(const WrappedNormal& d, Rng& rng) -> Draw;
[[nodiscard]] auto sample_with_log_prob(const WrappedNormal& d, Rng& rng)
    -> DrawWithLogProb;

/// The base draw that sample() would have needed to produce z.
[[nodiscard]] auto recover_base(const WrappedNormal& d, const LorentzPoint& z)
    -> std::vector<double>;

[[nodiscard]] auto log_prob(const WrappedNormal& d, const LorentzPoint& z)
    -> double;

/// (n - 1) log(sinh r / r).
[[nodiscard]] auto log_det_proj(double r, std::size_t n) -> double;

struct KlEstimate
{
    double mean;
    double stddev; // of the per-sample terms
};

[[nodiscard]] auto kl_monte_carlo(const WrappedNormal& q,
                                  const WrappedNormal& p, std::size_t k,
                                  Rng& rng) -> KlEstimate;

} // namespace hyperwrap
