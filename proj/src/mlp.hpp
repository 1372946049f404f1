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

// Dense tanh network over a flat parameter block, batched column-wise.
// Backpropagation is written out by hand; the latent part of the VAE
// objective goes through the tape and meets this code at the layer
// boundary.

#include "hyperwrap/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace hyperwrap::vae::detail {

class Mlp
{
public:
    using Matrix = Eigen::MatrixXd;

    explicit Mlp(std::vector<std::size_t> sizes) : sizes_{std::move(sizes)}
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            offsets_.push_back(off);
            off += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
        }
        count_ = off;
    }

    [[nodiscard]] auto param_count() const noexcept -> std::size_t
    {
        return count_;
    }
    [[nodiscard]] auto layers() const noexcept -> std::size_t
    {
        return offsets_.size();
    }

    void initialize(std::span<double> p, Rng& rng) const
    {
        for (std::size_t l = 0; l < layers(); ++l) {
            const auto in = sizes_[l];
            const auto out = sizes_[l + 1];
            const double limit =
                std::sqrt(6.0 / static_cast<double>(in + out));
            double* w = p.data() + offsets_[l];
            for (std::size_t i = 0; i < in * out; ++i) {
                w[i] = limit * (2.0 * rng.uniform() - 1.0);
            }
            std::fill(w + in * out, w + in * out + out, 0.0);
        }
    }

    struct Cache
    {
        std::vector<Matrix> acts; // acts[0] input, acts[l] layer l output
    };

    /// Linear output layer, tanh elsewhere.
    [[nodiscard]] auto forward(std::span<const double> p, const Matrix& x,
                               Cache* cache = nullptr) const -> Matrix
    {
        Matrix a = x;
        if (cache != nullptr) {
            cache->acts.clear();
            cache->acts.push_back(a);
        }
        for (std::size_t l = 0; l < layers(); ++l) {
            const auto w = weight(p, l);
            const auto b = bias(p, l);
            Matrix y = w * a;
            y.colwise() += b;
            if (l + 1 < layers()) {
                y = y.array().tanh().matrix();
            }
            if (cache != nullptr) {
                cache->acts.push_back(y);
            }
            a = std::move(y);
        }
        return a;
    }

    /// Accumulates dL/dparams into grad and returns dL/dinput.
    auto backward(std::span<const double> p, const Cache& cache,
                  const Matrix& d_out, std::span<double> grad) const -> Matrix
    {
        Matrix d = d_out;
        for (std::size_t l = layers(); l-- > 0;) {
            if (l + 1 < layers()) {
                d = (d.array() * (1.0 - cache.acts[l + 1].array().square()))
                        .matrix();
            }
            const auto in = sizes_[l];
            const auto out = sizes_[l + 1];
            Eigen::Map<Matrix> gw {grad.data() + offsets_[l],
                                   static_cast<Eigen::Index>(out),
                                   static_cast<Eigen::Index>(in)};
            Eigen::Map<Eigen::VectorXd> gb {grad.data() + offsets_[l] + in * out,
                                            static_cast<Eigen::Index>(out)};
            gw.noalias() += d * cache.acts[l].transpose();
            gb += d.rowwise().sum();
            Matrix prev = weight(p, l).transpose() * d;
            d = std::move(prev);
        }
        return d;
    }

private:
    [[nodiscard]] auto weight(std::span<const double> p, std::size_t l) const
        -> Eigen::Map<const Matrix>
    {
        return {p.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
                static_cast<Eigen::Index>(sizes_[l])};
    }
    [[nodiscard]] auto bias(std::span<const double> p, std::size_t l) const
        -> Eigen::Map<const Eigen::VectorXd>
    {
        return {p.data() + offsets_[l] + sizes_[l + 1] * sizes_[l],
                static_cast<Eigen::Index>(sizes_[l + 1])};
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t count_ {0};
};

} // namespace hyperwrap::vae::detail
