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

#include "hyperwrap/optim.hpp"

#include "hyperwrap/errors.hpp"

#include <cmath>

namespace hyperwrap {

auto to_string(OptimizerKind kind) -> std::string
{
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

auto parse_optimizer(std::string_view text) -> OptimizerKind
{
    if (text == "sgd") {
        return OptimizerKind::sgd;
    }
    if (text == "adam") {
        return OptimizerKind::adam;
    }
    throw ValidationError {"unknown optimizer '" + std::string {text}
                           + "' (expected sgd or adam)"};
}

void Optimizer::step(std::span<double> params, std::span<const double> grad,
                     double lr)
{
    if (params.size() != grad.size()) {
        throw DimensionError {"Optimizer::step: size mismatch"};
    }
    ++t_;
    if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= lr * grad[i];
        }
        return;
    }
    if (m_.size() != params.size()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

} // namespace hyperwrap
