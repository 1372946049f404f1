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

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperwrap {

enum class OptimizerKind
{
    sgd,
    adam,
};

[[nodiscard]] auto to_string(OptimizerKind kind) -> std::string;
[[nodiscard]] auto parse_optimizer(std::string_view text) -> OptimizerKind;

/// Gradient-descent step on a flat parameter vector. Adam keeps its
/// moment estimates internally, sized on first use.
class Optimizer
{
public:
    explicit Optimizer(OptimizerKind kind, double beta1 = 0.9,
                       double beta2 = 0.999, double eps = 1e-8)
      : kind_{kind}, beta1_{beta1}, beta2_{beta2}, eps_{eps}
    {}

    /// params -= lr * direction(grad)
    void step(std::span<double> params, std::span<const double> grad,
              double lr);

    [[nodiscard]] auto kind() const noexcept -> OptimizerKind { return kind_; }
    [[nodiscard]] auto steps() const noexcept -> long { return t_; }

private:
    OptimizerKind kind_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ {0};
    std::vector<double> m_;
    std::vector<double> v_;
};

} // namespace hyperwrap
