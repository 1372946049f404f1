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

// Central finite-difference oracle for reverse-mode gradients. The function
// under test is evaluated twice per coordinate in plain double arithmetic
// (on a throwaway tape) and compared with one backward sweep.

#include "hyperwrap/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace hyperwrap::checks {

using ScalarFn =
    std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradCheck
{
    std::vector<double> analytic;
    std::vector<double> numeric;
    double worst_excess {0.0}; // max over coordinates of err / allowed
};

/// Relative error with an absolute floor for small gradients: passes
/// when |a - n| <= rel * max(|a|, |n|), or |a - n| <= abs_tol when the
/// gradient magnitude is below small.
inline auto allowed_error(double a, double n, double rel, double abs_tol,
                          double small = 1e-2) -> double
{
    const double mag = std::max(std::abs(a), std::abs(n));
    if (mag < small) {
        return std::max(abs_tol, rel * mag);
    }
    return rel * mag;
}

inline auto check_gradient(const ScalarFn& f, std::span<const double> x,
                           double rel, double abs_tol = 1e-7,
                           double step = 1e-5) -> GradCheck
{
    GradCheck out;
    {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        vars.reserve(x.size());
        for (double xi : x) {
            vars.push_back(tape.variable(xi));
        }
        const auto y = f(tape, vars);
        const auto g = tape.backward(y);
        for (const auto& v : vars) {
            out.analytic.push_back(g.wrt(v));
        }
    }
    auto eval = [&](std::span<const double> p) {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (double pi : p) {
            vars.push_back(tape.variable(pi));
        }
        return f(tape, vars).value();
    };
    std::vector<double> p(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        p[i] = x[i] + h;
        const double up = eval(p);
        p[i] = x[i] - h;
        const double down = eval(p);
        p[i] = x[i];
        const double num = (up - down) / (2.0 * h);
        out.numeric.push_back(num);
        const double err = std::abs(num - out.analytic[i]);
        const double allow = allowed_error(out.analytic[i], num, rel, abs_tol);
        out.worst_excess = std::max(out.worst_excess, err / allow);
    }
    return out;
}

} // namespace hyperwrap::checks
