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

// Scalar reverse-mode automatic differentiation.
//
// A Tape is an append-only list of nodes. Every node stores its value and,
// for each parent, the local partial derivative evaluated at record time.
// Parents always have smaller ids than their children, so the backward pass
// is a single sweep in decreasing id order.
//
// A default-constructed or double-constructed Var is a constant: it lives on
// no tape and contributes no nodes. Mixing constants and tape variables in an
// expression adds only the tape variables as parents.

#include "hyperwrap/errors.hpp"

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hyperwrap::ad {

enum class OpKind : std::uint8_t
{
    leaf,
    add,
    sub,
    mul,
    div,
    neg,
    exp,
    log,
    sqrt,
    sinh,
    cosh,
    tanh,
    arccosh,
    pow_const,
    max_const0,
    sum,
    dot,
    custom,
};

[[nodiscard]] auto to_string(OpKind kind) -> std::string;

class Tape;

class Var
{
public:
    constexpr Var() = default;
    // NOLINTNEXTLINE(google-explicit-constructor)
    constexpr Var(double constant) : value_{constant} {}

    [[nodiscard]] constexpr auto value() const noexcept -> double
    {
        return value_;
    }
    [[nodiscard]] constexpr auto is_constant() const noexcept -> bool
    {
        return tape_ == nullptr;
    }
    [[nodiscard]] constexpr auto id() const noexcept -> std::int32_t
    {
        return id_;
    }
    [[nodiscard]] constexpr auto tape() const noexcept -> Tape*
    {
        return tape_;
    }

    auto operator+=(const Var& rhs) -> Var&;
    auto operator-=(const Var& rhs) -> Var&;
    auto operator*=(const Var& rhs) -> Var&;
    auto operator/=(const Var& rhs) -> Var&;

private:
    friend class Tape;
    constexpr Var(Tape* tape, std::int32_t id, double value)
      : tape_{tape}, id_{id}, value_{value}
    {}

    Tape* tape_ {nullptr};
    std::int32_t id_ {-1};
    double value_ {};
};

/// Adjoints of every node up to the root of one backward sweep.
class Gradient
{
public:
    Gradient() = default;
    explicit Gradient(std::vector<double> adjoints)
      : adjoints_{std::move(adjoints)}
    {}

    /// d(root)/d(x). Zero for constants and for nodes recorded after the
    /// root.
    [[nodiscard]] auto wrt(const Var& x) const noexcept -> double
    {
        if (x.is_constant() || x.id() < 0
            || static_cast<std::size_t>(x.id()) >= adjoints_.size()) {
            return 0.0;
        }
        return adjoints_[static_cast<std::size_t>(x.id())];
    }

    [[nodiscard]] auto adjoints() const noexcept -> std::span<const double>
    {
        return adjoints_;
    }

private:
    std::vector<double> adjoints_;
};

class Tape
{
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    auto operator=(const Tape&) -> Tape& = delete;
    Tape(Tape&&) = delete;
    auto operator=(Tape&&) -> Tape& = delete;
    ~Tape() = default;

    /// New independent variable.
    auto variable(double value) -> Var;

    /// Records one elementary operation. `constant` is the exponent for
    /// pow_const and unused otherwise. sum and dot accept any arity (dot
    /// takes the two factor lists concatenated, so it needs an even count).
    auto record(OpKind op, std::span<const Var> args, double constant = 0.0)
        -> Var;

    /// Reverse sweep from `root`; the root adjoint is one.
    [[nodiscard]] auto backward(const Var& root) const -> Gradient;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return values_.size();
    }
    [[nodiscard]] auto kind(std::size_t id) const -> OpKind
    {
        return kinds_.at(id);
    }
    [[nodiscard]] auto parents(std::size_t id) const
        -> std::span<const std::uint32_t>;
    [[nodiscard]] auto partials(std::size_t id) const
        -> std::span<const double>;

    void clear() noexcept;
    void reserve(std::size_t nodes, std::size_t edges);

    struct Edge
    {
        Var parent;
        double partial;
    };

    /// Appends a node with the given value and parent edges. Constant
    /// parents are dropped. Used by the operator overloads below.
    auto push(OpKind op, double value, std::initializer_list<Edge> edges)
        -> Var;
    /// Variadic-arity version of push.
    auto push(OpKind op, double value, std::span<const Edge> edges) -> Var;

private:
    void check_owner(const Var& v) const;

    std::vector<double> values_;
    std::vector<OpKind> kinds_;
    std::vector<std::uint32_t> offsets_ {0};
    std::vector<std::uint32_t> parents_;
    std::vector<double> partials_;
};

[[nodiscard]] constexpr auto value(const Var& x) noexcept -> double
{
    return x.value();
}

auto operator+(const Var& a, const Var& b) -> Var;
auto operator-(const Var& a, const Var& b) -> Var;
auto operator*(const Var& a, const Var& b) -> Var;
auto operator/(const Var& a, const Var& b) -> Var;
auto operator-(const Var& a) -> Var;

auto exp(const Var& x) -> Var;
auto log(const Var& x) -> Var;
auto sqrt(const Var& x) -> Var;
auto sinh(const Var& x) -> Var;
auto cosh(const Var& x) -> Var;
auto tanh(const Var& x) -> Var;
/// arccosh with value clamped to zero below one. The recorded partial uses
/// max(x, 1 + kEpsAlpha) so it stays finite. Arguments below 1 - 1e-9 are a
/// domain error.
auto arccosh(const Var& x) -> Var;
auto pow_const(const Var& x, double exponent) -> Var;
/// max(0, x); subgradient zero at the kink.
auto max_const0(const Var& x) -> Var;
auto sum(std::span<const Var> xs) -> Var;
auto dot(std::span<const Var> a, std::span<const Var> b) -> Var;
/// Inner product with constant coefficients; zero coefficients add no edge.
auto dot(std::span<const Var> a, std::span<const double> coeffs) -> Var;
/// Node with a caller-computed value and local partials, one per argument.
/// Lets hot kernels collapse a long chain of elementary nodes into one.
auto custom(double value, std::span<const Var> args,
            std::span<const double> partials) -> Var;

} // namespace hyperwrap::ad

namespace hyperwrap {

// Lets generic kernels call value(x) uniformly for double and ad::Var.
[[nodiscard]] constexpr auto value(double x) noexcept -> double
{
    return x;
}

} // namespace hyperwrap
