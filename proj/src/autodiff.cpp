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

#include "hyperwrap/autodiff.hpp"

#include "hyperwrap/special.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace hyperwrap::ad {

namespace {

auto tape_of(const Var& a, const Var& b) -> Tape*
{
    Tape* t = a.tape() != nullptr ? a.tape() : b.tape();
    if (a.tape() != nullptr && b.tape() != nullptr && a.tape() != b.tape()) {
        throw ValidationError {"autodiff: operands recorded on different tapes"};
    }
    return t;
}

auto tape_of(std::span<const Var> xs) -> Tape*
{
    Tape* t = nullptr;
    for (const auto& x : xs) {
        if (x.tape() == nullptr) {
            continue;
        }
        if (t != nullptr && t != x.tape()) {
            throw ValidationError {
              "autodiff: operands recorded on different tapes"};
        }
        t = x.tape();
    }
    return t;
}

[[noreturn]] void domain_failure(const char* op, const Tape* tape, double x)
{
    const auto node = tape != nullptr ? std::to_string(tape->size()) : "const";
    throw DomainError {std::string {op} + ": argument " + std::to_string(x)
                       + " outside domain at node " + node};
}

auto unary(OpKind op, const Var& x, double value, double partial) -> Var
{
    if (x.is_constant()) {
        return Var {value};
    }
    return x.tape()->push(op, value, {{x, partial}});
}

} // namespace

auto to_string(OpKind kind) -> std::string
{
    switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::neg: return "neg";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::sqrt: return "sqrt";
    case OpKind::sinh: return "sinh";
    case OpKind::cosh: return "cosh";
    case OpKind::tanh: return "tanh";
    case OpKind::arccosh: return "arccosh";
    case OpKind::pow_const: return "pow_const";
    case OpKind::max_const0: return "max_const0";
    case OpKind::sum: return "sum";
    case OpKind::dot: return "dot";
    case OpKind::custom: return "custom";
    }
    return "unknown";
}

auto Var::operator+=(const Var& rhs) -> Var&
{
    return *this = *this + rhs;
}

auto Var::operator-=(const Var& rhs) -> Var&
{
    return *this = *this - rhs;
}

auto Var::operator*=(const Var& rhs) -> Var&
{
    return *this = *this * rhs;
}

auto Var::operator/=(const Var& rhs) -> Var&
{
    return *this = *this / rhs;
}

// ---------------------------------------------------------------- Tape

auto Tape::variable(double value) -> Var
{
    return push(OpKind::leaf, value, std::span<const Edge> {});
}

void Tape::check_owner(const Var& v) const
{
    if (v.tape() != this) {
        throw ValidationError {"autodiff: variable belongs to another tape"};
    }
    if (v.id() < 0 || static_cast<std::size_t>(v.id()) >= values_.size()) {
        throw ValidationError {"autodiff: variable id not on tape"};
    }
}

auto Tape::push(OpKind op, double value, std::initializer_list<Edge> edges)
    -> Var
{
    return push(op, value, std::span<const Edge> {edges.begin(), edges.size()});
}

auto Tape::push(OpKind op, double value, std::span<const Edge> edges) -> Var
{
    const auto id = static_cast<std::int32_t>(values_.size());
    for (const auto& e : edges) {
        if (e.parent.is_constant()) {
            continue;
        }
        if (e.parent.tape() != this) {
            throw ValidationError {"autodiff: parent belongs to another tape"};
        }
        parents_.push_back(static_cast<std::uint32_t>(e.parent.id()));
        partials_.push_back(e.partial);
    }
    values_.push_back(value);
    kinds_.push_back(op);
    offsets_.push_back(static_cast<std::uint32_t>(parents_.size()));
    return Var {this, id, value};
}

auto Tape::parents(std::size_t id) const -> std::span<const std::uint32_t>
{
    const auto begin = offsets_.at(id);
    const auto end = offsets_.at(id + 1);
    return {parents_.data() + begin, end - begin};
}

auto Tape::partials(std::size_t id) const -> std::span<const double>
{
    const auto begin = offsets_.at(id);
    const auto end = offsets_.at(id + 1);
    return {partials_.data() + begin, end - begin};
}

void Tape::clear() noexcept
{
    values_.clear();
    kinds_.clear();
    offsets_.assign(1, 0);
    parents_.clear();
    partials_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t edges)
{
    values_.reserve(nodes);
    kinds_.reserve(nodes);
    offsets_.reserve(nodes + 1);
    parents_.reserve(edges);
    partials_.reserve(edges);
}

auto Tape::backward(const Var& root) const -> Gradient
{
    check_owner(root);
    const auto n = static_cast<std::size_t>(root.id()) + 1;
    std::vector<double> adj(n, 0.0);
    adj[n - 1] = 1.0;
    for (std::size_t i = n; i-- > 0;) {
        const double a = adj[i];
        if (a == 0.0) {
            continue;
        }
        const auto begin = offsets_[i];
        const auto end = offsets_[i + 1];
        for (auto e = begin; e < end; ++e) {
            adj[parents_[e]] += partials_[e] * a;
        }
    }
    return Gradient {std::move(adj)};
}

auto Tape::record(OpKind op, std::span<const Var> args, double constant)
    -> Var
{
    auto need = [&](std::size_t count) {
        if (args.size() != count) {
            throw ValidationError {"autodiff: " + to_string(op) + " expects "
                                   + std::to_string(count) + " arguments"};
        }
    };
    for (const auto& a : args) {
        if (!a.is_constant()) {
            check_owner(a);
        }
    }
    switch (op) {
    case OpKind::leaf: need(0); return variable(constant);
    case OpKind::add: need(2); return args[0] + args[1];
    case OpKind::sub: need(2); return args[0] - args[1];
    case OpKind::mul: need(2); return args[0] * args[1];
    case OpKind::div: need(2); return args[0] / args[1];
    case OpKind::neg: need(1); return -args[0];
    case OpKind::exp: need(1); return ad::exp(args[0]);
    case OpKind::log: need(1); return ad::log(args[0]);
    case OpKind::sqrt: need(1); return ad::sqrt(args[0]);
    case OpKind::sinh: need(1); return ad::sinh(args[0]);
    case OpKind::cosh: need(1); return ad::cosh(args[0]);
    case OpKind::tanh: need(1); return ad::tanh(args[0]);
    case OpKind::arccosh: need(1); return ad::arccosh(args[0]);
    case OpKind::pow_const: need(1); return pow_const(args[0], constant);
    case OpKind::max_const0: need(1); return max_const0(args[0]);
    case OpKind::sum: return ad::sum(args);
    case OpKind::dot: {
        if (args.size() % 2 != 0) {
            throw ValidationError {"autodiff: dot expects an even count"};
        }
        const auto half = args.size() / 2;
        return ad::dot(args.first(half), args.last(half));
    }
    case OpKind::custom:
        throw ValidationError {"autodiff: custom nodes need explicit partials"};
    }
    throw ValidationError {"autodiff: unknown operation"};
}

// ---------------------------------------------------------------- ops

auto operator+(const Var& a, const Var& b) -> Var
{
    Tape* t = tape_of(a, b);
    const double v = a.value() + b.value();
    if (t == nullptr) {
        return Var {v};
    }
    return t->push(OpKind::add, v, {{a, 1.0}, {b, 1.0}});
}

auto operator-(const Var& a, const Var& b) -> Var
{
    Tape* t = tape_of(a, b);
    const double v = a.value() - b.value();
    if (t == nullptr) {
        return Var {v};
    }
    return t->push(OpKind::sub, v, {{a, 1.0}, {b, -1.0}});
}

auto operator*(const Var& a, const Var& b) -> Var
{
    Tape* t = tape_of(a, b);
    const double v = a.value() * b.value();
    if (t == nullptr) {
        return Var {v};
    }
    return t->push(OpKind::mul, v, {{a, b.value()}, {b, a.value()}});
}

auto operator/(const Var& a, const Var& b) -> Var
{
    Tape* t = tape_of(a, b);
    if (b.value() == 0.0) {
        domain_failure("div", t, b.value());
    }
    const double inv = 1.0 / b.value();
    const double v = a.value() * inv;
    if (t == nullptr) {
        return Var {v};
    }
    return t->push(OpKind::div, v, {{a, inv}, {b, -v * inv}});
}

auto operator-(const Var& a) -> Var
{
    return unary(OpKind::neg, a, -a.value(), -1.0);
}

auto exp(const Var& x) -> Var
{
    const double v = std::exp(x.value());
    return unary(OpKind::exp, x, v, v);
}

auto log(const Var& x) -> Var
{
    if (!(x.value() > 0.0)) {
        domain_failure("log", x.tape(), x.value());
    }
    return unary(OpKind::log, x, std::log(x.value()), 1.0 / x.value());
}

auto sqrt(const Var& x) -> Var
{
    if (x.value() < 0.0) {
        domain_failure("sqrt", x.tape(), x.value());
    }
    const double v = std::sqrt(x.value());
    const double d = v > 0.0 ? 0.5 / v : std::numeric_limits<double>::infinity();
    return unary(OpKind::sqrt, x, v, d);
}

auto sinh(const Var& x) -> Var
{
    return unary(OpKind::sinh, x, std::sinh(x.value()), std::cosh(x.value()));
}

auto cosh(const Var& x) -> Var
{
    return unary(OpKind::cosh, x, std::cosh(x.value()), std::sinh(x.value()));
}

auto tanh(const Var& x) -> Var
{
    const double v = std::tanh(x.value());
    return unary(OpKind::tanh, x, v, 1.0 - v * v);
}

auto arccosh(const Var& x) -> Var
{
    const double xv = x.value();
    if (!(xv >= 1.0 - 1e-9)) {
        domain_failure("arccosh", x.tape(), xv);
    }
    const double clamped = std::max(xv, 1.0 + kEpsAlpha);
    const double d = 1.0 / std::sqrt((clamped - 1.0) * (clamped + 1.0));
    return unary(OpKind::arccosh, x, hyperwrap::arccosh(xv), d);
}

auto pow_const(const Var& x, double exponent) -> Var
{
    const double xv = x.value();
    if (xv < 0.0 && exponent != std::floor(exponent)) {
        domain_failure("pow_const", x.tape(), xv);
    }
    const double v = std::pow(xv, exponent);
    const double d = exponent == 0.0 ? 0.0
                                     : exponent * std::pow(xv, exponent - 1.0);
    auto out = unary(OpKind::pow_const, x, v, d);
    return out;
}

auto max_const0(const Var& x) -> Var
{
    const bool active = x.value() > 0.0;
    return unary(OpKind::max_const0, x, active ? x.value() : 0.0,
                 active ? 1.0 : 0.0);
}

auto sum(std::span<const Var> xs) -> Var
{
    Tape* t = tape_of(xs);
    double v = 0.0;
    for (const auto& x : xs) {
        v += x.value();
    }
    if (t == nullptr) {
        return Var {v};
    }
    thread_local std::vector<Tape::Edge> edges;
    edges.clear();
    for (const auto& x : xs) {
        if (!x.is_constant()) {
            edges.push_back({x, 1.0});
        }
    }
    return t->push(OpKind::sum, v, edges);
}

auto dot(std::span<const Var> a, std::span<const Var> b) -> Var
{
    if (a.size() != b.size()) {
        throw DimensionError {"autodiff: dot of unequal lengths"};
    }
    Tape* t = tape_of(a);
    Tape* tb = tape_of(b);
    if (t != nullptr && tb != nullptr && t != tb) {
        throw ValidationError {"autodiff: operands recorded on different tapes"};
    }
    t = t != nullptr ? t : tb;
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        v += a[i].value() * b[i].value();
    }
    if (t == nullptr) {
        return Var {v};
    }
    thread_local std::vector<Tape::Edge> edges;
    edges.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_constant()) {
            edges.push_back({a[i], b[i].value()});
        }
        if (!b[i].is_constant()) {
            edges.push_back({b[i], a[i].value()});
        }
    }
    return t->push(OpKind::dot, v, edges);
}

auto dot(std::span<const Var> a, std::span<const double> coeffs) -> Var
{
    if (a.size() != coeffs.size()) {
        throw DimensionError {"autodiff: dot of unequal lengths"};
    }
    Tape* t = tape_of(a);
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        v += a[i].value() * coeffs[i];
    }
    if (t == nullptr) {
        return Var {v};
    }
    thread_local std::vector<Tape::Edge> edges;
    edges.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_constant() && coeffs[i] != 0.0) {
            edges.push_back({a[i], coeffs[i]});
        }
    }
    return t->push(OpKind::dot, v, edges);
}

auto custom(double value, std::span<const Var> args,
            std::span<const double> partials) -> Var
{
    if (args.size() != partials.size()) {
        throw DimensionError {"autodiff: custom needs one partial per argument"};
    }
    Tape* t = tape_of(args);
    if (t == nullptr) {
        return Var {value};
    }
    thread_local std::vector<Tape::Edge> edges;
    edges.clear();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i].is_constant() && partials[i] != 0.0) {
            edges.push_back({args[i], partials[i]});
        }
    }
    return t->push(OpKind::custom, value, edges);
}

} // namespace hyperwrap::ad
