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

#include <stdexcept>
#include <string>

namespace hyperwrap {

/// Invalid input: off-manifold points, bad configuration, malformed files.
/// The CLI maps this family to exit code 1.
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector lengths that do not agree.
class DimensionError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

/// Parallel transport between points whose alpha + 1 vanishes. Cannot happen
/// for on-manifold inputs.
class DegenerateTransportError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

/// A differentiable operation was evaluated outside its domain.
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Training produced a non-finite loss, or a file could not be read/written.
class RuntimeFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace hyperwrap
