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

#include "hyperwrap/errors.hpp"

#include <string>
#include <string_view>

namespace hyperwrap {

/// Latent geometry of the two applications: wrapped normals on the
/// hyperboloid, or ordinary Gaussians on R^n for the control runs.
enum class Geometry
{
    hyperbolic,
    euclidean,
};

[[nodiscard]] inline auto to_string(Geometry g) -> std::string
{
    return g == Geometry::hyperbolic ? "hyperbolic" : "euclidean";
}

[[nodiscard]] inline auto parse_geometry(std::string_view text) -> Geometry
{
    if (text == "hyperbolic") {
        return Geometry::hyperbolic;
    }
    if (text == "euclidean") {
        return Geometry::euclidean;
    }
    throw ValidationError {"unknown geometry '" + std::string {text}
                           + "' (expected hyperbolic or euclidean)"};
}

} // namespace hyperwrap
