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

#include <ostream>
#include <string>
#include <vector>

namespace hyperwrap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitFailure = 2;

/// Sets the stderr log level from HYP_LOG (error, info or debug).
void configure_logging();

/// Runs one command line, program name excluded. Results go to `out`
/// unless --out names a file; usage and error text go to `err`.
[[nodiscard]] auto dispatch(const std::vector<std::string>& args,
                            std::ostream& out, std::ostream& err) -> int;

} // namespace hyperwrap::cli
