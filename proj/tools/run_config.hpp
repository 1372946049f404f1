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

// Per-command settings: built-in defaults, then an optional JSON file,
// then command-line flags. The merged object is what gets written next to
// every output, so a run can be replayed from it.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

namespace hyperwrap::cli {

using Json = nlohmann::ordered_json;

class RunConfig
{
public:
    RunConfig(std::string command, Json defaults);
    // Flag callbacks hold `this`.
    RunConfig(const RunConfig&) = delete;
    auto operator=(const RunConfig&) -> RunConfig& = delete;

    [[nodiscard]] auto command() const noexcept -> const std::string&
    {
        return command_;
    }

    /// Registers `--flag` on `app`; when given it overrides `key`. The
    /// flag name is the key with '_' replaced by '-'.
    template <class T>
    auto bind(CLI::App& app, const std::string& key, const std::string& help)
        -> CLI::Option*
    {
        require_known(key);
        std::string flag = "--" + key;
        for (auto& c : flag) {
            c = c == '_' ? '-' : c;
        }
        auto* opt = app.add_option_function<T>(
            flag, [this, key](const T& v) { overrides_[key] = v; }, help);
        if constexpr (std::is_same_v<T, std::vector<double>>) {
            opt->delimiter(',');
        }
        return opt;
    }
    /// Boolean switch.
    auto bind_flag(CLI::App& app, const std::string& key,
                   const std::string& help) -> CLI::Option*;

    /// `--config` and `--out`; --out is not part of the replayable state.
    void bind_common(CLI::App& app);

    /// Applies the config file (if any) and the flags. Call after parsing.
    void resolve();

    [[nodiscard]] auto json() const noexcept -> const Json& { return merged_; }
    [[nodiscard]] auto out() const noexcept -> const std::string& { return out_; }

    [[nodiscard]] auto get_string(const std::string& key) const -> std::string;
    [[nodiscard]] auto get_double(const std::string& key) const -> double;
    [[nodiscard]] auto get_size(const std::string& key) const -> std::size_t;
    [[nodiscard]] auto get_seed() const -> std::uint64_t;
    [[nodiscard]] auto get_bool(const std::string& key) const -> bool;
    [[nodiscard]] auto get_vector(const std::string& key) const
        -> std::vector<double>;
    [[nodiscard]] auto is_null(const std::string& key) const -> bool;

    /// Writes the merged settings to `<artifact>.config.json`.
    void write_next_to(const std::filesystem::path& artifact) const;

private:
    void require_known(const std::string& key) const;
    [[nodiscard]] auto at(const std::string& key) const -> const Json&;

    std::string command_;
    Json defaults_;
    Json overrides_ = Json::object();
    Json merged_;
    std::string config_path_;
    std::string out_;
};

/// `<path>` with `suffix` appended to the file name.
[[nodiscard]] auto sibling(const std::filesystem::path& path,
                           const std::string& suffix) -> std::filesystem::path;

} // namespace hyperwrap::cli
