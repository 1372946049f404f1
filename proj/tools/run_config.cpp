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

#include "run_config.hpp"

#include "hyperwrap/errors.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>

namespace hyperwrap::cli {

RunConfig::RunConfig(std::string command, Json defaults)
  : command_{std::move(command)}, defaults_(std::move(defaults))
{
    defaults_["seed"] = defaults_.value("seed", 0);
    merged_ = defaults_;
}

void RunConfig::require_known(const std::string& key) const
{
    if (!defaults_.contains(key)) {
        throw std::logic_error {"RunConfig: no default for '" + key + "'"};
    }
}

auto RunConfig::bind_flag(CLI::App& app, const std::string& key,
                          const std::string& help) -> CLI::Option*
{
    require_known(key);
    std::string flag = "--" + key;
    for (auto& c : flag) {
        c = c == '_' ? '-' : c;
    }
    return app.add_flag_callback(
        flag, [this, key] { overrides_[key] = true; }, help);
}

void RunConfig::bind_common(CLI::App& app)
{
    app.add_option("--config", config_path_,
                   "JSON settings file; flags override it");
    app.add_option("--out", out_, "output path (default stdout)");
    bind<std::uint64_t>(app, "seed", "global random seed");
}

void RunConfig::resolve()
{
    merged_ = defaults_;
    if (!config_path_.empty()) {
        std::ifstream in {config_path_};
        if (!in) {
            throw ValidationError {"config: cannot open '" + config_path_ + "'"};
        }
        Json file;
        try {
            file = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw ValidationError {"config " + config_path_ + ": " + e.what()};
        }
        if (!file.is_object()) {
            throw ValidationError {"config " + config_path_
                                   + ": expected a JSON object"};
        }
        // A file written by another command may carry keys this one does
        // not use; only the shared ones are taken.
        const bool foreign =
            file.contains("command") && file["command"] != command_;
        for (const auto& [key, v] : file.items()) {
            if (key == "command") {
                continue;
            }
            if (!defaults_.contains(key)) {
                if (foreign) {
                    spdlog::debug("config: ignoring '{}'", key);
                    continue;
                }
                throw ValidationError {"config " + config_path_
                                       + ": unknown key '" + key + "'"};
            }
            merged_[key] = v;
        }
    }
    for (const auto& [key, v] : overrides_.items()) {
        merged_[key] = v;
    }
    merged_["command"] = command_;
}

auto RunConfig::at(const std::string& key) const -> const Json&
{
    require_known(key);
    return merged_.at(key);
}

auto RunConfig::get_string(const std::string& key) const -> std::string
{
    const auto& v = at(key);
    if (!v.is_string()) {
        throw ValidationError {"setting '" + key + "' must be a string"};
    }
    return v.get<std::string>();
}

auto RunConfig::get_double(const std::string& key) const -> double
{
    const auto& v = at(key);
    if (!v.is_number()) {
        throw ValidationError {"setting '" + key + "' must be a number"};
    }
    const auto x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ValidationError {"setting '" + key + "' must be finite"};
    }
    return x;
}

auto RunConfig::get_size(const std::string& key) const -> std::size_t
{
    const auto& v = at(key);
    if (v.is_number_unsigned()) {
        return v.get<std::size_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::size_t>(v.get<std::int64_t>());
    }
    throw ValidationError {"setting '" + key
                           + "' must be a non-negative integer"};
}

auto RunConfig::get_seed() const -> std::uint64_t
{
    return static_cast<std::uint64_t>(get_size("seed"));
}

auto RunConfig::get_bool(const std::string& key) const -> bool
{
    const auto& v = at(key);
    if (!v.is_boolean()) {
        throw ValidationError {"setting '" + key + "' must be true or false"};
    }
    return v.get<bool>();
}

auto RunConfig::get_vector(const std::string& key) const -> std::vector<double>
{
    const auto& v = at(key);
    if (!v.is_array()) {
        throw ValidationError {"setting '" + key + "' must be a list"};
    }
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw ValidationError {"setting '" + key + "' must hold numbers"};
        }
        out.push_back(x.get<double>());
    }
    return out;
}

auto RunConfig::is_null(const std::string& key) const -> bool
{
    return at(key).is_null();
}

void RunConfig::write_next_to(const std::filesystem::path& artifact) const
{
    const auto path = sibling(artifact, ".config.json");
    std::ofstream out {path};
    out << merged_.dump(2) << '\n';
    if (!out) {
        throw RuntimeFailure {"cannot write '" + path.string() + "'"};
    }
}

auto sibling(const std::filesystem::path& path, const std::string& suffix)
    -> std::filesystem::path
{
    auto p = path;
    p += suffix;
    return p;
}

} // namespace hyperwrap::cli
