#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dalbench/loop.hpp"

namespace dalbench {

/// Config file problem; `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }
    /// Message without the location prefix.
    const std::string& message() const noexcept { return message_; }

    /// Same error located in `path` ("path:line: msg").
    ConfigError in_file(const std::filesystem::path& path) const;

private:
    ConfigError(std::size_t line, std::string message, std::string full);

    std::size_t line_;
    std::string message_;
};

/// Everything a `run`/`verify` invocation needs: the shared run settings,
/// one entry per `[strategy]` section, and the output directory.
struct BenchmarkPlan {
    RunConfig base;
    std::vector<StrategyConfig> strategies;
    std::filesystem::path out_dir = "results";
    /// Set when the dataset section describes a mixture (used by gen-dataset).
    std::optional<MixtureSpec> mixture;
};

/// Command-line values that take precedence over the file.
struct Overrides {
    std::optional<std::vector<std::uint64_t>> seeds;
    std::vector<std::string> strategies;
    std::optional<int> cycles;
    std::optional<double> fraction;
    std::optional<std::filesystem::path> out_dir;

    nlohmann::json to_json() const;
};

/// Parses the `[section]` / `key = value` format. Relative paths resolve
/// against `base_dir`.
BenchmarkPlan parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
BenchmarkPlan load_config(const std::filesystem::path& path);

void apply_overrides(BenchmarkPlan& plan, const Overrides& overrides);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// The RunConfig for one strategy of the plan.
RunConfig config_for(const BenchmarkPlan& plan, const StrategyConfig& strategy);

}  // namespace dalbench
