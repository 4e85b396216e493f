#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ksel::cli {

inline constexpr int kSchemaVersion = 1;

/// Flag values that take precedence over the config file.
struct Overrides {
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    bool oracle = false;
    bool compare = false;
    std::optional<std::string> convention;
    std::optional<std::string> out;
    std::optional<std::string> emit_plot;
};

struct RunConfig {
    std::string command;
    /// Validated settings after overrides.
    nlohmann::json values;
    /// Relative input paths are resolved against this directory.
    std::filesystem::path base_dir;
};

/// Reads and validates the config for `command`. Unknown keys and wrong types are
/// IngestionErrors.
RunConfig load_config(const std::string& command, const std::optional<std::filesystem::path>& config_path,
                      const Overrides& overrides);
RunConfig make_config(const std::string& command, nlohmann::json values, const std::filesystem::path& base_dir,
                      const Overrides& overrides);

struct CommandResult {
    /// {schema_version, command, inputs_digest, results}; empty for plot.
    nlohmann::json document;
    /// Tabular plot data, if the command produced any.
    std::optional<std::string> csv;
};

CommandResult execute(const RunConfig& config);

/// Pretty-printed document with a trailing newline.
std::string render(const nlohmann::json& document);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Maps an exception to the exit-code contract: 2 ingestion/validation, 3 numeric, 4 capability.
int exit_code_for(const std::exception& e);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace ksel::cli
