#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "confsafe/sim.hpp"

namespace confsafe {

/// Invalid run configuration. `key` names the offending entry when there is one.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(message), key_(std::move(key)) {}

    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines. '#' starts a comment, blank lines are
/// ignored, duplicate keys are an error.
[[nodiscard]] KeyValues parse_key_values(std::istream& in);

/// Built-in defaults for an example. Values the source experiments do not
/// state are marked as artifact defaults in config_schema().
[[nodiscard]] EpisodeConfig default_config(Example example);

/// Applies entries on top of `config`. Unknown keys and unparsable values
/// throw ConfigError. The `example` key is ignored here (it selects the
/// defaults, see resolve_config).
void apply_key_values(EpisodeConfig& config, const KeyValues& entries);

/// defaults(example) <- file entries <- overrides. The example comes from
/// `example_override` if given, else from the `example` key, else
/// second-order. Validates the result.
[[nodiscard]] EpisodeConfig resolve_config(const KeyValues& file_entries, const KeyValues& overrides,
                                           std::optional<Example> example_override = std::nullopt);

[[nodiscard]] EpisodeConfig load_config_file(const std::string& path, const KeyValues& overrides = {},
                                             std::optional<Example> example_override = std::nullopt);

/// Every key, one per line, values with 17 significant digits. Parsing the
/// output with resolve_config reproduces the same configuration.
[[nodiscard]] std::string serialize_config(const EpisodeConfig& config);

/// 16 hex digits of FNV-1a 64 over serialize_config().
[[nodiscard]] std::string config_hash(const EpisodeConfig& config);

struct ConfigKeyDoc {
    std::string key;
    std::string description;
    bool artifact_default;  // true when the value is not taken from the source experiments
};

[[nodiscard]] const std::vector<ConfigKeyDoc>& config_schema();

[[nodiscard]] std::string format_double(double value);

}  // namespace confsafe
