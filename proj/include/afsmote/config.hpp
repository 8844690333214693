#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "afsmote/pipeline.hpp"

namespace afsmote {

/// Everything a config file can set.
struct ResolvedConfig {
  ExperimentConfig experiment;
  SweepGrid sweep;
  TheoremConfig theorem;
  bool seed_set = false;  // experiment.seed given by file or override
  std::vector<std::string> overrides;  // "section.key=value" in application order
};

/// Sets one dotted key. Throws UnknownConfigKey naming the key, or
/// InvalidArgument when the value does not parse.
void set_config_value(ResolvedConfig& config, const std::string& key, const std::string& value);

/// Grammar, one statement per line:
///   # comment            (also after a value)
///   [section]
///   key = value          lists are comma separated, optionally in [ ]
/// Keys before any section header are rejected.
void parse_config_text(ResolvedConfig& config, const std::string& text, const std::string& origin = "<config>");
ResolvedConfig load_config_file(const std::filesystem::path& path);

/// Applies "section.key=value" and records it.
void apply_override(ResolvedConfig& config, const std::string& assignment);

/// All accepted dotted keys, sorted.
std::vector<std::string> config_keys();

}  // namespace afsmote
