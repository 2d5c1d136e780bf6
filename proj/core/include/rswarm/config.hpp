#pragma once

#include <filesystem>
#include <string>

#include "rswarm/corpus.hpp"
#include "rswarm/gateway.hpp"
#include "rswarm/pipeline.hpp"
#include "rswarm/toolchain.hpp"

namespace rswarm {

/// Everything the command-line tool reads from its configuration file.
/// Defaults match the built-in toolchain, selection and pipeline settings,
/// so an empty (or missing default) file is a valid configuration.
struct CliConfig {
  ToolchainConfig toolchain;
  std::string tool_replay_file;  // when set, tool commands replay from this fixture
  LiveBackendConfig backend;
  PipelineConfig pipeline;
  SelectionCriteria selection;
};

/// Parses the TOML subset used by the config file: `[section]` headers,
/// `key = value` lines with string / integer / boolean values, and `#`
/// comments. Unknown sections or keys raise ConfigError naming the key.
CliConfig parse_cli_config(const std::string& text);

/// Reads and parses `file`. Throws IoError when it cannot be read.
CliConfig load_cli_config(const std::filesystem::path& file);

/// Splits a command line on whitespace into program + args. The "{hs_files}"
/// placeholder survives as an argument token.
CommandSpec parse_command_spec(const std::string& command_line);

}  // namespace rswarm
