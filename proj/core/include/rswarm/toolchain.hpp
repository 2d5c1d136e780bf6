#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rswarm/command_runner.hpp"

namespace rswarm {

struct Diagnostic {
  std::string severity;  // "error" or "warning"
  std::string file;
  int line = 0;
  std::string message;
};

struct CompileResult {
  bool success = false;
  std::vector<Diagnostic> diagnostics;
  int elapsed_ms = 0;
};

struct TestFailure {
  std::string name;
  std::string message;
};

struct TestResult {
  int total = 0;
  int passed = 0;
  int failed = 0;
  std::vector<TestFailure> failures;
  bool skipped = false;  // no test command configured
};

struct ProfileStats {
  double total_time_secs = 0.0;
  long long ticks = 0;
  long long tick_interval_us = 0;
  long long total_alloc_bytes = 0;

  bool operator==(const ProfileStats&) const = default;
};

struct HlintHint {
  std::string severity;  // Suggestion / Warning / Error
  std::string file;
  int line = 0;
  std::string suggestion;
};

struct HlintReport {
  int hint_count = 0;
  std::vector<HlintHint> hints;
};

/// Command template; occurrences of "{hs_files}" in args expand to the
/// project's .hs files (relative paths, sorted).
struct CommandSpec {
  std::string program;
  std::vector<std::string> args;
};

struct ToolchainConfig {
  CommandSpec compile = {"ghc", {"-fno-code", "{hs_files}"}};
  std::optional<CommandSpec> test;  // absent: run_tests reports skipped
  CommandSpec profile_build = {"ghc", {"-prof", "-fprof-auto", "-o", "app", "{hs_files}"}};
  CommandSpec profile_run = {"./app", {"+RTS", "-p", "-RTS"}};
  CommandSpec hlint = {"hlint", {"."}};
  std::string prof_file = "app.prof";
  std::string test_summary_pattern = R"((\d+) examples?, (\d+) failures?)";
  int compile_timeout_ms = 300000;
  int test_timeout_ms = 300000;
  int profile_timeout_ms = 120000;
};

/// .hs files under dir (recursive), sorted, hidden directories skipped.
std::vector<std::string> list_hs_files(const std::filesystem::path& dir);

/// Compiles the project. Throws NoSources when the directory has no .hs
/// files, ToolNotFound / Timeout from the runner.
CompileResult run_compile(const std::filesystem::path& project_dir, CommandRunner& runner,
                          const ToolchainConfig& config = {});

/// Runs the configured test command; with none configured returns a result
/// flagged skipped. Throws UnparseableOutput when the summary line cannot be
/// found (raw output attached to the message).
TestResult run_tests(const std::filesystem::path& project_dir, CommandRunner& runner,
                     const ToolchainConfig& config = {});

/// Extracts "total time" / "total alloc" from a GHC time profile. Throws
/// MissingHeaderLine naming whichever header is absent.
ProfileStats parse_prof(const std::string& prof_text);

/// Canonical two-line header for ProfileStats; parse_prof inverts it.
std::string render_prof_header(const ProfileStats& stats);

/// Profile-build, run with RTS profiling, then parse the .prof file.
/// Throws BuildFailed / ProfileFileMissing.
ProfileStats run_profile(const std::filesystem::path& project_dir, CommandRunner& runner,
                         const ToolchainConfig& config = {});

/// Runs hlint and parses hint blocks plus the trailing summary ("N hints" /
/// "No hints"). Throws SummaryMismatch when the summary disagrees with the
/// parsed blocks, UnparseableOutput when no summary line exists.
HlintReport run_hlint(const std::filesystem::path& project_dir, CommandRunner& runner,
                      const ToolchainConfig& config = {});

}  // namespace rswarm
