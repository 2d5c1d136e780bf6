#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rswarm {

struct CommandRequest {
  std::string program;
  std::vector<std::string> args;
  std::string workdir;     // empty = inherit current directory
  int timeout_ms = 300000;
};

struct CommandResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
};

/// Executes external commands. The real implementation spawns subprocesses;
/// the replay implementation serves recorded fixtures so tests and CI never
/// need GHC or HLint installed.
class CommandRunner {
 public:
  virtual ~CommandRunner() = default;
  virtual CommandResult run(const CommandRequest& request) = 0;
};

/// fork/exec with a hard timeout. Throws ToolNotFound when the program cannot
/// be executed and Timeout when the deadline passes (the child is killed).
class SubprocessRunner : public CommandRunner {
 public:
  CommandResult run(const CommandRequest& request) override;
};

/// Replays recorded tool interactions from a JSON fixture:
///   {"entries": [{"program": "...", "args": [...], "exit_code": 0,
///                 "stdout": "...", "stderr": "...",
///                 "files": {"rel/path": "content"}}, ...]}
/// Requests are keyed by program + args (workdir excluded, so fixtures are
/// location independent). Entries with the same key form a FIFO queue; once
/// a queue is exhausted its last entry keeps answering. An unknown key
/// throws ReplayMiss. The optional "files" map is written into the request's
/// workdir on every hit, emulating tool side effects such as `.prof` output.
class ReplayRunner : public CommandRunner {
 public:
  explicit ReplayRunner(const std::string& json_text);
  static ReplayRunner from_file(const std::filesystem::path& path);

  CommandResult run(const CommandRequest& request) override;

 private:
  struct Entry {
    CommandResult result;
    std::map<std::string, std::string> files;
  };
  std::map<std::string, std::deque<Entry>> queues_;
  std::map<std::string, Entry> last_;
};

/// Decorator that appends every interaction to `<dir>/<program-stem>.log`
/// for audit. Logging is disabled while the directory is empty.
class LoggingRunner : public CommandRunner {
 public:
  explicit LoggingRunner(CommandRunner& inner) : inner_(inner) {}

  void set_log_dir(std::filesystem::path dir) { dir_ = std::move(dir); }

  CommandResult run(const CommandRequest& request) override;

 private:
  CommandRunner& inner_;
  std::filesystem::path dir_;
};

}  // namespace rswarm
