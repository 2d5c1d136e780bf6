#include "rswarm/command_runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

std::string replay_key(const std::string& program, const std::vector<std::string>& args) {
  std::string key = program;
  for (const std::string& a : args) {
    key += '\0';
    key += a;
  }
  return key;
}

[[noreturn]] void child_exec(const CommandRequest& req, int out_fd, int err_fd, int status_fd) {
  if (!req.workdir.empty() && chdir(req.workdir.c_str()) != 0) {
    int err = errno;
    (void)!write(status_fd, &err, sizeof err);
    _exit(127);
  }
  dup2(out_fd, STDOUT_FILENO);
  dup2(err_fd, STDERR_FILENO);

  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(req.program.c_str()));
  for (const std::string& a : req.args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  execvp(req.program.c_str(), argv.data());

  int err = errno;
  (void)!write(status_fd, &err, sizeof err);
  _exit(127);
}

}  // namespace

CommandResult SubprocessRunner::run(const CommandRequest& request) {
  int out_pipe[2], err_pipe[2], status_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0 || pipe(status_pipe) != 0) {
    throw IoError("pipe: " + std::string(std::strerror(errno)));
  }
  fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);

  pid_t pid = fork();
  if (pid < 0) throw IoError("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    close(out_pipe[0]);
    close(err_pipe[0]);
    close(status_pipe[0]);
    child_exec(request, out_pipe[1], err_pipe[1], status_pipe[1]);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  close(status_pipe[1]);

  CommandResult result;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(request.timeout_ms);

  struct Stream {
    int fd;
    std::string* sink;
    bool open = true;
  };
  int exec_errno = 0;
  std::string errno_buf;
  Stream streams[] = {{out_pipe[0], &result.stdout_text},
                      {err_pipe[0], &result.stderr_text},
                      {status_pipe[0], &errno_buf}};

  auto close_all = [&] {
    for (Stream& s : streams) {
      if (s.open) close(s.fd);
      s.open = false;
    }
  };

  bool timed_out = false;
  while (true) {
    pollfd fds[3];
    nfds_t n = 0;
    for (Stream& s : streams) {
      if (s.open) fds[n++] = {s.fd, POLLIN, 0};
    }
    if (n == 0) break;

    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    int rc = poll(fds, n, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      close_all();
      throw IoError("poll: " + std::string(std::strerror(errno)));
    }
    if (rc == 0) {
      timed_out = true;
      break;
    }
    for (nfds_t i = 0; i < n; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      for (Stream& s : streams) {
        if (!s.open || s.fd != fds[i].fd) continue;
        char buf[4096];
        ssize_t got = read(s.fd, buf, sizeof buf);
        if (got > 0) {
          s.sink->append(buf, static_cast<std::size_t>(got));
        } else {
          close(s.fd);
          s.open = false;
        }
      }
    }
  }

  if (timed_out) {
    close_all();
    kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    throw Timeout(request.program + " exceeded " + std::to_string(request.timeout_ms) + " ms");
  }
  close_all();

  if (errno_buf.size() >= sizeof exec_errno) {
    std::memcpy(&exec_errno, errno_buf.data(), sizeof exec_errno);
  }

  int status = 0;
  waitpid(pid, &status, 0);

  if (exec_errno != 0) {
    throw ToolNotFound(request.program + ": " + std::strerror(exec_errno));
  }

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

ReplayRunner::ReplayRunner(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("replay fixture is not valid JSON: ") + e.what());
  }
  for (const auto& entry : doc.value("entries", nlohmann::json::array())) {
    Entry rec;
    rec.result.exit_code = entry.value("exit_code", 0);
    rec.result.stdout_text = entry.value("stdout", "");
    rec.result.stderr_text = entry.value("stderr", "");
    if (entry.contains("files")) {
      for (const auto& [path, content] : entry.at("files").items()) {
        rec.files[path] = content.get<std::string>();
      }
    }
    std::vector<std::string> args;
    for (const auto& a : entry.value("args", nlohmann::json::array())) {
      args.push_back(a.get<std::string>());
    }
    std::string key = replay_key(entry.value("program", ""), args);
    queues_[key].push_back(rec);
    last_[key] = std::move(rec);
  }
}

ReplayRunner ReplayRunner::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IoError("cannot open replay fixture: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ReplayRunner(text);
}

CommandResult ReplayRunner::run(const CommandRequest& request) {
  std::string key = replay_key(request.program, request.args);
  const Entry* entry = nullptr;
  auto qit = queues_.find(key);
  if (qit != queues_.end() && !qit->second.empty()) {
    entry = &qit->second.front();
  } else {
    auto lit = last_.find(key);
    if (lit == last_.end()) {
      std::string shown = request.program;
      for (const std::string& a : request.args) shown += " " + a;
      throw ReplayMiss("no fixture entry for: " + shown);
    }
    entry = &lit->second;
  }

  for (const auto& [rel, content] : entry->files) {
    std::filesystem::path target =
        request.workdir.empty() ? std::filesystem::path(rel)
                                : std::filesystem::path(request.workdir) / rel;
    std::filesystem::create_directories(target.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : target.parent_path());
    std::ofstream out(target, std::ios::binary);
    out << content;
  }

  CommandResult result = entry->result;
  if (qit != queues_.end() && !qit->second.empty()) qit->second.pop_front();
  return result;
}

CommandResult LoggingRunner::run(const CommandRequest& request) {
  CommandResult result = inner_.run(request);
  if (!dir_.empty()) {
    std::filesystem::create_directories(dir_);
    std::string stem = std::filesystem::path(request.program).filename().string();
    if (stem.empty()) stem = "tool";
    std::ofstream log(dir_ / (stem + ".log"), std::ios::app | std::ios::binary);
    log << "$ " << request.program;
    for (const std::string& a : request.args) log << ' ' << a;
    log << "\nexit: " << result.exit_code << "\n--- stdout ---\n"
        << result.stdout_text << "\n--- stderr ---\n"
        << result.stderr_text << "\n";
  }
  return result;
}

}  // namespace rswarm
