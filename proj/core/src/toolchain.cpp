#include "rswarm/toolchain.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

std::vector<std::string> expand_args(const CommandSpec& spec,
                                     const std::vector<std::string>& hs_files) {
  std::vector<std::string> out;
  for (const std::string& a : spec.args) {
    if (a == "{hs_files}") {
      out.insert(out.end(), hs_files.begin(), hs_files.end());
    } else {
      out.push_back(a);
    }
  }
  return out;
}

CommandRequest make_request(const std::filesystem::path& dir, const CommandSpec& spec,
                            const std::vector<std::string>& hs_files, int timeout_ms) {
  CommandRequest req;
  req.program = spec.program;
  req.args = expand_args(spec, hs_files);
  req.workdir = dir.string();
  req.timeout_ms = timeout_ms;
  return req;
}

long long parse_grouped_number(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), ','), text.end());
  return std::stoll(text);
}

std::string group_digits(long long value) {
  std::string digits = std::to_string(value);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count > 0 && count % 3 == 0 && *it != '-') out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::string> list_hs_files(const std::filesystem::path& dir) {
  std::vector<std::string> files;
  if (!std::filesystem::exists(dir)) return files;
  for (auto it = std::filesystem::recursive_directory_iterator(dir);
       it != std::filesystem::recursive_directory_iterator(); ++it) {
    const std::string name = it->path().filename().string();
    if (it->is_directory()) {
      if (!name.empty() && name[0] == '.') it.disable_recursion_pending();
      continue;
    }
    if (it->path().extension() == ".hs") {
      files.push_back(std::filesystem::relative(it->path(), dir).string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

CompileResult run_compile(const std::filesystem::path& project_dir, CommandRunner& runner,
                          const ToolchainConfig& config) {
  auto hs_files = list_hs_files(project_dir);
  if (hs_files.empty()) {
    throw NoSources("no .hs files under " + project_dir.string());
  }

  const auto started = std::chrono::steady_clock::now();
  CommandResult raw = runner.run(
      make_request(project_dir, config.compile, hs_files, config.compile_timeout_ms));
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  CompileResult result;
  result.elapsed_ms = static_cast<int>(elapsed.count());

  static const std::regex diag_re(
      R"(^([^\s:][^:\n]*):(\d+):\d+(?:-\d+)?:\s*(error|warning)(?:\s*\[[^\]]*\])?:?\s*(.*)$)");
  std::istringstream all(raw.stdout_text + "\n" + raw.stderr_text);
  std::string line;
  while (std::getline(all, line)) {
    std::smatch m;
    if (std::regex_match(line, m, diag_re)) {
      Diagnostic d;
      d.file = m[1];
      d.line = std::stoi(m[2]);
      d.severity = m[3];
      d.message = m[4];
      result.diagnostics.push_back(std::move(d));
    }
  }

  bool has_error = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                               [](const Diagnostic& d) { return d.severity == "error"; });
  result.success = raw.exit_code == 0 && !has_error;
  return result;
}

TestResult run_tests(const std::filesystem::path& project_dir, CommandRunner& runner,
                     const ToolchainConfig& config) {
  TestResult result;
  if (!config.test) {
    result.skipped = true;
    return result;
  }

  auto hs_files = list_hs_files(project_dir);
  CommandResult raw =
      runner.run(make_request(project_dir, *config.test, hs_files, config.test_timeout_ms));
  const std::string output = raw.stdout_text + "\n" + raw.stderr_text;

  std::regex summary_re;
  try {
    summary_re = std::regex(config.test_summary_pattern);
  } catch (const std::regex_error& e) {
    throw UnparseableOutput(std::string("bad test summary pattern: ") + e.what());
  }
  std::smatch m;
  if (!std::regex_search(output, m, summary_re) || m.size() < 3) {
    throw UnparseableOutput("test summary not found in output:\n" + output);
  }
  result.total = std::stoi(m[1]);
  result.failed = std::stoi(m[2]);
  result.passed = result.total - result.failed;

  static const std::regex failure_re(R"(^\s*\d+\)\s+(.*)$)");
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch fm;
    if (std::regex_match(line, fm, failure_re)) {
      result.failures.push_back({fm[1], line});
    }
  }
  return result;
}

ProfileStats parse_prof(const std::string& prof_text) {
  ProfileStats stats;

  static const std::regex time_re(
      R"(total time\s*=\s*([0-9]+(?:\.[0-9]+)?)\s*secs\s*\(\s*([0-9,]+)\s*ticks\s*@\s*([0-9,]+)\s*us)");
  static const std::regex alloc_re(R"(total alloc\s*=\s*([0-9,]+)\s*bytes)");

  std::smatch m;
  if (!std::regex_search(prof_text, m, time_re)) {
    throw MissingHeaderLine("total time");
  }
  stats.total_time_secs = std::stod(m[1]);
  stats.ticks = parse_grouped_number(m[2]);
  stats.tick_interval_us = parse_grouped_number(m[3]);

  if (!std::regex_search(prof_text, m, alloc_re)) {
    throw MissingHeaderLine("total alloc");
  }
  stats.total_alloc_bytes = parse_grouped_number(m[1]);
  return stats;
}

std::string render_prof_header(const ProfileStats& stats) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "\ttotal time  =  " << stats.total_time_secs << " secs   (" << stats.ticks
      << " ticks @ " << stats.tick_interval_us << " us, 1 processor)\n";
  out << "\ttotal alloc = " << group_digits(stats.total_alloc_bytes)
      << " bytes  (excludes profiling overheads)\n";
  return out.str();
}

ProfileStats run_profile(const std::filesystem::path& project_dir, CommandRunner& runner,
                         const ToolchainConfig& config) {
  auto hs_files = list_hs_files(project_dir);
  if (hs_files.empty()) {
    throw NoSources("no .hs files under " + project_dir.string());
  }

  CommandResult build = runner.run(make_request(project_dir, config.profile_build, hs_files,
                                                config.compile_timeout_ms));
  if (build.exit_code != 0) {
    throw BuildFailed("profiling build failed:\n" + build.stderr_text);
  }

  CommandResult run = runner.run(make_request(project_dir, config.profile_run, hs_files,
                                              config.profile_timeout_ms));
  if (run.exit_code != 0) {
    throw BuildFailed("profiled binary exited with " + std::to_string(run.exit_code) + ":\n" +
                      run.stderr_text);
  }

  std::filesystem::path prof_path = project_dir / config.prof_file;
  std::ifstream in(prof_path, std::ios::binary);
  if (!in.good()) {
    throw ProfileFileMissing(prof_path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_prof(text);
}

HlintReport run_hlint(const std::filesystem::path& project_dir, CommandRunner& runner,
                      const ToolchainConfig& config) {
  auto hs_files = list_hs_files(project_dir);
  CommandResult raw = runner.run(
      make_request(project_dir, config.hlint, hs_files, config.compile_timeout_ms));
  const std::string output = raw.stdout_text + "\n" + raw.stderr_text;

  HlintReport report;
  static const std::regex hint_re(
      R"(^(.+\.hs):(\d+):\d+(?:-\d+)?:\s*(Suggestion|Warning|Error):\s*(.*)$)");
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (std::regex_match(line, m, hint_re)) {
      HlintHint h;
      h.file = m[1];
      h.line = std::stoi(m[2]);
      h.severity = m[3];
      h.suggestion = m[4];
      report.hints.push_back(std::move(h));
    }
  }

  static const std::regex summary_re(R"(^(?:(\d+)\s+hints?|(\d+)\s+hint\(s\)|No hints)\s*$)");
  bool summary_found = false;
  int summary_count = 0;
  std::istringstream again(output);
  while (std::getline(again, line)) {
    std::smatch m;
    if (std::regex_match(line, m, summary_re)) {
      summary_found = true;
      if (m[1].matched) {
        summary_count = std::stoi(m[1]);
      } else if (m[2].matched) {
        summary_count = std::stoi(m[2]);
      } else {
        summary_count = 0;
      }
    }
  }
  if (!summary_found) {
    throw UnparseableOutput("hlint summary line not found in output:\n" + output);
  }
  if (summary_count != static_cast<int>(report.hints.size())) {
    throw SummaryMismatch("hlint summary says " + std::to_string(summary_count) +
                          " but " + std::to_string(report.hints.size()) +
                          " hint blocks were parsed");
  }
  report.hint_count = summary_count;
  return report;
}

}  // namespace rswarm
