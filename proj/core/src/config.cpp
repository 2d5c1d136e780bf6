#include "rswarm/config.hpp"

#include <fstream>
#include <sstream>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Value {
  std::string text;
  bool quoted = false;
  int line = 0;
};

std::string parse_string_literal(const std::string& raw, int line) {
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size()) {
      char esc = raw[++i];
      switch (esc) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw ConfigError("line " + std::to_string(line) +
                            ": unsupported escape \\" + std::string(1, esc));
      }
    } else {
      out += c;
    }
  }
  return out;
}

std::string need_string(const Value& v, const std::string& key) {
  if (!v.quoted) {
    throw ConfigError("key " + key + " expects a quoted string (line " +
                      std::to_string(v.line) + ")");
  }
  return v.text;
}

long long need_int(const Value& v, const std::string& key) {
  if (v.quoted) {
    throw ConfigError("key " + key + " expects an integer (line " +
                      std::to_string(v.line) + ")");
  }
  try {
    std::size_t used = 0;
    long long n = std::stoll(v.text, &used);
    if (used != v.text.size()) throw std::invalid_argument("trailing");
    return n;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + " expects an integer, got \"" + v.text +
                      "\" (line " + std::to_string(v.line) + ")");
  }
}

bool need_bool(const Value& v, const std::string& key) {
  if (!v.quoted) {
    if (v.text == "true") return true;
    if (v.text == "false") return false;
  }
  throw ConfigError("key " + key + " expects true or false (line " +
                    std::to_string(v.line) + ")");
}

SizeClass need_size_class(const Value& v, const std::string& key) {
  std::string s = need_string(v, key);
  if (s == "below-range") return SizeClass::BelowRange;
  if (s == "small") return SizeClass::Small;
  if (s == "medium") return SizeClass::Medium;
  if (s == "large") return SizeClass::Large;
  throw ConfigError("key " + key + " expects one of below-range/small/medium/large, got \"" +
                    s + "\"");
}

}  // namespace

CommandSpec parse_command_spec(const std::string& command_line) {
  CommandSpec spec;
  std::istringstream in(command_line);
  std::string tok;
  while (in >> tok) {
    if (spec.program.empty()) {
      spec.program = tok;
    } else {
      spec.args.push_back(tok);
    }
  }
  if (spec.program.empty()) {
    throw ConfigError("empty command line");
  }
  return spec;
}

CliConfig parse_cli_config(const std::string& text) {
  CliConfig cfg;

  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "toolchain" && section != "backend" && section != "pipeline" &&
          section != "selection") {
        throw ConfigError("unknown section [" + section + "] (line " +
                          std::to_string(lineno) + ")");
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string rhs = trim(line.substr(eq + 1));
    if (key.empty() || rhs.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }

    Value v;
    v.line = lineno;
    if (rhs.front() == '"') {
      // strip a trailing comment only outside the quotes
      std::size_t close = std::string::npos;
      for (std::size_t i = 1; i < rhs.size(); ++i) {
        if (rhs[i] == '\\') {
          ++i;
        } else if (rhs[i] == '"') {
          close = i;
          break;
        }
      }
      if (close == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated string");
      }
      std::string rest = trim(rhs.substr(close + 1));
      if (!rest.empty() && rest[0] != '#') {
        throw ConfigError("line " + std::to_string(lineno) + ": trailing content after string");
      }
      v.quoted = true;
      v.text = parse_string_literal(rhs.substr(0, close + 1), lineno);
    } else {
      std::size_t hash = rhs.find('#');
      if (hash != std::string::npos) rhs = trim(rhs.substr(0, hash));
      v.text = rhs;
    }

    const std::string full = section.empty() ? key : section + "." + key;
    if (section == "toolchain") {
      if (key == "compile") {
        cfg.toolchain.compile = parse_command_spec(need_string(v, full));
      } else if (key == "test") {
        cfg.toolchain.test = parse_command_spec(need_string(v, full));
      } else if (key == "profile_build") {
        cfg.toolchain.profile_build = parse_command_spec(need_string(v, full));
      } else if (key == "profile_run") {
        cfg.toolchain.profile_run = parse_command_spec(need_string(v, full));
      } else if (key == "hlint") {
        cfg.toolchain.hlint = parse_command_spec(need_string(v, full));
      } else if (key == "prof_file") {
        cfg.toolchain.prof_file = need_string(v, full);
      } else if (key == "test_summary_pattern") {
        cfg.toolchain.test_summary_pattern = need_string(v, full);
      } else if (key == "compile_timeout_ms") {
        cfg.toolchain.compile_timeout_ms = static_cast<int>(need_int(v, full));
      } else if (key == "test_timeout_ms") {
        cfg.toolchain.test_timeout_ms = static_cast<int>(need_int(v, full));
      } else if (key == "profile_timeout_ms") {
        cfg.toolchain.profile_timeout_ms = static_cast<int>(need_int(v, full));
      } else if (key == "replay_file") {
        cfg.tool_replay_file = need_string(v, full);
      } else {
        throw ConfigError("unknown key " + full);
      }
    } else if (section == "backend") {
      if (key == "base_url") {
        cfg.backend.base_url = need_string(v, full);
      } else if (key == "path") {
        cfg.backend.path = need_string(v, full);
      } else if (key == "model") {
        cfg.backend.model = need_string(v, full);
      } else if (key == "timeout_ms") {
        cfg.backend.timeout_ms = static_cast<int>(need_int(v, full));
      } else if (key == "log_file") {
        cfg.backend.log_file = need_string(v, full);
      } else {
        throw ConfigError("unknown key " + full);
      }
    } else if (section == "pipeline") {
      if (key == "max_retries") {
        cfg.pipeline.max_retries = static_cast<int>(need_int(v, full));
      } else if (key == "max_debug_loops") {
        cfg.pipeline.max_debug_loops = static_cast<int>(need_int(v, full));
      } else if (key == "cc_hotspot_threshold") {
        cfg.pipeline.cc_hotspot_threshold = static_cast<int>(need_int(v, full));
      } else if (key == "artifact_dir") {
        cfg.pipeline.artifact_dir = need_string(v, full);
      } else if (key == "enforce_non_regression") {
        cfg.pipeline.enforce_non_regression = need_bool(v, full);
      } else if (key == "context_budget_bytes") {
        cfg.pipeline.context_budget_bytes = static_cast<std::size_t>(need_int(v, full));
      } else {
        throw ConfigError("unknown key " + full);
      }
    } else if (section == "selection") {
      if (key == "min_stars") {
        cfg.selection.min_stars = static_cast<int>(need_int(v, full));
      } else if (key == "max_size_kb") {
        cfg.selection.max_size_kb = static_cast<int>(need_int(v, full));
      } else if (key == "language") {
        cfg.selection.language = need_string(v, full);
      } else if (key == "required_class") {
        cfg.selection.required_class = need_size_class(v, full);
      } else if (key == "min_feature_count") {
        cfg.selection.min_feature_count = static_cast<int>(need_int(v, full));
      } else {
        throw ConfigError("unknown key " + full);
      }
    } else {
      throw ConfigError("unknown key " + full + " (keys must live in a section)");
    }
  }
  return cfg;
}

CliConfig load_cli_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in.good()) {
    throw IoError("cannot read config file " + file.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_cli_config(text);
}

}  // namespace rswarm
