#include "rswarm/gateway.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "rswarm/errors.hpp"
#include "rswarm/hash.hpp"

namespace rswarm {

using nlohmann::json;

namespace {

const std::array<const char*, kAgentRoleCount> kRoleNames = {
    "context",           "context_verifier",  "analysis",
    "analysis_verifier", "strategy",          "strategy_verifier",
    "refactor1",         "refactor2",         "test_validate",
    "debug",
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  return lines;
}

std::string now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string to_string(AgentRole role) {
  return kRoleNames[static_cast<int>(role)];
}

std::optional<AgentRole> agent_role_from_string(const std::string& name) {
  for (int i = 0; i < kAgentRoleCount; ++i) {
    if (name == kRoleNames[i]) return static_cast<AgentRole>(i);
  }
  return std::nullopt;
}

bool is_verifier_role(AgentRole role) {
  return role == AgentRole::ContextVerifier || role == AgentRole::AnalysisVerifier ||
         role == AgentRole::StrategyVerifier;
}

bool emits_files(AgentRole role) {
  return role == AgentRole::Refactor1 || role == AgentRole::Refactor2 ||
         role == AgentRole::Debug;
}

std::string prompt_hash(const Prompt& prompt) {
  std::string norm = "role=" + to_string(prompt.role) + '\x1f';
  norm += "system=" + prompt.system_text + '\x1f';
  norm += "user=" + prompt.user_text + '\x1f';
  for (const auto& a : prompt.attachments) {
    norm += "att=" + a.label + '\x1e' + a.content + '\x1f';
  }
  return to_string(prompt.role) + ":" + to_hex(fnv1a64(norm));
}

// ---------------------------------------------------------------------------
// Structured payload extraction

namespace {

std::vector<std::string> fenced_blocks(const std::string& raw) {
  std::vector<std::string> blocks;
  bool in_block = false;
  std::string cur;
  for (const auto& raw_line : split_lines(raw)) {
    std::string line = raw_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("```", 0) == 0) {
      if (in_block) {
        blocks.push_back(cur);
        cur.clear();
      }
      in_block = !in_block;
      continue;
    }
    if (in_block) cur += line + "\n";
  }
  if (in_block) throw SchemaViolation("unterminated fenced block");
  return blocks;
}

std::map<std::string, std::string> parse_files_envelope(const std::string& block) {
  static const std::string marker = "-- FILE:";
  std::map<std::string, std::string> files;
  std::string path;
  std::string content;
  bool seen_marker = false;
  auto lines = split_lines(block);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (const auto& line : lines) {
    if (line.rfind(marker, 0) == 0) {
      if (seen_marker) {
        if (files.count(path)) throw SchemaViolation("duplicate file path: " + path);
        files[path] = content;
      }
      path = trim(line.substr(marker.size()));
      if (path.empty()) throw SchemaViolation("file marker with empty path");
      content.clear();
      seen_marker = true;
      continue;
    }
    if (!seen_marker) {
      if (!trim(line).empty()) {
        throw SchemaViolation("content before the first file marker");
      }
      continue;
    }
    content += line + "\n";
  }
  if (!seen_marker) throw SchemaViolation("no \"-- FILE:\" markers in reply");
  if (files.count(path)) throw SchemaViolation("duplicate file path: " + path);
  files[path] = content;
  return files;
}

json parse_json_block(const std::string& block) {
  try {
    return json::parse(block);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("reply is not valid JSON: ") + e.what());
  }
}

void require_field(const json& doc, const char* field, const char* where) {
  if (!doc.is_object() || !doc.contains(field)) {
    throw SchemaViolation(std::string(where) + " is missing field \"" + field + "\"");
  }
}

void require_string_array(const json& v, const char* what) {
  if (!v.is_array()) throw SchemaViolation(std::string(what) + " must be an array");
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw SchemaViolation(std::string(what) + " must contain only strings");
    }
  }
}

const std::array<const char*, 7> kActionKinds = {
    "DecomposeFunction",  "SimplifyExpression",  "RenameForClarity",
    "EliminateDuplication", "PointFreeRewrite",  "ReorganizeModule",
    "OptimizeDataStructure",
};

void validate_role_document(const json& doc, AgentRole role) {
  if (!doc.is_object()) throw SchemaViolation("reply must be a JSON object");
  switch (role) {
    case AgentRole::Context: {
      require_field(doc, "modules", "context report");
      require_field(doc, "dependency_edges", "context report");
      require_field(doc, "narrative", "context report");
      if (!doc["modules"].is_array()) {
        throw SchemaViolation("context report \"modules\" must be an array");
      }
      for (const auto& m : doc["modules"]) {
        require_field(m, "name", "context module entry");
        require_field(m, "functions", "context module entry");
        require_field(m, "imports", "context module entry");
        require_string_array(m["functions"], "module functions");
        require_string_array(m["imports"], "module imports");
      }
      if (!doc["dependency_edges"].is_array()) {
        throw SchemaViolation("\"dependency_edges\" must be an array");
      }
      if (!doc["narrative"].is_string()) {
        throw SchemaViolation("\"narrative\" must be a string");
      }
      break;
    }
    case AgentRole::Analysis: {
      require_field(doc, "hotspots", "analysis report");
      if (!doc["hotspots"].is_array()) {
        throw SchemaViolation("\"hotspots\" must be an array");
      }
      for (const auto& h : doc["hotspots"]) {
        require_field(h, "function", "hotspot entry");
        require_field(h, "cc", "hotspot entry");
        if (!h["cc"].is_number()) {
          throw SchemaViolation("hotspot \"cc\" must be a number");
        }
      }
      break;
    }
    case AgentRole::Strategy: {
      require_field(doc, "actions", "refactor plan");
      if (!doc["actions"].is_array()) {
        throw SchemaViolation("\"actions\" must be an array");
      }
      if (doc["actions"].empty()) {
        throw SchemaViolation("refactor plan has an empty action list");
      }
      for (const auto& a : doc["actions"]) {
        require_field(a, "kind", "plan action");
        require_field(a, "target", "plan action");
        require_field(a, "description", "plan action");
        std::string kind = a["kind"].get<std::string>();
        bool known = std::any_of(kActionKinds.begin(), kActionKinds.end(),
                                 [&](const char* k) { return kind == k; });
        if (!known) throw SchemaViolation("unknown action kind \"" + kind + "\"");
      }
      break;
    }
    case AgentRole::ContextVerifier:
    case AgentRole::AnalysisVerifier:
    case AgentRole::StrategyVerifier: {
      require_field(doc, "decision", "verifier verdict");
      std::string d = doc["decision"].is_string() ? doc["decision"].get<std::string>() : "";
      if (d != "accept" && d != "reject") {
        throw SchemaViolation("verifier \"decision\" must be \"accept\" or \"reject\"");
      }
      break;
    }
    case AgentRole::TestValidate:
      break;  // any JSON object is acceptable; the stage itself is tool-driven
    default:
      break;
  }
}

}  // namespace

StructuredPayload parse_structured(const std::string& raw_text, AgentRole role) {
  auto blocks = fenced_blocks(raw_text);
  if (blocks.size() != 1) {
    throw SchemaViolation("expected exactly one fenced block, found " +
                          std::to_string(blocks.size()));
  }
  StructuredPayload payload;
  if (emits_files(role)) {
    payload.files = parse_files_envelope(blocks[0]);
  } else {
    json doc = parse_json_block(blocks[0]);
    validate_role_document(doc, role);
    payload.json_text = doc.dump();
  }
  return payload;
}

// ---------------------------------------------------------------------------
// Prompt rendering

namespace {

std::string role_system_text(AgentRole role) {
  switch (role) {
    case AgentRole::Context:
      return "You analyze Haskell codebases. Summarize the modules, their "
             "functions, imports, and dependency edges. Reply with exactly one "
             "fenced code block containing a JSON object with fields "
             "\"modules\" (array of {name, functions, imports}), "
             "\"dependency_edges\" (array of [caller, callee] pairs), and "
             "\"narrative\" (string).";
    case AgentRole::ContextVerifier:
      return "You check a codebase summary against facts extracted directly "
             "from the source. Reply with exactly one fenced code block "
             "containing a JSON object with fields \"decision\" (\"accept\" or "
             "\"reject\") and \"findings\" (array of strings).";
    case AgentRole::Analysis:
      return "You identify complexity hotspots in Haskell code using the "
             "cyclomatic complexity figures provided. Reply with exactly one "
             "fenced code block containing a JSON object with fields "
             "\"hotspots\" (array of {function, cc, rank, rationale}, sorted "
             "by cc descending) and \"flags\" (array of strings).";
    case AgentRole::AnalysisVerifier:
      return "You check a hotspot report against independently computed "
             "complexity figures. Reply with exactly one fenced code block "
             "containing a JSON object with fields \"decision\" (\"accept\" or "
             "\"reject\") and \"findings\" (array of strings).";
    case AgentRole::Strategy:
      return "You plan Haskell refactorings for the hotspots listed. Allowed "
             "action kinds: DecomposeFunction, SimplifyExpression, "
             "RenameForClarity, EliminateDuplication, PointFreeRewrite, "
             "ReorganizeModule, OptimizeDataStructure. Reply with exactly one "
             "fenced code block containing a JSON object with field "
             "\"actions\" (non-empty array of {kind, target, description, "
             "expected_effect}).";
    case AgentRole::StrategyVerifier:
      return "You check a refactor plan for actions that name functions that "
             "do not exist or ignore every hotspot. Reply with exactly one "
             "fenced code block containing a JSON object with fields "
             "\"decision\" (\"accept\" or \"reject\") and \"findings\" (array "
             "of strings).";
    case AgentRole::Refactor1:
      return "You rewrite Haskell source for readability per the plan: "
             "decomposition, simplification, renaming, deduplication. Reply "
             "with exactly one fenced code block. Inside it, emit every file "
             "you changed, each introduced by a line \"-- FILE: <path>\" "
             "followed by the complete new contents of that file.";
    case AgentRole::Refactor2:
      return "You rewrite Haskell source for performance per the plan: "
             "point-free rewrites, module reorganization, data structure "
             "changes. Reply with exactly one fenced code block. Inside it, "
             "emit every file you changed, each introduced by a line "
             "\"-- FILE: <path>\" followed by the complete new contents of "
             "that file.";
    case AgentRole::TestValidate:
      return "You summarize build, test, lint, and profiling results. Reply "
             "with exactly one fenced code block containing a JSON object "
             "with field \"summary\" (string).";
    case AgentRole::Debug:
      return "You fix Haskell code so its tests pass. The failures are "
             "listed. Reply with exactly one fenced code block. Inside it, "
             "emit every file you changed, each introduced by a line "
             "\"-- FILE: <path>\" followed by the complete new contents of "
             "that file.";
  }
  return "";
}

}  // namespace

std::vector<std::string> required_sections(AgentRole role) {
  switch (role) {
    case AgentRole::Context:
      return {"files", "parser_facts"};
    case AgentRole::ContextVerifier:
      return {"context_report", "parser_facts"};
    case AgentRole::Analysis:
      return {"context_report", "cc_table"};
    case AgentRole::AnalysisVerifier:
      return {"analysis_report", "cc_table"};
    case AgentRole::Strategy:
      return {"analysis_report"};
    case AgentRole::StrategyVerifier:
      return {"plan", "analysis_report"};
    case AgentRole::Refactor1:
    case AgentRole::Refactor2:
      return {"plan", "files"};
    case AgentRole::TestValidate:
      return {"validation"};
    case AgentRole::Debug:
      return {"failures", "files"};
  }
  return {};
}

Prompt render_prompt(AgentRole role, const PromptInputs& inputs) {
  for (const auto& label : required_sections(role)) {
    bool found = std::any_of(inputs.sections.begin(), inputs.sections.end(),
                             [&](const auto& s) { return s.first == label; });
    if (!found) {
      throw MissingArtifact("prompt for role " + to_string(role) +
                            " needs section \"" + label + "\"");
    }
  }
  std::vector<std::string> seen;
  for (const auto& a : inputs.attachments) {
    if (std::find(seen.begin(), seen.end(), a.label) != seen.end()) {
      throw Error("duplicate attachment label: " + a.label);
    }
    seen.push_back(a.label);
  }

  Prompt prompt;
  prompt.role = role;
  prompt.system_text = role_system_text(role);
  std::string user;
  for (const auto& [label, content] : inputs.sections) {
    user += "## " + label + "\n" + content;
    if (!content.empty() && content.back() != '\n') user += "\n";
    user += "\n";
  }
  prompt.user_text = user;
  prompt.attachments = inputs.attachments;
  prompt.params.temperature = is_verifier_role(role) ? 0.0 : 0.2;

  std::size_t total = prompt.system_text.size() + prompt.user_text.size();
  for (const auto& a : prompt.attachments) total += a.label.size() + a.content.size();
  if (total > inputs.context_budget_bytes) {
    static const std::string mark = "\n[truncated]";
    for (auto it = prompt.attachments.rbegin();
         it != prompt.attachments.rend() && total > inputs.context_budget_bytes; ++it) {
      std::size_t excess = total - inputs.context_budget_bytes;
      std::size_t cut = std::min(excess + mark.size(), it->content.size());
      it->content.resize(it->content.size() - cut);
      it->content += mark;
      total = total - cut + mark.size();
    }
  }
  return prompt;
}

// ---------------------------------------------------------------------------
// Transcript

namespace {

json prompt_to_json(const Prompt& p) {
  json atts = json::array();
  for (const auto& a : p.attachments) {
    atts.push_back({{"label", a.label}, {"content", a.content}});
  }
  return {
      {"role", to_string(p.role)},
      {"system_text", p.system_text},
      {"user_text", p.user_text},
      {"attachments", atts},
      {"params", {{"temperature", p.params.temperature}, {"max_tokens", p.params.max_tokens}}},
      {"retry_feedback", p.retry_feedback},
      {"schema_feedback", p.schema_feedback},
  };
}

Prompt prompt_from_json(const json& j) {
  Prompt p;
  auto role = agent_role_from_string(j.at("role").get<std::string>());
  if (!role) throw IoError("transcript names unknown role " + j.at("role").dump());
  p.role = *role;
  p.system_text = j.at("system_text").get<std::string>();
  p.user_text = j.at("user_text").get<std::string>();
  for (const auto& a : j.at("attachments")) {
    p.attachments.push_back({a.at("label").get<std::string>(),
                             a.at("content").get<std::string>()});
  }
  p.params.temperature = j.at("params").at("temperature").get<double>();
  p.params.max_tokens = j.at("params").at("max_tokens").get<int>();
  p.retry_feedback = j.at("retry_feedback").get<std::string>();
  p.schema_feedback = j.at("schema_feedback").get<std::string>();
  return p;
}

}  // namespace

void Transcript::append(TranscriptEntry entry) {
  entries_.push_back(std::move(entry));
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    json j = {
        {"run_id", e.run_id},
        {"seq", e.seq},
        {"role", to_string(e.role)},
        {"prompt_hash", e.hash},
        {"prompt", prompt_to_json(e.prompt)},
        {"completion",
         {{"raw_text", e.completion.raw_text},
          {"latency_ms", e.completion.latency_ms},
          {"re_asks", e.completion.re_asks}}},
        {"usage", {{"input", e.completion.usage.input}, {"output", e.completion.usage.output}}},
        {"ts", e.ts},
    };
    out += j.dump() + "\n";
  }
  return out;
}

Transcript Transcript::from_jsonl(const std::string& text) {
  Transcript t;
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("transcript line " + std::to_string(line_no) +
                    " is not valid JSON: " + e.what());
    }
    try {
      TranscriptEntry e;
      e.run_id = j.at("run_id").get<std::string>();
      e.seq = j.at("seq").get<int>();
      auto role = agent_role_from_string(j.at("role").get<std::string>());
      if (!role) throw IoError("transcript names unknown role " + j.at("role").dump());
      e.role = *role;
      e.hash = j.at("prompt_hash").get<std::string>();
      e.prompt = prompt_from_json(j.at("prompt"));
      e.completion.raw_text = j.at("completion").at("raw_text").get<std::string>();
      e.completion.latency_ms = j.at("completion").at("latency_ms").get<long long>();
      e.completion.re_asks = j.at("completion").at("re_asks").get<int>();
      e.completion.usage.input = j.at("usage").at("input").get<long long>();
      e.completion.usage.output = j.at("usage").at("output").get<long long>();
      e.ts = j.at("ts").get<std::string>();
      t.entries_.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw IoError("transcript line " + std::to_string(line_no) +
                    " is malformed: " + ex.what());
    }
  }
  return t;
}

void Transcript::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write transcript " + file.string());
  out << to_jsonl();
}

Transcript Transcript::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read transcript " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

// ---------------------------------------------------------------------------
// Backends

void ScriptedBackend::push(AgentRole role, std::string raw_text, TokenUsage usage) {
  Completion c;
  c.raw_text = std::move(raw_text);
  c.usage = usage;
  queues_[role].push_back(std::move(c));
}

Completion ScriptedBackend::complete_raw(const Prompt& prompt) {
  auto it = queues_.find(prompt.role);
  if (it == queues_.end() || it->second.empty()) {
    throw BackendUnavailable("no scripted reply for role " + to_string(prompt.role));
  }
  Completion c = it->second.front();
  it->second.pop_front();
  return c;
}

ReplayBackend::ReplayBackend(const Transcript& transcript) {
  for (const auto& e : transcript.entries()) {
    Completion c = e.completion;
    c.latency_ms = 0;
    c.parsed.reset();
    queues_[e.hash].push_back(c);
    last_[e.hash] = c;
  }
}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& file) {
  return std::make_unique<ReplayBackend>(Transcript::load(file));
}

Completion ReplayBackend::complete_raw(const Prompt& prompt) {
  std::string key = prompt_hash(prompt);
  auto it = queues_.find(key);
  if (it != queues_.end() && !it->second.empty()) {
    Completion c = it->second.front();
    it->second.pop_front();
    return c;
  }
  auto lit = last_.find(key);
  if (lit != last_.end()) return lit->second;
  throw ReplayMiss("no recorded completion for role " + to_string(prompt.role) +
                   ", prompt hash " + key);
}

// ---------------------------------------------------------------------------
// Live backend

struct LiveBackend::Impl {
  std::unique_ptr<httplib::Client> client;
};

LiveBackend::LiveBackend(LiveBackendConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {}

LiveBackend::~LiveBackend() = default;

namespace {

void append_log(const std::filesystem::path& file, const std::string& text) {
  if (file.empty()) return;
  std::ofstream out(file, std::ios::app | std::ios::binary);
  if (out) out << text;
}

std::string full_user_content(const Prompt& p) {
  std::string content = p.user_text;
  for (const auto& a : p.attachments) {
    content += "\n### " + a.label + "\n" + a.content;
    if (!a.content.empty() && a.content.back() != '\n') content += "\n";
  }
  if (!p.retry_feedback.empty()) {
    content += "\n## reviewer feedback on your previous attempt\n" + p.retry_feedback + "\n";
  }
  if (!p.schema_feedback.empty()) {
    content += "\n## format problem with your previous reply\n" + p.schema_feedback + "\n";
  }
  return content;
}

}  // namespace

Completion LiveBackend::complete_raw(const Prompt& prompt) {
  const char* key = std::getenv("LLM_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw BackendUnavailable("LLM_API_KEY is not set in the environment");
  }
  if (!impl_->client) {
    impl_->client = std::make_unique<httplib::Client>(config_.base_url);
    impl_->client->set_connection_timeout(config_.timeout_ms / 1000,
                                          (config_.timeout_ms % 1000) * 1000);
    impl_->client->set_read_timeout(config_.timeout_ms / 1000,
                                    (config_.timeout_ms % 1000) * 1000);
  }

  json body = {
      {"model", config_.model},
      {"temperature", prompt.params.temperature},
      {"max_tokens", prompt.params.max_tokens},
      {"messages",
       {{{"role", "system"}, {"content", prompt.system_text}},
        {{"role", "user"}, {"content", full_user_content(prompt)}}}},
  };
  std::string body_text = body.dump();
  append_log(config_.log_file,
             "POST " + config_.path + "\nauthorization: Bearer [redacted]\n" +
                 body_text + "\n");

  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  auto start = std::chrono::steady_clock::now();
  auto res = impl_->client->Post(config_.path, headers, body_text, "application/json");
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  if (!res) {
    append_log(config_.log_file, "<< no response\n");
    throw BackendUnavailable("no response from " + config_.base_url);
  }
  append_log(config_.log_file,
             "<< " + std::to_string(res->status) + "\n" + res->body + "\n");
  if (res->status != 200) {
    throw BackendUnavailable("model endpoint returned HTTP " +
                             std::to_string(res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("unparseable model response: ") + e.what());
  }
  Completion c;
  try {
    c.raw_text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw BackendUnavailable("model response lacks choices[0].message.content");
  }
  if (reply.contains("usage")) {
    c.usage.input = reply["usage"].value("prompt_tokens", 0LL);
    c.usage.output = reply["usage"].value("completion_tokens", 0LL);
  }
  c.latency_ms = elapsed;
  return c;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::unique_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {}

Completion Gateway::complete(const Prompt& prompt) {
  ++completions_made_;
  Prompt p = prompt;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_reasks; ++attempt) {
    Completion c = backend_->complete_raw(p);
    ++calls_made_;
    c.re_asks = attempt;
    bool ok = true;
    try {
      c.parsed = parse_structured(c.raw_text, p.role);
    } catch (const SchemaViolation& e) {
      ok = false;
      last_error = e.what();
    }
    if (config_.record) {
      TranscriptEntry entry;
      entry.run_id = config_.run_id;
      entry.seq = seq_++;
      entry.role = p.role;
      entry.hash = prompt_hash(p);
      entry.prompt = p;
      entry.completion = c;
      entry.ts = now_iso();
      transcript_.append(std::move(entry));
    }
    if (ok) return c;
    p.schema_feedback =
        "Attempt " + std::to_string(attempt + 1) + " was rejected: " + last_error +
        ". Resend the complete reply in the required format.";
  }
  throw SchemaViolation("role " + to_string(prompt.role) + " produced no valid reply after " +
                        std::to_string(config_.max_reasks) + " re-asks: " + last_error);
}

}  // namespace rswarm
