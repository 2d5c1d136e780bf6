#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rswarm/agent_role.hpp"

namespace rswarm {

struct Attachment {
  std::string label;
  std::string content;
};

struct PromptParams {
  double temperature = 0.0;
  int max_tokens = 4096;
};

struct Prompt {
  AgentRole role = AgentRole::Context;
  std::string system_text;
  std::string user_text;
  std::vector<Attachment> attachments;
  PromptParams params;
  // Verifier feedback appended on a retry. Deliberately excluded from the
  // replay key so a retry consumes the next recorded completion for the
  // same underlying request.
  std::string retry_feedback;
  // Schema complaint appended on a re-ask. Excluded from the key for the
  // same reason.
  std::string schema_feedback;
};

struct TokenUsage {
  long long input = 0;
  long long output = 0;
};

/// Structured payload extracted from a model reply. Document roles carry
/// canonical JSON text; file-emitting roles carry a path -> contents map.
struct StructuredPayload {
  std::string json_text;
  std::map<std::string, std::string> files;
};

struct Completion {
  std::string raw_text;
  std::optional<StructuredPayload> parsed;
  TokenUsage usage;
  long long latency_ms = 0;
  int re_asks = 0;
};

/// Stable identity of a prompt: role name plus a 64-bit FNV-1a hash of the
/// normalized content (system text, user text, attachments). Params and
/// retry/schema feedback do not participate.
std::string prompt_hash(const Prompt& prompt);

/// Extracts and validates the structured payload for a role.
/// The reply must contain exactly one fenced code block. File-emitting
/// roles use "-- FILE: <path>" section markers inside the block; all other
/// roles must supply a JSON document matching the role's schema.
StructuredPayload parse_structured(const std::string& raw_text, AgentRole role);

/// Inputs for prompt rendering: ordered labeled sections plus attachments.
struct PromptInputs {
  std::vector<std::pair<std::string, std::string>> sections;
  std::vector<Attachment> attachments;
  std::size_t context_budget_bytes = 200000;
};

/// Builds the full prompt for a role. Deterministic: same inputs, same
/// bytes. Throws MissingArtifact when a section the role depends on is
/// absent. Oversized attachments are truncated to fit the budget.
Prompt render_prompt(AgentRole role, const PromptInputs& inputs);

/// Labels render_prompt requires for a role.
std::vector<std::string> required_sections(AgentRole role);

struct TranscriptEntry {
  std::string run_id;
  int seq = 0;
  AgentRole role = AgentRole::Context;
  std::string hash;
  Prompt prompt;
  Completion completion;
  std::string ts;
};

/// Append-only JSONL record of every model exchange.
class Transcript {
 public:
  void append(TranscriptEntry entry);
  const std::vector<TranscriptEntry>& entries() const { return entries_; }

  std::string to_jsonl() const;
  static Transcript from_jsonl(const std::string& text);
  void save(const std::filesystem::path& file) const;
  static Transcript load(const std::filesystem::path& file);

 private:
  std::vector<TranscriptEntry> entries_;
};

/// One round trip to a model, no validation or re-asks.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete_raw(const Prompt& prompt) = 0;
};

/// Serves canned replies in FIFO order per role. Used by tests and for
/// generating replay fixtures.
class ScriptedBackend : public Backend {
 public:
  void push(AgentRole role, std::string raw_text, TokenUsage usage = {});
  Completion complete_raw(const Prompt& prompt) override;

 private:
  std::map<AgentRole, std::deque<Completion>> queues_;
};

/// Serves recorded completions keyed by prompt hash. Entries with the same
/// key form a FIFO; once a queue drains its last entry keeps being served.
/// Never touches the network.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const Transcript& transcript);
  static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path& file);

  Completion complete_raw(const Prompt& prompt) override;

 private:
  std::map<std::string, std::deque<Completion>> queues_;
  std::map<std::string, Completion> last_;
};

struct LiveBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4";
  long long timeout_ms = 120000;
  // Request/response log; the credential never appears in it.
  std::filesystem::path log_file;
};

/// Talks to a chat-completions endpoint over HTTP. The client is built
/// lazily on first use; the credential comes from the LLM_API_KEY
/// environment variable at request time.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveBackendConfig config);
  ~LiveBackend() override;

  Completion complete_raw(const Prompt& prompt) override;

 private:
  struct Impl;
  LiveBackendConfig config_;
  std::unique_ptr<Impl> impl_;
};

struct GatewayConfig {
  int max_reasks = 2;
  // Replay runs do not append to the transcript.
  bool record = true;
  std::string run_id = "run";
};

/// Validating front door for model calls: sends the prompt, checks the
/// structured payload, re-asks on schema violations, records the exchange.
class Gateway {
 public:
  Gateway(std::unique_ptr<Backend> backend, GatewayConfig config = {});

  Completion complete(const Prompt& prompt);

  const Transcript& transcript() const { return transcript_; }
  void set_run_id(std::string run_id) { config_.run_id = std::move(run_id); }
  int calls_made() const { return calls_made_; }
  // complete() invocations, re-asks not counted separately
  int completions_made() const { return completions_made_; }

 private:
  std::unique_ptr<Backend> backend_;
  GatewayConfig config_;
  Transcript transcript_;
  int seq_ = 0;
  int calls_made_ = 0;
  int completions_made_ = 0;
};

}  // namespace rswarm
