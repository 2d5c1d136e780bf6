#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rswarm/errors.hpp"
#include "rswarm/gateway.hpp"

using namespace rswarm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() /
          ("rswarm_gw_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string fence_json(const std::string& body) {
  return "```json\n" + body + "\n```\n";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Prompt analysis_prompt() {
  PromptInputs in;
  in.sections = {{"context_report", "{}"}, {"cc_table", "f 6\ng 2"}};
  return render_prompt(AgentRole::Analysis, in);
}

const char* kGoodAnalysis =
    R"({"hotspots":[{"function":"f","cc":6,"rank":1,"rationale":"deep guards"}],"flags":[]})";

}  // namespace

TEST_CASE("role names round-trip") {
  for (int i = 0; i < kAgentRoleCount; ++i) {
    auto role = static_cast<AgentRole>(i);
    auto back = agent_role_from_string(to_string(role));
    REQUIRE(back.has_value());
    CHECK(*back == role);
  }
  CHECK_FALSE(agent_role_from_string("nonsense").has_value());
}

TEST_CASE("role predicates") {
  CHECK(is_verifier_role(AgentRole::ContextVerifier));
  CHECK(is_verifier_role(AgentRole::AnalysisVerifier));
  CHECK(is_verifier_role(AgentRole::StrategyVerifier));
  CHECK_FALSE(is_verifier_role(AgentRole::Refactor1));
  CHECK(emits_files(AgentRole::Refactor1));
  CHECK(emits_files(AgentRole::Refactor2));
  CHECK(emits_files(AgentRole::Debug));
  CHECK_FALSE(emits_files(AgentRole::Analysis));
}

TEST_CASE("prompt hash ignores feedback and params but not content") {
  Prompt a;
  a.role = AgentRole::Strategy;
  a.system_text = "sys";
  a.user_text = "plan this";
  std::string base = prompt_hash(a);

  Prompt b = a;
  b.retry_feedback = "the verifier rejected your plan";
  b.schema_feedback = "bad format";
  b.params.temperature = 0.9;
  b.params.max_tokens = 17;
  CHECK(prompt_hash(b) == base);

  Prompt c = a;
  c.user_text = "plan that";
  CHECK(prompt_hash(c) != base);

  Prompt d = a;
  d.role = AgentRole::Analysis;
  CHECK(prompt_hash(d) != base);

  Prompt e = a;
  e.attachments.push_back({"src", "main = ()"});
  CHECK(prompt_hash(e) != base);

  CHECK(base.rfind("strategy:", 0) == 0);
}

TEST_CASE("parse_structured requires exactly one fenced block") {
  CHECK_THROWS_AS(parse_structured("no block at all", AgentRole::Analysis),
                  SchemaViolation);
  std::string two = fence_json("{}") + "and\n" + fence_json("{}");
  CHECK_THROWS_AS(parse_structured(two, AgentRole::TestValidate), SchemaViolation);
  CHECK_THROWS_AS(parse_structured("```json\n{\"a\":1}\n", AgentRole::TestValidate),
                  SchemaViolation);
}

TEST_CASE("json payload is canonicalized") {
  std::string raw = fence_json(
      R"({"narrative": "two modules", "modules": [], "dependency_edges": []})");
  auto payload = parse_structured(raw, AgentRole::Context);
  CHECK(payload.json_text ==
        R"({"dependency_edges":[],"modules":[],"narrative":"two modules"})");
  CHECK(payload.files.empty());
}

TEST_CASE("context report schema") {
  std::string ok = fence_json(
      R"({"modules":[{"name":"Main","functions":["main"],"imports":["Stats"]}],)"
      R"("dependency_edges":[["main","tally"]],"narrative":"entry point"})");
  CHECK_NOTHROW(parse_structured(ok, AgentRole::Context));

  std::string missing = fence_json(R"({"modules":[],"narrative":"x"})");
  CHECK_THROWS_WITH_AS(parse_structured(missing, AgentRole::Context),
                       doctest::Contains("dependency_edges"), SchemaViolation);

  std::string bad_fns = fence_json(
      R"({"modules":[{"name":"M","functions":[1],"imports":[]}],)"
      R"("dependency_edges":[],"narrative":"x"})");
  CHECK_THROWS_AS(parse_structured(bad_fns, AgentRole::Context), SchemaViolation);
}

TEST_CASE("analysis schema checks hotspot entries") {
  CHECK_NOTHROW(parse_structured(fence_json(kGoodAnalysis), AgentRole::Analysis));
  std::string no_cc = fence_json(R"({"hotspots":[{"function":"f"}],"flags":[]})");
  CHECK_THROWS_WITH_AS(parse_structured(no_cc, AgentRole::Analysis),
                       doctest::Contains("cc"), SchemaViolation);
  std::string not_array = fence_json(R"({"hotspots":3})");
  CHECK_THROWS_AS(parse_structured(not_array, AgentRole::Analysis), SchemaViolation);
  std::string empty_ok = fence_json(R"({"hotspots":[],"flags":[]})");
  CHECK_NOTHROW(parse_structured(empty_ok, AgentRole::Analysis));
}

TEST_CASE("strategy schema rejects an empty action list") {
  std::string empty = fence_json(R"({"actions":[]})");
  CHECK_THROWS_WITH_AS(parse_structured(empty, AgentRole::Strategy),
                       doctest::Contains("empty action list"), SchemaViolation);
  std::string unknown = fence_json(
      R"({"actions":[{"kind":"DeleteEverything","target":"f","description":"no"}]})");
  CHECK_THROWS_WITH_AS(parse_structured(unknown, AgentRole::Strategy),
                       doctest::Contains("DeleteEverything"), SchemaViolation);
  std::string ok = fence_json(
      R"({"actions":[{"kind":"DecomposeFunction","target":"tally",)"
      R"("description":"split the fold","expected_effect":"cc drops"}]})");
  CHECK_NOTHROW(parse_structured(ok, AgentRole::Strategy));
}

TEST_CASE("verifier schema requires an accept or reject decision") {
  std::string ok = fence_json(R"({"decision":"accept","findings":[]})");
  CHECK_NOTHROW(parse_structured(ok, AgentRole::AnalysisVerifier));
  std::string rej = fence_json(R"({"decision":"reject","findings":["cc mismatch"]})");
  CHECK_NOTHROW(parse_structured(rej, AgentRole::StrategyVerifier));
  std::string bad = fence_json(R"({"decision":"maybe"})");
  CHECK_THROWS_AS(parse_structured(bad, AgentRole::ContextVerifier), SchemaViolation);
  std::string none = fence_json(R"({"findings":[]})");
  CHECK_THROWS_AS(parse_structured(none, AgentRole::ContextVerifier), SchemaViolation);
}

TEST_CASE("file envelope parsing for refactor roles") {
  std::string raw =
      "Rewrote both modules.\n"
      "```haskell\n"
      "-- FILE: src/Main.hs\n"
      "module Main where\n"
      "main :: IO ()\n"
      "main = pure ()\n"
      "-- FILE: src/Util.hs\n"
      "module Util where\n"
      "```\n";
  auto payload = parse_structured(raw, AgentRole::Refactor1);
  REQUIRE(payload.files.size() == 2);
  CHECK(payload.files.at("src/Main.hs") ==
        "module Main where\nmain :: IO ()\nmain = pure ()\n");
  CHECK(payload.files.at("src/Util.hs") == "module Util where\n");
  CHECK(payload.json_text.empty());
}

TEST_CASE("file envelope violations") {
  std::string no_marker = "```\n\n```\n";
  CHECK_THROWS_WITH_AS(parse_structured(no_marker, AgentRole::Debug),
                       doctest::Contains("FILE"), SchemaViolation);
  std::string body_without_marker = "```\nmodule Main where\n```\n";
  CHECK_THROWS_WITH_AS(parse_structured(body_without_marker, AgentRole::Debug),
                       doctest::Contains("before the first file marker"),
                       SchemaViolation);
  std::string leading =
      "```\nstray text\n-- FILE: a.hs\nmodule A where\n```\n";
  CHECK_THROWS_AS(parse_structured(leading, AgentRole::Refactor2), SchemaViolation);
  std::string dup =
      "```\n-- FILE: a.hs\nx = 1\n-- FILE: a.hs\nx = 2\n```\n";
  CHECK_THROWS_WITH_AS(parse_structured(dup, AgentRole::Refactor1),
                       doctest::Contains("duplicate"), SchemaViolation);
}

TEST_CASE("render_prompt demands the sections a role depends on") {
  PromptInputs in;
  in.sections = {{"cc_table", "f 6"}};
  CHECK_THROWS_WITH_AS(render_prompt(AgentRole::Strategy, in),
                       doctest::Contains("analysis_report"), MissingArtifact);
  in.sections.push_back({"analysis_report", "{}"});
  CHECK_NOTHROW(render_prompt(AgentRole::Strategy, in));
}

TEST_CASE("render_prompt is deterministic") {
  PromptInputs in;
  in.sections = {{"files", "Main.hs"}, {"parser_facts", "Main: main"}};
  in.attachments = {{"Main.hs", "main = interact id\n"}};
  Prompt a = render_prompt(AgentRole::Context, in);
  Prompt b = render_prompt(AgentRole::Context, in);
  CHECK(a.system_text == b.system_text);
  CHECK(a.user_text == b.user_text);
  CHECK(prompt_hash(a) == prompt_hash(b));
  CHECK(a.user_text.find("## files") != std::string::npos);
  CHECK(a.user_text.find("## parser_facts") != std::string::npos);
}

TEST_CASE("render_prompt sets verifier temperature to zero") {
  PromptInputs vin;
  vin.sections = {{"context_report", "{}"}, {"parser_facts", "x"}};
  CHECK(render_prompt(AgentRole::ContextVerifier, vin).params.temperature == 0.0);
  PromptInputs pin;
  pin.sections = {{"analysis_report", "{}"}};
  CHECK(render_prompt(AgentRole::Strategy, pin).params.temperature > 0.0);
}

TEST_CASE("render_prompt rejects duplicate attachment labels") {
  PromptInputs in;
  in.sections = {{"files", "a"}, {"parser_facts", "b"}};
  in.attachments = {{"a.hs", "x"}, {"a.hs", "y"}};
  CHECK_THROWS_WITH_AS(render_prompt(AgentRole::Context, in),
                       doctest::Contains("a.hs"), Error);
}

TEST_CASE("render_prompt truncates attachments to the context budget") {
  PromptInputs in;
  in.sections = {{"files", "big.hs"}, {"parser_facts", "facts"}};
  in.attachments = {{"big.hs", std::string(5000, 'x')}};
  in.context_budget_bytes = 600;
  Prompt p = render_prompt(AgentRole::Context, in);
  std::size_t total = p.system_text.size() + p.user_text.size();
  for (const auto& a : p.attachments) total += a.label.size() + a.content.size();
  CHECK(total <= 600);
  REQUIRE(p.attachments.size() == 1);
  CHECK(p.attachments[0].content.find("[truncated]") != std::string::npos);
}

TEST_CASE("transcript jsonl round-trips losslessly") {
  Transcript t;
  TranscriptEntry e;
  e.run_id = "runA";
  e.seq = 0;
  e.role = AgentRole::Refactor1;
  e.prompt = analysis_prompt();
  e.prompt.role = AgentRole::Refactor1;
  e.prompt.retry_feedback = "shrink tally";
  e.hash = prompt_hash(e.prompt);
  e.completion.raw_text = "```\n-- FILE: a.hs\nx = 1\n```\n";
  e.completion.usage = {123, 456};
  e.completion.latency_ms = 987;
  e.completion.re_asks = 1;
  e.ts = "2026-01-02T03:04:05Z";
  t.append(e);

  TranscriptEntry e2 = e;
  e2.seq = 1;
  e2.role = AgentRole::Analysis;
  e2.prompt = analysis_prompt();
  e2.hash = prompt_hash(e2.prompt);
  e2.completion.raw_text = fence_json(kGoodAnalysis);
  t.append(e2);

  Transcript back = Transcript::from_jsonl(t.to_jsonl());
  REQUIRE(back.entries().size() == 2);
  const auto& r = back.entries()[0];
  CHECK(r.run_id == "runA");
  CHECK(r.seq == 0);
  CHECK(r.role == AgentRole::Refactor1);
  CHECK(r.hash == e.hash);
  CHECK(r.prompt.user_text == e.prompt.user_text);
  CHECK(r.prompt.retry_feedback == "shrink tally");
  CHECK(r.completion.raw_text == e.completion.raw_text);
  CHECK(r.completion.usage.input == 123);
  CHECK(r.completion.usage.output == 456);
  CHECK(r.completion.latency_ms == 987);
  CHECK(r.completion.re_asks == 1);
  CHECK(r.ts == "2026-01-02T03:04:05Z");
  CHECK(back.to_jsonl() == t.to_jsonl());
}

TEST_CASE("transcript file save and load") {
  TempDir tmp;
  Transcript t;
  TranscriptEntry e;
  e.run_id = "r";
  e.role = AgentRole::Context;
  e.prompt.role = AgentRole::Context;
  e.prompt.user_text = "hello";
  e.hash = prompt_hash(e.prompt);
  e.completion.raw_text = "body";
  e.ts = "2026-01-01T00:00:00Z";
  t.append(e);
  auto file = tmp.dir / "transcript.jsonl";
  t.save(file);
  Transcript back = Transcript::load(file);
  REQUIRE(back.entries().size() == 1);
  CHECK(back.entries()[0].prompt.user_text == "hello");
  CHECK_THROWS_AS(Transcript::load(tmp.dir / "absent.jsonl"), IoError);
  std::ofstream bad(tmp.dir / "bad.jsonl");
  bad << "{not json\n";
  bad.close();
  CHECK_THROWS_AS(Transcript::load(tmp.dir / "bad.jsonl"), IoError);
}

TEST_CASE("gateway re-asks twice then succeeds") {
  auto backend = std::make_unique<ScriptedBackend>();
  backend->push(AgentRole::Analysis, "no fence here at all");
  backend->push(AgentRole::Analysis, fence_json(R"(["not","an","object"])"));
  backend->push(AgentRole::Analysis, fence_json(kGoodAnalysis));
  Gateway gw(std::move(backend));
  Completion c = gw.complete(analysis_prompt());
  CHECK(c.re_asks == 2);
  CHECK(c.parsed.has_value());
  CHECK(gw.calls_made() == 3);
  REQUIRE(gw.transcript().entries().size() == 3);
  CHECK(gw.transcript().entries()[0].hash == gw.transcript().entries()[2].hash);
  CHECK(gw.transcript().entries()[2].completion.re_asks == 2);
}

TEST_CASE("gateway gives up after the re-ask budget") {
  auto backend = std::make_unique<ScriptedBackend>();
  for (int i = 0; i < 3; ++i) backend->push(AgentRole::Analysis, "still no fence");
  Gateway gw(std::move(backend));
  CHECK_THROWS_AS(gw.complete(analysis_prompt()), SchemaViolation);
  CHECK(gw.calls_made() == 3);
}

TEST_CASE("scripted backend underflow is a backend failure") {
  auto backend = std::make_unique<ScriptedBackend>();
  Gateway gw(std::move(backend));
  CHECK_THROWS_AS(gw.complete(analysis_prompt()), BackendUnavailable);
}

TEST_CASE("replay serves recorded completions by prompt hash") {
  Prompt p = analysis_prompt();
  Transcript t;
  for (int i = 0; i < 2; ++i) {
    TranscriptEntry e;
    e.run_id = "rec";
    e.seq = i;
    e.role = p.role;
    e.prompt = p;
    e.hash = prompt_hash(p);
    e.completion.raw_text = fence_json(
        std::string(R"({"hotspots":[],"flags":["attempt )") + std::to_string(i) +
        "\"]}");
    e.completion.latency_ms = 555;
    e.ts = "2026-01-01T00:00:00Z";
    t.append(e);
  }
  ReplayBackend replay(t);

  Completion first = replay.complete_raw(p);
  CHECK(first.raw_text.find("attempt 0") != std::string::npos);
  CHECK(first.latency_ms == 0);

  Prompt retry = p;
  retry.retry_feedback = "the verifier wants more";
  Completion second = replay.complete_raw(retry);
  CHECK(second.raw_text.find("attempt 1") != std::string::npos);

  Completion sticky = replay.complete_raw(p);
  CHECK(sticky.raw_text.find("attempt 1") != std::string::npos);
}

TEST_CASE("replay miss names the role and hash") {
  Transcript empty;
  ReplayBackend replay(empty);
  Prompt p = analysis_prompt();
  try {
    replay.complete_raw(p);
    FAIL("expected ReplayMiss");
  } catch (const ReplayMiss& e) {
    std::string msg = e.what();
    CHECK(msg.find("analysis") != std::string::npos);
    CHECK(msg.find(prompt_hash(p)) != std::string::npos);
  }
}

TEST_CASE("gateway in replay mode does not record") {
  Prompt p = analysis_prompt();
  Transcript t;
  TranscriptEntry e;
  e.run_id = "rec";
  e.role = p.role;
  e.prompt = p;
  e.hash = prompt_hash(p);
  e.completion.raw_text = fence_json(kGoodAnalysis);
  e.ts = "2026-01-01T00:00:00Z";
  t.append(e);
  GatewayConfig cfg;
  cfg.record = false;
  Gateway gw(std::make_unique<ReplayBackend>(t), cfg);
  Completion c = gw.complete(p);
  CHECK(c.parsed.has_value());
  CHECK(gw.transcript().entries().empty());
}

TEST_CASE("recorded transcript replays the same run") {
  Prompt p = analysis_prompt();
  auto scripted = std::make_unique<ScriptedBackend>();
  scripted->push(AgentRole::Analysis, "garbage");
  scripted->push(AgentRole::Analysis, fence_json(kGoodAnalysis));
  Gateway rec(std::move(scripted));
  Completion live = rec.complete(p);
  CHECK(live.re_asks == 1);

  GatewayConfig cfg;
  cfg.record = false;
  Gateway replayed(std::make_unique<ReplayBackend>(rec.transcript()), cfg);
  Completion again = replayed.complete(p);
  CHECK(again.re_asks == 1);
  CHECK(again.raw_text == live.raw_text);
}

TEST_CASE("live backend refuses to run without the credential") {
  const char* saved = std::getenv("LLM_API_KEY");
  std::string saved_copy = saved ? saved : "";
  unsetenv("LLM_API_KEY");
  LiveBackend be{LiveBackendConfig{}};
  Prompt p = analysis_prompt();
  CHECK_THROWS_WITH_AS(be.complete_raw(p), doctest::Contains("LLM_API_KEY"),
                       BackendUnavailable);
  if (saved) setenv("LLM_API_KEY", saved_copy.c_str(), 1);
}

TEST_CASE("live backend log redacts the credential") {
  TempDir tmp;
  setenv("LLM_API_KEY", "sk-sentinel-do-not-log", 1);
  LiveBackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:9";
  cfg.timeout_ms = 500;
  cfg.log_file = tmp.dir / "llm.log";
  LiveBackend be(cfg);
  Prompt p = analysis_prompt();
  CHECK_THROWS_AS(be.complete_raw(p), BackendUnavailable);
  std::string log = read_file(cfg.log_file);
  CHECK(!log.empty());
  CHECK(log.find("sk-sentinel-do-not-log") == std::string::npos);
  CHECK(log.find("[redacted]") != std::string::npos);
  unsetenv("LLM_API_KEY");
}
