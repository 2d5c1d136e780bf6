#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rswarm/artifacts.hpp"
#include "rswarm/corpus.hpp"
#include "rswarm/gateway.hpp"
#include "rswarm/reporting.hpp"

namespace rswarm {

enum class RunOutcome { Running, Succeeded, Aborted };
std::string to_string(RunOutcome outcome);

struct PipelineConfig {
  int max_retries = 3;
  int max_debug_loops = 3;
  int cc_hotspot_threshold = 5;
  ToolchainConfig toolchain;
  std::filesystem::path artifact_dir = "artifacts";
  bool enforce_non_regression = true;
  bool dry_run = false;  // stop after the strategy gate
  std::string run_id;    // empty: derived from the snapshot content hash
  std::size_t context_budget_bytes = 200000;
};

struct PipelineState {
  AgentRole current_stage = AgentRole::Context;
  std::map<AgentRole, int> retries_used;
  int debug_iterations = 0;
  RunOutcome outcome = RunOutcome::Running;
  std::string abort_reason;

  ContextReport context;
  AnalysisReport analysis;
  RefactorPlan plan;
  CandidateSnapshot candidate;
  ValidationReport validation;
  VerifierVerdict last_verdict;
  std::vector<std::string> log;
};

struct PipelineOutcome {
  PipelineState state;
  std::string run_id;
  std::filesystem::path run_dir;
  MetricsRecord pre;
  std::optional<MetricsRecord> post;
  std::optional<ComparisonTable> comparison;
  int gateway_completions = 0;

  bool succeeded() const { return state.outcome == RunOutcome::Succeeded; }
};

/// Facts the parser extracts deterministically from a snapshot; the source
/// of truth every verifier checks model claims against.
struct SnapshotFacts {
  std::vector<ModuleFacts> modules;  // ordered by file path
  std::vector<std::pair<std::string, std::string>> valid_edges;  // calls + imports
  ComplexityScore complexity;
  std::map<std::string, std::string> function_file;
  std::map<std::string, std::string> module_file;
  std::vector<std::string> function_order;  // source position order
};

SnapshotFacts compute_facts(const CodebaseSnapshot& snapshot);

/// Deterministic verifier gates. The pipeline may add advisory findings from
/// a model consultation, but these decisions stand on their own.
VerifierVerdict verify_context(const ContextReport& report, const SnapshotFacts& facts);
VerifierVerdict verify_analysis(const AnalysisReport& report, const SnapshotFacts& facts,
                                int cc_hotspot_threshold);
VerifierVerdict verify_strategy(const RefactorPlan& plan, const AnalysisReport& analysis,
                                const SnapshotFacts& facts);

/// Deterministic hotspot list: functions at or above the threshold, ranked
/// by CC descending with source position breaking ties.
std::vector<Hotspot> hotspot_candidates(const SnapshotFacts& facts, int threshold);

/// Drives the ten stages over the snapshot. Baseline metrics are recorded
/// before any agent runs; the final snapshot is written atomically; a
/// report lands in the run's artifact directory whatever the outcome.
PipelineOutcome run_pipeline(const CodebaseSnapshot& snapshot, Gateway& gateway,
                             CommandRunner& runner, const PipelineConfig& config);

}  // namespace rswarm
