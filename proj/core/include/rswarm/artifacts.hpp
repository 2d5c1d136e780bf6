#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rswarm/metrics.hpp"
#include "rswarm/toolchain.hpp"

namespace rswarm {

struct ModuleFacts {
  std::string name;
  std::vector<std::string> functions;
  std::vector<std::string> imports;

  bool operator==(const ModuleFacts&) const = default;
};

struct ContextReport {
  std::vector<ModuleFacts> modules;
  std::vector<std::pair<std::string, std::string>> dependency_edges;
  std::string narrative;
};

struct Hotspot {
  std::string function;
  int cc = 0;
  int rank = 0;
  std::string rationale;
};

struct AnalysisReport {
  std::vector<Hotspot> hotspots;
  ComplexityScore module_metrics;  // always the recomputed figures
  std::vector<std::string> flags;
};

enum class ActionKind {
  DecomposeFunction,
  SimplifyExpression,
  RenameForClarity,
  EliminateDuplication,
  PointFreeRewrite,
  ReorganizeModule,
  OptimizeDataStructure,
};

std::string to_string(ActionKind kind);
std::optional<ActionKind> action_kind_from_string(const std::string& name);

/// Readability actions run in the first refactor pass, the rest in the
/// second (performance) pass.
bool is_readability_action(ActionKind kind);

struct RefactorAction {
  ActionKind kind = ActionKind::SimplifyExpression;
  std::string target;
  std::string description;
  std::string expected_effect;
};

struct RefactorPlan {
  std::vector<RefactorAction> actions;

  bool has_kind(ActionKind kind) const;
  std::vector<RefactorAction> subset(bool readability) const;
};

enum class Decision { Accept, Reject };

struct Finding {
  std::string severity;  // "error", "warning", "note"
  std::string message;
};

struct VerifierVerdict {
  Decision decision = Decision::Accept;
  std::vector<Finding> findings;
  std::string feedback_for_retry;

  bool accepted() const { return decision == Decision::Accept; }
};

struct CandidateSnapshot {
  std::map<std::string, std::string> files;
  std::string provenance;    // stage that produced it
  std::string diff_summary;  // vs. its parent
};

struct ValidationReport {
  CompileResult compile;
  TestResult tests;
  bool test_run_ok = false;
  std::optional<HlintReport> hlint;
  std::optional<ProfileStats> profile;
  std::vector<std::string> tool_errors;
  bool passed = false;

  /// Compile diagnostics, failing test names, and tool errors, flattened
  /// for the debug prompt.
  std::vector<std::string> failure_summary() const;
};

// Conversions between artifacts and the JSON documents the gateway roles
// exchange. The *_from_json functions throw SchemaViolation on structural
// problems the gateway-level validation cannot see.
ContextReport context_report_from_json(const std::string& json_text);
std::string to_json(const ContextReport& report);
AnalysisReport analysis_report_from_json(const std::string& json_text);
std::string to_json(const AnalysisReport& report);
RefactorPlan refactor_plan_from_json(const std::string& json_text);
std::string to_json(const RefactorPlan& plan);
std::string to_json(const VerifierVerdict& verdict);
std::string to_json(const ValidationReport& report);

}  // namespace rswarm
