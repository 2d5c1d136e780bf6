#pragma once

#include <optional>
#include <string>

namespace rswarm {

/// Pipeline stages in execution order.
enum class AgentRole {
  Context,
  ContextVerifier,
  Analysis,
  AnalysisVerifier,
  Strategy,
  StrategyVerifier,
  Refactor1,
  Refactor2,
  TestValidate,
  Debug,
};

constexpr int kAgentRoleCount = 10;

std::string to_string(AgentRole role);
std::optional<AgentRole> agent_role_from_string(const std::string& name);

/// Verifier roles run at temperature 0 and their model output is advisory.
bool is_verifier_role(AgentRole role);

/// Roles whose structured output is a set of source files rather than a
/// JSON document.
bool emits_files(AgentRole role);

}  // namespace rswarm
