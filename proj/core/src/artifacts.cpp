#include "rswarm/artifacts.hpp"

#include <algorithm>
#include <array>

#include "nlohmann/json.hpp"

#include "rswarm/errors.hpp"

namespace rswarm {

using nlohmann::json;

namespace {

const std::array<const char*, 7> kKindNames = {
    "DecomposeFunction",  "SimplifyExpression",  "RenameForClarity",
    "EliminateDuplication", "PointFreeRewrite",  "ReorganizeModule",
    "OptimizeDataStructure",
};

json parse_doc(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string to_string(ActionKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

std::optional<ActionKind> action_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (name == kKindNames[i]) return static_cast<ActionKind>(i);
  }
  return std::nullopt;
}

bool is_readability_action(ActionKind kind) {
  switch (kind) {
    case ActionKind::DecomposeFunction:
    case ActionKind::SimplifyExpression:
    case ActionKind::RenameForClarity:
    case ActionKind::EliminateDuplication:
      return true;
    case ActionKind::PointFreeRewrite:
    case ActionKind::ReorganizeModule:
    case ActionKind::OptimizeDataStructure:
      return false;
  }
  return false;
}

bool RefactorPlan::has_kind(ActionKind kind) const {
  return std::any_of(actions.begin(), actions.end(),
                     [&](const RefactorAction& a) { return a.kind == kind; });
}

std::vector<RefactorAction> RefactorPlan::subset(bool readability) const {
  std::vector<RefactorAction> out;
  for (const auto& a : actions) {
    if (is_readability_action(a.kind) == readability) out.push_back(a);
  }
  return out;
}

std::vector<std::string> ValidationReport::failure_summary() const {
  std::vector<std::string> out;
  if (!compile.success) {
    bool any = false;
    for (const auto& d : compile.diagnostics) {
      if (d.severity != "error") continue;
      out.push_back("compile error at " + d.file + ":" + std::to_string(d.line) +
                    ": " + d.message);
      any = true;
    }
    if (!any) out.push_back("compilation failed");
  }
  if (test_run_ok) {
    for (const auto& f : tests.failures) {
      out.push_back("failing test: " + f.name +
                    (f.message.empty() ? "" : " (" + f.message + ")"));
    }
    if (tests.failed > 0 && tests.failures.empty()) {
      out.push_back(std::to_string(tests.failed) + " tests failing");
    }
  }
  for (const auto& e : tool_errors) out.push_back("tool error: " + e);
  return out;
}

// ---------------------------------------------------------------------------

ContextReport context_report_from_json(const std::string& json_text) {
  json doc = parse_doc(json_text, "context report");
  ContextReport report;
  for (const auto& m : doc.at("modules")) {
    ModuleFacts facts;
    facts.name = m.at("name").get<std::string>();
    for (const auto& f : m.at("functions")) facts.functions.push_back(f.get<std::string>());
    for (const auto& i : m.at("imports")) facts.imports.push_back(i.get<std::string>());
    report.modules.push_back(std::move(facts));
  }
  for (const auto& e : doc.at("dependency_edges")) {
    if (e.is_array() && e.size() == 2) {
      report.dependency_edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    } else if (e.is_object() && e.contains("from") && e.contains("to")) {
      report.dependency_edges.emplace_back(e["from"].get<std::string>(),
                                           e["to"].get<std::string>());
    } else {
      throw SchemaViolation("dependency edge must be a [from, to] pair");
    }
  }
  report.narrative = doc.at("narrative").get<std::string>();
  return report;
}

std::string to_json(const ContextReport& report) {
  json modules = json::array();
  for (const auto& m : report.modules) {
    modules.push_back({{"name", m.name}, {"functions", m.functions}, {"imports", m.imports}});
  }
  json edges = json::array();
  for (const auto& [from, to] : report.dependency_edges) {
    edges.push_back(json::array({from, to}));
  }
  return json{{"modules", modules},
              {"dependency_edges", edges},
              {"narrative", report.narrative}}
      .dump();
}

AnalysisReport analysis_report_from_json(const std::string& json_text) {
  json doc = parse_doc(json_text, "analysis report");
  AnalysisReport report;
  for (const auto& h : doc.at("hotspots")) {
    Hotspot spot;
    spot.function = h.at("function").get<std::string>();
    spot.cc = h.at("cc").get<int>();
    spot.rank = h.value("rank", 0);
    spot.rationale = h.value("rationale", "");
    report.hotspots.push_back(std::move(spot));
  }
  if (doc.contains("flags")) {
    for (const auto& f : doc.at("flags")) report.flags.push_back(f.get<std::string>());
  }
  return report;
}

std::string to_json(const AnalysisReport& report) {
  json hotspots = json::array();
  for (const auto& h : report.hotspots) {
    hotspots.push_back({{"function", h.function},
                        {"cc", h.cc},
                        {"rank", h.rank},
                        {"rationale", h.rationale}});
  }
  json per_function = json::object();
  for (const auto& [name, cc] : report.module_metrics.per_function) {
    per_function[name] = cc;
  }
  return json{{"hotspots", hotspots},
              {"module_metrics",
               {{"per_function", per_function}, {"total", report.module_metrics.total}}},
              {"flags", report.flags}}
      .dump();
}

RefactorPlan refactor_plan_from_json(const std::string& json_text) {
  json doc = parse_doc(json_text, "refactor plan");
  RefactorPlan plan;
  for (const auto& a : doc.at("actions")) {
    RefactorAction action;
    std::string kind = a.at("kind").get<std::string>();
    auto parsed = action_kind_from_string(kind);
    if (!parsed) throw SchemaViolation("unknown action kind \"" + kind + "\"");
    action.kind = *parsed;
    action.target = a.at("target").get<std::string>();
    action.description = a.at("description").get<std::string>();
    action.expected_effect = a.value("expected_effect", "");
    plan.actions.push_back(std::move(action));
  }
  if (plan.actions.empty()) {
    throw SchemaViolation("refactor plan has an empty action list");
  }
  return plan;
}

std::string to_json(const RefactorPlan& plan) {
  json actions = json::array();
  for (const auto& a : plan.actions) {
    actions.push_back({{"kind", to_string(a.kind)},
                       {"target", a.target},
                       {"description", a.description},
                       {"expected_effect", a.expected_effect}});
  }
  return json{{"actions", actions}}.dump();
}

std::string to_json(const VerifierVerdict& verdict) {
  json findings = json::array();
  for (const auto& f : verdict.findings) {
    findings.push_back({{"severity", f.severity}, {"message", f.message}});
  }
  return json{{"decision", verdict.accepted() ? "accept" : "reject"},
              {"findings", findings},
              {"feedback_for_retry", verdict.feedback_for_retry}}
      .dump();
}

std::string to_json(const ValidationReport& report) {
  json diags = json::array();
  for (const auto& d : report.compile.diagnostics) {
    diags.push_back({{"severity", d.severity},
                     {"file", d.file},
                     {"line", d.line},
                     {"message", d.message}});
  }
  json failures = json::array();
  for (const auto& f : report.tests.failures) {
    failures.push_back({{"name", f.name}, {"message", f.message}});
  }
  json j = {
      {"passed", report.passed},
      {"compile", {{"success", report.compile.success}, {"diagnostics", diags}}},
      {"tests",
       {{"total", report.tests.total},
        {"passed", report.tests.passed},
        {"failed", report.tests.failed},
        {"skipped", report.tests.skipped},
        {"failures", failures},
        {"run_ok", report.test_run_ok}}},
      {"tool_errors", report.tool_errors},
  };
  if (report.hlint) {
    j["hlint"] = {{"hint_count", report.hlint->hint_count}};
  } else {
    j["hlint"] = nullptr;
  }
  if (report.profile) {
    j["profile"] = {{"secs", report.profile->total_time_secs},
                    {"ticks", report.profile->ticks},
                    {"tick_interval_us", report.profile->tick_interval_us},
                    {"alloc_bytes", report.profile->total_alloc_bytes}};
  } else {
    j["profile"] = nullptr;
  }
  return j.dump();
}

}  // namespace rswarm
