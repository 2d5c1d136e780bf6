#include "rswarm/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"

#include "rswarm/errors.hpp"
#include "rswarm/parser.hpp"

namespace rswarm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::Running: return "Running";
    case RunOutcome::Succeeded: return "Succeeded";
    case RunOutcome::Aborted: return "Aborted";
  }
  return "Running";
}

// ---------------------------------------------------------------------------
// Snapshot facts

namespace {

using ExprFn = std::function<void(const Expr&)>;

void walk_decls(const std::vector<Declaration>& decls, const ExprFn& fn);

void walk_expr(const Expr& e, const ExprFn& fn) {
  fn(e);
  for (const auto& c : e.children) walk_expr(c, fn);
  for (const auto& alt : e.alts) {
    for (const auto& [cond, body] : alt.guards) {
      walk_expr(cond, fn);
      walk_expr(body, fn);
    }
    if (alt.body) walk_expr(*alt.body, fn);
    walk_decls(alt.where_bindings, fn);
  }
  for (const auto& q : e.quals) {
    if (q.expr) walk_expr(*q.expr, fn);
    walk_decls(q.bindings, fn);
  }
  for (const auto& s : e.stmts) {
    if (s.expr) walk_expr(*s.expr, fn);
    walk_decls(s.bindings, fn);
  }
  walk_decls(e.bindings, fn);
}

void walk_clause(const Clause& clause, const ExprFn& fn) {
  for (const auto& [cond, body] : clause.guards) {
    walk_expr(cond, fn);
    walk_expr(body, fn);
  }
  if (clause.body) walk_expr(*clause.body, fn);
  walk_decls(clause.where_bindings, fn);
}

void walk_decls(const std::vector<Declaration>& decls, const ExprFn& fn) {
  for (const auto& d : decls) {
    if (d.kind != DeclKind::Function) continue;
    for (const auto& clause : d.function().clauses) walk_clause(clause, fn);
  }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

std::string two_digit(int n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
}

}  // namespace

SnapshotFacts compute_facts(const CodebaseSnapshot& snapshot) {
  SnapshotFacts facts;
  std::vector<std::pair<std::string, HsModule>> parsed;
  for (const auto& [path, text] : snapshot.files) {
    parsed.emplace_back(path, parse_module(text, path));
  }

  std::set<std::string> function_set;
  for (const auto& [path, mod] : parsed) {
    ModuleFacts mf;
    mf.name = mod.name;
    for (const auto& fn : extract_functions(mod)) {
      mf.functions.push_back(fn.name);
      function_set.insert(fn.name);
      if (!facts.function_file.count(fn.name)) {
        facts.function_order.push_back(fn.name);
        facts.function_file[fn.name] = path;
      }
    }
    for (const auto& imp : mod.imports) mf.imports.push_back(imp.module_name);
    facts.modules.push_back(std::move(mf));
    facts.module_file[mod.name] = path;

    ComplexityScore score = total_complexity(mod);
    for (const auto& [name, cc] : score.per_function) {
      facts.complexity.per_function[name] = cc;
    }
    facts.complexity.total += score.total;
  }

  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& [path, mod] : parsed) {
    (void)path;
    for (const auto& d : mod.declarations) {
      if (d.kind != DeclKind::Function) continue;
      const auto& fn = d.function();
      ExprFn collect = [&](const Expr& e) {
        if (e.kind == ExprKind::Var && function_set.count(e.text)) {
          edges.insert({fn.name, e.text});
        }
        if (e.kind == ExprKind::InfixApp && function_set.count(e.op)) {
          edges.insert({fn.name, e.op});
        }
      };
      for (const auto& clause : fn.clauses) walk_clause(clause, collect);
    }
  }
  std::set<std::string> module_names;
  for (const auto& m : facts.modules) module_names.insert(m.name);
  for (const auto& [path, mod] : parsed) {
    (void)path;
    for (const auto& imp : mod.imports) {
      if (module_names.count(imp.module_name)) {
        edges.insert({mod.name, imp.module_name});
      }
    }
  }
  facts.valid_edges.assign(edges.begin(), edges.end());
  return facts;
}

std::vector<Hotspot> hotspot_candidates(const SnapshotFacts& facts, int threshold) {
  std::vector<Hotspot> out;
  for (const auto& name : facts.function_order) {
    int cc = facts.complexity.per_function.at(name);
    if (cc >= threshold) out.push_back({name, cc, 0, ""});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Hotspot& a, const Hotspot& b) { return a.cc > b.cc; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic verifier gates

VerifierVerdict verify_context(const ContextReport& report, const SnapshotFacts& facts) {
  VerifierVerdict v;
  auto flag = [&](const std::string& msg) { v.findings.push_back({"error", msg}); };

  std::map<std::string, const ModuleFacts*> actual;
  for (const auto& m : facts.modules) actual[m.name] = &m;

  std::set<std::string> reported_names;
  for (const auto& m : report.modules) {
    reported_names.insert(m.name);
    auto it = actual.find(m.name);
    if (it == actual.end()) {
      flag("module " + m.name + " is not in the snapshot");
      continue;
    }
    std::set<std::string> actual_fns(it->second->functions.begin(),
                                     it->second->functions.end());
    std::set<std::string> reported_fns(m.functions.begin(), m.functions.end());
    for (const auto& f : reported_fns) {
      if (!actual_fns.count(f)) {
        flag("function " + f + " is not defined in module " + m.name);
      }
    }
    for (const auto& f : actual_fns) {
      if (!reported_fns.count(f)) {
        flag("missing: function " + f + " of module " + m.name +
             " is absent from the report");
      }
    }
    std::set<std::string> actual_imports(it->second->imports.begin(),
                                         it->second->imports.end());
    for (const auto& imp : m.imports) {
      if (!actual_imports.count(imp)) {
        flag("module " + m.name + " does not import " + imp);
      }
    }
  }
  for (const auto& [name, mf] : actual) {
    (void)mf;
    if (!reported_names.count(name)) {
      flag("missing: module " + name + " is absent from the report");
    }
  }

  std::set<std::pair<std::string, std::string>> valid(facts.valid_edges.begin(),
                                                      facts.valid_edges.end());
  for (const auto& edge : report.dependency_edges) {
    if (!valid.count(edge)) {
      flag("edge " + edge.first + " -> " + edge.second +
           " has no matching call or import");
    }
  }

  v.decision = v.findings.empty() ? Decision::Accept : Decision::Reject;
  if (!v.findings.empty()) {
    std::vector<std::string> msgs;
    for (const auto& f : v.findings) msgs.push_back(f.message);
    v.feedback_for_retry =
        "The report disagrees with the source facts: " + join(msgs, "; ") +
        ". Restate the report using only the facts provided.";
  }
  return v;
}

VerifierVerdict verify_analysis(const AnalysisReport& report, const SnapshotFacts& facts,
                                int cc_hotspot_threshold) {
  VerifierVerdict v;
  auto flag = [&](const std::string& msg) { v.findings.push_back({"error", msg}); };

  for (const auto& h : report.hotspots) {
    auto it = facts.complexity.per_function.find(h.function);
    if (it == facts.complexity.per_function.end()) {
      flag("hotspot names unknown function " + h.function);
      continue;
    }
    if (it->second != h.cc) {
      flag("hotspot " + h.function + " claims CC=" + std::to_string(h.cc) +
           " but recomputation gives " + std::to_string(it->second));
    } else if (h.cc < cc_hotspot_threshold) {
      flag("FalsePositive: " + h.function + " has CC=" + std::to_string(h.cc) +
           ", below threshold " + std::to_string(cc_hotspot_threshold));
    }
  }
  for (std::size_t i = 1; i < report.hotspots.size(); ++i) {
    if (report.hotspots[i].cc > report.hotspots[i - 1].cc) {
      flag("hotspots are not sorted by CC descending");
      break;
    }
  }

  v.decision = v.findings.empty() ? Decision::Accept : Decision::Reject;
  if (!v.findings.empty()) {
    std::vector<std::string> msgs;
    for (const auto& f : v.findings) msgs.push_back(f.message);
    v.feedback_for_retry = "Hotspot list rejected: " + join(msgs, "; ") +
                           ". Use exactly the complexity figures provided.";
  }
  return v;
}

VerifierVerdict verify_strategy(const RefactorPlan& plan, const AnalysisReport& analysis,
                                const SnapshotFacts& facts) {
  VerifierVerdict v;
  auto flag = [&](const std::string& msg) { v.findings.push_back({"error", msg}); };

  std::set<std::string> modules;
  for (const auto& m : facts.modules) modules.insert(m.name);

  for (const auto& a : plan.actions) {
    if (a.kind == ActionKind::ReorganizeModule) {
      if (!modules.count(a.target)) {
        flag("ReorganizeModule target " + a.target +
             " is not a module in the snapshot; relocating it would orphan "
             "exported names");
      }
    } else if (!facts.complexity.per_function.count(a.target)) {
      flag("action " + to_string(a.kind) + " targets unknown function " + a.target);
    }
  }

  if (!analysis.hotspots.empty()) {
    std::set<std::string> hot;
    for (const auto& h : analysis.hotspots) hot.insert(h.function);
    bool covered = std::any_of(plan.actions.begin(), plan.actions.end(),
                               [&](const RefactorAction& a) { return hot.count(a.target) > 0; });
    if (!covered) {
      flag("NoHotspotCoverage: no action addresses a reported hotspot");
    }
  }

  v.decision = v.findings.empty() ? Decision::Accept : Decision::Reject;
  if (!v.findings.empty()) {
    std::vector<std::string> msgs;
    for (const auto& f : v.findings) msgs.push_back(f.message);
    v.feedback_for_retry = "Plan rejected: " + join(msgs, "; ") +
                           ". Target only functions that exist and cover the hotspots.";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

class Engine {
 public:
  Engine(const CodebaseSnapshot& snapshot, Gateway& gateway, CommandRunner& runner,
         const PipelineConfig& config)
      : snap_(snapshot), gw_(gateway), runner_(runner), cfg_(config) {}

  PipelineOutcome run();

 private:
  const CodebaseSnapshot& snap_;
  Gateway& gw_;
  CommandRunner& runner_;
  PipelineConfig cfg_;

  SnapshotFacts facts_;
  PipelineState state_;
  fs::path run_dir_;
  std::string run_id_;
  std::map<AgentRole, int> attempts_;

  void abort(const std::string& reason) {
    state_.outcome = RunOutcome::Aborted;
    state_.abort_reason = reason;
    state_.log.push_back("aborted: " + reason);
  }

  fs::path stage_dir(AgentRole role) {
    fs::path dir = run_dir_ / (two_digit(static_cast<int>(role) + 1) + "-" + to_string(role));
    fs::create_directories(dir);
    return dir;
  }

  std::string prompt_record(const Prompt& p) {
    json atts = json::array();
    for (const auto& a : p.attachments) atts.push_back(a.label);
    json j = {
        {"role", to_string(p.role)},
        {"hash", prompt_hash(p)},
        {"system_text", p.system_text},
        {"user_text", p.user_text},
        {"attachments", atts},
        {"retry_feedback", p.retry_feedback},
    };
    return j.dump(2) + "\n";
  }

  Completion ask(const Prompt& prompt) {
    int attempt = ++attempts_[prompt.role];
    fs::path dir = stage_dir(prompt.role);
    write_text(dir / ("prompt-" + std::to_string(attempt) + ".json"), prompt_record(prompt));
    Completion c = gw_.complete(prompt);
    write_text(dir / ("completion-" + std::to_string(attempt) + ".txt"), c.raw_text);
    if (c.parsed) {
      if (!c.parsed->json_text.empty()) {
        write_text(dir / ("payload-" + std::to_string(attempt) + ".json"),
                   c.parsed->json_text + "\n");
      } else {
        std::string listing;
        for (const auto& [path, text] : c.parsed->files) {
          (void)text;
          listing += path + "\n";
        }
        write_text(dir / ("payload-" + std::to_string(attempt) + ".files"), listing);
      }
    }
    return c;
  }

  // ---- deterministic prompt sections

  std::string render_file_list(const std::map<std::string, std::string>& files) const {
    std::string out;
    for (const auto& [path, text] : files) {
      out += path + " (" + std::to_string(count_loc(text)) + " loc)\n";
    }
    return out;
  }

  std::string render_facts() const {
    json modules = json::array();
    for (const auto& m : facts_.modules) {
      modules.push_back(
          {{"name", m.name}, {"functions", m.functions}, {"imports", m.imports}});
    }
    json edges = json::array();
    for (const auto& [from, to] : facts_.valid_edges) {
      edges.push_back(json::array({from, to}));
    }
    return json{{"modules", modules}, {"edges", edges}}.dump(2);
  }

  std::string render_cc_table() const {
    std::string out = "threshold: " + std::to_string(cfg_.cc_hotspot_threshold) + "\n";
    out += "hotspot candidates (rank, function, cc):\n";
    for (const auto& h : hotspot_candidates(facts_, cfg_.cc_hotspot_threshold)) {
      out += "  " + std::to_string(h.rank) + " " + h.function + " " +
             std::to_string(h.cc) + "\n";
    }
    out += "all functions (source order):\n";
    for (const auto& name : facts_.function_order) {
      out += "  " + name + " " +
             std::to_string(facts_.complexity.per_function.at(name)) + "\n";
    }
    return out;
  }

  std::vector<Attachment> file_attachments(const std::map<std::string, std::string>& files) const {
    std::vector<Attachment> atts;
    for (const auto& [path, text] : files) atts.push_back({path, text});
    return atts;
  }

  // ---- producer stages

  void produce_context(const std::string& feedback) {
    if (snap_.files.empty()) throw NoSources("snapshot has no files");
    PromptInputs in;
    in.context_budget_bytes = cfg_.context_budget_bytes;
    in.sections = {{"files", render_file_list(snap_.files)},
                   {"parser_facts", render_facts()}};
    in.attachments = file_attachments(snap_.files);
    Prompt p = render_prompt(AgentRole::Context, in);
    p.retry_feedback = feedback;
    Completion c = ask(p);
    state_.context = context_report_from_json(c.parsed->json_text);
  }

  void produce_analysis(const std::string& feedback) {
    PromptInputs in;
    in.context_budget_bytes = cfg_.context_budget_bytes;
    in.sections = {{"context_report", to_json(state_.context)},
                   {"cc_table", render_cc_table()}};
    Prompt p = render_prompt(AgentRole::Analysis, in);
    p.retry_feedback = feedback;
    Completion c = ask(p);
    state_.analysis = analysis_report_from_json(c.parsed->json_text);
    state_.analysis.module_metrics = facts_.complexity;
  }

  void produce_strategy(const std::string& feedback) {
    PromptInputs in;
    in.context_budget_bytes = cfg_.context_budget_bytes;
    in.sections = {{"analysis_report", to_json(state_.analysis)}};
    Prompt p = render_prompt(AgentRole::Strategy, in);
    p.retry_feedback = feedback;
    Completion c = ask(p);
    state_.plan = refactor_plan_from_json(c.parsed->json_text);
  }

  // ---- verifier consultation (advisory only)

  void consult_verifier(AgentRole role, VerifierVerdict& verdict) {
    PromptInputs in;
    in.context_budget_bytes = cfg_.context_budget_bytes;
    switch (role) {
      case AgentRole::ContextVerifier:
        in.sections = {{"context_report", to_json(state_.context)},
                       {"parser_facts", render_facts()}};
        break;
      case AgentRole::AnalysisVerifier:
        in.sections = {{"analysis_report", to_json(state_.analysis)},
                       {"cc_table", render_cc_table()}};
        break;
      case AgentRole::StrategyVerifier:
        in.sections = {{"plan", to_json(state_.plan)},
                       {"analysis_report", to_json(state_.analysis)}};
        break;
      default:
        return;
    }
    try {
      Completion c = ask(render_prompt(role, in));
      json doc = json::parse(c.parsed->json_text);
      if (doc.contains("findings")) {
        for (const auto& f : doc["findings"]) {
          if (f.is_string()) {
            verdict.findings.push_back({"note", "advisory: " + f.get<std::string>()});
          }
        }
      }
    } catch (const ReplayMiss&) {
      state_.log.push_back(to_string(role) + ": no recorded consultation; skipped");
    } catch (const BackendUnavailable&) {
      state_.log.push_back(to_string(role) + ": backend unavailable; skipped");
    } catch (const SchemaViolation&) {
      state_.log.push_back(to_string(role) + ": malformed consultation; skipped");
    }
  }

  // ---- gates

  bool gate(AgentRole producer, AgentRole verifier,
            const std::function<void(const std::string&)>& produce,
            const std::function<VerifierVerdict()>& verify) {
    std::string feedback;
    for (int attempt = 0;; ++attempt) {
      state_.retries_used[producer] = attempt;
      state_.current_stage = producer;
      produce(feedback);
      state_.current_stage = verifier;
      VerifierVerdict verdict = verify();
      consult_verifier(verifier, verdict);
      state_.last_verdict = verdict;
      write_text(stage_dir(verifier) / ("verdict-" + std::to_string(attempt + 1) + ".json"),
                 to_json(verdict) + "\n");
      if (verdict.accepted()) {
        state_.log.push_back(to_string(verifier) + ": accepted after " +
                             std::to_string(attempt) + " retries");
        return true;
      }
      if (attempt == cfg_.max_retries) {
        std::vector<std::string> msgs;
        for (const auto& f : verdict.findings) msgs.push_back(f.message);
        abort(to_string(verifier) + " rejected " + std::to_string(attempt + 1) +
              " attempts; retry budget exhausted. Last findings: " + join(msgs, "; "));
        return false;
      }
      feedback = verdict.feedback_for_retry;
      state_.log.push_back(to_string(verifier) + ": rejected attempt " +
                           std::to_string(attempt + 1));
    }
  }

  // ---- refactor stages

  std::string diff_summary(const std::map<std::string, std::string>& before,
                           const std::map<std::string, std::string>& after) const {
    int changed = 0, added = 0;
    for (const auto& [path, text] : after) {
      auto it = before.find(path);
      if (it == before.end()) {
        ++added;
      } else if (it->second != text) {
        ++changed;
      }
    }
    return std::to_string(changed) + " files changed, " + std::to_string(added) +
           " added";
  }

  CandidateSnapshot apply_files_stage(AgentRole role, const CandidateSnapshot& parent,
                                      const std::vector<std::string>& sections_failures) {
    // Shared by the refactor passes and the debug stage: role decides the
    // prompt; the returned envelope is checked against the candidate
    // contract with one retry.
    bool debug = role == AgentRole::Debug;
    std::vector<RefactorAction> actions =
        debug ? std::vector<RefactorAction>{}
              : state_.plan.subset(role == AgentRole::Refactor1);

    CandidateSnapshot out;
    out.provenance = to_string(role);
    if (!debug && actions.empty()) {
      out.files = parent.files;
      out.diff_summary = "no applicable actions; unchanged";
      state_.log.push_back(to_string(role) + ": no applicable actions");
      return out;
    }

    bool reorg = state_.plan.has_kind(ActionKind::ReorganizeModule);
    std::set<std::string> targeted;
    if (debug) {
      for (const auto& [path, text] : parent.files) {
        (void)text;
        targeted.insert(path);
      }
    } else {
      for (const auto& a : actions) {
        if (a.kind == ActionKind::ReorganizeModule) {
          auto it = facts_.module_file.find(a.target);
          if (it != facts_.module_file.end()) targeted.insert(it->second);
        } else {
          auto it = facts_.function_file.find(a.target);
          if (it != facts_.function_file.end()) targeted.insert(it->second);
        }
      }
    }

    std::string feedback;
    for (int attempt = 0; attempt < 2; ++attempt) {
      PromptInputs in;
      in.context_budget_bytes = cfg_.context_budget_bytes;
      if (debug) {
        in.sections = {{"failures", join(sections_failures, "\n")},
                       {"files", render_file_list(parent.files)}};
      } else {
        RefactorPlan stage_plan;
        stage_plan.actions = actions;
        in.sections = {{"plan", to_json(stage_plan)},
                       {"files", render_file_list(parent.files)}};
      }
      in.attachments = file_attachments(parent.files);
      Prompt p = render_prompt(role, in);
      p.retry_feedback = feedback;
      Completion c = ask(p);

      std::vector<std::string> violations;
      std::map<std::string, std::string> files = parent.files;
      for (const auto& [path, text] : c.parsed->files) {
        auto it = parent.files.find(path);
        if (it == parent.files.end()) {
          if (!reorg) {
            violations.push_back("new file " + path +
                                 " is not allowed without a ReorganizeModule action");
            continue;
          }
          files[path] = text;
        } else if (targeted.count(path) || reorg) {
          files[path] = text;
        } else if (text != it->second) {
          violations.push_back("file " + path +
                               " is not targeted by the plan but was modified");
        }
      }
      for (const auto& [path, text] : files) {
        try {
          parse_module(text, path);
        } catch (const Error& e) {
          violations.push_back(std::string("unparseable candidate file: ") + e.what());
        }
      }
      if (violations.empty()) {
        out.files = std::move(files);
        out.diff_summary = diff_summary(parent.files, out.files);
        state_.log.push_back(to_string(role) + ": " + out.diff_summary);
        return out;
      }
      feedback = "The previous candidate was rejected: " + join(violations, "; ") +
                 ". Resend corrected files.";
      state_.log.push_back(to_string(role) + ": candidate rejected (" +
                           join(violations, "; ") + ")");
    }
    throw UnparseableCandidate("candidate from " + to_string(role) +
                               " still invalid after one retry: " + feedback);
  }

  // ---- validation

  ValidationReport test_and_validate(const CandidateSnapshot& candidate, int round) {
    fs::path work = run_dir_ / "work";
    std::error_code ec;
    fs::remove_all(work, ec);
    for (const auto& [path, text] : candidate.files) {
      write_text(work / path, text);
    }

    ValidationReport r;
    try {
      r.compile = run_compile(work, runner_, cfg_.toolchain);
    } catch (const Error& e) {
      r.compile.success = false;
      r.tool_errors.push_back(std::string("compile: ") + e.what());
    }
    try {
      r.tests = run_tests(work, runner_, cfg_.toolchain);
      r.test_run_ok = true;
    } catch (const Error& e) {
      r.test_run_ok = false;
      r.tool_errors.push_back(std::string("tests: ") + e.what());
    }
    try {
      r.hlint = run_hlint(work, runner_, cfg_.toolchain);
    } catch (const Error& e) {
      r.tool_errors.push_back(std::string("hlint: ") + e.what());
    }
    try {
      r.profile = run_profile(work, runner_, cfg_.toolchain);
    } catch (const Error& e) {
      r.tool_errors.push_back(std::string("profile: ") + e.what());
    }
    r.passed = r.compile.success && r.test_run_ok && r.tests.failed == 0;
    write_text(stage_dir(AgentRole::TestValidate) /
                   ("validation-" + std::to_string(round) + ".json"),
               to_json(r) + "\n");
    state_.log.push_back("validation round " + std::to_string(round) + ": " +
                         (r.passed ? "pass" : "fail"));
    return r;
  }

  // ---- metrics

  MetricsRecord baseline_metrics() {
    fs::path dir = run_dir_ / "baseline";
    std::error_code ec;
    fs::remove_all(dir, ec);
    for (const auto& [path, text] : snap_.files) write_text(dir / path, text);

    MetricsRecord pre;
    pre.phase = Phase::Pre;
    pre.snapshot_id = snap_.id;
    pre.cc_total = facts_.complexity.total;
    ProfileStats stats = run_profile(dir, runner_, cfg_.toolchain);
    pre.secs = stats.total_time_secs;
    pre.ticks = stats.ticks;
    pre.alloc_bytes = stats.total_alloc_bytes;
    pre.hints = run_hlint(dir, runner_, cfg_.toolchain).hint_count;
    return pre;
  }

  long long candidate_cc_total() const {
    long long total = 0;
    for (const auto& [path, text] : state_.candidate.files) {
      total += total_complexity(parse_module(text, path)).total;
    }
    return total;
  }

  void write_final_snapshot() {
    fs::path final_dir = run_dir_ / "final";
    fs::path tmp = run_dir_ / "final.tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    for (const auto& [path, text] : state_.candidate.files) {
      write_text(tmp / path, text);
    }
    fs::remove_all(final_dir, ec);
    fs::rename(tmp, final_dir);
  }

  void write_report(PipelineOutcome& out) {
    json stages = json::array();
    for (int i = 0; i < kAgentRoleCount; ++i) {
      auto role = static_cast<AgentRole>(i);
      auto it = state_.retries_used.find(role);
      if (it == state_.retries_used.end() && !attempts_.count(role)) continue;
      stages.push_back({{"stage", to_string(role)},
                        {"retries", it == state_.retries_used.end() ? 0 : it->second}});
    }
    json j = {
        {"schema_version", 1},
        {"run_id", run_id_},
        {"snapshot_id", snap_.id},
        {"snapshot_hash", snap_.content_hash},
        {"outcome", to_string(state_.outcome)},
        {"abort_reason", state_.abort_reason},
        {"aborted_stage", state_.outcome == RunOutcome::Aborted
                              ? json(to_string(state_.current_stage))
                              : json(nullptr)},
        {"stages", stages},
        {"debug_iterations", state_.debug_iterations},
        {"gateway_completions", out.gateway_completions},
        {"pre",
         {{"cc_total", out.pre.cc_total},
          {"secs", out.pre.secs},
          {"ticks", out.pre.ticks},
          {"alloc_bytes", out.pre.alloc_bytes},
          {"hints", out.pre.hints}}},
    };
    if (out.post) {
      j["post"] = {{"cc_total", out.post->cc_total},
                   {"secs", out.post->secs},
                   {"ticks", out.post->ticks},
                   {"alloc_bytes", out.post->alloc_bytes},
                   {"hints", out.post->hints}};
    } else {
      j["post"] = nullptr;
    }
    if (out.comparison) {
      json rows = json::array();
      for (const auto& row : out.comparison->rows) {
        rows.push_back({{"label", row.label},
                        {"pre", row.pre},
                        {"post", row.post},
                        {"percent_change", row.percent_change},
                        {"direction", to_string(row.direction)},
                        {"note", row.note}});
      }
      j["comparison"] = rows;
    } else {
      j["comparison"] = nullptr;
    }
    write_text(run_dir_ / "report.json", j.dump(2) + "\n");

    ReportMeta meta;
    meta.run_id = run_id_;
    meta.outcome = to_string(state_.outcome);
    if (!state_.abort_reason.empty()) meta.notes.push_back(state_.abort_reason);
    meta.notes.push_back("debug iterations: " + std::to_string(state_.debug_iterations));
    std::string md;
    if (out.comparison) {
      md = render_report_text(*out.comparison, meta);
    } else {
      md = "# Refactor run: " + snap_.id + "\n\nOutcome: " + to_string(state_.outcome) +
           "\n";
      if (!state_.abort_reason.empty()) md += "\nReason: " + state_.abort_reason + "\n";
    }
    write_text(run_dir_ / "report.md", md);
  }
};

PipelineOutcome Engine::run() {
  if (cfg_.max_retries < 1 || cfg_.max_debug_loops < 1 || cfg_.cc_hotspot_threshold < 1) {
    throw ConfigError("pipeline bounds must be at least 1");
  }

  run_id_ = cfg_.run_id.empty() ? snap_.content_hash.substr(0, 12) : cfg_.run_id;
  run_dir_ = cfg_.artifact_dir / run_id_;
  fs::create_directories(run_dir_);
  gw_.set_run_id(run_id_);
  int completions_before = gw_.completions_made();

  PipelineOutcome out;
  out.run_id = run_id_;
  out.run_dir = run_dir_;

  MetricsStore store(run_dir_ / "store");

  try {
    facts_ = compute_facts(snap_);

    out.pre = baseline_metrics();
    store.write_manifest(snap_);
    store.record(out.pre);
    state_.log.push_back("baseline recorded: CC=" + std::to_string(out.pre.cc_total) +
                         ", ticks=" + std::to_string(out.pre.ticks));

    bool ok =
        gate(AgentRole::Context, AgentRole::ContextVerifier,
             [&](const std::string& f) { produce_context(f); },
             [&] { return verify_context(state_.context, facts_); }) &&
        gate(AgentRole::Analysis, AgentRole::AnalysisVerifier,
             [&](const std::string& f) { produce_analysis(f); },
             [&] { return verify_analysis(state_.analysis, facts_, cfg_.cc_hotspot_threshold); }) &&
        gate(AgentRole::Strategy, AgentRole::StrategyVerifier,
             [&](const std::string& f) { produce_strategy(f); },
             [&] { return verify_strategy(state_.plan, state_.analysis, facts_); });

    if (ok && cfg_.dry_run) {
      state_.outcome = RunOutcome::Succeeded;
      state_.log.push_back("dry run: stopped after the strategy gate");
    } else if (ok) {
      state_.current_stage = AgentRole::Refactor1;
      CandidateSnapshot base;
      base.files = snap_.files;
      base.provenance = "baseline";
      state_.candidate = apply_files_stage(AgentRole::Refactor1, base, {});
      state_.current_stage = AgentRole::Refactor2;
      state_.candidate = apply_files_stage(AgentRole::Refactor2, state_.candidate, {});

      state_.current_stage = AgentRole::TestValidate;
      int round = 1;
      state_.validation = test_and_validate(state_.candidate, round);
      while (!state_.validation.passed && state_.outcome == RunOutcome::Running) {
        if (state_.debug_iterations >= cfg_.max_debug_loops) {
          state_.current_stage = AgentRole::Debug;
          abort("debug budget exhausted after " +
                std::to_string(state_.debug_iterations) +
                " iterations; validation still failing: " +
                join(state_.validation.failure_summary(), "; "));
          break;
        }
        auto failures = state_.validation.failure_summary();
        if (failures.empty()) {
          throw Error("debug stage invoked with no recorded failures");
        }
        state_.current_stage = AgentRole::Debug;
        state_.candidate = apply_files_stage(AgentRole::Debug, state_.candidate, failures);
        ++state_.debug_iterations;
        state_.current_stage = AgentRole::TestValidate;
        state_.validation = test_and_validate(state_.candidate, ++round);
      }

      if (state_.outcome == RunOutcome::Running) {
        MetricsRecord post;
        post.phase = Phase::Post;
        post.snapshot_id = snap_.id;
        post.cc_total = candidate_cc_total();
        if (state_.validation.profile) {
          post.secs = state_.validation.profile->total_time_secs;
          post.ticks = state_.validation.profile->ticks;
          post.alloc_bytes = state_.validation.profile->total_alloc_bytes;
        }
        if (state_.validation.hlint) post.hints = state_.validation.hlint->hint_count;

        if (cfg_.enforce_non_regression && post.cc_total > out.pre.cc_total) {
          abort("post-refactor total complexity " + std::to_string(post.cc_total) +
                " exceeds the baseline " + std::to_string(out.pre.cc_total) +
                "; refusing to report success");
        } else {
          store.record(post);
          out.post = post;
          out.comparison = build_comparison(out.pre, post);
          write_final_snapshot();
          state_.outcome = RunOutcome::Succeeded;
        }
      }
    }
  } catch (const Error& e) {
    if (state_.outcome == RunOutcome::Running) abort(e.what());
  }

  out.gateway_completions = gw_.completions_made() - completions_before;
  out.state = state_;
  write_report(out);
  return out;
}

}  // namespace

PipelineOutcome run_pipeline(const CodebaseSnapshot& snapshot, Gateway& gateway,
                             CommandRunner& runner, const PipelineConfig& config) {
  Engine engine(snapshot, gateway, runner, config);
  return engine.run();
}

}  // namespace rswarm
