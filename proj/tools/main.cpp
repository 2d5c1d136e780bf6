#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "rswarm/config.hpp"
#include "rswarm/errors.hpp"
#include "rswarm/metrics.hpp"
#include "rswarm/parser.hpp"
#include "rswarm/pipeline.hpp"

using namespace rswarm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitVerdict = 3;
constexpr int kExitAborted = 4;

CliConfig read_config(const std::string& path, bool explicit_path) {
  if (!explicit_path && !fs::exists(path)) return CliConfig{};
  return load_cli_config(path);
}

std::unique_ptr<CommandRunner> make_runner(const CliConfig& cfg) {
  if (!cfg.tool_replay_file.empty()) {
    return std::make_unique<ReplayRunner>(ReplayRunner::from_file(cfg.tool_replay_file));
  }
  return std::make_unique<SubprocessRunner>();
}

SizeClass size_class_from_flag(const std::string& s) {
  if (s == "below-range") return SizeClass::BelowRange;
  if (s == "small") return SizeClass::Small;
  if (s == "medium") return SizeClass::Medium;
  if (s == "large") return SizeClass::Large;
  throw ConfigError("--required-class expects below-range/small/medium/large, got \"" + s +
                    "\"");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_analyze(const CliConfig& cfg, const std::string& path, bool with_tools,
                bool as_json) {
  std::vector<std::string> warnings;
  CodebaseSnapshot snap = load_snapshot(path, default_excluded_dirs(), &warnings);
  print_warnings(warnings);

  SnapshotFacts facts = compute_facts(snap);
  FeatureCount features;
  for (const auto& [file, text] : snap.files) {
    FeatureCount fc = feature_count(parse_module(text, file));
    features.higher_order_functions += fc.higher_order_functions;
    features.type_classes += fc.type_classes;
    features.monadic_compositions += fc.monadic_compositions;
  }
  SizeClass size = classify_size(snap.loc);

  std::optional<HlintReport> hlint;
  std::optional<ProfileStats> profile;
  std::vector<std::string> tool_errors;
  if (with_tools) {
    auto runner = make_runner(cfg);
    try {
      hlint = run_hlint(snap.root, *runner, cfg.toolchain);
    } catch (const Error& e) {
      tool_errors.push_back(std::string("hlint: ") + e.what());
    }
    try {
      profile = run_profile(snap.root, *runner, cfg.toolchain);
    } catch (const Error& e) {
      tool_errors.push_back(std::string("profile: ") + e.what());
    }
  }

  if (as_json) {
    json functions = json::array();
    for (const auto& name : facts.function_order) {
      functions.push_back({{"name", name},
                           {"cc", facts.complexity.per_function.at(name)}});
    }
    json j = {
        {"snapshot_id", snap.id},
        {"content_hash", snap.content_hash},
        {"files", snap.files.size()},
        {"loc", snap.loc},
        {"size_class", to_string(size)},
        {"features",
         {{"higher_order_functions", features.higher_order_functions},
          {"type_classes", features.type_classes},
          {"monadic_compositions", features.monadic_compositions},
          {"f", features.f()}}},
        {"cc_total", facts.complexity.total},
        {"functions", functions},
    };
    if (hlint) j["hlint_hints"] = hlint->hint_count;
    if (profile) {
      j["profile"] = {{"total_time_secs", profile->total_time_secs},
                      {"ticks", profile->ticks},
                      {"tick_interval_us", profile->tick_interval_us},
                      {"total_alloc_bytes", profile->total_alloc_bytes}};
    }
    if (!tool_errors.empty()) j["tool_errors"] = tool_errors;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  std::cout << "snapshot " << snap.id << " (" << snap.content_hash.substr(0, 12) << ")\n"
            << "files: " << snap.files.size() << "  loc: " << snap.loc
            << "  size class: " << to_string(size) << "\n"
            << "features: F=" << features.f() << " (higher-order "
            << features.higher_order_functions << ", type classes " << features.type_classes
            << ", monadic " << features.monadic_compositions << ")\n"
            << "cyclomatic complexity: total " << facts.complexity.total << "\n";
  for (const auto& name : facts.function_order) {
    std::printf("  %4d  %s\n", facts.complexity.per_function.at(name), name.c_str());
  }
  if (hlint) std::cout << "hlint: " << hlint->hint_count << " hints\n";
  if (profile) {
    std::cout << "profile: " << profile->total_time_secs << " secs, " << profile->ticks
              << " ticks @ " << profile->tick_interval_us << " us, "
              << profile->total_alloc_bytes << " bytes allocated\n";
  }
  for (const auto& e : tool_errors) std::cerr << "tool error: " << e << "\n";
  return kExitOk;
}

int cmd_select(const CliConfig& cfg, const std::string& path) {
  std::vector<std::string> warnings;
  CodebaseSnapshot snap = load_snapshot(path, default_excluded_dirs(), &warnings);
  print_warnings(warnings);

  std::cout << "search filter: " << build_search_filter(cfg.selection) << "\n";

  auto runner = make_runner(cfg);
  SelectionVerdict verdict = evaluate_candidate(snap, cfg.selection, *runner, cfg.toolchain);
  std::cout << "candidate " << snap.id << ": "
            << (verdict.accepted ? "accepted" : "rejected") << "\n";
  for (const auto& r : verdict.reasons) std::cout << "  - " << r << "\n";
  return verdict.accepted ? kExitOk : kExitVerdict;
}

int cmd_refactor(const CliConfig& cfg_in, const std::string& path,
                 const std::string& replay_file, bool dry_run, const std::string& run_id) {
  CliConfig cfg = cfg_in;
  cfg.pipeline.toolchain = cfg.toolchain;
  cfg.pipeline.dry_run = dry_run;
  if (!run_id.empty()) cfg.pipeline.run_id = run_id;

  std::vector<std::string> warnings;
  CodebaseSnapshot snap = load_snapshot(path, default_excluded_dirs(), &warnings);
  print_warnings(warnings);

  std::unique_ptr<Backend> backend;
  GatewayConfig gwcfg;
  if (!replay_file.empty()) {
    // replay never touches the network: the recorded transcript is the
    // only completion source
    backend = std::make_unique<ReplayBackend>(Transcript::load(replay_file));
    gwcfg.record = false;
  } else {
    backend = std::make_unique<LiveBackend>(cfg.backend);
  }
  Gateway gateway(std::move(backend), gwcfg);
  auto runner = make_runner(cfg);

  PipelineOutcome out = run_pipeline(snap, gateway, *runner, cfg.pipeline);

  if (gwcfg.record) {
    gateway.transcript().save(out.run_dir / "transcript.jsonl");
  }

  std::cout << "run " << out.run_id << ": " << to_string(out.state.outcome) << "\n";
  if (dry_run && out.succeeded()) {
    std::cout << "plan:\n";
    int i = 0;
    for (const auto& a : out.state.plan.actions) {
      std::cout << "  " << ++i << ". " << to_string(a.kind) << " " << a.target;
      if (!a.description.empty()) std::cout << ": " << a.description;
      std::cout << "\n";
    }
  }
  std::cout << "report: " << (out.run_dir / "report.json").string() << "\n";
  if (!out.succeeded()) {
    std::cerr << "aborted at " << to_string(out.state.current_stage) << ": "
              << out.state.abort_reason << "\n";
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_report(const CliConfig& cfg, const std::string& run_id, bool as_json) {
  fs::path run_dir = cfg.pipeline.artifact_dir / run_id;
  fs::path report_file = run_dir / "report.json";
  std::ifstream in(report_file, std::ios::binary);
  if (!in.good()) {
    throw IoError("no report for run " + run_id + " (" + report_file.string() + ")");
  }
  json run_report = json::parse(in, nullptr, false);
  if (run_report.is_discarded()) {
    throw UnparseableOutput("corrupt report: " + report_file.string());
  }
  std::string snapshot_id = run_report.value("snapshot_id", "");

  MetricsStore store(run_dir / "store");
  auto pre = store.load(snapshot_id, Phase::Pre);
  auto post = store.load(snapshot_id, Phase::Post);
  if (!pre || !post) {
    std::cerr << "run " << run_id << " is incomplete: "
              << (!pre ? "pre" : "post") << "-phase metrics missing\n";
    return kExitVerdict;
  }

  ComparisonTable table = build_comparison(*pre, *post);
  ReportMeta meta;
  meta.run_id = run_id;
  meta.outcome = run_report.value("outcome", "");
  if (as_json) {
    std::cout << render_report_json(table, meta);
  } else {
    std::cout << render_report_text(table, meta);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refactor-swarm: agent-driven Haskell refactoring with verified gates"};
  app.require_subcommand(1);
  // lets --config appear after the subcommand as well as before it
  app.fallthrough();

  std::string config_path = "refactor-swarm.toml";
  auto* config_opt =
      app.add_option("-c,--config", config_path,
                     "Configuration file; missing default file means built-in defaults")
          ->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Print complexity and feature metrics");
  std::string analyze_path;
  bool analyze_tools = false;
  bool analyze_json = false;
  analyze->add_option("path", analyze_path, "Codebase directory")->required();
  analyze->add_flag("--with-tools", analyze_tools, "Also run the lint and profile commands");
  analyze->add_flag("--json", analyze_json, "Machine-readable output");

  auto* select = app.add_subcommand("select", "Judge a candidate against selection criteria");
  std::string select_path;
  int min_stars = 0;
  int max_size_kb = 0;
  int min_features = 0;
  std::string language;
  std::string required_class;
  select->add_option("path", select_path, "Codebase directory")->required();
  auto* stars_opt = select->add_option("--min-stars", min_stars, "Minimum star count (default 50)");
  auto* size_opt = select->add_option("--max-size-kb", max_size_kb, "Maximum size in KB (default 2000)");
  auto* lang_opt = select->add_option("--language", language, "Language filter (default Haskell)");
  auto* class_opt = select->add_option("--required-class", required_class,
                                       "Required size class (default medium)");
  auto* features_opt =
      select->add_option("--min-features", min_features, "Minimum feature count F (default 3)");

  auto* refactor = app.add_subcommand("refactor", "Run the agent pipeline on a codebase");
  std::string refactor_path;
  std::string replay_file;
  std::string run_id;
  bool dry_run = false;
  refactor->add_option("path", refactor_path, "Codebase directory")->required();
  refactor->add_option("--replay", replay_file,
                       "Replay a recorded transcript instead of calling the model API");
  refactor->add_flag("--dry-run", dry_run, "Stop after the strategy verifier; write no code");
  refactor->add_option("--run-id", run_id, "Artifact directory name (default: content hash)");

  auto* report = app.add_subcommand("report", "Re-render the comparison for a finished run");
  std::string report_run;
  bool report_json = false;
  report->add_option("run_id", report_run, "Run identifier under the artifact directory")
      ->required();
  report->add_flag("--json", report_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    CliConfig cfg = read_config(config_path, config_opt->count() > 0);
    if (*analyze) return cmd_analyze(cfg, analyze_path, analyze_tools, analyze_json);
    if (*select) {
      if (stars_opt->count()) cfg.selection.min_stars = min_stars;
      if (size_opt->count()) cfg.selection.max_size_kb = max_size_kb;
      if (lang_opt->count()) cfg.selection.language = language;
      if (class_opt->count()) cfg.selection.required_class = size_class_from_flag(required_class);
      if (features_opt->count()) cfg.selection.min_feature_count = min_features;
      return cmd_select(cfg, select_path);
    }
    if (*refactor) return cmd_refactor(cfg, refactor_path, replay_file, dry_run, run_id);
    if (*report) return cmd_report(cfg, report_run, report_json);
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NoSources& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
