#include "rswarm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

#include "rswarm/errors.hpp"
#include "rswarm/hash.hpp"
#include "rswarm/parser.hpp"
#include "rswarm/token.hpp"

namespace rswarm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Phase phase) {
  return phase == Phase::Pre ? "pre" : "post";
}

std::string snapshot_digest(const std::map<std::string, std::string>& files) {
  std::string blob;
  for (const auto& [path, text] : files) {
    blob += path;
    blob += '\x00';
    blob += text;
    blob += '\x01';
  }
  return content_hash(blob);
}

std::vector<std::string> default_excluded_dirs() {
  return {"dist", "dist-newstyle", ".stack-work", "build", "_build", "out"};
}

CodebaseSnapshot load_snapshot(const fs::path& root,
                               const std::vector<std::string>& excluded_dirs,
                               std::vector<std::string>* warnings) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("snapshot root is not a directory: " + root.string());
  }

  auto excluded = [&](const fs::path& dir) {
    std::string name = dir.filename().string();
    if (!name.empty() && name[0] == '.') return true;
    return std::find(excluded_dirs.begin(), excluded_dirs.end(), name) !=
           excluded_dirs.end();
  };

  CodebaseSnapshot snap;
  snap.root = root;
  snap.id = root.filename().string();
  if (snap.id.empty()) snap.id = "snapshot";

  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied);
  for (auto end = fs::recursive_directory_iterator(); it != end; ++it) {
    if (it->is_directory()) {
      if (excluded(it->path())) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file() || it->path().extension() != ".hs") continue;
    std::ifstream in(it->path(), std::ios::binary);
    if (!in) throw IoError("cannot read " + it->path().string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::string rel = fs::relative(it->path(), root).generic_string();
    if (uses_cpp(text)) {
      if (warnings) {
        warnings->push_back("skipping " + rel + ": uses the C preprocessor");
      }
      continue;
    }
    snap.files[rel] = std::move(text);
  }

  if (snap.files.empty()) {
    throw NoSources("no Haskell sources under " + root.string());
  }
  for (const auto& [path, text] : snap.files) {
    (void)path;
    snap.loc += count_loc(text);
  }
  snap.content_hash = snapshot_digest(snap.files);
  return snap;
}

std::string build_search_filter(const SelectionCriteria& criteria) {
  return "language:" + criteria.language + " stars:>" + std::to_string(criteria.min_stars) +
         " size:<" + std::to_string(criteria.max_size_kb);
}

SelectionVerdict evaluate_candidate(const CodebaseSnapshot& snapshot,
                                    const SelectionCriteria& criteria,
                                    CommandRunner& runner,
                                    const ToolchainConfig& tool_config) {
  SelectionVerdict verdict;
  bool ok = true;

  SizeClass cls = classify_size(snapshot.loc);
  if (cls == criteria.required_class) {
    verdict.reasons.push_back("size: " + std::to_string(snapshot.loc) + " LOC is " +
                              to_string(cls));
  } else {
    ok = false;
    verdict.reasons.push_back("size: " + std::to_string(snapshot.loc) + " LOC is " +
                              to_string(cls) + ", required " +
                              to_string(criteria.required_class));
  }

  int f = 0;
  std::vector<std::string> parse_failures;
  for (const auto& [path, text] : snapshot.files) {
    try {
      f += feature_count(parse_module(text, path)).f();
    } catch (const Error& e) {
      parse_failures.push_back(path);
    }
  }
  if (!parse_failures.empty()) {
    ok = false;
    std::string joined;
    for (const auto& p : parse_failures) joined += (joined.empty() ? "" : ", ") + p;
    verdict.reasons.push_back("parse: failed for " + joined);
  }
  if (f >= criteria.min_feature_count) {
    verdict.reasons.push_back("features: F=" + std::to_string(f) + " meets threshold " +
                              std::to_string(criteria.min_feature_count));
  } else {
    ok = false;
    verdict.reasons.push_back("features: F=" + std::to_string(f) + " below threshold " +
                              std::to_string(criteria.min_feature_count));
  }

  try {
    HlintReport lint = run_hlint(snapshot.root, runner, tool_config);
    verdict.reasons.push_back("lint baseline: " + std::to_string(lint.hint_count) +
                              " hints");
  } catch (const Error& e) {
    ok = false;
    verdict.reasons.push_back(std::string("lint baseline failed: ") + e.what());
  }

  verdict.accepted = ok;
  return verdict;
}

// ---------------------------------------------------------------------------
// MetricsStore

MetricsStore::MetricsStore(fs::path store_root) : root_(std::move(store_root)) {}

fs::path MetricsStore::path_for(const std::string& snapshot_id, Phase phase) const {
  return root_ / "metrics" / (snapshot_id + "-" + to_string(phase) + ".json");
}

void MetricsStore::record(const MetricsRecord& record) {
  fs::path file = path_for(record.snapshot_id, record.phase);
  if (fs::exists(file)) {
    throw DuplicatePhase("metrics for snapshot " + record.snapshot_id + " phase " +
                         to_string(record.phase) + " already recorded");
  }
  fs::create_directories(file.parent_path());
  json j = {
      {"snapshot_id", record.snapshot_id},
      {"phase", to_string(record.phase)},
      {"cc_total", record.cc_total},
      {"secs", record.secs},
      {"ticks", record.ticks},
      {"alloc_bytes", record.alloc_bytes},
      {"hints", record.hints},
  };
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

std::optional<MetricsRecord> MetricsStore::load(const std::string& snapshot_id,
                                                Phase phase) const {
  fs::path file = path_for(snapshot_id, phase);
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw IoError("corrupt metrics file " + file.string() + ": " + e.what());
  }
  MetricsRecord r;
  r.snapshot_id = j.at("snapshot_id").get<std::string>();
  r.phase = j.at("phase").get<std::string>() == "post" ? Phase::Post : Phase::Pre;
  r.cc_total = j.at("cc_total").get<long long>();
  r.secs = j.at("secs").get<double>();
  r.ticks = j.at("ticks").get<long long>();
  r.alloc_bytes = j.at("alloc_bytes").get<long long>();
  r.hints = j.at("hints").get<long long>();
  return r;
}

void MetricsStore::write_manifest(const CodebaseSnapshot& snapshot) const {
  fs::path file = root_ / "snapshots" / (snapshot.id + ".json");
  fs::create_directories(file.parent_path());
  json paths = json::array();
  for (const auto& [path, text] : snapshot.files) {
    (void)text;
    paths.push_back(path);
  }
  json j = {
      {"id", snapshot.id},
      {"root", snapshot.root.generic_string()},
      {"content_hash", snapshot.content_hash},
      {"loc", snapshot.loc},
      {"files", paths},
  };
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

}  // namespace rswarm
