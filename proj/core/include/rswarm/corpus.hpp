#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rswarm/command_runner.hpp"
#include "rswarm/metrics.hpp"
#include "rswarm/toolchain.hpp"

namespace rswarm {

/// Immutable, content-hashed capture of a codebase's files.
struct CodebaseSnapshot {
  std::string id;
  std::filesystem::path root;
  std::map<std::string, std::string> files;  // relative path -> source text
  int loc = 0;
  std::string content_hash;
};

enum class Phase { Pre, Post };
std::string to_string(Phase phase);

struct SelectionCriteria {
  int min_stars = 50;
  int max_size_kb = 2000;
  std::string language = "Haskell";
  SizeClass required_class = SizeClass::Medium;
  int min_feature_count = 3;
};

struct SelectionVerdict {
  bool accepted = false;
  std::vector<std::string> reasons;
};

struct MetricsRecord {
  Phase phase = Phase::Pre;
  std::string snapshot_id;
  long long cc_total = 0;
  double secs = 0.0;
  long long ticks = 0;
  long long alloc_bytes = 0;
  long long hints = 0;
};

/// Digest over the sorted (path, bytes) pairs of a file map.
std::string snapshot_digest(const std::map<std::string, std::string>& files);

std::vector<std::string> default_excluded_dirs();

/// Loads every .hs file under root, deterministically ordered. Hidden and
/// build directories are pruned; files using the C preprocessor are skipped
/// with a warning (the parser does not handle them).
CodebaseSnapshot load_snapshot(
    const std::filesystem::path& root,
    const std::vector<std::string>& excluded_dirs = default_excluded_dirs(),
    std::vector<std::string>* warnings = nullptr);

/// Renders the repository search query for the selection phase.
std::string build_search_filter(const SelectionCriteria& criteria);

/// Checks size class, feature count, and that a baseline lint run parses
/// cleanly. Tool failures become reasons, never exceptions.
SelectionVerdict evaluate_candidate(const CodebaseSnapshot& snapshot,
                                    const SelectionCriteria& criteria,
                                    CommandRunner& runner,
                                    const ToolchainConfig& tool_config = {});

/// One structured file per (snapshot id, phase) under <root>/metrics, plus
/// snapshot manifests under <root>/snapshots. Re-recording a phase for the
/// same snapshot id is an error.
class MetricsStore {
 public:
  explicit MetricsStore(std::filesystem::path store_root);

  void record(const MetricsRecord& record);
  std::optional<MetricsRecord> load(const std::string& snapshot_id, Phase phase) const;
  std::filesystem::path path_for(const std::string& snapshot_id, Phase phase) const;

  void write_manifest(const CodebaseSnapshot& snapshot) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace rswarm
