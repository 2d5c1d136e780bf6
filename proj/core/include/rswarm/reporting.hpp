#pragma once

#include <string>
#include <vector>

#include "rswarm/corpus.hpp"

namespace rswarm {

enum class Direction { Improved, Regressed, Unchanged };
std::string to_string(Direction direction);

struct ComparisonRow {
  std::string label;
  double pre = 0.0;
  double post = 0.0;
  double percent_change = 0.0;  // positive = reduction (all metrics lower-is-better)
  Direction direction = Direction::Unchanged;
  std::string note;

  bool operator==(const ComparisonRow&) const = default;
};

struct ComparisonTable {
  std::string snapshot_id;
  std::vector<ComparisonRow> rows;

  bool operator==(const ComparisonTable&) const = default;
};

/// (pre - post) / pre * 100, rounded to two decimals (half away from zero).
/// Throws DivisionByZeroPre when pre is zero.
double percent_reduction(double pre, double post);

/// Builds the four-row pre/post comparison. Runtime percent uses ticks;
/// a zero pre value yields an Unchanged row with a note instead of an error.
ComparisonTable build_comparison(const MetricsRecord& pre, const MetricsRecord& post);

struct ReportMeta {
  std::string run_id;
  std::string outcome;
  std::vector<std::string> notes;
};

std::string render_report_text(const ComparisonTable& table, const ReportMeta& meta);
std::string render_report_json(const ComparisonTable& table, const ReportMeta& meta);

/// Inverse of render_report_json; round-trips exactly.
ComparisonTable parse_report_json(const std::string& text);

}  // namespace rswarm
