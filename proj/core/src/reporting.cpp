#include "rswarm/reporting.hpp"

#include <cmath>
#include <cstdio>

#include "nlohmann/json.hpp"

#include "rswarm/errors.hpp"

namespace rswarm {

using nlohmann::json;

std::string to_string(Direction direction) {
  switch (direction) {
    case Direction::Improved: return "Improved";
    case Direction::Regressed: return "Regressed";
    case Direction::Unchanged: return "Unchanged";
  }
  return "Unchanged";
}

namespace {

Direction direction_from_string(const std::string& s) {
  if (s == "Improved") return Direction::Improved;
  if (s == "Regressed") return Direction::Regressed;
  return Direction::Unchanged;
}

double round2(double v) {
  return static_cast<double>(std::llround(v * 100.0)) / 100.0;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  return fmt2(v);
}

ComparisonRow make_row(std::string label, double pre, double post, std::string note = "") {
  ComparisonRow row;
  row.label = std::move(label);
  row.pre = pre;
  row.post = post;
  row.note = std::move(note);
  if (pre == 0.0) {
    row.percent_change = 0.0;
    row.direction = Direction::Unchanged;
    if (!row.note.empty()) row.note += "; ";
    row.note += "pre value is zero, percent change not computable";
    return row;
  }
  row.percent_change = percent_reduction(pre, post);
  if (post < pre) {
    row.direction = Direction::Improved;
  } else if (post > pre) {
    row.direction = Direction::Regressed;
  } else {
    row.direction = Direction::Unchanged;
  }
  return row;
}

}  // namespace

double percent_reduction(double pre, double post) {
  if (pre == 0.0) {
    throw DivisionByZeroPre("cannot compute percent change from a zero pre value");
  }
  return round2((pre - post) / pre * 100.0);
}

ComparisonTable build_comparison(const MetricsRecord& pre, const MetricsRecord& post) {
  if (pre.snapshot_id != post.snapshot_id) {
    throw SnapshotMismatch("comparison spans different snapshots: " + pre.snapshot_id +
                           " vs " + post.snapshot_id);
  }
  if (pre.phase != Phase::Pre || post.phase != Phase::Post) {
    throw SnapshotMismatch("comparison needs one pre and one post record");
  }
  ComparisonTable table;
  table.snapshot_id = pre.snapshot_id;
  table.rows.push_back(make_row("Cyclomatic Complexity (CC)",
                                static_cast<double>(pre.cc_total),
                                static_cast<double>(post.cc_total)));
  table.rows.push_back(make_row("Runtime Efficiency", static_cast<double>(pre.ticks),
                                static_cast<double>(post.ticks),
                                fmt2(pre.secs) + " secs -> " + fmt2(post.secs) +
                                    " secs; percent computed over ticks"));
  table.rows.push_back(make_row("Memory Allocation",
                                static_cast<double>(pre.alloc_bytes),
                                static_cast<double>(post.alloc_bytes)));
  table.rows.push_back(make_row("HLint Comparison", static_cast<double>(pre.hints),
                                static_cast<double>(post.hints)));
  return table;
}

std::string render_report_text(const ComparisonTable& table, const ReportMeta& meta) {
  std::string out;
  out += "# Refactor comparison: " + table.snapshot_id + "\n\n";
  if (!meta.run_id.empty()) out += "Run: " + meta.run_id + "\n";
  if (!meta.outcome.empty()) out += "Outcome: " + meta.outcome + "\n";
  out += "\n";
  out += "| Metric | Pre | Post | Change | Direction |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    out += "| " + row.label + " | " + fmt_value(row.pre) + " | " + fmt_value(row.post) +
           " | " + fmt2(row.percent_change) + "% | " + to_string(row.direction) + " |\n";
  }
  bool any_note = false;
  for (const auto& row : table.rows) {
    if (row.note.empty()) continue;
    if (!any_note) {
      out += "\n";
      any_note = true;
    }
    out += "- " + row.label + ": " + row.note + "\n";
  }
  for (const auto& note : meta.notes) out += "- " + note + "\n";
  return out;
}

std::string render_report_json(const ComparisonTable& table, const ReportMeta& meta) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back({
        {"label", row.label},
        {"pre", row.pre},
        {"post", row.post},
        {"percent_change", row.percent_change},
        {"direction", to_string(row.direction)},
        {"note", row.note},
    });
  }
  json j = {
      {"schema_version", 1},
      {"snapshot_id", table.snapshot_id},
      {"run_id", meta.run_id},
      {"outcome", meta.outcome},
      {"notes", meta.notes},
      {"rows", rows},
  };
  return j.dump(2) + "\n";
}

ComparisonTable parse_report_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("unparseable report: ") + e.what());
  }
  ComparisonTable table;
  try {
    table.snapshot_id = j.at("snapshot_id").get<std::string>();
    for (const auto& r : j.at("rows")) {
      ComparisonRow row;
      row.label = r.at("label").get<std::string>();
      row.pre = r.at("pre").get<double>();
      row.post = r.at("post").get<double>();
      row.percent_change = r.at("percent_change").get<double>();
      row.direction = direction_from_string(r.at("direction").get<std::string>());
      row.note = r.at("note").get<std::string>();
      table.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
  return table;
}

}  // namespace rswarm
