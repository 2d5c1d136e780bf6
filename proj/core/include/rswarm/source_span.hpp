#pragma once

#include <string>

namespace rswarm {

/// Half-open region of a source file, 1-based lines and columns.
/// Columns count bytes; tabs advance to the next multiple of 8.
struct SourceSpan {
  std::string file;
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;

  bool contains(const SourceSpan& other) const {
    auto le = [](int l1, int c1, int l2, int c2) {
      return l1 < l2 || (l1 == l2 && c1 <= c2);
    };
    return le(start_line, start_col, other.start_line, other.start_col) &&
           le(other.end_line, other.end_col, end_line, end_col);
  }

  std::string to_string() const {
    return file + ":" + std::to_string(start_line) + ":" + std::to_string(start_col);
  }
};

}  // namespace rswarm
