#pragma once

#include <map>
#include <string>

#include "rswarm/ast.hpp"

namespace rswarm {

struct ComplexityScore {
  std::map<std::string, int> per_function;
  int total = 0;
};

struct FeatureCount {
  int higher_order_functions = 0;
  int type_classes = 0;
  int monadic_compositions = 0;
  int f() const { return higher_order_functions + type_classes + monadic_compositions; }
};

enum class SizeClass { BelowRange, Small, Medium, Large };

std::string to_string(SizeClass s);

// Counting route for cyclomatic complexity, independent of the CFG:
// 1 + decision points. Each if adds 1, a case with k alternatives adds k-1,
// a guard chain with g guards adds g-1 (`otherwise` is a guard like any
// other), an m-clause function adds m-1, each && or || adds 1, and every
// list comprehension generator or filter qualifier adds 1. Local
// definitions and lambdas count toward their enclosing function.
int decision_point_cc(const FunctionDef& fn);

// Per-function CC (via the control-flow graph) plus the module total.
ComplexityScore total_complexity(const HsModule& module);

FeatureCount feature_count(const HsModule& module);

// small [100, 500), medium [500, 2000), large >= 2000; below 100 is out of
// range for the size taxonomy rather than "small".
SizeClass classify_size(int loc);

}  // namespace rswarm
