#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rswarm/ast.hpp"
#include "rswarm/token.hpp"

namespace rswarm {

/// Parses a module in the supported Haskell subset: module header, imports,
/// function equations (multiple clauses, guards, where), type signatures,
/// data/class/instance declarations, and the expression forms needed for
/// control-flow analysis. Declarations outside the subset become
/// DeclKind::Other with their source preserved; only a malformed module
/// header or an indentation error fails the whole module.
///
/// Pure function of its input; thread-safe.
HsModule parse_module(std::string_view source, const std::string& file = "<input>");

/// Top-level FunctionDefs in source order, with matching type signatures
/// attached. Local (where/let-bound) functions are not included.
std::vector<FunctionDef> extract_functions(const HsModule& module);

/// Non-blank, non-comment-only source lines.
int count_loc(std::string_view source);

}  // namespace rswarm
