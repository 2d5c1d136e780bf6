#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rswarm/source_span.hpp"

namespace rswarm {

struct Declaration;

enum class ExprKind {
  Var,       // identifier reference (text = name)
  Lit,       // literal (text = literal text)
  App,       // juxtaposition application; children = [fn, arg, ...]
  InfixApp,  // children = [lhs, rhs]; op = operator text ("`div`" stripped to div)
  Lambda,    // children = [body]; params in param_texts
  If,        // children = [cond, then, else]
  Case,      // children = [scrutinee]; alternatives in alts
  Let,       // bindings + children = [body]
  Do,        // statements in stmts
  Paren,     // children = [inner]; section_op set for operator sections
  ListComp,  // children = [element]; qualifiers in quals
  Other,     // opaque: raw text preserved, children = any recognized subtrees
};

struct CaseAlt;
struct CompQual;
struct DoStmt;

struct Expr {
  ExprKind kind = ExprKind::Other;
  std::string text;  // name / literal / raw text for Other
  std::string op;    // InfixApp operator
  std::optional<std::string> section_op;
  std::vector<std::string> param_texts;  // lambda parameter patterns
  std::vector<Expr> children;
  std::vector<CaseAlt> alts;
  std::vector<CompQual> quals;
  std::vector<DoStmt> stmts;
  std::vector<Declaration> bindings;  // let
  SourceSpan span;
};

/// One case alternative: pattern, then either guards or a plain body.
struct CaseAlt {
  std::string pattern_text;
  std::vector<std::pair<Expr, Expr>> guards;  // (condition, body)
  std::optional<Expr> body;
  std::vector<Declaration> where_bindings;
  SourceSpan span;
};

enum class QualKind { Generator, Filter, LetQual };

struct CompQual {
  QualKind kind = QualKind::Filter;
  std::string pattern_text;  // generators only
  std::optional<Expr> expr;  // generator source / filter condition
  std::vector<Declaration> bindings;  // let qualifiers
};

enum class DoStmtKind { Bind, LetStmt, Expression };

struct DoStmt {
  DoStmtKind kind = DoStmtKind::Expression;
  std::string pattern_text;  // binds only
  std::optional<Expr> expr;
  std::vector<Declaration> bindings;  // let statements
};

struct Pattern {
  std::string text;
  SourceSpan span;
};

/// One equation of a function definition. Guards and body are mutually
/// exclusive: unguarded clauses carry body, guarded ones carry the guard list.
struct Clause {
  std::vector<Pattern> patterns;
  std::vector<std::pair<Expr, Expr>> guards;  // (guard condition, body)
  std::optional<Expr> body;
  std::vector<Declaration> where_bindings;
  SourceSpan span;
};

struct FunctionDef {
  std::string name;
  std::vector<Clause> clauses;
  SourceSpan span;
  std::optional<std::string> signature;  // attached type signature text

  int arity() const { return clauses.empty() ? 0 : static_cast<int>(clauses.front().patterns.size()); }
};

struct TypeSignature {
  std::vector<std::string> names;
  std::string type_text;
  SourceSpan span;
};

struct DataDecl {
  std::string name;
  std::string raw;
  SourceSpan span;
};

struct ClassDecl {
  std::string name;
  std::string raw;
  SourceSpan span;
};

struct InstanceDecl {
  std::string head;
  std::string raw;
  SourceSpan span;
};

/// Catch-all for declarations outside the supported subset. Raw text and
/// span are preserved so no source content is lost.
struct OtherDecl {
  std::string raw;
  SourceSpan span;
};

enum class DeclKind { Function, Signature, Data, Class, Instance, Other };

struct Declaration {
  DeclKind kind = DeclKind::Other;
  std::variant<FunctionDef, TypeSignature, DataDecl, ClassDecl, InstanceDecl, OtherDecl> payload;

  const FunctionDef& function() const { return std::get<FunctionDef>(payload); }
  FunctionDef& function() { return std::get<FunctionDef>(payload); }
  SourceSpan span() const;
};

struct ImportDecl {
  std::string module_name;
  std::optional<std::string> qualifier;  // alias, or module name when qualified without `as`
  SourceSpan span;
};

struct HsModule {
  std::string name = "Main";  // implicit Main when the header is absent
  std::string file;
  std::vector<ImportDecl> imports;
  std::vector<Declaration> declarations;
};

}  // namespace rswarm
