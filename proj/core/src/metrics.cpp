#include "rswarm/metrics.hpp"

#include <set>

#include "rswarm/cfg.hpp"

namespace rswarm {

namespace {

int points_expr(const Expr& e);
int points_function(const FunctionDef& fn);

int points_decls(const std::vector<Declaration>& decls) {
  int pts = 0;
  for (const Declaration& d : decls) {
    if (d.kind == DeclKind::Function) pts += points_function(d.function());
  }
  return pts;
}

int points_guards(const std::vector<std::pair<Expr, Expr>>& guards) {
  int pts = guards.empty() ? 0 : static_cast<int>(guards.size()) - 1;
  for (const auto& [cond, body] : guards) {
    pts += points_expr(cond) + points_expr(body);
  }
  return pts;
}

int points_clause(const Clause& c) {
  int pts = points_guards(c.guards);
  if (c.body) pts += points_expr(*c.body);
  pts += points_decls(c.where_bindings);
  return pts;
}

int points_function(const FunctionDef& fn) {
  int pts = fn.clauses.empty() ? 0 : static_cast<int>(fn.clauses.size()) - 1;
  for (const Clause& c : fn.clauses) pts += points_clause(c);
  return pts;
}

int points_alt(const CaseAlt& alt) {
  int pts = points_guards(alt.guards);
  if (alt.body) pts += points_expr(*alt.body);
  pts += points_decls(alt.where_bindings);
  return pts;
}

int points_children(const Expr& e) {
  int pts = 0;
  for (const Expr& c : e.children) pts += points_expr(c);
  return pts;
}

int points_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Var:
    case ExprKind::Lit:
      return 0;
    case ExprKind::App:
    case ExprKind::Paren:
    case ExprKind::Other:
    case ExprKind::Lambda:
      return points_children(e);
    case ExprKind::InfixApp:
      return ((e.op == "&&" || e.op == "||") ? 1 : 0) + points_children(e);
    case ExprKind::If:
      return 1 + points_children(e);
    case ExprKind::Case: {
      int pts = e.alts.empty() ? 0 : static_cast<int>(e.alts.size()) - 1;
      pts += points_children(e);  // scrutinee
      for (const CaseAlt& alt : e.alts) pts += points_alt(alt);
      return pts;
    }
    case ExprKind::Let:
      return points_decls(e.bindings) + points_children(e);
    case ExprKind::Do: {
      int pts = 0;
      for (const DoStmt& s : e.stmts) {
        if (s.kind == DoStmtKind::LetStmt) {
          pts += points_decls(s.bindings);
        } else if (s.expr) {
          pts += points_expr(*s.expr);
        }
      }
      return pts;
    }
    case ExprKind::ListComp: {
      int pts = points_children(e);  // head
      for (const CompQual& q : e.quals) {
        if (q.kind == QualKind::LetQual) {
          pts += points_decls(q.bindings);
        } else {
          pts += 1;
          if (q.expr) pts += points_expr(*q.expr);
        }
      }
      return pts;
    }
  }
  return 0;
}

const std::set<std::string, std::less<>>& hof_names() {
  static const std::set<std::string, std::less<>> names = {
      "map",       "filter",   "foldr",    "foldl",   "foldl'",  "concatMap",
      "zipWith",   "zipWith3", "fmap",     "mapM",    "mapM_",   "forM",
      "forM_",     "traverse", "any",      "all",     "takeWhile",
      "dropWhile", "iterate",  "until",    "scanl",   "scanr",
  };
  return names;
}

bool is_lambda_arg(const Expr& e) {
  if (e.kind == ExprKind::Lambda) return true;
  return e.kind == ExprKind::Paren && !e.section_op && e.children.size() == 1 &&
         e.children[0].kind == ExprKind::Lambda;
}

void count_expr(const Expr& e, FeatureCount& fc);
void count_function(const FunctionDef& fn, FeatureCount& fc);

void count_decls(const std::vector<Declaration>& decls, FeatureCount& fc) {
  for (const Declaration& d : decls) {
    if (d.kind == DeclKind::Function) count_function(d.function(), fc);
  }
}

void count_clause(const Clause& c, FeatureCount& fc) {
  for (const auto& [cond, body] : c.guards) {
    count_expr(cond, fc);
    count_expr(body, fc);
  }
  if (c.body) count_expr(*c.body, fc);
  count_decls(c.where_bindings, fc);
}

void count_function(const FunctionDef& fn, FeatureCount& fc) {
  for (const Clause& c : fn.clauses) count_clause(c, fc);
}

void count_expr(const Expr& e, FeatureCount& fc) {
  switch (e.kind) {
    case ExprKind::App:
      if (!e.children.empty() && e.children[0].kind == ExprKind::Var &&
          hof_names().count(e.children[0].text)) {
        ++fc.higher_order_functions;
      }
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        if (is_lambda_arg(e.children[i])) ++fc.higher_order_functions;
      }
      break;
    case ExprKind::InfixApp:
      if (e.op == ">>=" || e.op == ">>") ++fc.monadic_compositions;
      if (e.op == "." || e.op == "$") ++fc.higher_order_functions;
      break;
    case ExprKind::Paren:
      if (e.section_op) ++fc.higher_order_functions;
      break;
    case ExprKind::Do:
      ++fc.monadic_compositions;
      break;
    default:
      break;
  }

  for (const Expr& c : e.children) count_expr(c, fc);
  for (const CaseAlt& alt : e.alts) {
    for (const auto& [cond, body] : alt.guards) {
      count_expr(cond, fc);
      count_expr(body, fc);
    }
    if (alt.body) count_expr(*alt.body, fc);
    count_decls(alt.where_bindings, fc);
  }
  for (const CompQual& q : e.quals) {
    if (q.expr) count_expr(*q.expr, fc);
    count_decls(q.bindings, fc);
  }
  for (const DoStmt& s : e.stmts) {
    if (s.expr) count_expr(*s.expr, fc);
    count_decls(s.bindings, fc);
  }
  count_decls(e.bindings, fc);
}

}  // namespace

std::string to_string(SizeClass s) {
  switch (s) {
    case SizeClass::BelowRange: return "below-range";
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "unknown";
}

int decision_point_cc(const FunctionDef& fn) {
  return 1 + points_function(fn);
}

ComplexityScore total_complexity(const HsModule& module) {
  ComplexityScore score;
  for (const Declaration& d : module.declarations) {
    if (d.kind != DeclKind::Function) continue;
    const FunctionDef& fn = d.function();
    int cc = cyclomatic_complexity(build_cfg(fn));
    score.per_function[fn.name] = cc;
    score.total += cc;
  }
  return score;
}

FeatureCount feature_count(const HsModule& module) {
  FeatureCount fc;
  for (const Declaration& d : module.declarations) {
    if (d.kind == DeclKind::Class || d.kind == DeclKind::Instance) ++fc.type_classes;
    if (d.kind == DeclKind::Function) count_function(d.function(), fc);
  }
  return fc;
}

SizeClass classify_size(int loc) {
  if (loc < 100) return SizeClass::BelowRange;
  if (loc < 500) return SizeClass::Small;
  if (loc < 2000) return SizeClass::Medium;
  return SizeClass::Large;
}

}  // namespace rswarm
