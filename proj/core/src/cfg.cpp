#include "rswarm/cfg.hpp"

#include <numeric>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

struct Seg {
  int in = -1;
  int out = -1;
};

class Builder {
 public:
  ControlFlowGraph build(const FunctionDef& fn) {
    int entry = add(CfgNode::Kind::Entry, "entry");
    g_.entry_node = entry;
    Seg body = function_seg(fn);
    int exit = add(CfgNode::Kind::Exit, "exit");
    g_.exit_node = exit;
    edge(entry, body.in);
    edge(body.out, exit);
    return std::move(g_);
  }

 private:
  int add(CfgNode::Kind k, std::string label) {
    g_.nodes.push_back({k, std::move(label), std::nullopt});
    return static_cast<int>(g_.nodes.size()) - 1;
  }
  void edge(int a, int b) { g_.edges.emplace_back(a, b); }

  Seg stmt(const std::string& label) {
    int n = add(CfgNode::Kind::Statement, label);
    return {n, n};
  }

  Seg seq(Seg a, Seg b) {
    edge(a.out, b.in);
    return {a.in, b.out};
  }

  Seg function_seg(const FunctionDef& fn) {
    if (fn.clauses.size() == 1) return clause_seg(fn.clauses.front());
    int br = add(CfgNode::Kind::Branch, fn.name + " dispatch");
    int mg = add(CfgNode::Kind::Merge, fn.name + " merge");
    for (const Clause& c : fn.clauses) {
      Seg s = clause_seg(c);
      edge(br, s.in);
      edge(s.out, mg);
    }
    return {br, mg};
  }

  Seg clause_seg(const Clause& c) {
    Seg core = c.body ? expr_seg(*c.body)
                      : guard_chain(c.guards, "guard");
    if (auto w = decl_chain(c.where_bindings)) return seq(*w, core);
    return core;
  }

  // First g-1 guards branch (true edge into the body, false edge to the next
  // guard); the final guard falls straight through, the way `otherwise` does.
  Seg guard_chain(const std::vector<std::pair<Expr, Expr>>& guards,
                  const std::string& label) {
    if (guards.empty()) return stmt("empty guards");
    int mg = add(CfgNode::Kind::Merge, label + " merge");
    int first_in = -1;
    int fall_from = -1;
    for (std::size_t i = 0; i < guards.size(); ++i) {
      Seg cond = expr_seg(guards[i].first);
      if (first_in < 0) first_in = cond.in;
      if (fall_from >= 0) edge(fall_from, cond.in);
      Seg body = expr_seg(guards[i].second);
      if (i + 1 < guards.size()) {
        int br = add(CfgNode::Kind::Branch, label);
        edge(cond.out, br);
        edge(br, body.in);
        edge(body.out, mg);
        fall_from = br;
      } else {
        edge(cond.out, body.in);
        edge(body.out, mg);
        fall_from = -1;
      }
    }
    return {first_in, mg};
  }

  std::optional<Seg> decl_chain(const std::vector<Declaration>& decls) {
    std::optional<Seg> acc;
    for (const Declaration& d : decls) {
      if (d.kind != DeclKind::Function) continue;
      Seg s = function_seg(d.function());
      acc = acc ? seq(*acc, s) : s;
    }
    return acc;
  }

  Seg chain_children(const Expr& e) {
    if (e.children.empty()) return stmt(e.text.empty() ? "expr" : e.text);
    std::optional<Seg> acc;
    for (const Expr& c : e.children) {
      Seg s = expr_seg(c);
      acc = acc ? seq(*acc, s) : s;
    }
    return *acc;
  }

  Seg alt_seg(const CaseAlt& alt) {
    Seg core = alt.body ? expr_seg(*alt.body)
                        : guard_chain(alt.guards, "alt guard");
    if (auto w = decl_chain(alt.where_bindings)) return seq(*w, core);
    return core;
  }

  Seg expr_seg(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Var:
      case ExprKind::Lit:
        return stmt(e.text);

      case ExprKind::App:
      case ExprKind::Paren:
      case ExprKind::Other:
        return chain_children(e);

      case ExprKind::Lambda:
        return chain_children(e);

      case ExprKind::InfixApp: {
        if ((e.op == "&&" || e.op == "||") && e.children.size() == 2) {
          Seg lhs = expr_seg(e.children[0]);
          int br = add(CfgNode::Kind::Branch, e.op);
          int mg = add(CfgNode::Kind::Merge, e.op + " merge");
          Seg rhs = expr_seg(e.children[1]);
          edge(lhs.out, br);
          edge(br, rhs.in);
          edge(rhs.out, mg);
          edge(br, mg);  // short-circuit path
          return {lhs.in, mg};
        }
        return chain_children(e);
      }

      case ExprKind::If: {
        if (e.children.size() != 3) return chain_children(e);
        Seg cond = expr_seg(e.children[0]);
        int br = add(CfgNode::Kind::Branch, "if");
        int mg = add(CfgNode::Kind::Merge, "if merge");
        Seg then_s = expr_seg(e.children[1]);
        Seg else_s = expr_seg(e.children[2]);
        edge(cond.out, br);
        edge(br, then_s.in);
        edge(then_s.out, mg);
        edge(br, else_s.in);
        edge(else_s.out, mg);
        return {cond.in, mg};
      }

      case ExprKind::Case: {
        Seg scrut = e.children.empty() ? stmt("scrutinee") : expr_seg(e.children[0]);
        int br = add(CfgNode::Kind::Branch, "case");
        int mg = add(CfgNode::Kind::Merge, "case merge");
        edge(scrut.out, br);
        for (const CaseAlt& alt : e.alts) {
          Seg s = alt_seg(alt);
          edge(br, s.in);
          edge(s.out, mg);
        }
        if (e.alts.empty()) edge(br, mg);
        return {scrut.in, mg};
      }

      case ExprKind::Let: {
        Seg body = e.children.empty() ? stmt("let body") : expr_seg(e.children[0]);
        if (auto b = decl_chain(e.bindings)) return seq(*b, body);
        return body;
      }

      case ExprKind::Do: {
        std::optional<Seg> acc;
        for (const DoStmt& s : e.stmts) {
          std::optional<Seg> part;
          if (s.kind == DoStmtKind::LetStmt) {
            part = decl_chain(s.bindings);
          } else if (s.expr) {
            part = expr_seg(*s.expr);
          }
          if (!part) continue;
          acc = acc ? seq(*acc, *part) : *part;
        }
        return acc ? *acc : stmt("empty do");
      }

      case ExprKind::ListComp: {
        int mg = add(CfgNode::Kind::Merge, "comp merge");
        int first_in = -1;
        int prev_out = -1;
        auto link = [&](Seg s) {
          if (first_in < 0) first_in = s.in;
          if (prev_out >= 0) edge(prev_out, s.in);
          prev_out = s.out;
        };
        for (const CompQual& q : e.quals) {
          if (q.kind == QualKind::LetQual) {
            if (auto b = decl_chain(q.bindings)) link(*b);
            continue;
          }
          if (q.expr) link(expr_seg(*q.expr));
          int br = add(CfgNode::Kind::Branch,
                       q.kind == QualKind::Generator ? "generator" : "filter");
          if (first_in < 0) first_in = br;
          if (prev_out >= 0) edge(prev_out, br);
          edge(br, mg);
          prev_out = br;
        }
        Seg head = e.children.empty() ? stmt("comp head") : expr_seg(e.children[0]);
        if (first_in < 0) first_in = head.in;
        if (prev_out >= 0) edge(prev_out, head.in);
        edge(head.out, mg);
        return {first_in, mg};
      }
    }
    return stmt("expr");
  }

  ControlFlowGraph g_;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

int ControlFlowGraph::p() const {
  if (nodes.empty()) return 0;
  UnionFind uf(nodes.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n() || b >= n()) continue;
    uf.unite(a, b);
  }
  int components = 0;
  for (int i = 0; i < n(); ++i) {
    if (uf.find(i) == i) ++components;
  }
  return components;
}

ControlFlowGraph build_cfg(const FunctionDef& fn) {
  return Builder().build(fn);
}

int cyclomatic_complexity(const ControlFlowGraph& cfg) {
  if (cfg.nodes.empty()) {
    throw InvalidCfg("control-flow graph has no nodes (P = 0)");
  }
  for (const auto& [a, b] : cfg.edges) {
    if (a < 0 || b < 0 || a >= cfg.n() || b >= cfg.n()) {
      throw InvalidCfg("edge references a node outside the graph");
    }
  }
  return cfg.e() - cfg.n() + 2 * cfg.p();
}

}  // namespace rswarm
