#include "rswarm/parser.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <map>
#include <set>
#include <variant>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

// ---------------------------------------------------------------------------
// Layout: turns the concrete token stream into one with virtual open/semi/
// close markers, following the offside rule for top-level, where, let, do
// and case-of blocks.

struct PTok {
  enum class K { Real, VOpen, VSemi, VClose };
  K k = K::Real;
  int tok = -1;  // Real: token index. Virtual: index of the next real token.
};

struct LayoutCtx {
  int col = 0;
  bool explicit_brace = false;
  bool from_let = false;
  int bracket_depth = 0;
};

class LayoutBuilder {
 public:
  LayoutBuilder(std::string_view src, const std::vector<Token>& toks, std::string file)
      : src_(src), toks_(toks), file_(std::move(file)) {
    compute_line_indent();
  }

  std::vector<PTok> run() {
    std::size_t i = 0;
    // Module headers are exempt from layout; the `where` that closes the
    // header opens the top-level block.
    if (!toks_.empty() && toks_[0].is(TokenKind::Keyword, "module")) {
      int depth = 0;
      bool found_where = false;
      while (i < toks_.size()) {
        const Token& t = toks_[i];
        if (t.text == "(" || t.text == "[") ++depth;
        if (t.text == ")" || t.text == "]") --depth;
        emit_real(i++);
        if (depth == 0 && t.is(TokenKind::Keyword, "where")) {
          found_where = true;
          break;
        }
      }
      if (!found_where) {
        throw MalformedModuleHeader("module header has no closing 'where'", toks_[0].span);
      }
      expect_open_ = true;
    } else {
      expect_open_ = true;
    }

    for (; i < toks_.size(); ++i) process(i);

    while (!ctx_.empty()) {
      if (!ctx_.back().explicit_brace) emit_virtual(PTok::K::VClose, toks_.size());
      ctx_.pop_back();
    }
    if (expect_open_) {
      emit_virtual(PTok::K::VOpen, toks_.size());
      emit_virtual(PTok::K::VClose, toks_.size());
    }
    return std::move(out_);
  }

 private:
  void process(std::size_t i) {
    const Token& t = toks_[i];
    bool opened_here = false;

    if (expect_open_) {
      expect_open_ = false;
      if (t.is(TokenKind::LayoutBrace, "{")) {
        ctx_.push_back({0, true, pending_let_, 0});
        pending_let_ = false;
        emit_real(i);
        return;
      }
      check_indent(t);
      int enclosing = innermost_implicit_col();
      const bool was_let = pending_let_;
      pending_let_ = false;
      if (t.span.start_col > enclosing) {
        ctx_.push_back({t.span.start_col, false, was_let, 0});
        emit_virtual(PTok::K::VOpen, i);
        opened_here = true;
      } else {
        // The block would not be indented past its enclosing context: it is
        // empty ({}), and the token belongs to an outer block.
        emit_virtual(PTok::K::VOpen, i);
        emit_virtual(PTok::K::VClose, i);
      }
    }

    if (!opened_here && first_on_line(i)) {
      check_indent(t);
      while (!ctx_.empty() && !ctx_.back().explicit_brace &&
             t.span.start_col < ctx_.back().col) {
        emit_virtual(PTok::K::VClose, i);
        ctx_.pop_back();
      }
      if (!ctx_.empty() && !ctx_.back().explicit_brace && t.span.start_col == ctx_.back().col) {
        emit_virtual(PTok::K::VSemi, i);
      }
    }

    if (t.is(TokenKind::Keyword, "in")) {
      // `let ... in` on one line: the layout context opened by let has no
      // offside trigger, so `in` closes it explicitly.
      if (!ctx_.empty() && !ctx_.back().explicit_brace && ctx_.back().from_let) {
        emit_virtual(PTok::K::VClose, i);
        ctx_.pop_back();
      }
    }

    if (t.text == "(" || t.text == "[") {
      if (!ctx_.empty()) ++ctx_.back().bracket_depth;
    } else if (t.text == ")" || t.text == "]") {
      while (!ctx_.empty() && !ctx_.back().explicit_brace && ctx_.back().bracket_depth == 0) {
        emit_virtual(PTok::K::VClose, i);
        ctx_.pop_back();
      }
      if (!ctx_.empty() && ctx_.back().bracket_depth > 0) --ctx_.back().bracket_depth;
    } else if (t.is(TokenKind::LayoutBrace, "}")) {
      while (!ctx_.empty() && !ctx_.back().explicit_brace) {
        emit_virtual(PTok::K::VClose, i);
        ctx_.pop_back();
      }
      if (!ctx_.empty()) ctx_.pop_back();
    }

    emit_real(i);
    after_token(i);
  }

  void after_token(std::size_t i) {
    const Token& t = toks_[i];
    if (t.kind == TokenKind::Keyword &&
        (t.text == "where" || t.text == "let" || t.text == "do" || t.text == "of")) {
      expect_open_ = true;
      pending_let_ = (t.text == "let");
    }
  }

  int innermost_implicit_col() const {
    for (auto it = ctx_.rbegin(); it != ctx_.rend(); ++it) {
      if (!it->explicit_brace) return it->col;
    }
    return 0;
  }

  bool first_on_line(std::size_t i) const {
    return i == 0 || toks_[i - 1].span.end_line < toks_[i].span.start_line;
  }

  void check_indent(const Token& t) {
    auto it = mixed_lines_.find(t.span.start_line);
    if (it != mixed_lines_.end()) {
      throw LayoutError("indentation mixes tabs and spaces", t.span);
    }
  }

  void compute_line_indent() {
    int line = 1;
    bool saw_space = false, saw_tab = false, in_prefix = true;
    for (char c : src_) {
      if (c == '\n') {
        ++line;
        saw_space = saw_tab = false;
        in_prefix = true;
      } else if (in_prefix && c == ' ') {
        saw_space = true;
        if (saw_tab) mixed_lines_.insert(line);
      } else if (in_prefix && c == '\t') {
        saw_tab = true;
        if (saw_space) mixed_lines_.insert(line);
      } else {
        in_prefix = false;
      }
    }
  }

  void emit_real(std::size_t i) { out_.push_back({PTok::K::Real, static_cast<int>(i)}); }
  void emit_virtual(PTok::K k, std::size_t next) {
    out_.push_back({k, static_cast<int>(next)});
  }

  std::string_view src_;
  const std::vector<Token>& toks_;
  std::string file_;
  std::vector<LayoutCtx> ctx_;
  std::vector<PTok> out_;
  std::set<int> mixed_lines_;
  bool expect_open_ = false;
  bool pending_let_ = false;
};

// ---------------------------------------------------------------------------
// Parser

struct ParseFail {
  std::string message;
};

const std::set<std::string, std::less<>>& reserved_ops() {
  static const std::set<std::string, std::less<>> ops = {
      "=", "|", "->", "<-", "::", "=>", "@", "~", "..", "\\",
  };
  return ops;
}

struct OpInfo {
  int prec;
  bool right_assoc;
};

OpInfo op_info(std::string_view op) {
  if (op == ".") return {9, true};
  if (op == "&&") return {3, true};
  if (op == "||") return {2, true};
  if (op == "$") return {0, true};
  return {5, false};
}

class Parser {
 public:
  Parser(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {
    for (Token& t : tokenize(src, file_)) {
      if (t.kind != TokenKind::Comment) toks_.push_back(std::move(t));
    }
    pt_ = LayoutBuilder(src_, toks_, file_).run();
  }

  HsModule parse() {
    HsModule mod;
    mod.file = file_;
    parse_header(mod);
    expect_virtual(PTok::K::VOpen);
    parse_decl_block(mod.declarations, &mod.imports);
    attach_signatures(mod);
    return mod;
  }

 private:
  // --- stream primitives ---------------------------------------------------

  bool done() const { return i_ >= pt_.size(); }
  const PTok& cur() const {
    static PTok end{PTok::K::VClose, -1};
    return done() ? end : pt_[i_];
  }
  bool cur_is_virtual(PTok::K k) const { return !done() && pt_[i_].k == k; }
  const Token* cur_tok() const {
    if (done() || pt_[i_].k != PTok::K::Real) return nullptr;
    return &toks_[static_cast<std::size_t>(pt_[i_].tok)];
  }
  bool cur_text_is(std::string_view s) const {
    const Token* t = cur_tok();
    return t && t->text == s;
  }
  bool cur_is_kw(std::string_view s) const {
    const Token* t = cur_tok();
    return t && t->kind == TokenKind::Keyword && t->text == s;
  }

  void bump() {
    if (done()) return;
    if (pt_[i_].k == PTok::K::Real) last_real_ = pt_[i_].tok;
    ++i_;
  }

  void expect_virtual(PTok::K k) {
    if (!cur_is_virtual(k)) throw ParseFail{"layout structure mismatch"};
    bump();
  }

  const Token& expect_text(std::string_view s) {
    const Token* t = cur_tok();
    if (!t || t->text != s) throw ParseFail{"expected '" + std::string(s) + "'"};
    const Token& ref = *t;
    bump();
    return ref;
  }

  SourceSpan span_between(int first_tok, int last_tok) const {
    SourceSpan s;
    s.file = file_;
    if (first_tok < 0 || last_tok < first_tok ||
        first_tok >= static_cast<int>(toks_.size())) {
      return s;
    }
    const auto& a = toks_[static_cast<std::size_t>(first_tok)].span;
    const auto& b = toks_[static_cast<std::size_t>(std::min<int>(
        last_tok, static_cast<int>(toks_.size()) - 1))].span;
    s.start_line = a.start_line;
    s.start_col = a.start_col;
    s.end_line = b.end_line;
    s.end_col = b.end_col;
    return s;
  }

  std::string raw_between(int first_tok, int last_tok) const {
    if (first_tok < 0 || last_tok < first_tok ||
        first_tok >= static_cast<int>(toks_.size())) {
      return {};
    }
    const Token& a = toks_[static_cast<std::size_t>(first_tok)];
    const Token& b = toks_[static_cast<std::size_t>(std::min<int>(
        last_tok, static_cast<int>(toks_.size()) - 1))];
    return std::string(src_.substr(a.offset, b.offset + b.text.size() - a.offset));
  }

  int cur_tok_index() const {
    if (done()) return static_cast<int>(toks_.size()) - 1;
    return pt_[i_].tok;
  }

  // --- module header and declarations --------------------------------------

  void parse_header(HsModule& mod) {
    if (!cur_is_kw("module")) return;  // implicit Main module
    const Token& kw = *cur_tok();
    bump();
    const Token* name = cur_tok();
    if (!name || name->kind != TokenKind::Identifier) {
      throw MalformedModuleHeader("expected module name", kw.span);
    }
    mod.name = name->text;
    bump();
    if (cur_text_is("(")) skip_balanced("(", ")");
    if (!cur_is_kw("where")) {
      throw MalformedModuleHeader("expected 'where' after module name", name->span);
    }
    bump();
  }

  void skip_balanced(std::string_view open, std::string_view close) {
    expect_text(open);
    int depth = 1;
    while (depth > 0) {
      if (done()) throw ParseFail{"unbalanced brackets"};
      if (cur_text_is(open)) ++depth;
      if (cur_text_is(close)) --depth;
      bump();
    }
  }

  // Parses items until the matching VClose / `}`. Imports collected when the
  // caller provides a sink (top level only).
  void parse_decl_block(std::vector<Declaration>& decls, std::vector<ImportDecl>* imports) {
    while (true) {
      while (cur_is_virtual(PTok::K::VSemi) || cur_text_is(";")) bump();
      if (cur_is_virtual(PTok::K::VClose) || cur_text_is("}") || done()) {
        bump();
        return;
      }
      parse_item(decls, imports);
    }
  }

  void parse_item(std::vector<Declaration>& decls, std::vector<ImportDecl>* imports) {
    const std::size_t start_pt = i_;
    const int start_tok = cur_tok_index();
    try {
      if (imports && cur_is_kw("import")) {
        imports->push_back(parse_import());
        return;
      }
      Declaration d = parse_declaration();
      append_declaration(decls, std::move(d));
    } catch (const ParseFail&) {
      i_ = start_pt;
      skip_item();
      Declaration d;
      d.kind = DeclKind::Other;
      OtherDecl other;
      other.raw = raw_between(start_tok, last_real_);
      other.span = span_between(start_tok, last_real_);
      d.payload = std::move(other);
      decls.push_back(std::move(d));
    }
  }

  // Consumes the remainder of the current item: everything up to the next
  // separator or close of the current block, skipping nested blocks whole.
  void skip_item() {
    int depth = 0;
    while (!done()) {
      const PTok& p = cur();
      if (p.k == PTok::K::VOpen) {
        ++depth;
      } else if (p.k == PTok::K::VClose) {
        if (depth == 0) return;
        --depth;
      } else if (p.k == PTok::K::VSemi) {
        if (depth == 0) return;
      } else {
        const Token* t = cur_tok();
        if (t && t->is(TokenKind::LayoutBrace, "{")) ++depth;
        if (t && t->is(TokenKind::LayoutBrace, "}")) {
          if (depth == 0) return;
          --depth;
        }
        if (t && t->is(TokenKind::LayoutBrace, ";") && depth == 0) return;
      }
      bump();
    }
  }

  ImportDecl parse_import() {
    ImportDecl imp;
    imp.span = cur_tok()->span;
    bump();  // import
    bool qualified = false;
    if (cur_text_is("qualified")) {
      qualified = true;
      bump();
    }
    const Token* name = cur_tok();
    if (!name || name->kind != TokenKind::Identifier) throw ParseFail{"expected module name"};
    imp.module_name = name->text;
    bump();
    if (cur_text_is("as")) {
      bump();
      const Token* alias = cur_tok();
      if (!alias || alias->kind != TokenKind::Identifier) throw ParseFail{"expected alias"};
      imp.qualifier = alias->text;
      bump();
    } else if (qualified) {
      imp.qualifier = imp.module_name;
    }
    skip_item();  // hiding lists / import lists are not modeled
    return imp;
  }

  Declaration parse_declaration() {
    const int start_tok = cur_tok_index();
    const Token* t = cur_tok();
    if (!t) throw ParseFail{"expected declaration"};

    if (t->kind == TokenKind::Keyword) {
      const std::string& kw = t->text;
      if (kw == "data" || kw == "newtype") return parse_data_decl(start_tok);
      if (kw == "class") return parse_class_decl(start_tok);
      if (kw == "instance") return parse_instance_decl(start_tok);
      throw ParseFail{"unsupported declaration keyword"};
    }

    if (is_type_signature()) return parse_type_signature(start_tok);
    return parse_function_equation(start_tok);
  }

  Declaration parse_data_decl(int start_tok) {
    bump();  // data / newtype
    std::string name;
    while (!at_item_end()) {
      const Token* t = cur_tok();
      if (name.empty() && t && t->kind == TokenKind::Identifier &&
          std::isupper(static_cast<unsigned char>(t->text[0]))) {
        name = t->text;
      }
      bump();
    }
    Declaration d;
    d.kind = DeclKind::Data;
    d.payload = DataDecl{name, raw_between(start_tok, last_real_),
                         span_between(start_tok, last_real_)};
    return d;
  }

  Declaration parse_class_decl(int start_tok) {
    bump();  // class
    std::string name = parse_class_like_head();
    Declaration d;
    d.kind = DeclKind::Class;
    d.payload = ClassDecl{name, raw_between(start_tok, last_real_),
                          span_between(start_tok, last_real_)};
    return d;
  }

  Declaration parse_instance_decl(int start_tok) {
    bump();  // instance
    std::string head = parse_class_like_head();
    Declaration d;
    d.kind = DeclKind::Instance;
    d.payload = InstanceDecl{head, raw_between(start_tok, last_real_),
                             span_between(start_tok, last_real_)};
    return d;
  }

  // Consumes a class/instance head plus optional where-block body; returns
  // the head's identifying name (class name / instance head text).
  std::string parse_class_like_head() {
    std::string name;
    bool past_context = false;
    const int head_start = cur_tok_index();
    int head_end = head_start - 1;
    while (!at_item_end() && !cur_is_kw("where")) {
      const Token* t = cur_tok();
      if (t) {
        if (t->text == "=>") {
          past_context = true;
          name.clear();
        } else if (name.empty() && t->kind == TokenKind::Identifier &&
                   std::isupper(static_cast<unsigned char>(t->text[0]))) {
          name = t->text;
        }
        head_end = cur_tok_index();
      }
      bump();
    }
    (void)past_context;
    if (cur_is_kw("where")) {
      bump();
      std::vector<Declaration> body;  // methods are not modeled individually
      if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
        bump();
        parse_decl_block(body, nullptr);
      }
    }
    if (name.empty()) name = raw_between(head_start, head_end);
    return name;
  }

  bool at_item_end() const {
    if (done()) return true;
    const PTok& p = cur();
    if (p.k == PTok::K::VSemi || p.k == PTok::K::VClose) return true;
    const Token* t = cur_tok();
    return t && t->kind == TokenKind::LayoutBrace && (t->text == ";" || t->text == "}");
  }

  // Lookahead: `name (, name)* ::` before any `=` at bracket depth zero.
  bool is_type_signature() const {
    std::size_t j = i_;
    int depth = 0;
    bool expecting_name = true;
    while (j < pt_.size()) {
      const PTok& p = pt_[j];
      if (p.k != PTok::K::Real) return false;
      const Token& t = toks_[static_cast<std::size_t>(p.tok)];
      if (t.text == "(" || t.text == "[") ++depth;
      if (t.text == ")" || t.text == "]") --depth;
      if (depth == 0) {
        if (t.text == "::") return !expecting_name;
        if (expecting_name) {
          if (t.kind != TokenKind::Identifier && !(t.text == "(")) return false;
          if (t.text == "(") {
            // parenthesized operator name: ( op )
            if (j + 2 < pt_.size() && pt_[j + 1].k == PTok::K::Real &&
                pt_[j + 2].k == PTok::K::Real &&
                toks_[static_cast<std::size_t>(pt_[j + 2].tok)].text == ")") {
              j += 2;
              ++depth;  // countered by the ')' handling below
              --depth;
              expecting_name = false;
              ++j;
              continue;
            }
            return false;
          }
          expecting_name = false;
        } else {
          if (t.text != ",") return false;
          expecting_name = true;
        }
      }
      ++j;
    }
    return false;
  }

  Declaration parse_type_signature(int start_tok) {
    TypeSignature sig;
    while (!cur_text_is("::")) {
      const Token* t = cur_tok();
      if (!t) throw ParseFail{"expected '::'"};
      if (t->kind == TokenKind::Identifier) sig.names.push_back(t->text);
      if (t->text == "(") {  // operator name
        bump();
        if (const Token* op = cur_tok()) sig.names.push_back(op->text);
        bump();
        expect_text(")");
        continue;
      }
      bump();
    }
    bump();  // ::
    const int type_start = cur_tok_index();
    while (!at_item_end()) bump();
    sig.type_text = raw_between(type_start, last_real_);
    sig.span = span_between(start_tok, last_real_);
    Declaration d;
    d.kind = DeclKind::Signature;
    d.payload = std::move(sig);
    return d;
  }

  Declaration parse_function_equation(int start_tok) {
    std::string name;
    const Token* t = cur_tok();
    if (t && t->kind == TokenKind::Identifier &&
        !std::isupper(static_cast<unsigned char>(t->text[0]))) {
      name = t->text;
      bump();
    } else if (t && t->text == "(") {
      // (op) pat... = ...
      bump();
      const Token* op = cur_tok();
      if (!op || op->kind != TokenKind::Operator) throw ParseFail{"expected operator name"};
      name = "(" + op->text + ")";
      bump();
      expect_text(")");
    } else {
      throw ParseFail{"expected function name"};
    }

    Clause clause = parse_clause_after_name();
    FunctionDef fn;
    fn.name = std::move(name);
    fn.span = span_between(start_tok, last_real_);
    clause.span = fn.span;
    fn.clauses.push_back(std::move(clause));

    Declaration d;
    d.kind = DeclKind::Function;
    d.payload = std::move(fn);
    return d;
  }

  Clause parse_clause_after_name() {
    Clause clause;
    while (!cur_text_is("=") && !cur_text_is("|")) {
      if (at_item_end()) throw ParseFail{"expected '=' or guards"};
      clause.patterns.push_back(parse_atomic_pattern());
    }
    if (cur_text_is("=")) {
      bump();
      clause.body = parse_expr({"where"});
    } else {
      while (cur_text_is("|")) {
        bump();
        Expr cond = parse_expr({"="});
        expect_text("=");
        Expr body = parse_expr({"|", "where"});
        clause.guards.emplace_back(std::move(cond), std::move(body));
      }
    }
    if (cur_is_kw("where")) {
      bump();
      if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
        bump();
        parse_decl_block(clause.where_bindings, nullptr);
      }
    }
    if (!at_item_end()) throw ParseFail{"trailing tokens after clause body"};
    return clause;
  }

  Pattern parse_atomic_pattern() {
    const int start = cur_tok_index();
    const Token* t = cur_tok();
    if (!t) throw ParseFail{"expected pattern"};
    if (t->text == "~" || t->text == "!") {
      bump();
      parse_atomic_pattern();
    } else if (t->text == "(") {
      skip_balanced("(", ")");
    } else if (t->text == "[") {
      skip_balanced("[", "]");
    } else if (t->kind == TokenKind::Identifier || t->is(TokenKind::Keyword, "_") ||
               t->kind == TokenKind::Literal) {
      bump();
      if (cur_text_is("@")) {  // as-pattern
        bump();
        parse_atomic_pattern();
      }
    } else {
      throw ParseFail{"unsupported pattern"};
    }
    Pattern p;
    p.text = raw_between(start, last_real_);
    p.span = span_between(start, last_real_);
    return p;
  }

  // --- expressions ----------------------------------------------------------

  using Stops = std::set<std::string, std::less<>>;

  bool stopped(const Stops& stops) const {
    if (done()) return true;
    const PTok& p = cur();
    if (p.k == PTok::K::VSemi || p.k == PTok::K::VClose) return true;
    const Token* t = cur_tok();
    if (!t) return false;
    if (t->kind == TokenKind::LayoutBrace && (t->text == ";" || t->text == "}")) return true;
    if (t->text == ")" || t->text == "]" || t->text == ",") return true;
    if (stops.count(t->text)) return true;
    if (t->kind == TokenKind::Keyword &&
        (t->text == "then" || t->text == "else" || t->text == "of" || t->text == "in" ||
         t->text == "where")) {
      return true;
    }
    return false;
  }

  Expr parse_expr(const Stops& stops) { return parse_op_expr(0, stops); }

  Expr parse_op_expr(int min_prec, const Stops& stops) {
    const int start = cur_tok_index();
    Expr lhs = parse_app(stops);
    while (true) {
      if (stopped(stops)) break;
      const Token* t = cur_tok();
      if (!t) break;
      std::string op;
      bool backtick = false;
      if (t->text == "`") {
        op = backtick_op_name();
        backtick = true;
      } else if (t->kind == TokenKind::Operator) {
        if (reserved_ops().count(t->text)) break;
        op = t->text;
      } else {
        break;
      }
      OpInfo info = op_info(op);
      if (info.prec < min_prec) break;
      bump();  // operator, or the opening backtick
      if (backtick) {
        bump();  // the name
        expect_text("`");
      }
      Expr rhs = parse_op_expr(info.right_assoc ? info.prec : info.prec + 1, stops);
      Expr node;
      node.kind = ExprKind::InfixApp;
      node.op = op;
      node.span = span_between(start, last_real_);
      node.children.push_back(std::move(lhs));
      node.children.push_back(std::move(rhs));
      lhs = std::move(node);
    }
    return lhs;
  }

  // Peeks the identifier inside `name`; cursor stays on the opening backtick.
  std::string backtick_op_name() const {
    std::size_t j = i_ + 1;
    if (j < pt_.size() && pt_[j].k == PTok::K::Real) {
      const Token& t = toks_[static_cast<std::size_t>(pt_[j].tok)];
      if (t.kind == TokenKind::Identifier) return t.text;
    }
    throw ParseFail{"malformed backtick operator"};
  }

  bool starts_atom() const {
    if (done()) return false;
    const Token* t = cur_tok();
    if (!t) return false;
    if (t->kind == TokenKind::Identifier || t->kind == TokenKind::Literal) return true;
    if (t->text == "(" || t->text == "[" || t->text == "\\") return true;
    if (t->kind == TokenKind::Keyword &&
        (t->text == "if" || t->text == "case" || t->text == "let" || t->text == "do" ||
         t->text == "_")) {
      return true;
    }
    return false;
  }

  Expr parse_app(const Stops& stops) {
    const int start = cur_tok_index();
    if (stopped(stops) || !starts_atom()) {
      // Unary minus and other prefix oddities.
      const Token* t = cur_tok();
      if (t && t->text == "-" && !stopped(stops)) {
        bump();
        Expr operand = parse_app(stops);
        Expr node;
        node.kind = ExprKind::App;
        node.span = span_between(start, last_real_);
        Expr neg;
        neg.kind = ExprKind::Var;
        neg.text = "negate";
        neg.span = node.span;
        node.children.push_back(std::move(neg));
        node.children.push_back(std::move(operand));
        return node;
      }
      throw ParseFail{"expected expression"};
    }
    Expr head = parse_atom(stops);
    std::vector<Expr> args;
    while (!stopped(stops) && starts_atom()) args.push_back(parse_atom(stops));
    if (args.empty()) return head;
    Expr node;
    node.kind = ExprKind::App;
    node.span = span_between(start, last_real_);
    node.children.push_back(std::move(head));
    for (Expr& a : args) node.children.push_back(std::move(a));
    return node;
  }

  Expr parse_atom(const Stops& stops) {
    const int start = cur_tok_index();
    const Token* t = cur_tok();
    if (!t) throw ParseFail{"expected expression"};

    if (t->kind == TokenKind::Identifier || t->is(TokenKind::Keyword, "_")) {
      Expr e;
      e.kind = ExprKind::Var;
      e.text = t->text;
      e.span = t->span;
      bump();
      return e;
    }
    if (t->kind == TokenKind::Literal) {
      Expr e;
      e.kind = ExprKind::Lit;
      e.text = t->text;
      e.span = t->span;
      bump();
      return e;
    }
    if (t->text == "\\") return parse_lambda(start, stops);
    if (t->is(TokenKind::Keyword, "if")) return parse_if(start, stops);
    if (t->is(TokenKind::Keyword, "case")) return parse_case(start, stops);
    if (t->is(TokenKind::Keyword, "let")) return parse_let(start, stops);
    if (t->is(TokenKind::Keyword, "do")) return parse_do(start);
    if (t->text == "(") return parse_paren(start, stops);
    if (t->text == "[") return parse_bracket(start, stops);
    throw ParseFail{"unsupported expression"};
  }

  Expr parse_lambda(int start, const Stops& stops) {
    bump();  // backslash
    Expr e;
    e.kind = ExprKind::Lambda;
    while (!cur_text_is("->")) {
      if (at_item_end() || done()) throw ParseFail{"expected '->' in lambda"};
      e.param_texts.push_back(parse_atomic_pattern().text);
    }
    bump();  // ->
    e.children.push_back(parse_expr(stops));
    e.span = span_between(start, last_real_);
    return e;
  }

  Expr parse_if(int start, const Stops& stops) {
    bump();  // if
    Expr e;
    e.kind = ExprKind::If;
    e.children.push_back(parse_expr(stops));
    skip_do_semi("then");
    expect_keyword("then");
    e.children.push_back(parse_expr(stops));
    skip_do_semi("else");
    expect_keyword("else");
    e.children.push_back(parse_expr(stops));
    e.span = span_between(start, last_real_);
    return e;
  }

  // In do blocks, `then`/`else` aligned with the statement column arrive
  // behind a virtual semicolon; tolerate it as Haskell 2010 does.
  void skip_do_semi(std::string_view kw) {
    if (cur_is_virtual(PTok::K::VSemi) && i_ + 1 < pt_.size() &&
        pt_[i_ + 1].k == PTok::K::Real) {
      const Token& t = toks_[static_cast<std::size_t>(pt_[i_ + 1].tok)];
      if (t.kind == TokenKind::Keyword && t.text == kw) bump();
    }
  }

  void expect_keyword(std::string_view kw) {
    if (!cur_is_kw(kw)) throw ParseFail{"expected '" + std::string(kw) + "'"};
    bump();
  }

  Expr parse_case(int start, const Stops& stops) {
    bump();  // case
    Expr e;
    e.kind = ExprKind::Case;
    e.children.push_back(parse_expr(stops));
    expect_keyword("of");
    if (!(cur_is_virtual(PTok::K::VOpen) || cur_text_is("{"))) {
      throw ParseFail{"expected case alternatives"};
    }
    bump();
    while (true) {
      while (cur_is_virtual(PTok::K::VSemi) || cur_text_is(";")) bump();
      if (cur_is_virtual(PTok::K::VClose) || cur_text_is("}") || done()) {
        bump();
        break;
      }
      e.alts.push_back(parse_case_alt());
    }
    if (e.alts.empty()) throw ParseFail{"case expression without alternatives"};
    e.span = span_between(start, last_real_);
    return e;
  }

  CaseAlt parse_case_alt() {
    CaseAlt alt;
    const int start = cur_tok_index();
    // Pattern: raw tokens up to -> or | at bracket depth 0.
    int depth = 0;
    while (!done()) {
      const Token* t = cur_tok();
      if (!t) throw ParseFail{"malformed case alternative"};
      if (depth == 0 && (t->text == "->" || t->text == "|")) break;
      if (t->text == "(" || t->text == "[") ++depth;
      if (t->text == ")" || t->text == "]") --depth;
      bump();
    }
    alt.pattern_text = raw_between(start, last_real_);
    if (cur_text_is("->")) {
      bump();
      alt.body = parse_expr({"where"});
    } else {
      while (cur_text_is("|")) {
        bump();
        Expr cond = parse_expr({"->"});
        expect_text("->");
        Expr body = parse_expr({"|", "where"});
        alt.guards.emplace_back(std::move(cond), std::move(body));
      }
    }
    if (cur_is_kw("where")) {
      bump();
      if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
        bump();
        parse_decl_block(alt.where_bindings, nullptr);
      }
    }
    alt.span = span_between(start, last_real_);
    return alt;
  }

  Expr parse_let(int start, const Stops& stops) {
    bump();  // let
    Expr e;
    e.kind = ExprKind::Let;
    if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
      bump();
      parse_decl_block(e.bindings, nullptr);
    }
    expect_keyword("in");
    e.children.push_back(parse_expr(stops));
    e.span = span_between(start, last_real_);
    return e;
  }

  Expr parse_do(int start) {
    bump();  // do
    Expr e;
    e.kind = ExprKind::Do;
    if (!(cur_is_virtual(PTok::K::VOpen) || cur_text_is("{"))) {
      throw ParseFail{"expected do block"};
    }
    bump();
    while (true) {
      while (cur_is_virtual(PTok::K::VSemi) || cur_text_is(";")) bump();
      if (cur_is_virtual(PTok::K::VClose) || cur_text_is("}") || done()) {
        bump();
        break;
      }
      e.stmts.push_back(parse_do_stmt());
    }
    e.span = span_between(start, last_real_);
    return e;
  }

  DoStmt parse_do_stmt() {
    DoStmt stmt;
    if (cur_is_kw("let")) {
      const int start = cur_tok_index();
      bump();
      std::vector<Declaration> bindings;
      if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
        bump();
        parse_decl_block(bindings, nullptr);
      }
      if (cur_is_kw("in")) {
        // let ... in expr used as a statement
        bump();
        Expr body = parse_expr({});
        Expr let;
        let.kind = ExprKind::Let;
        let.bindings = std::move(bindings);
        let.children.push_back(std::move(body));
        let.span = span_between(start, last_real_);
        stmt.kind = DoStmtKind::Expression;
        stmt.expr = std::move(let);
        return stmt;
      }
      stmt.kind = DoStmtKind::LetStmt;
      stmt.bindings = std::move(bindings);
      return stmt;
    }
    if (has_arrow_before_stmt_end()) {
      const int start = cur_tok_index();
      int depth = 0;
      while (!(depth == 0 && cur_text_is("<-"))) {
        const Token* t = cur_tok();
        if (!t) throw ParseFail{"malformed bind statement"};
        if (t->text == "(" || t->text == "[") ++depth;
        if (t->text == ")" || t->text == "]") --depth;
        bump();
      }
      stmt.pattern_text = raw_between(start, last_real_);
      bump();  // <-
      stmt.kind = DoStmtKind::Bind;
      stmt.expr = parse_expr({});
      return stmt;
    }
    stmt.kind = DoStmtKind::Expression;
    stmt.expr = parse_expr({});
    return stmt;
  }

  bool has_arrow_before_stmt_end() const {
    std::size_t j = i_;
    int bracket = 0, block = 0;
    while (j < pt_.size()) {
      const PTok& p = pt_[j];
      if (p.k == PTok::K::VOpen) ++block;
      else if (p.k == PTok::K::VClose) {
        if (block == 0) return false;
        --block;
      } else if (p.k == PTok::K::VSemi) {
        if (block == 0) return false;
      } else {
        const Token& t = toks_[static_cast<std::size_t>(p.tok)];
        if (t.text == "(" || t.text == "[") ++bracket;
        if (t.text == ")" || t.text == "]") --bracket;
        if (block == 0 && bracket == 0 && t.text == "<-") return true;
      }
      ++j;
    }
    return false;
  }

  Expr parse_paren(int start, const Stops&) {
    bump();  // (
    if (cur_text_is(")")) {  // unit
      bump();
      Expr e;
      e.kind = ExprKind::Lit;
      e.text = "()";
      e.span = span_between(start, last_real_);
      return e;
    }

    // Operator reference or left section: ( op ) / ( op expr )
    const Token* t = cur_tok();
    if (t && t->kind == TokenKind::Operator && t->text != "(" && t->text != "[" &&
        t->text != "\\" && !reserved_ops().count(t->text) && t->text != "`" &&
        !(t->text == "-" && next_starts_atom())) {
      std::string op = t->text;
      bump();
      Expr e;
      e.kind = ExprKind::Paren;
      e.section_op = op;
      if (!cur_text_is(")")) e.children.push_back(parse_expr({}));
      expect_text(")");
      e.span = span_between(start, last_real_);
      return e;
    }

    Expr inner = parse_expr({});

    if (cur_text_is("::")) {  // type annotation: skip the type
      bump();
      int depth = 0;
      while (!done() && !(depth == 0 && cur_text_is(")"))) {
        if (cur_text_is("(") || cur_text_is("[")) ++depth;
        if (cur_text_is(")") || cur_text_is("]")) --depth;
        bump();
      }
    }

    // Right section: ( expr op )
    const Token* after = cur_tok();
    if (after && after->kind == TokenKind::Operator && after->text != ")" &&
        after->text != "," && !reserved_ops().count(after->text) && after->text != "`") {
      std::size_t j = i_ + 1;
      if (j < pt_.size() && pt_[j].k == PTok::K::Real &&
          toks_[static_cast<std::size_t>(pt_[j].tok)].text == ")") {
        std::string op = after->text;
        bump();
        bump();
        Expr e;
        e.kind = ExprKind::Paren;
        e.section_op = op;
        e.children.push_back(std::move(inner));
        e.span = span_between(start, last_real_);
        return e;
      }
    }

    Expr e;
    e.kind = ExprKind::Paren;
    e.children.push_back(std::move(inner));
    while (cur_text_is(",")) {  // tuple
      bump();
      e.children.push_back(parse_expr({}));
    }
    expect_text(")");
    e.span = span_between(start, last_real_);
    return e;
  }

  bool next_starts_atom() const {
    std::size_t j = i_ + 1;
    if (j >= pt_.size() || pt_[j].k != PTok::K::Real) return false;
    const Token& t = toks_[static_cast<std::size_t>(pt_[j].tok)];
    return t.kind == TokenKind::Identifier || t.kind == TokenKind::Literal ||
           t.text == "(" || t.text == "[";
  }

  Expr parse_bracket(int start, const Stops&) {
    bump();  // [
    if (cur_text_is("]")) {
      bump();
      Expr e;
      e.kind = ExprKind::Lit;
      e.text = "[]";
      e.span = span_between(start, last_real_);
      return e;
    }
    Expr first = parse_expr({"|", ".."});

    if (cur_text_is("|")) {  // list comprehension
      bump();
      Expr e;
      e.kind = ExprKind::ListComp;
      e.children.push_back(std::move(first));
      while (true) {
        e.quals.push_back(parse_comp_qual());
        if (cur_text_is(",")) {
          bump();
          continue;
        }
        break;
      }
      expect_text("]");
      e.span = span_between(start, last_real_);
      return e;
    }

    Expr e;
    e.kind = ExprKind::Other;
    e.text = "[list]";
    e.children.push_back(std::move(first));
    if (cur_text_is("..")) {  // arithmetic sequence
      bump();
      if (!cur_text_is("]")) e.children.push_back(parse_expr({}));
    } else {
      while (cur_text_is(",")) {
        bump();
        e.children.push_back(parse_expr({".."}));
        if (cur_text_is("..")) {  // [a, b .. c]
          bump();
          if (!cur_text_is("]")) e.children.push_back(parse_expr({}));
          break;
        }
      }
    }
    expect_text("]");
    e.span = span_between(start, last_real_);
    return e;
  }

  CompQual parse_comp_qual() {
    CompQual q;
    if (cur_is_kw("let")) {
      bump();
      q.kind = QualKind::LetQual;
      if (cur_is_virtual(PTok::K::VOpen) || cur_text_is("{")) {
        bump();
        parse_decl_block(q.bindings, nullptr);
      }
      return q;
    }
    if (qual_has_arrow()) {
      const int start = cur_tok_index();
      int depth = 0;
      while (!(depth == 0 && cur_text_is("<-"))) {
        const Token* t = cur_tok();
        if (!t) throw ParseFail{"malformed generator"};
        if (t->text == "(" || t->text == "[") ++depth;
        if (t->text == ")" || t->text == "]") --depth;
        bump();
      }
      q.pattern_text = raw_between(start, last_real_);
      bump();  // <-
      q.kind = QualKind::Generator;
      q.expr = parse_expr({});
      return q;
    }
    q.kind = QualKind::Filter;
    q.expr = parse_expr({});
    return q;
  }

  bool qual_has_arrow() const {
    std::size_t j = i_;
    int depth = 0;
    while (j < pt_.size()) {
      const PTok& p = pt_[j];
      if (p.k != PTok::K::Real) return false;
      const Token& t = toks_[static_cast<std::size_t>(p.tok)];
      if (t.text == "(" || t.text == "[") ++depth;
      if (t.text == ")" || t.text == "]") {
        if (depth == 0) return false;
        --depth;
      }
      if (depth == 0 && (t.text == "," )) return false;
      if (depth == 0 && t.text == "<-") return true;
      ++j;
    }
    return false;
  }

  // --- assembly -------------------------------------------------------------

  void append_declaration(std::vector<Declaration>& decls, Declaration&& d) {
    if (d.kind == DeclKind::Function && !decls.empty() &&
        decls.back().kind == DeclKind::Function) {
      FunctionDef& prev = decls.back().function();
      FunctionDef& next = d.function();
      if (prev.name == next.name) {
        if (prev.arity() == next.arity()) {
          prev.span.end_line = next.span.end_line;
          prev.span.end_col = next.span.end_col;
          for (Clause& c : next.clauses) prev.clauses.push_back(std::move(c));
          return;
        }
        // Equations with mismatched arity are not valid Haskell; keep the
        // offending equation as an opaque declaration.
        Declaration other;
        other.kind = DeclKind::Other;
        other.payload = OtherDecl{raw_for_span(next.span), next.span};
        decls.push_back(std::move(other));
        return;
      }
    }
    decls.push_back(std::move(d));
  }

  std::string raw_for_span(const SourceSpan& span) const {
    // Best effort: find tokens covering the span.
    std::string out;
    for (const Token& t : toks_) {
      if (t.span.start_line < span.start_line) continue;
      if (t.span.end_line > span.end_line) break;
      if (!out.empty()) out += ' ';
      out += t.text;
    }
    return out;
  }

  void attach_signatures(HsModule& mod) {
    std::map<std::string, const TypeSignature*> sigs;
    for (const Declaration& d : mod.declarations) {
      if (d.kind == DeclKind::Signature) {
        const auto& sig = std::get<TypeSignature>(d.payload);
        for (const std::string& n : sig.names) sigs.emplace(n, &sig);
      }
    }
    for (Declaration& d : mod.declarations) {
      if (d.kind == DeclKind::Function) {
        auto it = sigs.find(d.function().name);
        if (it != sigs.end()) d.function().signature = it->second->type_text;
      }
    }
  }

  std::string_view src_;
  std::string file_;
  std::vector<Token> toks_;
  std::vector<PTok> pt_;
  std::size_t i_ = 0;
  int last_real_ = -1;
};

}  // namespace

SourceSpan Declaration::span() const {
  return std::visit([](const auto& p) { return p.span; }, payload);
}

HsModule parse_module(std::string_view source, const std::string& file) {
  try {
    return Parser(source, file).parse();
  } catch (const ParseFail& f) {
    // Item-level recovery should make this unreachable; keep a typed error
    // rather than letting an internal struct escape.
    throw Error("parse failure in " + file + ": " + f.message);
  }
}

std::vector<FunctionDef> extract_functions(const HsModule& module) {
  std::vector<FunctionDef> out;
  for (const Declaration& d : module.declarations) {
    if (d.kind == DeclKind::Function) out.push_back(d.function());
  }
  return out;
}

int count_loc(std::string_view source) {
  std::set<int> code_lines;
  try {
    for (const Token& t : tokenize(source)) {
      if (t.kind == TokenKind::Comment) continue;
      for (int line = t.span.start_line; line <= t.span.end_line; ++line) {
        code_lines.insert(line);
      }
    }
    return static_cast<int>(code_lines.size());
  } catch (const SpanError&) {
    // Unlexable input: approximate with a plain text scan.
    int count = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
      std::size_t eol = source.find('\n', pos);
      if (eol == std::string_view::npos) eol = source.size();
      std::string_view line = source.substr(pos, eol - pos);
      std::size_t i = 0;
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i < line.size() && !(line[i] == '-' && i + 1 < line.size() && line[i + 1] == '-')) {
        ++count;
      }
      if (eol == source.size()) break;
      pos = eol + 1;
    }
    return count;
  }
}

}  // namespace rswarm
