#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <functional>
#include <sstream>

#include "rswarm/errors.hpp"
#include "rswarm/parser.hpp"
#include "rswarm/token.hpp"

using namespace rswarm;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fixture(const std::string& name) {
  return read_file(std::string(RSWARM_TEST_DIR) + "/fixtures/" + name);
}

// Recursive search over an expression tree.
bool contains_expr(const Expr& e, const std::function<bool(const Expr&)>& pred) {
  if (pred(e)) return true;
  for (const Expr& c : e.children) {
    if (contains_expr(c, pred)) return true;
  }
  for (const CaseAlt& alt : e.alts) {
    for (const auto& [g, b] : alt.guards) {
      if (contains_expr(g, pred) || contains_expr(b, pred)) return true;
    }
    if (alt.body && contains_expr(*alt.body, pred)) return true;
  }
  for (const CompQual& q : e.quals) {
    if (q.expr && contains_expr(*q.expr, pred)) return true;
  }
  for (const DoStmt& s : e.stmts) {
    if (s.expr && contains_expr(*s.expr, pred)) return true;
  }
  return false;
}

bool fn_contains(const FunctionDef& fn, const std::function<bool(const Expr&)>& pred) {
  for (const Clause& c : fn.clauses) {
    for (const auto& [g, b] : c.guards) {
      if (contains_expr(g, pred) || contains_expr(b, pred)) return true;
    }
    if (c.body && contains_expr(*c.body, pred)) return true;
  }
  return false;
}

void check_span_nesting(const Expr& parent) {
  for (const Expr& c : parent.children) {
    CAPTURE(parent.text);
    CHECK(parent.span.contains(c.span));
    check_span_nesting(c);
  }
}

}  // namespace

TEST_CASE("tokenize empty input") {
  CHECK(tokenize("").empty());
}

TEST_CASE("tokenize minimal binding") {
  auto toks = tokenize("x = 1");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].is(TokenKind::Identifier, "x"));
  CHECK(toks[1].is(TokenKind::Operator, "="));
  CHECK(toks[2].is(TokenKind::Literal, "1"));
}

TEST_CASE("tokenize keeps comments as tokens") {
  auto toks = tokenize("{- a -} f y = y");
  REQUIRE(toks.size() == 5);
  CHECK(toks[0].is(TokenKind::Comment, "{- a -}"));
  CHECK(toks[1].is(TokenKind::Identifier, "f"));
  CHECK(toks[2].is(TokenKind::Identifier, "y"));
  CHECK(toks[3].is(TokenKind::Operator, "="));
  CHECK(toks[4].is(TokenKind::Identifier, "y"));
}

TEST_CASE("qualified names are single identifier tokens") {
  auto toks = tokenize("Data.List.map x");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].is(TokenKind::Identifier, "Data.List.map"));
  CHECK(toks[1].is(TokenKind::Identifier, "x"));
}

TEST_CASE("block comments nest") {
  auto toks = tokenize("{- a {- b -} c -} x");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].kind == TokenKind::Comment);
  CHECK(toks[1].is(TokenKind::Identifier, "x"));
}

TEST_CASE("dashes followed by a symbol char are an operator, not a comment") {
  auto toks = tokenize("a --| b");
  REQUIRE(toks.size() == 3);
  CHECK(toks[1].is(TokenKind::Operator, "--|"));
}

TEST_CASE("line comment runs to end of line") {
  auto toks = tokenize("x = 1 -- trailing\ny = 2");
  REQUIRE(toks.size() == 7);
  CHECK(toks[3].is(TokenKind::Comment, "-- trailing"));
  CHECK(toks[4].is(TokenKind::Identifier, "y"));
}

TEST_CASE("prime identifiers stay single tokens") {
  auto toks = tokenize("n' = n");
  CHECK(toks[0].is(TokenKind::Identifier, "n'"));
}

TEST_CASE("char literal vs lone quote") {
  auto toks = tokenize("c = 'a'");
  REQUIRE(toks.size() == 3);
  CHECK(toks[2].is(TokenKind::Literal, "'a'"));
}

TEST_CASE("unterminated string raises with a span") {
  CHECK_THROWS_AS((void)tokenize("x = \"abc"), UnterminatedString);
  CHECK_THROWS_AS((void)tokenize("x = \"abc\ny = 1"), UnterminatedString);
}

TEST_CASE("unterminated block comment raises") {
  CHECK_THROWS_AS((void)tokenize("{- x"), UnterminatedBlockComment);
}

TEST_CASE("round-trip reconstruction is byte exact") {
  const std::string sources[] = {
      "",
      "x = 1",
      "{- a -} f y = y",
      "module M where\n\nf :: Int -> Int\nf x = x + 1  -- inline\n",
      "f x\n  | x > 0 = 1\n  | otherwise = 0\n",
      "main = do\n\tputStrLn \"hi\"\n",
      "weird   spacing\t\tbetween\n\n\ntokens",
      "s = \"esc \\\" quote\"\n",
      fixture("pointfree_pre.hs"),
      fixture("pointfree_post_verbatim.hs"),
      fixture("pointfree_post_squared.hs"),
      fixture("loc_120.hs"),
  };
  for (const std::string& src : sources) {
    CAPTURE(src);
    CHECK(reconstruct(src, tokenize(src)) == src);
  }
}

TEST_CASE("uses_cpp flags preprocessor files") {
  CHECK(uses_cpp("#ifdef FOO\nx = 1\n#endif\n"));
  CHECK(uses_cpp("{-# LANGUAGE CPP #-}\n#if MIN_VERSION_base(4,8,0)\n#endif\n"));
  CHECK_FALSE(uses_cpp("x = 1\n-- #no\n"));
}

TEST_CASE("parse identity module") {
  HsModule m = parse_module("module M where\nf x = x");
  CHECK(m.name == "M");
  REQUIRE(m.declarations.size() == 1);
  REQUIRE(m.declarations[0].kind == DeclKind::Function);
  const FunctionDef& f = m.declarations[0].function();
  CHECK(f.name == "f");
  CHECK(f.clauses.size() == 1);
  CHECK(f.arity() == 1);
}

TEST_CASE("missing header means module Main") {
  HsModule m = parse_module("f x = x\n");
  CHECK(m.name == "Main");
  CHECK(m.declarations.size() == 1);
}

TEST_CASE("module header with export list") {
  HsModule m = parse_module("module M (f, g) where\nf = 1\ng = 2\n");
  CHECK(m.name == "M");
  CHECK(m.declarations.size() == 2);
}

TEST_CASE("malformed module header fails the module") {
  CHECK_THROWS_AS((void)parse_module("module where\nf = 1"), MalformedModuleHeader);
  CHECK_THROWS_AS((void)parse_module("module M\nf = 1"), MalformedModuleHeader);
}

TEST_CASE("guarded clause keeps both guards") {
  HsModule m = parse_module("module M where\nf x\n  | x > 0 = 1\n  | otherwise = 0");
  REQUIRE(m.declarations.size() == 1);
  const FunctionDef& f = m.declarations[0].function();
  REQUIRE(f.clauses.size() == 1);
  CHECK(f.clauses[0].guards.size() == 2);
  CHECK_FALSE(f.clauses[0].body.has_value());
}

TEST_CASE("adjacent equations merge into one function") {
  HsModule m = parse_module("f 0 = 1\nf n = n * 2\n");
  REQUIRE(m.declarations.size() == 1);
  const FunctionDef& f = m.declarations[0].function();
  CHECK(f.clauses.size() == 2);
  CHECK(f.arity() == 1);
}

TEST_CASE("extract_functions returns top-level defs in order") {
  HsModule m = parse_module("f 0 = 1\nf n = n\ng y = y\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 2);
  CHECK(fns[0].name == "f");
  CHECK(fns[0].clauses.size() == 2);
  CHECK(fns[1].name == "g");
}

TEST_CASE("where-bound locals are not top-level functions") {
  HsModule m = parse_module("f x = g x\n  where g y = y + 1\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  CHECK(fns[0].name == "f");
  REQUIRE(fns[0].clauses.size() == 1);
  REQUIRE(fns[0].clauses[0].where_bindings.size() == 1);
  CHECK(fns[0].clauses[0].where_bindings[0].kind == DeclKind::Function);
  CHECK(fns[0].clauses[0].where_bindings[0].function().name == "g");
}

TEST_CASE("type signatures attach to functions") {
  HsModule m = parse_module("f :: Int -> Int\nf x = x\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  REQUIRE(fns[0].signature.has_value());
  CHECK(*fns[0].signature == "Int -> Int");
}

TEST_CASE("unparseable declarations become Other without losing text") {
  HsModule m = parse_module("module M where\nf x = x\n@@@ junk !!\ng y = y\n");
  REQUIRE(m.declarations.size() == 3);
  CHECK(m.declarations[0].kind == DeclKind::Function);
  CHECK(m.declarations[1].kind == DeclKind::Other);
  const auto& other = std::get<OtherDecl>(m.declarations[1].payload);
  CHECK(other.raw.find("junk") != std::string::npos);
  CHECK(m.declarations[2].kind == DeclKind::Function);
}

TEST_CASE("imports with qualifiers") {
  HsModule m = parse_module(
      "module M where\n"
      "import qualified Data.Map as M\n"
      "import Data.List\n"
      "import qualified Data.Set\n"
      "f = 1\n");
  REQUIRE(m.imports.size() == 3);
  CHECK(m.imports[0].module_name == "Data.Map");
  REQUIRE(m.imports[0].qualifier.has_value());
  CHECK(*m.imports[0].qualifier == "M");
  CHECK(m.imports[1].module_name == "Data.List");
  CHECK_FALSE(m.imports[1].qualifier.has_value());
  CHECK(m.imports[2].module_name == "Data.Set");
  REQUIRE(m.imports[2].qualifier.has_value());
  CHECK(*m.imports[2].qualifier == "Data.Set");
}

TEST_CASE("data class and instance declarations are classified") {
  HsModule m = parse_module(
      "module M where\n"
      "data Color = Red | Green | Blue\n"
      "class Shape a where\n"
      "  area :: a -> Double\n"
      "instance Shape Color where\n"
      "  area _ = 0\n"
      "f = 1\n");
  REQUIRE(m.declarations.size() == 4);
  CHECK(m.declarations[0].kind == DeclKind::Data);
  CHECK(std::get<DataDecl>(m.declarations[0].payload).name == "Color");
  CHECK(m.declarations[1].kind == DeclKind::Class);
  CHECK(std::get<ClassDecl>(m.declarations[1].payload).name == "Shape");
  CHECK(m.declarations[2].kind == DeclKind::Instance);
  CHECK(m.declarations[3].kind == DeclKind::Function);
}

TEST_CASE("named-argument pipeline module parses into lambda and hof apps") {
  HsModule m = parse_module(fixture("pointfree_pre.hs"), "pointfree_pre.hs");
  CHECK(m.name == "Numbers");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  CHECK(fns[0].name == "processNumbers");
  CHECK(fn_contains(fns[0], [](const Expr& e) { return e.kind == ExprKind::Lambda; }));
  auto head_is = [](const Expr& e, const char* name) {
    return e.kind == ExprKind::App && !e.children.empty() &&
           e.children[0].kind == ExprKind::Var && e.children[0].text == name;
  };
  CHECK(fn_contains(fns[0], [&](const Expr& e) { return head_is(e, "map"); }));
  CHECK(fn_contains(fns[0], [&](const Expr& e) { return head_is(e, "filter"); }));
}

TEST_CASE("point-free composition parses as dot infix chain") {
  HsModule m = parse_module(fixture("pointfree_post_verbatim.hs"), "pointfree_post_verbatim.hs");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  CHECK(fns[0].name == "sumOfSquaresOfOdds");
  CHECK(fns[0].arity() == 0);
  CHECK(fn_contains(fns[0], [](const Expr& e) {
    return e.kind == ExprKind::InfixApp && e.op == ".";
  }));
  CHECK(fn_contains(fns[0], [](const Expr& e) {
    return e.kind == ExprKind::Paren && e.section_op && *e.section_op == "*";
  }));
}

TEST_CASE("mixed tabs and spaces in indentation is a layout error") {
  CHECK_THROWS_AS((void)parse_module("f = do\n  a\n \tb\n"), LayoutError);
}

TEST_CASE("do block statement kinds") {
  HsModule m = parse_module(
      "main = do\n"
      "  x <- getLine\n"
      "  let y = x\n"
      "  putStrLn y\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  REQUIRE(fns[0].clauses[0].body.has_value());
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::Do);
  REQUIRE(body.stmts.size() == 3);
  CHECK(body.stmts[0].kind == DoStmtKind::Bind);
  CHECK(body.stmts[0].pattern_text == "x");
  CHECK(body.stmts[1].kind == DoStmtKind::LetStmt);
  CHECK(body.stmts[2].kind == DoStmtKind::Expression);
}

TEST_CASE("case alternatives with guards") {
  HsModule m = parse_module(
      "f x = case x of\n"
      "  0 -> 1\n"
      "  n | n > 10 -> 2\n"
      "    | otherwise -> 3\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::Case);
  REQUIRE(body.alts.size() == 2);
  CHECK(body.alts[0].body.has_value());
  CHECK(body.alts[1].guards.size() == 2);
}

TEST_CASE("list comprehension qualifiers") {
  HsModule m = parse_module("g xs = [x * 2 | x <- xs, odd x]\n");
  auto fns = extract_functions(m);
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::ListComp);
  REQUIRE(body.quals.size() == 2);
  CHECK(body.quals[0].kind == QualKind::Generator);
  CHECK(body.quals[0].pattern_text == "x");
  CHECK(body.quals[1].kind == QualKind::Filter);
}

TEST_CASE("let-in expression") {
  HsModule m = parse_module("f x = let y = x + 1 in y * 2\n");
  auto fns = extract_functions(m);
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::Let);
  CHECK(body.bindings.size() == 1);
  REQUIRE(body.children.size() == 1);
}

TEST_CASE("operator definitions in parens") {
  HsModule m = parse_module("(<+>) a b = a + b\n");
  auto fns = extract_functions(m);
  REQUIRE(fns.size() == 1);
  CHECK(fns[0].name == "(<+>)");
  CHECK(fns[0].arity() == 2);
}

TEST_CASE("boolean operators bind looser than comparison") {
  HsModule m = parse_module("h a b c = a || b && c\n");
  auto fns = extract_functions(m);
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::InfixApp);
  CHECK(body.op == "||");
  REQUIRE(body.children.size() == 2);
  CHECK(body.children[1].kind == ExprKind::InfixApp);
  CHECK(body.children[1].op == "&&");
}

TEST_CASE("backtick infix application") {
  HsModule m = parse_module("q x = x `div` 2\n");
  auto fns = extract_functions(m);
  const Expr& body = *fns[0].clauses[0].body;
  REQUIRE(body.kind == ExprKind::InfixApp);
  CHECK(body.op == "div");
}

TEST_CASE("sections carry their operator") {
  HsModule m = parse_module("s xs = map (+1) xs\n");
  auto fns = extract_functions(m);
  CHECK(fn_contains(fns[0], [](const Expr& e) {
    return e.kind == ExprKind::Paren && e.section_op && *e.section_op == "+";
  }));
}

TEST_CASE("count_loc basics") {
  CHECK(count_loc("") == 0);
  CHECK(count_loc("-- c\n\nf x = x") == 1);
  CHECK(count_loc("{- multi\nline\ncomment -}\nf = 1\n") == 1);
  CHECK(count_loc("{- a -} f y = y\n") == 1);
}

TEST_CASE("count_loc on the 120-line fixture") {
  CHECK(count_loc(fixture("loc_120.hs")) == 100);
}

TEST_CASE("expression spans nest inside their parents") {
  const std::string srcs[] = {
      fixture("pointfree_pre.hs"),
      "f x\n  | x > 0 && x < 9 = [y | y <- [1..x], odd y]\n  | otherwise = []\n",
      "g n = case n of\n  0 -> if n > 1 then 1 else 2\n  _ -> 3\n",
  };
  for (const std::string& src : srcs) {
    HsModule m = parse_module(src);
    for (const FunctionDef& fn : extract_functions(m)) {
      for (const Clause& c : fn.clauses) {
        if (c.body) check_span_nesting(*c.body);
        for (const auto& [g, b] : c.guards) {
          check_span_nesting(g);
          check_span_nesting(b);
        }
      }
    }
  }
}

TEST_CASE("parsing is deterministic") {
  const std::string src = fixture("pointfree_pre.hs");
  auto t1 = tokenize(src);
  auto t2 = tokenize(src);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].text == t2[i].text);
    CHECK(t1[i].kind == t2[i].kind);
    CHECK(t1[i].offset == t2[i].offset);
  }
  HsModule m1 = parse_module(src);
  HsModule m2 = parse_module(src);
  REQUIRE(m1.declarations.size() == m2.declarations.size());
  CHECK(m1.name == m2.name);
}
