#include <fuzzref/formula.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace fuzzref;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Builder, ChildrenPrecedeParents) {
  FormulaBuilder b;
  NodeId a = b.prop(0), c = b.prop(1);
  NodeId root = b.conjunction({b.negation(a), b.disjunction({c, b.constant(0.5)})});
  Formula f = b.build(root);
  for (NodeId id = 0; id < f.size(); ++id)
    for (NodeId child : f.node(id).children) EXPECT_LT(child, id);
  EXPECT_EQ(f.node(f.root()).kind, NodeKind::And);
  EXPECT_EQ(f.num_props(), 2u);
}

TEST(Builder, DropsUnreachableNodes) {
  FormulaBuilder b;
  b.prop(3);
  NodeId root = b.negation(b.prop(0));
  Formula f = b.build(root);
  EXPECT_EQ(f.size(), 2u);
}

TEST(Builder, RejectsBadInput) {
  FormulaBuilder b;
  EXPECT_THROW(b.constant(1.5), FormulaError);
  EXPECT_THROW(b.constant(-0.1), FormulaError);
  EXPECT_THROW(b.conjunction({}), FormulaError);
  EXPECT_THROW(b.disjunction({}), FormulaError);
  EXPECT_THROW(b.build(99), FormulaError);

  FormulaBuilder small(2);
  NodeId p = small.prop(5);
  EXPECT_THROW(small.build(p), FormulaError);
}

TEST(Builder, ClosedSubtrees) {
  FormulaBuilder b;
  NodeId k = b.conjunction({b.constant(0.2), b.constant(0.7)});
  NodeId root = b.implication(k, b.prop(0));
  Formula f = b.build(root);
  const Node& imp = f.node(f.root());
  EXPECT_TRUE(f.closed(imp.children[0]));
  EXPECT_FALSE(f.closed(imp.children[1]));
  EXPECT_FALSE(f.closed(f.root()));
}

TEST(Parser, PrecedenceAndFlattening) {
  Formula f = parse_formula("A & B & C | ~D -> E");
  const Node& root = f.node(f.root());
  ASSERT_EQ(root.kind, NodeKind::Implies);
  const Node& lhs = f.node(root.children[0]);
  ASSERT_EQ(lhs.kind, NodeKind::Or);
  ASSERT_EQ(lhs.children.size(), 2u);
  const Node& conj = f.node(lhs.children[0]);
  EXPECT_EQ(conj.kind, NodeKind::And);
  EXPECT_EQ(conj.children.size(), 3u);
  EXPECT_EQ(f.names(), (std::vector<std::string>{"A", "B", "C", "D", "E"}));
}

TEST(Parser, ImplicationIsRightAssociative) {
  Formula f = parse_formula("A -> B -> C");
  const Node& root = f.node(f.root());
  ASSERT_EQ(root.kind, NodeKind::Implies);
  EXPECT_EQ(f.node(root.children[0]).kind, NodeKind::Prop);
  EXPECT_EQ(f.node(root.children[1]).kind, NodeKind::Implies);
}

TEST(Parser, RepeatedNamesShareAnIndex) {
  Formula f = parse_formula("(x | y) & (~x | z)");
  EXPECT_EQ(f.num_props(), 3u);
  EXPECT_EQ(f.occurrences(), (std::vector<std::size_t>{2, 1, 1}));
}

TEST(Parser, PredeclaredNames) {
  Formula f = parse_formula("b & a", {"a", "b"});
  const Node& root = f.node(f.root());
  EXPECT_EQ(f.node(root.children[0]).prop, 1u);
  EXPECT_EQ(f.node(root.children[1]).prop, 0u);
  EXPECT_THROW(parse_formula("a & c", {"a", "b"}, false), ParseError);
}

TEST(Parser, Constants) {
  Formula f = parse_formula("0.25 | 1 | .5");
  ASSERT_EQ(f.node(f.root()).children.size(), 3u);
  EXPECT_DOUBLE_EQ(f.node(f.node(f.root()).children[0]).value, 0.25);
  EXPECT_DOUBLE_EQ(f.node(f.node(f.root()).children[2]).value, 0.5);
}

TEST(Parser, ErrorsCarryOffsets) {
  struct Case {
    const char* text;
    std::size_t offset;
  };
  for (auto [text, offset] : {Case{"A & ", 4}, Case{"(A | B", 6}, Case{"A $ B", 2}, Case{"A & 1.5", 4},
                              Case{"A B", 2}, Case{".", 0}}) {
    try {
      parse_formula(text);
      ADD_FAILURE() << "no error for " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), offset) << text;
    }
  }
}

TEST(Render, RoundTrips) {
  for (const char* text : {"~A & (B | C)", "(A -> B) -> C", "A -> (B -> C)", "~(A & B) | 0.3", "~~A",
                           "(a | b | c) & (~a | d)"}) {
    Formula f = parse_formula(text);
    Formula g = parse_formula(render(f), f.names());
    EXPECT_TRUE(f == g) << text << " rendered as " << render(f);
  }
  EXPECT_EQ(render(parse_formula("~A & (B | C)")), "~A & (B | C)");
}

TEST(Render, SmallConstantsStayInFixedNotation) {
  FormulaBuilder b;
  Formula f = b.build(b.constant(1e-7));
  EXPECT_EQ(render(f), "0.0000001");
  EXPECT_DOUBLE_EQ(parse_formula(render(f)).node(0).value, 1e-7);
}

TEST(Cnf, FromSignedAndBack) {
  auto inst = CnfInstance::from_signed(3, {{1, -2}, {3}});
  EXPECT_EQ(inst.clauses()[0][1], (Literal{1, true}));
  EXPECT_EQ(inst.to_dimacs(), "p cnf 3 2\n1 -2 0\n3 0\n");
  EXPECT_EQ(parse_dimacs(inst.to_dimacs("round trip")), inst);
}

TEST(Cnf, Validation) {
  EXPECT_THROW(CnfInstance(0, {{Literal{0, false}}}), FormulaError);
  EXPECT_THROW(CnfInstance(2, {}), FormulaError);
  EXPECT_THROW(CnfInstance(2, {Clause{}}), FormulaError);
  EXPECT_THROW(CnfInstance(2, {{Literal{2, false}}}), FormulaError);
  EXPECT_THROW(CnfInstance::from_signed(2, {{1, 0}}), FormulaError);
}

TEST(Dimacs, SatlibLayout) {
  auto inst = parse_dimacs(read_file(std::string(FUZZREF_TEST_DATA) + "/planted20-91-01.cnf"));
  EXPECT_EQ(inst.num_vars(), 20u);
  ASSERT_EQ(inst.clauses().size(), 91u);
  for (const auto& c : inst.clauses()) EXPECT_EQ(c.size(), 3u);
}

TEST(Dimacs, ClausesMaySpanLines) {
  auto inst = parse_dimacs("c hi\np cnf 3 2\n1 -2\n 3 0 -1\n0\n");
  ASSERT_EQ(inst.clauses().size(), 2u);
  EXPECT_EQ(inst.clauses()[0].size(), 3u);
}

TEST(Dimacs, FinalClauseWithoutTerminator) {
  auto inst = parse_dimacs("p cnf 2 2\n1 2 0\n-1 -2\n");
  EXPECT_EQ(inst.clauses().size(), 2u);
}

TEST(Dimacs, Errors) {
  EXPECT_THROW(parse_dimacs("1 2 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("c only comments\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 3 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 x 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p dnf 2 1\n1 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\np cnf 2 1\n1 0\n"), ParseError);
}

TEST(Dimacs, ClauseCountMismatch) {
  const char* text = "p cnf 2 3\n1 0\n2 0\n";
  EXPECT_THROW(parse_dimacs(text), ParseError);
  std::vector<std::string> warnings;
  auto inst = parse_dimacs(text, DimacsOptions{false}, &warnings);
  EXPECT_EQ(inst.clauses().size(), 2u);
  ASSERT_EQ(warnings.size(), 1u);
}

TEST(Dimacs, StopsAtPercentFooter) {
  auto inst = parse_dimacs("p cnf 2 1\n1 -2 0\n%\n0\n\n");
  EXPECT_EQ(inst.clauses().size(), 1u);
}

TEST(CnfToFormula, Shape) {
  auto inst = CnfInstance::from_signed(3, {{1, -2, 3}, {-1}, {2, 3}});
  Formula f = cnf_to_formula(inst);
  const Node& root = f.node(f.root());
  ASSERT_EQ(root.kind, NodeKind::And);
  ASSERT_EQ(root.children.size(), 3u);
  const Node& first = f.node(root.children[0]);
  EXPECT_EQ(first.kind, NodeKind::Or);
  EXPECT_EQ(f.node(first.children[1]).kind, NodeKind::Not);
  EXPECT_EQ(f.num_props(), 3u);

  Formula g = cnf_to_formula(inst, 2);
  EXPECT_EQ(g.node(g.root()).children.size(), 2u);
  EXPECT_THROW(cnf_to_formula(inst, 0), FormulaError);
  EXPECT_THROW(cnf_to_formula(inst, 4), FormulaError);
}
