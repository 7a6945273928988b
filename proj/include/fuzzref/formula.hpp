#pragma once

// Propositional formulas over indexed propositions, the DSL parser and the
// DIMACS CNF loader.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fuzzref {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Prop, Const, Not, And, Or, Implies };

struct Node {
  NodeKind kind = NodeKind::Const;
  std::size_t prop = 0;          // Prop only
  double value = 0.0;            // Const only
  std::vector<NodeId> children;  // Not: 1, Implies: 2 (antecedent, consequent), And/Or: >= 1
};

class FormulaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class FormulaBuilder;

/// Immutable formula tree. Nodes are stored children-first, so iterating
/// nodes() in order is a valid bottom-up evaluation order and the root is the
/// last node.
class Formula {
 public:
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  NodeId root() const noexcept { return static_cast<NodeId>(nodes_.size() - 1); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t num_props() const noexcept { return num_props_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// True when the subtree rooted at id contains no proposition.
  bool closed(NodeId id) const { return closed_.at(id); }

  /// Number of occurrences of each proposition.
  std::vector<std::size_t> occurrences() const {
    std::vector<std::size_t> counts(num_props_, 0);
    for (const auto& n : nodes_)
      if (n.kind == NodeKind::Prop) ++counts[n.prop];
    return counts;
  }

  friend bool operator==(const Formula& a, const Formula& b) { return structurally_equal(a, a.root(), b, b.root()); }

  static bool structurally_equal(const Formula& a, NodeId ia, const Formula& b, NodeId ib) {
    const Node& x = a.node(ia);
    const Node& y = b.node(ib);
    if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
    if (x.kind == NodeKind::Prop && x.prop != y.prop) return false;
    if (x.kind == NodeKind::Const && x.value != y.value) return false;
    for (std::size_t i = 0; i < x.children.size(); ++i)
      if (!structurally_equal(a, x.children[i], b, y.children[i])) return false;
    return true;
  }

 private:
  friend class FormulaBuilder;
  std::vector<Node> nodes_;
  std::vector<bool> closed_;
  std::size_t num_props_ = 0;
  std::vector<std::string> names_;
};

/// Incrementally assembles a Formula. Each node constructor returns the id of the
/// new node; children must already exist.
class FormulaBuilder {
 public:
  explicit FormulaBuilder(std::size_t num_props = 0) : num_props_(num_props) {}

  NodeId prop(std::size_t index) {
    Node n;
    n.kind = NodeKind::Prop;
    n.prop = index;
    used_props_ = std::max(used_props_, index + 1);
    return push(std::move(n));
  }

  NodeId constant(double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw FormulaError("constant outside [0, 1]: " + std::to_string(value));
    Node n;
    n.kind = NodeKind::Const;
    n.value = value;
    return push(std::move(n));
  }

  NodeId negation(NodeId child) { return push_compound(NodeKind::Not, {child}); }
  NodeId conjunction(std::vector<NodeId> children) { return push_compound(NodeKind::And, std::move(children)); }
  NodeId disjunction(std::vector<NodeId> children) { return push_compound(NodeKind::Or, std::move(children)); }
  NodeId implication(NodeId antecedent, NodeId consequent) {
    return push_compound(NodeKind::Implies, {antecedent, consequent});
  }

  /// Finishes the formula rooted at `root`. Nodes not reachable from the root
  /// are dropped and ids are renumbered children-first.
  Formula build(NodeId root, std::vector<std::string> names = {}) const {
    if (root >= nodes_.size()) throw FormulaError("root id out of range");
    Formula f;
    f.num_props_ = std::max({num_props_, used_props_, names.size()});
    if (num_props_ != 0 && used_props_ > num_props_)
      throw FormulaError("proposition index " + std::to_string(used_props_ - 1) + " out of range for " +
                         std::to_string(num_props_) + " propositions");
    std::vector<NodeId> remap(nodes_.size(), kUnmapped);
    copy_postorder(root, f, remap);
    f.closed_.resize(f.nodes_.size());
    for (std::size_t i = 0; i < f.nodes_.size(); ++i) {
      const Node& n = f.nodes_[i];
      bool closed = n.kind != NodeKind::Prop;
      for (NodeId c : n.children) closed = closed && f.closed_[c];
      f.closed_[i] = closed;
    }
    f.names_ = std::move(names);
    return f;
  }

 private:
  static constexpr NodeId kUnmapped = std::numeric_limits<NodeId>::max();

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId push_compound(NodeKind kind, std::vector<NodeId> children) {
    if (children.empty()) throw FormulaError("connective needs at least one operand");
    for (NodeId c : children)
      if (c >= nodes_.size()) throw FormulaError("child id out of range");
    Node n;
    n.kind = kind;
    n.children = std::move(children);
    return push(std::move(n));
  }

  // Iterative post-order copy; the formula may be deep (long implication chains).
  void copy_postorder(NodeId root, Formula& f, std::vector<NodeId>& remap) const {
    std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const Node& src = nodes_[id];
      if (next < src.children.size()) {
        NodeId child = src.children[next++];
        stack.emplace_back(child, 0);
        continue;
      }
      // Shared builder nodes are copied once per occurrence to keep the result a tree.
      Node copy = src;
      for (auto& c : copy.children) c = remap[c];
      f.nodes_.push_back(std::move(copy));
      remap[id] = static_cast<NodeId>(f.nodes_.size() - 1);
      stack.pop_back();
    }
  }

  std::vector<Node> nodes_;
  std::size_t num_props_;
  std::size_t used_props_ = 0;
};

namespace detail {

class DslParser {
 public:
  DslParser(std::string_view text, std::vector<std::string> names, bool allow_new_names)
      : text_(text), allow_new_(allow_new_names) {
    for (auto& n : names) {
      index_.emplace(n, names_.size());
      names_.push_back(std::move(n));
    }
  }

  Formula run() {
    NodeId root = parse_impl();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return builder_.build(root, names_);
  }

 private:
  NodeId parse_impl() {
    NodeId lhs = parse_or();
    skip_ws();
    if (text_.substr(pos_, 2) == "->") {
      pos_ += 2;
      NodeId rhs = parse_impl();
      return builder_.implication(lhs, rhs);
    }
    return lhs;
  }

  NodeId parse_or() {
    std::vector<NodeId> operands{parse_and()};
    while (eat('|')) operands.push_back(parse_and());
    return operands.size() == 1 ? operands.front() : builder_.disjunction(std::move(operands));
  }

  NodeId parse_and() {
    std::vector<NodeId> operands{parse_unary()};
    while (eat('&')) operands.push_back(parse_unary());
    return operands.size() == 1 ? operands.front() : builder_.conjunction(std::move(operands));
  }

  NodeId parse_unary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '~') {
      ++pos_;
      return builder_.negation(parse_unary());
    }
    if (c == '(') {
      ++pos_;
      NodeId inner = parse_impl();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (is_ident_start(c)) return parse_ident();
    if (is_digit(c) || c == '.') return parse_number();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodeId parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (is_ident_start(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    auto it = index_.find(name);
    if (it == index_.end()) {
      if (!allow_new_) throw ParseError("unknown proposition '" + name + "'", start);
      it = index_.emplace(name, names_.size()).first;
      names_.push_back(name);
    }
    return builder_.prop(it->second);
  }

  NodeId parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    }
    std::string_view lexeme = text_.substr(start, pos_ - start);
    if (lexeme == ".") throw ParseError("malformed number", start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) throw ParseError("malformed number", start);
    if (value < 0.0 || value > 1.0) throw ParseError("constant outside [0, 1]", start);
    return builder_.constant(value);
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::string_view(" \t\n\r").find(text_[pos_]) != std::string_view::npos)
      ++pos_;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool allow_new_;
  FormulaBuilder builder_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::string format_constant(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find('e') == std::string::npos) return s;
  // Shortest fixed-notation text that reads back as the same double.
  for (int precision = 1;; ++precision) {
    res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    double back = 0.0;
    std::from_chars(buf, res.ptr, back);
    if (back == v || precision == 40) return std::string(buf, res.ptr);
  }
}

}  // namespace detail

/// Parses the formula DSL. Identifiers get indices in order of first
/// appearance after any predeclared `names`.
inline Formula parse_formula(std::string_view text, std::vector<std::string> names = {}, bool allow_new_names = true) {
  return detail::DslParser(text, std::move(names), allow_new_names).run();
}

/// Renders a formula back into the DSL. Compound operands are parenthesised,
/// so the output reparses to the same tree.
inline std::string render(const Formula& f, NodeId id) {
  const Node& n = f.node(id);
  auto operand = [&](NodeId c) {
    const Node& child = f.node(c);
    bool atomic = child.kind == NodeKind::Prop || child.kind == NodeKind::Const || child.kind == NodeKind::Not;
    return atomic ? render(f, c) : "(" + render(f, c) + ")";
  };
  switch (n.kind) {
    case NodeKind::Prop:
      return n.prop < f.names().size() ? f.names()[n.prop] : "P" + std::to_string(n.prop);
    case NodeKind::Const:
      return detail::format_constant(n.value);
    case NodeKind::Not:
      return "~" + operand(n.children[0]);
    case NodeKind::Implies:
      return operand(n.children[0]) + " -> " + operand(n.children[1]);
    case NodeKind::And:
    case NodeKind::Or: {
      // A single-operand connective has no DSL spelling of its own.
      if (n.children.size() == 1) return render(f, n.children[0]);
      std::string out;
      const char* sep = n.kind == NodeKind::And ? " & " : " | ";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += sep;
        out += operand(n.children[i]);
      }
      return out;
    }
  }
  return {};
}

inline std::string render(const Formula& f) { return render(f, f.root()); }

// ---------------------------------------------------------------------------
// DIMACS CNF

struct Literal {
  std::size_t var = 0;  // 0-based
  bool negated = false;

  friend bool operator==(const Literal&, const Literal&) = default;
};

using Clause = std::vector<Literal>;

class CnfInstance {
 public:
  CnfInstance(std::size_t num_vars, std::vector<Clause> clauses) : num_vars_(num_vars), clauses_(std::move(clauses)) {
    if (num_vars_ == 0) throw FormulaError("CNF instance needs at least one variable");
    if (clauses_.empty()) throw FormulaError("CNF instance has no clauses");
    for (const auto& c : clauses_) {
      if (c.empty()) throw FormulaError("empty clause");
      for (const auto& l : c)
        if (l.var >= num_vars_) throw FormulaError("literal variable " + std::to_string(l.var + 1) + " out of range");
    }
  }

  /// Builds from 1-based signed DIMACS literals.
  static CnfInstance from_signed(std::size_t num_vars, const std::vector<std::vector<int>>& clauses) {
    std::vector<Clause> out;
    out.reserve(clauses.size());
    for (const auto& c : clauses) {
      Clause cl;
      for (int lit : c) {
        if (lit == 0) throw FormulaError("literal 0 inside clause");
        cl.push_back({static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1, lit < 0});
      }
      out.push_back(std::move(cl));
    }
    return CnfInstance(num_vars, std::move(out));
  }

  std::size_t num_vars() const noexcept { return num_vars_; }
  const std::vector<Clause>& clauses() const noexcept { return clauses_; }

  std::string to_dimacs(std::string_view comment = {}) const {
    std::ostringstream os;
    if (!comment.empty()) os << "c " << comment << '\n';
    os << "p cnf " << num_vars_ << ' ' << clauses_.size() << '\n';
    for (const auto& c : clauses_) {
      for (const auto& l : c) os << (l.negated ? "-" : "") << (l.var + 1) << ' ';
      os << "0\n";
    }
    return os.str();
  }

  friend bool operator==(const CnfInstance&, const CnfInstance&) = default;

 private:
  std::size_t num_vars_;
  std::vector<Clause> clauses_;
};

struct DimacsOptions {
  /// When false, a clause-count mismatch is appended to `warnings` instead of throwing.
  bool strict_clause_count = true;
};

inline CnfInstance parse_dimacs(std::string_view text, const DimacsOptions& opts = {},
                                std::vector<std::string>* warnings = nullptr) {
  std::optional<std::size_t> vars, declared;
  std::vector<Clause> clauses;
  Clause current;
  std::size_t pos = 0;

  auto next_line = [&]() -> std::optional<std::pair<std::string_view, std::size_t>> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    pos = end + 1;
    return std::pair{text.substr(start, end - start), start};
  };

  while (auto line = next_line()) {
    auto [content, offset] = *line;
    std::size_t first = content.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    char lead = content[first];
    if (lead == 'c') continue;
    if (lead == '%') {
      break;
    }
    if (lead == 'p') {
      if (vars) throw ParseError("duplicate problem line", offset);
      std::istringstream is{std::string(content.substr(first))};
      std::string p, fmt;
      long long v = -1, c = -1;
      if (!(is >> p >> fmt >> v >> c) || fmt != "cnf" || v <= 0 || c < 0)
        throw ParseError("malformed problem line", offset);
      vars = static_cast<std::size_t>(v);
      declared = static_cast<std::size_t>(c);
      continue;
    }
    if (!vars) throw ParseError("clause before 'p cnf' header", offset);
    std::size_t i = first;
    while (i < content.size()) {
      while (i < content.size() && (content[i] == ' ' || content[i] == '\t' || content[i] == '\r')) ++i;
      if (i >= content.size()) break;
      long long lit = 0;
      auto [ptr, ec] = std::from_chars(content.data() + i, content.data() + content.size(), lit);
      if (ec != std::errc()) throw ParseError("malformed literal", offset + i);
      std::size_t lit_offset = offset + i;
      i = static_cast<std::size_t>(ptr - content.data());
      if (lit == 0) {
        if (!current.empty()) clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      std::size_t var = static_cast<std::size_t>(lit > 0 ? lit : -lit);
      if (var > *vars) throw ParseError("literal " + std::to_string(lit) + " out of range", lit_offset);
      current.push_back({var - 1, lit < 0});
    }
  }
  if (!vars) throw ParseError("missing 'p cnf' header", text.size());
  if (!current.empty()) clauses.push_back(std::move(current));
  if (clauses.size() != *declared) {
    std::string msg =
        "header declares " + std::to_string(*declared) + " clauses, found " + std::to_string(clauses.size());
    if (opts.strict_clause_count) throw ParseError(msg, text.size());
    if (warnings) warnings->push_back(msg);
  }
  return CnfInstance(*vars, std::move(clauses));
}

/// Conjunction of the first `max_clauses` clauses (all when unset), each a
/// disjunction of literals with negative literals wrapped in Not.
inline Formula cnf_to_formula(const CnfInstance& inst, std::optional<std::size_t> max_clauses = std::nullopt) {
  std::size_t count = inst.clauses().size();
  if (max_clauses) {
    if (*max_clauses == 0 || *max_clauses > count)
      throw FormulaError("max_clauses must be in [1, " + std::to_string(count) + "]");
    count = *max_clauses;
  }
  FormulaBuilder b(inst.num_vars());
  std::vector<NodeId> conj;
  conj.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<NodeId> disj;
    for (const auto& lit : inst.clauses()[i]) {
      NodeId p = b.prop(lit.var);
      disj.push_back(lit.negated ? b.negation(p) : p);
    }
    conj.push_back(b.disjunction(std::move(disj)));
  }
  return b.build(b.conjunction(std::move(conj)));
}

}  // namespace fuzzref
