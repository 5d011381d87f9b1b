#include "nhk/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <string>

namespace nhk {
namespace {

constexpr int kMaxDepth = 200;
constexpr int kMaxExponent = 6;

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool lookup_function(std::string_view name, UnaryFn& fn) {
  static constexpr std::pair<std::string_view, UnaryFn> table[] = {
      {"sin", UnaryFn::sin},   {"cos", UnaryFn::cos}, {"tan", UnaryFn::tan}, {"sec", UnaryFn::sec},
      {"sqrt", UnaryFn::sqrt}, {"exp", UnaryFn::exp}, {"ln", UnaryFn::ln},
  };
  for (const auto& [n, f] : table) {
    if (n == name) {
      fn = f;
      return true;
    }
  }
  return false;
}

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_constant(double v, std::size_t offset) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::constant;
  n->constant = v;
  n->offset = offset;
  return n;
}

NodePtr make_unary(UnaryFn fn, NodePtr child, std::size_t offset) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::unary;
  n->fn = fn;
  n->lhs = std::move(child);
  n->offset = offset;
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr l, NodePtr r, std::size_t offset) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::binary;
  n->op = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  n->offset = offset;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    skip_space();
    if (at_end()) throw ParseError("empty expression", pos_);
    NodePtr e = expr(0);
    skip_space();
    if (!at_end()) throw ParseError(std::string("unexpected trailing '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  [[nodiscard]] bool at_end() const { return pos_ >= text_.size(); }

  void skip_space() {
    while (!at_end() && is_space(text_[pos_])) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_space();
    if (at_end()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
    if (text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "' but found '" + text_[pos_] + "'", pos_);
    }
    ++pos_;
  }

  void enter(int depth) const {
    if (depth > kMaxDepth) throw ParseError("expression nested too deeply", pos_);
  }

  NodePtr expr(int depth) {
    enter(depth);
    NodePtr lhs = term(depth + 1);
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = make_binary(BinaryOp::add, lhs, term(depth + 1), at);
      } else if (accept('-')) {
        lhs = make_binary(BinaryOp::sub, lhs, term(depth + 1), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr term(int depth) {
    enter(depth);
    NodePtr lhs = factor(depth + 1);
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = make_binary(BinaryOp::mul, lhs, factor(depth + 1), at);
      } else if (accept('/')) {
        lhs = make_binary(BinaryOp::div, lhs, factor(depth + 1), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor(int depth) {
    enter(depth);
    skip_space();
    const std::size_t at = pos_;
    if (accept('-')) return make_unary(UnaryFn::neg, factor(depth + 1), at);
    NodePtr base = atom(depth + 1);
    skip_space();
    const std::size_t caret = pos_;
    if (accept('^')) {
      const int n = exponent();
      return make_binary(BinaryOp::pow, base, make_constant(n, caret + 1), caret);
    }
    return base;
  }

  int exponent() {
    skip_space();
    const std::size_t at = pos_;
    const bool parenthesised = accept('(');
    const bool negative = accept('-');
    skip_space();
    if (at_end() || !is_digit(text_[pos_])) {
      throw ParseError("exponent must be an integer constant in [-6, 6]", at);
    }
    const double v = number();
    if (parenthesised) expect(')');
    if (v != static_cast<double>(static_cast<long long>(v)) || v > kMaxExponent) {
      throw ParseError("exponent must be an integer constant in [-6, 6]", at);
    }
    const int n = static_cast<int>(v);
    return negative ? -n : n;
  }

  double number() {
    const std::size_t start = pos_;
    while (!at_end() && is_digit(text_[pos_])) ++pos_;
    if (!at_end() && text_[pos_] == '.') {
      ++pos_;
      while (!at_end() && is_digit(text_[pos_])) ++pos_;
    }
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && is_digit(text_[p])) {
        pos_ = p;
        while (!at_end() && is_digit(text_[pos_])) ++pos_;
      }
    }
    const std::string_view lexeme = text_.substr(start, pos_ - start);
    if (lexeme == ".") throw ParseError("malformed number", start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) {
      throw ParseError("malformed or out-of-range number", start);
    }
    return value;
  }

  NodePtr atom(int depth) {
    enter(depth);
    skip_space();
    const std::size_t at = pos_;
    if (at_end()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (is_digit(c) || c == '.') return make_constant(number(), at);
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr(depth + 1);
      expect(')');
      return inner;
    }
    if (is_ident_start(c)) {
      while (!at_end() && is_ident_char(text_[pos_])) ++pos_;
      const std::string name(text_.substr(at, pos_ - at));
      skip_space();
      if (!at_end() && text_[pos_] == '(') {
        UnaryFn fn{};
        if (!lookup_function(name, fn)) throw ParseError("unknown function '" + name + "'", at);
        ++pos_;
        NodePtr arg = expr(depth + 1);
        skip_space();
        if (!at_end() && text_[pos_] == ',') {
          throw ParseError("function '" + name + "' takes exactly one argument", pos_);
        }
        expect(')');
        return make_unary(fn, arg, at);
      }
      auto n = std::make_shared<ExprNode>();
      n->kind = NodeKind::variable;
      n->name = name;
      n->offset = at;
      return n;
    }
    if (static_cast<unsigned char>(c) >= 0x80) throw ParseError("non-ASCII byte", at);
    throw ParseError(std::string("unexpected character '") + c + "'", at);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::constant:
      out += format_constant(n.constant);
      return;
    case NodeKind::variable:
    case NodeKind::parameter:
      out += n.name;
      return;
    case NodeKind::unary:
      if (n.fn == UnaryFn::neg) {
        out += "(-";
        print(*n.lhs, out);
        out += ")";
      } else {
        out += to_string(n.fn);
        out += "(";
        print(*n.lhs, out);
        out += ")";
      }
      return;
    case NodeKind::binary:
      out += "(";
      print(*n.lhs, out);
      if (n.op == BinaryOp::pow) {
        out += "^";
        out += std::to_string(static_cast<int>(n.rhs->constant));
      } else {
        out += " ";
        out += to_string(n.op);
        out += " ";
        print(*n.rhs, out);
      }
      out += ")";
      return;
  }
}

NodePtr rebind(const NodePtr& n, const std::set<std::string>& parameters) {
  switch (n->kind) {
    case NodeKind::constant:
    case NodeKind::parameter:
      return n;
    case NodeKind::variable: {
      if (!parameters.contains(n->name)) return n;
      auto p = std::make_shared<ExprNode>(*n);
      p->kind = NodeKind::parameter;
      return p;
    }
    case NodeKind::unary: {
      auto c = rebind(n->lhs, parameters);
      if (c == n->lhs) return n;
      auto p = std::make_shared<ExprNode>(*n);
      p->lhs = std::move(c);
      return p;
    }
    case NodeKind::binary: {
      auto l = rebind(n->lhs, parameters);
      auto r = rebind(n->rhs, parameters);
      if (l == n->lhs && r == n->rhs) return n;
      auto p = std::make_shared<ExprNode>(*n);
      p->lhs = std::move(l);
      p->rhs = std::move(r);
      return p;
    }
  }
  return n;
}

void collect(const ExprNode& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::variable || n.kind == NodeKind::parameter) out.insert(n.name);
  if (n.lhs) collect(*n.lhs, out);
  if (n.rhs) collect(*n.rhs, out);
}

}  // namespace

bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::constant:
      return a.constant == b.constant;
    case NodeKind::variable:
    case NodeKind::parameter:
      return a.name == b.name;
    case NodeKind::unary:
      return a.fn == b.fn && structurally_equal(*a.lhs, *b.lhs);
    case NodeKind::binary:
      return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
  }
  return false;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return structurally_equal(a.root(), b.root());
}

Expr parse(std::string_view text) {
  Parser p(text);
  return Expr(p.parse_all(), std::string(text));
}

std::string to_string(const Expr& e) {
  std::string out;
  if (!e.empty()) print(e.root(), out);
  return out;
}

Expr bind_parameters(const Expr& e, const std::set<std::string>& parameters) {
  if (e.empty()) return e;
  return Expr(rebind(e.root_ptr(), parameters), e.source());
}

std::set<std::string> identifiers(const Expr& e) {
  std::set<std::string> out;
  if (!e.empty()) collect(e.root(), out);
  return out;
}

CompiledExpr CompiledExpr::compile(const Expr& e, std::span<const std::string> coords,
                                   const std::map<std::string, double>& params) {
  if (e.empty()) throw ContractViolation("cannot compile an empty expression");
  CompiledExpr c;
  c.source_ = e.source();
  c.emit(e.root(), coords, params);
  return c;
}

void CompiledExpr::emit(const ExprNode& node, std::span<const std::string> coords,
                        const std::map<std::string, double>& params) {
  Instr ins;
  ins.offset = node.offset;
  switch (node.kind) {
    case NodeKind::constant:
      ins.kind = Instr::Kind::constant;
      ins.constant = node.constant;
      break;
    case NodeKind::variable:
    case NodeKind::parameter: {
      const auto it = std::find(coords.begin(), coords.end(), node.name);
      if (node.kind == NodeKind::variable && it != coords.end()) {
        ins.kind = Instr::Kind::coordinate;
        ins.index = static_cast<std::size_t>(it - coords.begin());
      } else if (const auto p = params.find(node.name); p != params.end()) {
        ins.kind = Instr::Kind::constant;
        ins.constant = p->second;
      } else {
        throw LookupError("unbound name '" + node.name + "' in '" + source_ + "'");
      }
      break;
    }
    case NodeKind::unary:
      emit(*node.lhs, coords, params);
      ins.kind = Instr::Kind::unary;
      ins.fn = node.fn;
      break;
    case NodeKind::binary:
      emit(*node.lhs, coords, params);
      if (node.op == BinaryOp::pow) {
        ins.kind = Instr::Kind::power;
        ins.exponent = static_cast<int>(node.rhs->constant);
      } else {
        emit(*node.rhs, coords, params);
        ins.kind = Instr::Kind::binary;
        ins.op = node.op;
      }
      break;
  }
  program_.push_back(ins);
}

Jet2 eval_jet(const Expr& e, const std::map<std::string, double>& coords,
              const std::map<std::string, double>& params, std::span<const std::string> active) {
  std::vector<std::string> names;
  std::vector<Jet2> values;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto it = coords.find(active[i]);
    if (it == coords.end()) {
      throw ContractViolation("active variable '" + active[i] + "' is not a bound coordinate");
    }
    names.push_back(active[i]);
    values.push_back(Jet2::variable(it->second, i, active.size()));
  }
  for (const auto& [name, v] : coords) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(name);
      values.emplace_back(v);
    }
  }
  const CompiledExpr c = CompiledExpr::compile(e, names, params);
  return c.evaluate<Jet2>(values);
}

double eval(const Expr& e, const std::map<std::string, double>& coords,
            const std::map<std::string, double>& params) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [name, v] : coords) {
    names.push_back(name);
    values.push_back(v);
  }
  const CompiledExpr c = CompiledExpr::compile(e, names, params);
  return c.evaluate<double>(values);
}

}  // namespace nhk
