#pragma once

// Expression language (grammar v1) used for every field of a system
// definition:
//
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := '-' factor | atom ('^' exponent)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//   exponent := ['-'] integer | '(' ['-'] integer ')'     (integer in [-6, 6])
//
// Functions: sin cos tan sec sqrt exp ln. '-x^2' is '-(x^2)'. Whitespace is
// ignored, identifiers are [A-Za-z_][A-Za-z0-9_]*, there is no implicit
// multiplication, and any non-ASCII byte is rejected.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "nhk/errors.hpp"
#include "nhk/jet.hpp"

namespace nhk {

enum class NodeKind { constant, variable, parameter, unary, binary };

struct ExprNode {
  NodeKind kind = NodeKind::constant;
  double constant = 0.0;
  std::string name;
  UnaryFn fn = UnaryFn::neg;
  BinaryOp op = BinaryOp::add;
  std::shared_ptr<const ExprNode> lhs;  // unary child, binary left
  std::shared_ptr<const ExprNode> rhs;  // binary right
  std::size_t offset = 0;               // byte offset in the source text
};

/// Immutable parsed expression. Copies share the tree.
class Expr {
 public:
  Expr() = default;
  Expr(std::shared_ptr<const ExprNode> root, std::string source)
      : root_(std::move(root)), source_(std::move(source)) {}

  [[nodiscard]] bool empty() const noexcept { return root_ == nullptr; }
  [[nodiscard]] const ExprNode& root() const { return *root_; }
  [[nodiscard]] const std::shared_ptr<const ExprNode>& root_ptr() const noexcept { return root_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  std::shared_ptr<const ExprNode> root_;
  std::string source_;
};

/// Structural equality (ignores source offsets).
bool structurally_equal(const ExprNode& a, const ExprNode& b);
bool structurally_equal(const Expr& a, const Expr& b);

Expr parse(std::string_view text);

/// Fully parenthesised text that reparses to a structurally identical tree.
std::string to_string(const Expr& e);

/// Rewrites variable nodes whose name is in `parameters` into parameter nodes.
Expr bind_parameters(const Expr& e, const std::set<std::string>& parameters);

/// Every identifier referenced by the expression, sorted and unique.
std::set<std::string> identifiers(const Expr& e);

/// Second-order jet of `e` at the point, differentiated with respect to
/// `active` in order. Parameters and inactive coordinates are constants.
Jet2 eval_jet(const Expr& e, const std::map<std::string, double>& coords,
              const std::map<std::string, double>& params,
              std::span<const std::string> active);

/// Plain real evaluation.
double eval(const Expr& e, const std::map<std::string, double>& coords,
            const std::map<std::string, double>& params);

namespace detail {

template <class S>
S apply_unary(UnaryFn fn, const S& a) {
  if constexpr (std::is_same_v<S, double>) {
    switch (fn) {
      case UnaryFn::neg:
        return -a;
      case UnaryFn::sin:
        return std::sin(a);
      case UnaryFn::cos:
        return std::cos(a);
      case UnaryFn::tan:
        if (std::abs(std::cos(a)) <= kSingularCosine) throw SingularEvaluation("tan evaluated at a pole");
        return std::tan(a);
      case UnaryFn::sec:
        if (std::abs(std::cos(a)) <= kSingularCosine) throw SingularEvaluation("sec evaluated at a pole");
        return 1.0 / std::cos(a);
      case UnaryFn::sqrt:
        if (!(a > 0.0)) throw SingularEvaluation("sqrt of non-positive value");
        return std::sqrt(a);
      case UnaryFn::exp:
        return std::exp(a);
      case UnaryFn::ln:
        return ln(a);
    }
  } else {
    switch (fn) {
      case UnaryFn::neg:
        return -a;
      case UnaryFn::sin:
        return sin(a);
      case UnaryFn::cos:
        return cos(a);
      case UnaryFn::tan:
        return tan(a);
      case UnaryFn::sec:
        return sec(a);
      case UnaryFn::sqrt:
        return sqrt(a);
      case UnaryFn::exp:
        return exp(a);
      case UnaryFn::ln:
        return ln(a);
    }
  }
  throw ContractViolation("unknown unary function");
}

template <class S>
S power(const S& a, int n) {
  if constexpr (std::is_same_v<S, double>) {
    if (n < 0 && std::abs(a) <= kSingularDenominator) {
      throw SingularEvaluation("negative power of near-zero value");
    }
    return std::pow(a, n);
  } else {
    return pow(a, n);
  }
}

template <class S>
S divide(const S& a, const S& b) {
  if constexpr (std::is_same_v<S, double>) {
    if (std::abs(b) <= kSingularDenominator) throw SingularEvaluation("division by near-zero value");
    return a / b;
  } else {
    return a / b;
  }
}

}  // namespace detail

/// Expression with names resolved: coordinates become slot indices and
/// parameters are folded to constants. Evaluates over double, Jet1 or Jet2.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  /// Throws LookupError for names that are neither coordinates nor parameters.
  static CompiledExpr compile(const Expr& e, std::span<const std::string> coords,
                              const std::map<std::string, double>& params);

  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  template <class S>
  S evaluate(std::span<const S> coords) const {
    std::vector<S> stack;
    stack.reserve(program_.size());
    for (const auto& ins : program_) {
      try {
        switch (ins.kind) {
          case Instr::Kind::constant:
            stack.emplace_back(ins.constant);
            break;
          case Instr::Kind::coordinate:
            stack.push_back(coords[ins.index]);
            break;
          case Instr::Kind::unary:
            stack.back() = detail::apply_unary(ins.fn, stack.back());
            break;
          case Instr::Kind::power:
            stack.back() = detail::power(stack.back(), ins.exponent);
            break;
          case Instr::Kind::binary: {
            S rhs = std::move(stack.back());
            stack.pop_back();
            S& lhs = stack.back();
            switch (ins.op) {
              case BinaryOp::add:
                lhs = lhs + rhs;
                break;
              case BinaryOp::sub:
                lhs = lhs - rhs;
                break;
              case BinaryOp::mul:
                lhs = lhs * rhs;
                break;
              case BinaryOp::div:
                lhs = detail::divide(lhs, rhs);
                break;
              case BinaryOp::pow:
                throw InternalInvariant("pow must compile to a power instruction");
            }
            break;
          }
        }
      } catch (const SingularEvaluation& err) {
        if (err.offset() != SingularEvaluation::npos) throw;
        throw SingularEvaluation(std::string(err.what()) + " in '" + source_ + "' at offset " +
                                     std::to_string(ins.offset),
                                 ins.offset);
      }
    }
    return std::move(stack.back());
  }

 private:
  struct Instr {
    enum class Kind { constant, coordinate, unary, power, binary } kind = Kind::constant;
    double constant = 0.0;
    std::size_t index = 0;
    UnaryFn fn = UnaryFn::neg;
    BinaryOp op = BinaryOp::add;
    int exponent = 0;
    std::size_t offset = 0;
  };

  void emit(const ExprNode& node, std::span<const std::string> coords,
            const std::map<std::string, double>& params);

  std::vector<Instr> program_;
  std::string source_;
};

}  // namespace nhk
