#include "nhk/jet.hpp"

#include <cmath>
#include <string>

namespace nhk {

Jet2 jet_lift(std::span<const double> values, std::size_t index) {
  if (index >= values.size()) {
    throw ContractViolation("jet_lift: index " + std::to_string(index) + " out of range for " +
                            std::to_string(values.size()) + " values");
  }
  return Jet2::variable(values[index], index, values.size());
}

Jet2 jet_binary(BinaryOp op, const Jet2& a, const Jet2& b) {
  if (!a.is_constant() && !b.is_constant() && a.num_vars() != b.num_vars()) {
    throw ContractViolation("jet_binary: operands have different variable counts");
  }
  switch (op) {
    case BinaryOp::add:
      return a + b;
    case BinaryOp::sub:
      return a - b;
    case BinaryOp::mul:
      return a * b;
    case BinaryOp::div:
      return a / b;
    case BinaryOp::pow: {
      bool constant_exponent = true;
      for (double g : b.grad()) constant_exponent = constant_exponent && g == 0.0;
      const double e = b.value();
      if (!constant_exponent || e != std::round(e) || e < -6.0 || e > 6.0) {
        throw ContractViolation("jet_binary: exponent must be a constant integer in [-6, 6]");
      }
      return pow(a, static_cast<int>(e));
    }
  }
  throw ContractViolation("jet_binary: unknown operator");
}

Jet2 jet_unary(UnaryFn fn, const Jet2& a) {
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
  throw ContractViolation("jet_unary: unknown function");
}

const char* to_string(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::neg:
      return "neg";
    case UnaryFn::sin:
      return "sin";
    case UnaryFn::cos:
      return "cos";
    case UnaryFn::tan:
      return "tan";
    case UnaryFn::sec:
      return "sec";
    case UnaryFn::sqrt:
      return "sqrt";
    case UnaryFn::exp:
      return "exp";
    case UnaryFn::ln:
      return "ln";
  }
  return "?";
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::add:
      return "+";
    case BinaryOp::sub:
      return "-";
    case BinaryOp::mul:
      return "*";
    case BinaryOp::div:
      return "/";
    case BinaryOp::pow:
      return "^";
  }
  return "?";
}

}  // namespace nhk
