#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

// Parsed arithmetic expression over a fixed list of named variables.
//
// Grammar (documented in docs/formats.md):
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right-associative
//   primary := number | ident | ident '(' args ')' | '(' expr ')'
// Functions: sin, cos, exp, abs (one argument); min, max (two);
// case(cond, a, b) where cond compares x or t against a constant
// expression with one of < <= > >=. Restricting conditions to the
// independent variables keeps every expression globally Lipschitz in
// the state arguments.
//
// Evaluation is a small postfix tape interpreted with a value stack,
// so the same expression evaluated at the same point is bit-identical
// every time. bind() partially evaluates one variable (folding any
// case() split on it away), which is how the simulator builds per-node
// coupling functions once and reuses them in the inner loops.
class CoeffFn {
 public:
  CoeffFn();  // constant zero over the empty signature

  static CoeffFn parse(std::string_view source, std::vector<std::string> signature);
  static CoeffFn constant(double value, std::vector<std::string> signature = {});

  double operator()(std::span<const double> args) const;
  double operator()(double a) const;
  double operator()(double a, double b) const;
  double operator()(double a, double b, double c) const;

  const std::vector<std::string>& signature() const { return signature_; }
  std::size_t arity() const { return signature_.size(); }

  // Canonical source form; parsing it back yields an expression that
  // evaluates bit-identically.
  std::string to_string() const;

  // Thresholds of case() conditions on the named variable, sorted and
  // deduplicated. Quadrature and sampling split intervals there.
  std::vector<double> breakpoints(std::string_view var) const;

  // Partial evaluation: substitute one variable by a value, resolve
  // case() splits on it, fold constants, and drop it from the
  // signature. Folding applies the identical floating-point operations
  // the tape would, so bound and unbound forms agree bit-for-bit.
  CoeffFn bind(std::string_view var, double value) const;

  bool is_constant_zero() const;

 private:
  enum class Fn1 : std::uint8_t { Sin, Cos, Exp, Abs };
  enum class Fn2 : std::uint8_t { Min, Max };
  enum class Cmp : std::uint8_t { Lt, Le, Gt, Ge };

  struct Node {
    enum class Kind : std::uint8_t { Constant, Variable, Neg, Binary, Call1, Call2, Case } kind;
    char op = 0;       // Binary: + - * / ^
    Fn1 fn1{};         // Call1
    Fn2 fn2{};         // Call2
    int var = -1;      // Variable index; Case condition variable
    Cmp cmp{};         // Case
    double value = 0;  // Constant; Case threshold
    int a = -1, b = -1;
  };

  enum class Op : std::uint8_t {
    PushConst, PushVar, Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Exp, Abs, Min, Max, JumpIfNot, Jump
  };
  struct Instr {
    Op op;
    Cmp cmp{};
    std::int16_t var = 0;
    std::int32_t target = 0;
    double c = 0;
  };

  class Parser;

  double eval_tape(const double* args) const;
  void compile();
  int compile_node(int node);
  std::string print_node(int node, int parent_prec, bool right_side) const;
  int clone_bound(const CoeffFn& src, int node, int bound_var, double value,
                  const std::vector<int>& var_remap);
  int fold(int node);

  std::vector<std::string> signature_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<Instr> tape_;
  int stack_need_ = 0;

  static constexpr int kMaxStack = 64;
};

}  // namespace hyperctrl
