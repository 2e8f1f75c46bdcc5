#include "hyperctrl/expression.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace hyperctrl {

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

class CoeffFn::Parser {
 public:
  Parser(std::string_view src, CoeffFn& out) : src_(src), fn_(out) {}

  void run() {
    fn_.root_ = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
    if (fn_.root_ < 0) throw ParseError("empty expression", 0);
  }

 private:
  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        char op = take();
        int rhs = parse_term();
        lhs = add_binary(op, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (peek() == '*' || peek() == '/') {
        char op = take();
        int rhs = parse_unary();
        lhs = add_binary(op, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    skip_ws();
    if (peek() == '-') {
      take();
      int child = parse_unary();
      // Fold a negated literal so printing and reparsing are stable.
      if (fn_.nodes_[child].kind == Node::Kind::Constant) {
        fn_.nodes_[child].value = -fn_.nodes_[child].value;
        return child;
      }
      Node n;
      n.kind = Node::Kind::Neg;
      n.a = child;
      return add_node(n);
    }
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    skip_ws();
    if (peek() == '^') {
      take();
      int exponent = parse_unary();
      return add_binary('^', base, exponent);
    }
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    char c = src_[pos_];
    if (c == '(') {
      take();
      int inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    Node n;
    n.kind = Node::Kind::Constant;
    n.value = v;
    return add_node(n);
  }

  int parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (peek() == '(') return parse_call(name, start);

    for (std::size_t i = 0; i < fn_.signature_.size(); ++i) {
      if (fn_.signature_[i] == name) {
        Node n;
        n.kind = Node::Kind::Variable;
        n.var = static_cast<int>(i);
        return add_node(n);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  int parse_call(const std::string& name, std::size_t at) {
    expect('(');
    if (name == "case") return parse_case(at);

    std::vector<int> args;
    args.push_back(parse_expr());
    skip_ws();
    while (peek() == ',') {
      take();
      args.push_back(parse_expr());
      skip_ws();
    }
    expect(')');

    Node n;
    if (name == "sin" || name == "cos" || name == "exp" || name == "abs") {
      if (args.size() != 1) {
        throw ParseError("function '" + name + "' expects 1 argument, got " +
                             std::to_string(args.size()),
                         at);
      }
      n.kind = Node::Kind::Call1;
      n.fn1 = name == "sin" ? Fn1::Sin : name == "cos" ? Fn1::Cos : name == "exp" ? Fn1::Exp : Fn1::Abs;
      n.a = args[0];
      return add_node(n);
    }
    if (name == "min" || name == "max") {
      if (args.size() != 2) {
        throw ParseError("function '" + name + "' expects 2 arguments, got " +
                             std::to_string(args.size()),
                         at);
      }
      n.kind = Node::Kind::Call2;
      n.fn2 = name == "min" ? Fn2::Min : Fn2::Max;
      n.a = args[0];
      n.b = args[1];
      return add_node(n);
    }
    throw ParseError("unknown function '" + name + "'", at);
  }

  // case(cond, a, b): cond compares x or t against a constant expression.
  int parse_case(std::size_t at) {
    std::size_t cond_at = pos_;
    int lhs = parse_expr();
    skip_ws();
    Cmp cmp;
    if (peek() == '<') {
      take();
      cmp = peek() == '=' ? (take(), Cmp::Le) : Cmp::Lt;
    } else if (peek() == '>') {
      take();
      cmp = peek() == '=' ? (take(), Cmp::Ge) : Cmp::Gt;
    } else {
      throw ParseError("case condition needs a comparison (< <= > >=)", pos_);
    }
    int rhs = parse_expr();
    expect(',');
    int then_branch = parse_expr();
    expect(',');
    int else_branch = parse_expr();
    expect(')');

    // Normalize to <variable> cmp <constant>.
    bool lhs_var = fn_.nodes_[lhs].kind == Node::Kind::Variable;
    bool rhs_var = fn_.nodes_[rhs].kind == Node::Kind::Variable;
    int var_node, const_node;
    if (lhs_var && !rhs_var) {
      var_node = lhs;
      const_node = rhs;
    } else if (rhs_var && !lhs_var) {
      var_node = rhs;
      const_node = lhs;
      cmp = cmp == Cmp::Lt ? Cmp::Gt : cmp == Cmp::Le ? Cmp::Ge : cmp == Cmp::Gt ? Cmp::Lt : Cmp::Le;
    } else {
      throw ParseError("case condition must compare a variable against a constant", cond_at);
    }
    int var = fn_.nodes_[var_node].var;
    const std::string& vname = fn_.signature_[static_cast<std::size_t>(var)];
    if (vname != "x" && vname != "t") {
      throw ParseError("case conditions may only split on x or t, not '" + vname + "'", cond_at);
    }
    double threshold = eval_constant(const_node, cond_at);

    Node n;
    n.kind = Node::Kind::Case;
    n.var = var;
    n.cmp = cmp;
    n.value = threshold;
    n.a = then_branch;
    n.b = else_branch;
    return add_node(n);
  }

  double eval_constant(int node, std::size_t at) {
    const Node& n = fn_.nodes_[static_cast<std::size_t>(node)];
    switch (n.kind) {
      case Node::Kind::Constant:
        return n.value;
      case Node::Kind::Neg:
        return -eval_constant(n.a, at);
      case Node::Kind::Binary: {
        double a = eval_constant(n.a, at);
        double b = eval_constant(n.b, at);
        switch (n.op) {
          case '+': return a + b;
          case '-': return a - b;
          case '*': return a * b;
          case '/': return a / b;
          default:  return std::pow(a, b);
        }
      }
      default:
        throw ParseError("case threshold must be a constant expression", at);
    }
  }

  int add_binary(char op, int a, int b) {
    Node n;
    n.kind = Node::Kind::Binary;
    n.op = op;
    n.a = a;
    n.b = b;
    return add_node(n);
  }

  int add_node(const Node& n) {
    fn_.nodes_.push_back(n);
    return static_cast<int>(fn_.nodes_.size()) - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char take() { return src_[pos_++]; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    take();
  }

  std::string_view src_;
  CoeffFn& fn_;
  std::size_t pos_ = 0;
};

CoeffFn::CoeffFn() {
  Node n;
  n.kind = Node::Kind::Constant;
  n.value = 0;
  nodes_.push_back(n);
  root_ = 0;
  compile();
}

CoeffFn CoeffFn::parse(std::string_view source, std::vector<std::string> signature) {
  CoeffFn fn;
  fn.nodes_.clear();
  fn.root_ = -1;
  fn.signature_ = std::move(signature);
  Parser parser(source, fn);
  parser.run();
  fn.compile();
  return fn;
}

CoeffFn CoeffFn::constant(double value, std::vector<std::string> signature) {
  CoeffFn fn;
  fn.signature_ = std::move(signature);
  fn.nodes_[0].value = value;
  fn.compile();
  return fn;
}

// ---------------------------------------------------------------------------
// Compilation and evaluation

void CoeffFn::compile() {
  tape_.clear();
  stack_need_ = 0;
  compile_node(root_);
}

int CoeffFn::compile_node(int node) {
  const Node n = nodes_[static_cast<std::size_t>(node)];
  switch (n.kind) {
    case Node::Kind::Constant: {
      Instr i;
      i.op = Op::PushConst;
      i.c = n.value;
      tape_.push_back(i);
      break;
    }
    case Node::Kind::Variable: {
      Instr i;
      i.op = Op::PushVar;
      i.var = static_cast<std::int16_t>(n.var);
      tape_.push_back(i);
      break;
    }
    case Node::Kind::Neg: {
      compile_node(n.a);
      tape_.push_back({Op::Neg, {}, 0, 0, 0});
      break;
    }
    case Node::Kind::Binary: {
      compile_node(n.a);
      compile_node(n.b);
      Op op = n.op == '+' ? Op::Add
              : n.op == '-' ? Op::Sub
              : n.op == '*' ? Op::Mul
              : n.op == '/' ? Op::Div
                            : Op::Pow;
      tape_.push_back({op, {}, 0, 0, 0});
      break;
    }
    case Node::Kind::Call1: {
      compile_node(n.a);
      Op op = n.fn1 == Fn1::Sin ? Op::Sin
              : n.fn1 == Fn1::Cos ? Op::Cos
              : n.fn1 == Fn1::Exp ? Op::Exp
                                  : Op::Abs;
      tape_.push_back({op, {}, 0, 0, 0});
      break;
    }
    case Node::Kind::Call2: {
      compile_node(n.a);
      compile_node(n.b);
      tape_.push_back({n.fn2 == Fn2::Min ? Op::Min : Op::Max, {}, 0, 0, 0});
      break;
    }
    case Node::Kind::Case: {
      Instr branch;
      branch.op = Op::JumpIfNot;
      branch.cmp = n.cmp;
      branch.var = static_cast<std::int16_t>(n.var);
      branch.c = n.value;
      std::size_t branch_at = tape_.size();
      tape_.push_back(branch);
      compile_node(n.a);
      std::size_t jump_at = tape_.size();
      tape_.push_back({Op::Jump, {}, 0, 0, 0});
      tape_[branch_at].target = static_cast<std::int32_t>(tape_.size());
      compile_node(n.b);
      tape_[jump_at].target = static_cast<std::int32_t>(tape_.size());
      break;
    }
  }

  // Track worst-case stack depth (both case branches leave one value).
  int depth = 0, peak = 0;
  for (const Instr& i : tape_) {
    switch (i.op) {
      case Op::PushConst:
      case Op::PushVar:
        peak = std::max(peak, ++depth);
        break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
      case Op::Pow: case Op::Min: case Op::Max:
        --depth;
        break;
      case Op::JumpIfNot:
      case Op::Jump:
        // Branches are balanced: the skipped branch would produce the
        // same net effect, so linear scanning over-counts at worst.
        break;
      default:
        break;
    }
  }
  stack_need_ = peak;
  if (stack_need_ > kMaxStack) {
    throw ParseError("expression too deeply nested", 0);
  }
  return 0;
}

double CoeffFn::eval_tape(const double* args) const {
  double stack[kMaxStack];
  int sp = 0;
  const Instr* code = tape_.data();
  const std::size_t n = tape_.size();
  for (std::size_t pc = 0; pc < n; ++pc) {
    const Instr& i = code[pc];
    switch (i.op) {
      case Op::PushConst: stack[sp++] = i.c; break;
      case Op::PushVar:   stack[sp++] = args[i.var]; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::Min: --sp; stack[sp - 1] = std::fmin(stack[sp - 1], stack[sp]); break;
      case Op::Max: --sp; stack[sp - 1] = std::fmax(stack[sp - 1], stack[sp]); break;
      case Op::JumpIfNot: {
        double v = args[i.var];
        bool taken = i.cmp == Cmp::Lt ? v < i.c
                     : i.cmp == Cmp::Le ? v <= i.c
                     : i.cmp == Cmp::Gt ? v > i.c
                                        : v >= i.c;
        if (!taken) pc = static_cast<std::size_t>(i.target) - 1;
        break;
      }
      case Op::Jump:
        pc = static_cast<std::size_t>(i.target) - 1;
        break;
    }
  }
  return stack[0];
}

double CoeffFn::operator()(std::span<const double> args) const {
  assert(args.size() == signature_.size());
  return eval_tape(args.data());
}

double CoeffFn::operator()(double a) const {
  assert(signature_.size() == 1);
  return eval_tape(&a);
}

double CoeffFn::operator()(double a, double b) const {
  assert(signature_.size() == 2);
  double args[2] = {a, b};
  return eval_tape(args);
}

double CoeffFn::operator()(double a, double b, double c) const {
  assert(signature_.size() == 3);
  double args[3] = {a, b, c};
  return eval_tape(args);
}

bool CoeffFn::is_constant_zero() const {
  const Node& n = nodes_[static_cast<std::size_t>(root_)];
  return n.kind == Node::Kind::Constant && n.value == 0.0;
}

// ---------------------------------------------------------------------------
// Printing

namespace {
int binary_prec(char op) {
  switch (op) {
    case '+': case '-': return 1;
    case '*': case '/': return 2;
    default: return 4;  // '^'
  }
}
}  // namespace

std::string CoeffFn::print_node(int node, int parent_prec, bool right_side) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  switch (n.kind) {
    case Node::Kind::Constant: {
      std::string s = format_number(n.value);
      if (!s.empty() && s[0] == '-' && parent_prec > 0) return "(" + s + ")";
      return s;
    }
    case Node::Kind::Variable:
      return signature_[static_cast<std::size_t>(n.var)];
    case Node::Kind::Neg: {
      std::string inner = print_node(n.a, 3, false);
      std::string s = "-" + inner;
      if (parent_prec > 3 || (parent_prec == 3 && right_side) ||
          (right_side && parent_prec >= 1)) {
        return "(" + s + ")";
      }
      return s;
    }
    case Node::Kind::Binary: {
      int prec = binary_prec(n.op);
      std::string lhs, rhs;
      if (n.op == '^') {
        lhs = print_node(n.a, prec + 1, false);  // (a^b)^c keeps parens
        rhs = print_node(n.b, prec, true);
      } else {
        lhs = print_node(n.a, prec, false);
        rhs = print_node(n.b, prec + 1, true);  // a-(b+c), a/(b*c)
      }
      std::string s = lhs + n.op + rhs;
      if (prec < parent_prec || (prec == parent_prec && right_side)) return "(" + s + ")";
      return s;
    }
    case Node::Kind::Call1: {
      const char* name = n.fn1 == Fn1::Sin ? "sin"
                         : n.fn1 == Fn1::Cos ? "cos"
                         : n.fn1 == Fn1::Exp ? "exp"
                                             : "abs";
      return std::string(name) + "(" + print_node(n.a, 0, false) + ")";
    }
    case Node::Kind::Call2:
      return std::string(n.fn2 == Fn2::Min ? "min" : "max") + "(" + print_node(n.a, 0, false) +
             ", " + print_node(n.b, 0, false) + ")";
    case Node::Kind::Case: {
      const char* op = n.cmp == Cmp::Lt ? "<" : n.cmp == Cmp::Le ? "<=" : n.cmp == Cmp::Gt ? ">" : ">=";
      return "case(" + signature_[static_cast<std::size_t>(n.var)] + op + format_number(n.value) +
             ", " + print_node(n.a, 0, false) + ", " + print_node(n.b, 0, false) + ")";
    }
  }
  return {};
}

std::string CoeffFn::to_string() const { return print_node(root_, 0, false); }

// ---------------------------------------------------------------------------
// Breakpoints and binding

std::vector<double> CoeffFn::breakpoints(std::string_view var) const {
  int idx = -1;
  for (std::size_t i = 0; i < signature_.size(); ++i) {
    if (signature_[i] == var) idx = static_cast<int>(i);
  }
  std::vector<double> out;
  if (idx < 0) return out;
  for (const Node& n : nodes_) {
    if (n.kind == Node::Kind::Case && n.var == idx) out.push_back(n.value);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int CoeffFn::clone_bound(const CoeffFn& src, int node, int bound_var, double value,
                         const std::vector<int>& var_remap) {
  const Node& n = src.nodes_[static_cast<std::size_t>(node)];
  switch (n.kind) {
    case Node::Kind::Variable: {
      Node out;
      if (n.var == bound_var) {
        out.kind = Node::Kind::Constant;
        out.value = value;
      } else {
        out.kind = Node::Kind::Variable;
        out.var = var_remap[static_cast<std::size_t>(n.var)];
      }
      nodes_.push_back(out);
      return static_cast<int>(nodes_.size()) - 1;
    }
    case Node::Kind::Case: {
      if (n.var == bound_var) {
        bool taken = n.cmp == Cmp::Lt ? value < n.value
                     : n.cmp == Cmp::Le ? value <= n.value
                     : n.cmp == Cmp::Gt ? value > n.value
                                        : value >= n.value;
        return clone_bound(src, taken ? n.a : n.b, bound_var, value, var_remap);
      }
      int a = clone_bound(src, n.a, bound_var, value, var_remap);
      int b = clone_bound(src, n.b, bound_var, value, var_remap);
      Node out = n;
      out.var = var_remap[static_cast<std::size_t>(n.var)];
      out.a = a;
      out.b = b;
      nodes_.push_back(out);
      return static_cast<int>(nodes_.size()) - 1;
    }
    default: {
      Node out = n;
      if (n.a >= 0) out.a = clone_bound(src, n.a, bound_var, value, var_remap);
      if (n.b >= 0) out.b = clone_bound(src, n.b, bound_var, value, var_remap);
      nodes_.push_back(out);
      return static_cast<int>(nodes_.size()) - 1;
    }
  }
}

// Bottom-up constant folding. Operations are applied exactly as the tape
// would apply them, so folded and unfolded evaluation agree bitwise.
int CoeffFn::fold(int node) {
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.a >= 0) n.a = fold(n.a);
  if (n.b >= 0) n.b = fold(n.b);
  auto is_const = [&](int c) {
    return c >= 0 && nodes_[static_cast<std::size_t>(c)].kind == Node::Kind::Constant;
  };
  auto cval = [&](int c) { return nodes_[static_cast<std::size_t>(c)].value; };

  switch (n.kind) {
    case Node::Kind::Neg:
      if (is_const(n.a)) {
        n.kind = Node::Kind::Constant;
        n.value = -cval(n.a);
        n.a = -1;
      }
      break;
    case Node::Kind::Binary:
      if (is_const(n.a) && is_const(n.b)) {
        double a = cval(n.a), b = cval(n.b);
        double v = n.op == '+' ? a + b
                   : n.op == '-' ? a - b
                   : n.op == '*' ? a * b
                   : n.op == '/' ? a / b
                                 : std::pow(a, b);
        n.kind = Node::Kind::Constant;
        n.value = v;
        n.a = n.b = -1;
      }
      break;
    case Node::Kind::Call1:
      if (is_const(n.a)) {
        double a = cval(n.a);
        double v = n.fn1 == Fn1::Sin ? std::sin(a)
                   : n.fn1 == Fn1::Cos ? std::cos(a)
                   : n.fn1 == Fn1::Exp ? std::exp(a)
                                       : std::fabs(a);
        n.kind = Node::Kind::Constant;
        n.value = v;
        n.a = -1;
      }
      break;
    case Node::Kind::Call2:
      if (is_const(n.a) && is_const(n.b)) {
        double v = n.fn2 == Fn2::Min ? std::fmin(cval(n.a), cval(n.b))
                                     : std::fmax(cval(n.a), cval(n.b));
        n.kind = Node::Kind::Constant;
        n.value = v;
        n.a = n.b = -1;
      }
      break;
    default:
      break;
  }
  return node;
}

CoeffFn CoeffFn::bind(std::string_view var, double value) const {
  int bound = -1;
  for (std::size_t i = 0; i < signature_.size(); ++i) {
    if (signature_[i] == var) bound = static_cast<int>(i);
  }
  if (bound < 0) throw ValidationError("bind: variable '" + std::string(var) + "' not in signature");

  std::vector<int> remap(signature_.size(), -1);
  std::vector<std::string> new_sig;
  for (std::size_t i = 0; i < signature_.size(); ++i) {
    if (static_cast<int>(i) == bound) continue;
    remap[i] = static_cast<int>(new_sig.size());
    new_sig.push_back(signature_[i]);
  }

  CoeffFn out;
  out.nodes_.clear();
  out.signature_ = std::move(new_sig);
  out.root_ = out.clone_bound(*this, root_, bound, value, remap);
  out.root_ = out.fold(out.root_);
  out.compile();
  return out;
}

}  // namespace hyperctrl
